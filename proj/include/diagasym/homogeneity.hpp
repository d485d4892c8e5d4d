// Generalized homogeneous terms, singular expansions, and the sampled
// homogeneity / zero-avoidance checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "diagasym/expression.hpp"
#include "diagasym/types.hpp"

namespace diagasym {

// A (theta0, theta)-homogeneous expression H.
struct HomogeneousTerm {
  ExpressionAST expr;
  ExponentData exponents;

  int dim() const { return exponents.dim(); }
};

// Ordered list of homogeneous terms sharing one theta vector, plus an
// optional demi-analytic regular part (inert for predictions).
struct SingularExpansion {
  std::vector<HomogeneousTerm> terms;       // theta0 strictly decreasing
  std::optional<ExpressionAST> regular_part;
  double remainder_theta0 = 0.0;            // theta0 of the o(.)/O(.) bound term

  int dim() const {
    if (!terms.empty()) return terms.front().dim();
    if (regular_part) return regular_part->dim();
    return 0;
  }

  const std::vector<double>& theta() const {
    if (terms.empty()) throw DomainError("SingularExpansion: no terms");
    return terms.front().exponents.theta;
  }

  void validate() const {
    for (size_t i = 0; i < terms.size(); ++i) {
      terms[i].exponents.validate();
      if (i > 0) {
        if (terms[i].exponents.theta != terms[i - 1].exponents.theta)
          throw DomainError("SingularExpansion: inconsistent theta across terms");
        if (!(terms[i].exponents.theta0 < terms[i - 1].exponents.theta0))
          throw DomainError("SingularExpansion: theta0 must be strictly decreasing");
      }
    }
    if (!terms.empty() && !(remainder_theta0 <= terms.back().exponents.theta0))
      throw DomainError(
          "SingularExpansion: remainder_theta0 must be <= last listed theta0");
  }
};

namespace detail {

// Deterministic uniform doubles in [0,1); identical across platforms for a
// fixed seed (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

// Random point of the open cone Omega_delta^d, components with moduli in
// [rlo, rhi] and arguments strictly inside (-pi/2-delta, pi/2+delta).
inline std::vector<cplx> sample_cone_point(Rng& rng, int d, double delta,
                                           double rlo, double rhi) {
  std::vector<cplx> u(static_cast<size_t>(d));
  double amax = kPi / 2 + delta;
  for (int j = 0; j < d; ++j) {
    double r = rlo * std::exp(rng.uniform() * std::log(rhi / rlo));
    double phi = rng.uniform(-0.98 * amax, 0.98 * amax);
    u[static_cast<size_t>(j)] = std::polar(r, phi);
  }
  return u;
}

}  // namespace detail

struct HomogeneityCheckResult {
  bool pass = false;
  double max_deviation = 0.0;
  int samples_run = 0;
  std::string diagnostic;
};

// Samples |H(sigma^theta u) - sigma^theta0 H(u)| <= tol*(1+|H(u)|) over
// random (sigma, u) draws. Deterministic for a fixed seed.
inline HomogeneityCheckResult check_homogeneity(const HomogeneousTerm& term,
                                                int samples, double tol,
                                                std::uint64_t seed = 0x5eedULL) {
  if (samples < 1) throw DomainError("check_homogeneity: samples must be >= 1");
  if (!(tol > 0.0)) throw DomainError("check_homogeneity: tol must be > 0");
  term.exponents.validate();

  const int d = term.dim();
  detail::Rng rng(seed);
  HomogeneityCheckResult res;
  res.pass = true;

  for (int s = 0; s < samples; ++s) {
    double sigma = rng.uniform(0.0, 1.0) * 2.0;
    if (sigma <= 1e-3) sigma = 1e-3;  // sigma in (0,2]
    std::vector<cplx> u = detail::sample_cone_point(rng, d, 0.2, 0.5, 2.0);
    std::vector<cplx> su(u);
    for (int j = 0; j < d; ++j)
      su[static_cast<size_t>(j)] *= std::pow(sigma, term.exponents.theta[static_cast<size_t>(j)]);
    cplx hu, hsu;
    try {
      hu = eval_expression(term.expr, u);
      hsu = eval_expression(term.expr, su);
    } catch (const EvalError& e) {
      res.pass = false;
      res.samples_run = s + 1;
      res.diagnostic = std::string("evaluation error at sample point: ") + e.what();
      return res;
    }
    double dev = std::abs(hsu - std::pow(sigma, term.exponents.theta0) * hu);
    double bound = tol * (1.0 + std::abs(hu));
    res.max_deviation = std::max(res.max_deviation, dev);
    if (dev > bound) {
      res.pass = false;
      if (res.diagnostic.empty()) {
        std::ostringstream os;
        os << "deviation " << dev << " exceeds " << bound << " at sigma=" << sigma;
        res.diagnostic = os.str();
      }
    }
  }
  res.samples_run = samples;
  return res;
}

struct ZeroAvoidanceResult {
  bool pass = false;
  int flagged_samples = 0;
  int samples_run = 0;
  std::string diagnostic;
};

// Samples points of Omega_delta^d and flags any base-of-power hitting zero
// or the branch cut. A sampled sanity proxy, not a proof.
inline ZeroAvoidanceResult zero_avoidance_scan(const ExpressionAST& ast,
                                               double delta, int samples,
                                               std::uint64_t seed = 0x5eedULL) {
  if (!(delta > 0.0 && delta < kPi / 2))
    throw DomainError("zero_avoidance_scan: delta must be in (0, pi/2)");
  const int d = ast.dim();
  detail::Rng rng(seed);
  ZeroAvoidanceResult res;

  auto probe = [&](const std::vector<cplx>& u) {
    ++res.samples_run;
    detail::EvalDiag diag;
    try {
      eval_expression_diag(ast, u, diag);
    } catch (const EvalError& e) {
      diag.flag(e.what());
    }
    if (diag.flagged) {
      ++res.flagged_samples;
      if (res.diagnostic.empty()) res.diagnostic = diag.message;
    }
  };

  // Random cone samples.
  for (int s = 0; s < samples; ++s)
    probe(detail::sample_cone_point(rng, d, delta, 0.1, 10.0));

  // Structured opposite-phase pairs: u_i = z, u_j = -z with both components
  // inside the cone. These hit exact zeros of sums like u_i + u_j.
  if (d >= 2) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        for (int g = 0; g < 8; ++g) {
          double phi = kPi / 2 - delta / 2 + (g + 0.5) / 8.0 * (1.5 * delta - 0.1 * delta);
          if (phi >= kPi / 2 + delta) continue;
          if (phi - kPi <= -(kPi / 2 + delta)) continue;
          std::vector<cplx> u = detail::sample_cone_point(rng, d, delta, 0.5, 2.0);
          cplx z = std::polar(1.0, phi);
          u[static_cast<size_t>(i)] = z;
          u[static_cast<size_t>(j)] = -z;
          probe(u);
        }
      }
    }
  }

  res.pass = (res.flagged_samples == 0);
  return res;
}

}  // namespace diagasym
