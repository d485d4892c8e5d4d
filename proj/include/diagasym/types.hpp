// Basic domain types shared across the library: multi-indices, exponent
// data and diagonal gauges.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace diagasym {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Thrown when an input violates a documented precondition.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a quadrature or iterative scheme fails to reach its target
// accuracy.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Coefficient index n in N^d.
struct MultiIndex {
  std::vector<std::int64_t> entries;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<std::int64_t> e) : entries(std::move(e)) {
    if (entries.empty()) throw DomainError("MultiIndex: dimension must be >= 1");
    for (auto v : entries)
      if (v < 0) throw DomainError("MultiIndex: entries must be >= 0");
  }
  MultiIndex(std::initializer_list<std::int64_t> e)
      : MultiIndex(std::vector<std::int64_t>(e)) {}

  int dim() const { return static_cast<int>(entries.size()); }
  std::int64_t operator[](int j) const { return entries[static_cast<size_t>(j)]; }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.entries == b.entries;
  }
};

// Homogeneity exponents (theta0, theta): H(sigma^theta u) = sigma^theta0 H(u).
struct ExponentData {
  double theta0 = 0.0;
  std::vector<double> theta;  // all strictly positive

  ExponentData() = default;
  ExponentData(double t0, std::vector<double> t) : theta0(t0), theta(std::move(t)) {
    validate();
  }

  void validate() const {
    if (!std::isfinite(theta0))
      throw DomainError("ExponentData: theta0 must be a finite real");
    if (theta.empty()) throw DomainError("ExponentData: dimension must be >= 1");
    for (double t : theta)
      if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("ExponentData: every theta_j must be > 0 and finite");
  }

  int dim() const { return static_cast<int>(theta.size()); }
};

// Decomposition n_j = lambda_j * n0^theta_j of an index vector into a scale
// n0 and a direction lambda.
struct DiagonalGauge {
  double n0 = 1.0;
  std::vector<double> lambda;
  std::vector<double> theta;

  int dim() const { return static_cast<int>(lambda.size()); }

  // Reconstructs n_j; used by the invariant check below.
  double reconstruct(int j) const {
    return lambda[static_cast<size_t>(j)] *
           std::pow(n0, theta[static_cast<size_t>(j)]);
  }

  void validate(const MultiIndex& n, double relTol = 1e-9) const {
    if (n.dim() != dim() || static_cast<int>(theta.size()) != dim())
      throw DomainError("DiagonalGauge: dimension mismatch");
    if (!(n0 > 0.0)) throw DomainError("DiagonalGauge: n0 must be > 0");
    for (int j = 0; j < dim(); ++j) {
      if (!(lambda[static_cast<size_t>(j)] > 0.0))
        throw DomainError("DiagonalGauge: lambda_j must be > 0");
      double r = reconstruct(j);
      double nj = static_cast<double>(n[j]);
      if (std::abs(r - nj) > relTol * std::max(1.0, nj))
        throw DomainError("DiagonalGauge: does not reconstruct n within rounding");
    }
  }
};

}  // namespace diagasym
