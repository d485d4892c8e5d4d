// Truncated multivariate power-series ring over complex doubles: the exact
// Taylor-coefficient oracle. Dense storage, last dimension fastest.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "diagasym/expression.hpp"
#include "diagasym/types.hpp"

namespace diagasym {

class TruncatedSeries {
 public:
  TruncatedSeries() = default;

  TruncatedSeries(int dim, std::vector<int> bounds)
      : dim_(dim), bounds_(std::move(bounds)) {
    if (dim_ < 1 || static_cast<int>(bounds_.size()) != dim_)
      throw DomainError("TruncatedSeries: bad dimension/bounds");
    std::size_t cells = 1;
    for (int b : bounds_) {
      if (b < 0) throw DomainError("TruncatedSeries: negative bound");
      cells *= static_cast<std::size_t>(b) + 1;
      if (cells > (std::size_t{1} << 27))
        throw DomainError("TruncatedSeries: truncation bounds too large");
    }
    c_.assign(cells, cplx(0.0, 0.0));
    init_strides();
  }

  static TruncatedSeries constant(int dim, const std::vector<int>& bounds, cplx v) {
    TruncatedSeries s(dim, bounds);
    s.c_[0] = v;
    return s;
  }

  // The series 1 - z_j (variable substitution u_j := 1 - z_j at the leaves).
  static TruncatedSeries one_minus_z(int dim, const std::vector<int>& bounds, int j) {
    TruncatedSeries s(dim, bounds);
    s.c_[0] = cplx(1.0, 0.0);
    if (bounds[static_cast<size_t>(j)] >= 1) s.c_[s.strides_[static_cast<size_t>(j)]] = cplx(-1.0, 0.0);
    return s;
  }

  int dim() const { return dim_; }
  const std::vector<int>& bounds() const { return bounds_; }
  std::size_t cells() const { return c_.size(); }
  const std::vector<cplx>& data() const { return c_; }
  std::vector<cplx>& data() { return c_; }

  cplx coeff(const MultiIndex& n) const {
    if (n.dim() != dim_) throw DomainError("coeff: dimension mismatch");
    std::size_t idx = 0;
    for (int j = 0; j < dim_; ++j) {
      if (n[j] > bounds_[static_cast<size_t>(j)])
        throw DomainError("coeff: index exceeds oracle truncation");
      idx += static_cast<std::size_t>(n[j]) * strides_[static_cast<size_t>(j)];
    }
    return c_[idx];
  }

  cplx& at(const std::vector<int>& n) {
    std::size_t idx = 0;
    for (int j = 0; j < dim_; ++j)
      idx += static_cast<std::size_t>(n[static_cast<size_t>(j)]) * strides_[static_cast<size_t>(j)];
    return c_[idx];
  }
  cplx at(const std::vector<int>& n) const {
    return const_cast<TruncatedSeries*>(this)->at(n);
  }

  std::size_t stride(int j) const { return strides_[static_cast<size_t>(j)]; }

 private:
  void init_strides() {
    strides_.assign(static_cast<size_t>(dim_), 1);
    for (int j = dim_ - 2; j >= 0; --j)
      strides_[static_cast<size_t>(j)] =
          strides_[static_cast<size_t>(j + 1)] *
          (static_cast<std::size_t>(bounds_[static_cast<size_t>(j + 1)]) + 1);
  }

  int dim_ = 0;
  std::vector<int> bounds_;
  std::vector<std::size_t> strides_;
  std::vector<cplx> c_;
};

struct SeriesOptions {
  bool compensated = false;  // twofold compensated summation in convolutions
};

namespace series_detail {

inline std::vector<int> min_bounds(const TruncatedSeries& a, const TruncatedSeries& b) {
  if (a.dim() != b.dim()) throw DomainError("series op: dimension mismatch");
  std::vector<int> r(static_cast<size_t>(a.dim()));
  for (int j = 0; j < a.dim(); ++j)
    r[static_cast<size_t>(j)] = std::min(a.bounds()[static_cast<size_t>(j)],
                                         b.bounds()[static_cast<size_t>(j)]);
  return r;
}

// Odometer over multi-indices 0 <= idx <= limit (componentwise), lexicographic.
inline bool advance(std::vector<int>& idx, const std::vector<int>& limit) {
  for (int j = static_cast<int>(idx.size()) - 1; j >= 0; --j) {
    if (idx[static_cast<size_t>(j)] < limit[static_cast<size_t>(j)]) {
      ++idx[static_cast<size_t>(j)];
      std::fill(idx.begin() + j + 1, idx.end(), 0);
      return true;
    }
    idx[static_cast<size_t>(j)] = 0;
  }
  return false;
}

struct RowRange {
  int lo = 0, hi = -1;  // empty when hi < lo
};

// Nonzero column range of each prefix row (prefix = all dims but the last).
inline std::vector<RowRange> row_ranges(const TruncatedSeries& s) {
  const int d = s.dim();
  const int ncols = s.bounds()[static_cast<size_t>(d - 1)] + 1;
  const std::size_t nrows = s.cells() / static_cast<std::size_t>(ncols);
  std::vector<RowRange> rr(nrows);
  const auto& c = s.data();
  for (std::size_t r = 0; r < nrows; ++r) {
    const cplx* row = c.data() + r * static_cast<std::size_t>(ncols);
    int lo = 0, hi = ncols - 1;
    while (hi >= lo && row[hi] == cplx(0.0, 0.0)) --hi;
    while (lo <= hi && row[lo] == cplx(0.0, 0.0)) ++lo;
    rr[r] = {lo, hi};
  }
  return rr;
}

inline std::size_t prefix_offset(const TruncatedSeries& s, const std::vector<int>& pre) {
  std::size_t off = 0;
  for (size_t j = 0; j < pre.size(); ++j)
    off += static_cast<std::size_t>(pre[j]) * s.stride(static_cast<int>(j));
  return off;
}

}  // namespace series_detail

inline TruncatedSeries series_add(const TruncatedSeries& a, const TruncatedSeries& b) {
  auto rb = series_detail::min_bounds(a, b);
  TruncatedSeries r(a.dim(), rb);
  std::vector<int> idx(static_cast<size_t>(a.dim()), 0);
  do {
    r.at(idx) = a.at(idx) + b.at(idx);
  } while (series_detail::advance(idx, rb));
  return r;
}

inline TruncatedSeries series_sub(const TruncatedSeries& a, const TruncatedSeries& b) {
  auto rb = series_detail::min_bounds(a, b);
  TruncatedSeries r(a.dim(), rb);
  std::vector<int> idx(static_cast<size_t>(a.dim()), 0);
  do {
    r.at(idx) = a.at(idx) - b.at(idx);
  } while (series_detail::advance(idx, rb));
  return r;
}

inline TruncatedSeries series_scale(const TruncatedSeries& a, cplx f) {
  TruncatedSeries r = a;
  for (auto& v : r.data()) v *= f;
  return r;
}

// Full convolution truncated to the componentwise minimum bounds. The
// summation order within each output cell is fixed (lexicographic over the
// first factor's indices), independent of any parallelism.
inline TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b,
                                  const SeriesOptions& opts = {}) {
  auto rb = series_detail::min_bounds(a, b);
  const int d = a.dim();
  TruncatedSeries r(d, rb);
  const int lastB = rb[static_cast<size_t>(d - 1)];

  auto rrA = series_detail::row_ranges(a);
  auto rrB = series_detail::row_ranges(b);
  const int ncolsA = a.bounds()[static_cast<size_t>(d - 1)] + 1;
  const int ncolsB = b.bounds()[static_cast<size_t>(d - 1)] + 1;

  std::vector<double> compRe, compIm;
  if (opts.compensated) {
    compRe.assign(r.cells(), 0.0);
    compIm.assign(r.cells(), 0.0);
  }

  std::vector<int> preLimit(rb.begin(), rb.end() - 1);
  std::vector<int> pa(static_cast<size_t>(d - 1), 0);
  do {
    const cplx* rowA = a.data().data() + series_detail::prefix_offset(a, pa);
    const auto& ra = rrA[series_detail::prefix_offset(a, pa) / static_cast<std::size_t>(ncolsA)];
    if (ra.hi < ra.lo) continue;
    std::vector<int> pbLimit(static_cast<size_t>(d - 1));
    for (size_t j = 0; j + 1 < static_cast<size_t>(d); ++j)
      pbLimit[j] = preLimit[j] - pa[j];
    std::vector<int> pb(static_cast<size_t>(d - 1), 0);
    do {
      const std::size_t offB = series_detail::prefix_offset(b, pb);
      const auto& rbr = rrB[offB / static_cast<std::size_t>(ncolsB)];
      if (rbr.hi < rbr.lo) continue;
      const cplx* rowB = b.data().data() + offB;
      std::vector<int> po(static_cast<size_t>(d - 1));
      for (size_t j = 0; j + 1 < static_cast<size_t>(d); ++j) po[j] = pa[j] + pb[j];
      const std::size_t offR = series_detail::prefix_offset(r, po);
      cplx* rowR = r.data().data() + offR;
      const int iaHi = std::min(ra.hi, lastB);
      for (int ia = ra.lo; ia <= iaHi; ++ia) {
        const cplx ca = rowA[ia];
        if (ca == cplx(0.0, 0.0)) continue;
        const int jbHi = std::min(rbr.hi, lastB - ia);
        if (!opts.compensated) {
          for (int jb = rbr.lo; jb <= jbHi; ++jb)
            rowR[ia + jb] += ca * rowB[jb];
        } else {
          for (int jb = rbr.lo; jb <= jbHi; ++jb) {
            const cplx term = ca * rowB[jb];
            const std::size_t cell = offR + static_cast<std::size_t>(ia + jb);
            // Kahan update, real and imaginary parts separately.
            double y = term.real() - compRe[cell];
            double t = rowR[ia + jb].real() + y;
            compRe[cell] = (t - rowR[ia + jb].real()) - y;
            double re = t;
            y = term.imag() - compIm[cell];
            t = rowR[ia + jb].imag() + y;
            compIm[cell] = (t - rowR[ia + jb].imag()) - y;
            rowR[ia + jb] = cplx(re, t);
          }
        }
      }
    } while (series_detail::advance(pb, pbLimit));
  } while (series_detail::advance(pa, preLimit));
  return r;
}

namespace series_detail {

// Permute dimensions: result bounds/coeffs indexed by perm so that
// result index (i_{perm[0]},...,i_{perm[d-1]}) = source index (i_0,...,i_{d-1}).
inline TruncatedSeries permute_dims(const TruncatedSeries& s, const std::vector<int>& perm) {
  const int d = s.dim();
  std::vector<int> nb(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) nb[static_cast<size_t>(j)] = s.bounds()[static_cast<size_t>(perm[static_cast<size_t>(j)])];
  TruncatedSeries r(d, nb);
  std::vector<int> idx(static_cast<size_t>(d), 0);
  std::vector<int> src(static_cast<size_t>(d));
  do {
    for (int j = 0; j < d; ++j) src[static_cast<size_t>(perm[static_cast<size_t>(j)])] = idx[static_cast<size_t>(j)];
    r.at(idx) = s.at(src);
  } while (advance(idx, nb));
  return r;
}

// Extract the slice of s at first-dim index k, as a (d-1)-dim series.
inline TruncatedSeries first_dim_slice(const TruncatedSeries& s, int k) {
  const int d = s.dim();
  std::vector<int> nb(s.bounds().begin() + 1, s.bounds().end());
  TruncatedSeries r(d - 1, nb);
  const std::size_t sz = r.cells();
  std::copy_n(s.data().data() + static_cast<std::size_t>(k) * sz, sz, r.data().data());
  return r;
}

inline void set_first_dim_slice(TruncatedSeries& s, int k, const TruncatedSeries& sl) {
  const std::size_t sz = sl.cells();
  std::copy_n(sl.data().data(), sz, s.data().data() + static_cast<std::size_t>(k) * sz);
}

inline bool is_zero(const TruncatedSeries& s) {
  for (const auto& v : s.data())
    if (v != cplx(0.0, 0.0)) return false;
  return true;
}

}  // namespace series_detail

// s^beta with s_0 != 0, principal branch for s_0^beta. Exact Taylor
// coefficients of the power, truncated to the bounds of s.
//
// Univariate series use the classical coefficient recurrence obtained from
// s f' = beta s' f; multivariate series recurse slice-by-slice along the
// dimension with the fewest nonzero slices (zero slices are skipped, which
// makes bases like g(z1) + h(z2) cheap). Small positive integer exponents
// multiply out directly.
inline TruncatedSeries series_pow_real(const TruncatedSeries& s, double beta,
                                       const SeriesOptions& opts = {}) {
  const int d = s.dim();
  const cplx s0 = s.data()[0];
  if (s0 == cplx(0.0, 0.0))
    throw DomainError("series_pow_real: zero constant term");

  if (beta == 0.0) return TruncatedSeries::constant(d, s.bounds(), cplx(1.0, 0.0));
  if (beta == 1.0) return s;
  if (std::floor(beta) == beta && beta >= 2.0 && beta <= 4.0) {
    TruncatedSeries r = s;
    for (int i = 1; i < static_cast<int>(beta); ++i) r = series_mul(r, s, opts);
    return r;
  }

  if (d == 1) {
    const int N = s.bounds()[0];
    TruncatedSeries f(1, s.bounds());
    auto& fc = f.data();
    const auto& sc = s.data();
    fc[0] = std::pow(s0, cplx(beta, 0.0));
    for (int n = 1; n <= N; ++n) {
      cplx acc(0.0, 0.0);
      double comp_re = 0.0, comp_im = 0.0;
      for (int k = 1; k <= n; ++k) {
        const cplx term = ((beta + 1.0) * k - n) * sc[static_cast<size_t>(k)] *
                          fc[static_cast<size_t>(n - k)];
        if (!opts.compensated) {
          acc += term;
        } else {
          double y = term.real() - comp_re;
          double t = acc.real() + y;
          comp_re = (t - acc.real()) - y;
          double re = t;
          y = term.imag() - comp_im;
          t = acc.imag() + y;
          comp_im = (t - acc.imag()) - y;
          acc = cplx(re, t);
        }
      }
      fc[static_cast<size_t>(n)] = acc / (static_cast<double>(n) * s0);
    }
    return f;
  }

  // Pick the recurrence dimension: fewest nonzero slices, ties to smaller bound.
  int jr = 0;
  std::size_t bestScore = SIZE_MAX;
  for (int j = 0; j < d; ++j) {
    std::vector<int> perm;
    perm.push_back(j);
    for (int q = 0; q < d; ++q)
      if (q != j) perm.push_back(q);
    // Count nonzero slices along dim j without materializing the permutation.
    const int nslices = s.bounds()[static_cast<size_t>(j)] + 1;
    std::vector<char> nz(static_cast<size_t>(nslices), 0);
    std::vector<int> idx(static_cast<size_t>(d), 0);
    do {
      if (s.at(idx) != cplx(0.0, 0.0)) nz[static_cast<size_t>(idx[static_cast<size_t>(j)])] = 1;
    } while (series_detail::advance(idx, s.bounds()));
    std::size_t cnt = 0;
    for (char c : nz) cnt += static_cast<std::size_t>(c);
    const std::size_t score = cnt * 1024 + static_cast<std::size_t>(nslices);
    if (score < bestScore) { bestScore = score; jr = j; }
  }

  std::vector<int> perm;
  perm.push_back(jr);
  for (int q = 0; q < d; ++q)
    if (q != jr) perm.push_back(q);
  TruncatedSeries sp = (jr == 0) ? s : series_detail::permute_dims(s, perm);

  const int N = sp.bounds()[0];
  std::vector<TruncatedSeries> slices(static_cast<size_t>(N) + 1);
  std::vector<bool> sliceNZ(static_cast<size_t>(N) + 1, false);
  for (int k = 0; k <= N; ++k) {
    slices[static_cast<size_t>(k)] = series_detail::first_dim_slice(sp, k);
    sliceNZ[static_cast<size_t>(k)] = !series_detail::is_zero(slices[static_cast<size_t>(k)]);
  }

  TruncatedSeries f0 = series_pow_real(slices[0], beta, opts);
  TruncatedSeries inv0 = series_pow_real(slices[0], -1.0, opts);

  TruncatedSeries out(d, sp.bounds());
  series_detail::set_first_dim_slice(out, 0, f0);
  std::vector<TruncatedSeries> fsl(static_cast<size_t>(N) + 1);
  fsl[0] = std::move(f0);
  for (int n = 1; n <= N; ++n) {
    TruncatedSeries acc(d - 1, slices[0].bounds());
    for (int k = 1; k <= n; ++k) {
      if (!sliceNZ[static_cast<size_t>(k)]) continue;
      const double w = (beta + 1.0) * k - n;
      if (w == 0.0) continue;
      acc = series_add(acc, series_scale(series_mul(slices[static_cast<size_t>(k)],
                                                    fsl[static_cast<size_t>(n - k)], opts),
                                         cplx(w, 0.0)));
    }
    TruncatedSeries fn = series_scale(series_mul(inv0, acc, opts),
                                      cplx(1.0 / static_cast<double>(n), 0.0));
    series_detail::set_first_dim_slice(out, n, fn);
    fsl[static_cast<size_t>(n)] = std::move(fn);
  }

  if (jr == 0) return out;
  std::vector<int> inv(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) inv[static_cast<size_t>(perm[static_cast<size_t>(j)])] = j;
  return series_detail::permute_dims(out, inv);
}

namespace series_detail {

inline std::vector<int> active_dims(const TruncatedSeries& s) {
  const int d = s.dim();
  std::vector<char> active(static_cast<size_t>(d), 0);
  std::vector<int> idx(static_cast<size_t>(d), 0);
  do {
    if (s.at(idx) != cplx(0.0, 0.0))
      for (int j = 0; j < d; ++j)
        if (idx[static_cast<size_t>(j)] > 0) active[static_cast<size_t>(j)] = 1;
  } while (advance(idx, s.bounds()));
  std::vector<int> res;
  for (int j = 0; j < d; ++j)
    if (active[static_cast<size_t>(j)]) res.push_back(j);
  return res;
}

// Restrict to the given dims (all others have support only at index 0).
inline TruncatedSeries compress_to_dims(const TruncatedSeries& s, const std::vector<int>& dims) {
  std::vector<int> nb;
  nb.reserve(dims.size());
  for (int j : dims) nb.push_back(s.bounds()[static_cast<size_t>(j)]);
  TruncatedSeries r(static_cast<int>(dims.size()), nb);
  std::vector<int> idx(dims.size(), 0);
  std::vector<int> full(static_cast<size_t>(s.dim()), 0);
  do {
    for (size_t q = 0; q < dims.size(); ++q) full[static_cast<size_t>(dims[q])] = idx[q];
    r.at(idx) = s.at(full);
  } while (advance(idx, nb));
  return r;
}

inline TruncatedSeries expand_from_dims(const TruncatedSeries& s, const std::vector<int>& dims,
                                        int fullDim, const std::vector<int>& fullBounds) {
  TruncatedSeries r(fullDim, fullBounds);
  std::vector<int> idx(dims.size(), 0);
  std::vector<int> full(static_cast<size_t>(fullDim), 0);
  do {
    for (size_t q = 0; q < dims.size(); ++q) full[static_cast<size_t>(dims[q])] = idx[q];
    r.at(full) = s.at(idx);
  } while (advance(idx, s.bounds()));
  return r;
}

// Power with reduction to the dimensions the base actually depends on.
inline TruncatedSeries pow_compressed(const TruncatedSeries& s, double beta,
                                      const SeriesOptions& opts) {
  if (s.data()[0] == cplx(0.0, 0.0))
    throw DomainError("oracle_coefficients: power base has zero constant term at z=0");
  auto dims = active_dims(s);
  if (dims.empty()) {
    TruncatedSeries r = TruncatedSeries::constant(s.dim(), s.bounds(),
                                                  std::pow(s.data()[0], cplx(beta, 0.0)));
    return r;
  }
  if (static_cast<int>(dims.size()) == s.dim()) return series_pow_real(s, beta, opts);
  TruncatedSeries sub = compress_to_dims(s, dims);
  TruncatedSeries p = series_pow_real(sub, beta, opts);
  return expand_from_dims(p, dims, s.dim(), s.bounds());
}

inline TruncatedSeries build(const ExprNode& n, int d, const std::vector<int>& bounds,
                             const SeriesOptions& opts) {
  switch (n.kind) {
    case ExprKind::Variable:
      return TruncatedSeries::one_minus_z(d, bounds, n.var_index - 1);
    case ExprKind::Constant:
      return TruncatedSeries::constant(d, bounds, cplx(n.value, 0.0));
    case ExprKind::Add:
      return series_add(build(*n.lhs, d, bounds, opts), build(*n.rhs, d, bounds, opts));
    case ExprKind::Sub:
      return series_sub(build(*n.lhs, d, bounds, opts), build(*n.rhs, d, bounds, opts));
    case ExprKind::Mul:
      return series_mul(build(*n.lhs, d, bounds, opts), build(*n.rhs, d, bounds, opts), opts);
    case ExprKind::Div: {
      TruncatedSeries a = build(*n.lhs, d, bounds, opts);
      TruncatedSeries b = build(*n.rhs, d, bounds, opts);
      return series_mul(a, pow_compressed(b, -1.0, opts), opts);
    }
    case ExprKind::Pow: {
      TruncatedSeries b = build(*n.lhs, d, bounds, opts);
      return pow_compressed(b, n.exponent, opts);
    }
    case ExprKind::Sqrt: {
      TruncatedSeries b = build(*n.lhs, d, bounds, opts);
      return pow_compressed(b, 0.5, opts);
    }
  }
  throw DomainError("oracle_coefficients: corrupt expression node");
}

}  // namespace series_detail

// Exact Taylor coefficients at z = 0 of A(z) = H(1-z), obtained by the
// substitution u_j := 1 - z_j at the AST leaves followed by ring operations
// and series_pow_real at power nodes.
inline TruncatedSeries oracle_coefficients(const ExpressionAST& ast,
                                           const std::vector<int>& bounds,
                                           const SeriesOptions& opts = {}) {
  if (static_cast<int>(bounds.size()) != ast.dim())
    throw DomainError("oracle_coefficients: bounds dimension mismatch");
  return series_detail::build(*ast.root(), ast.dim(), bounds, opts);
}

}  // namespace diagasym
