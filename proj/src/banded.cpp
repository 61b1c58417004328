#include "flowcast/banded.hpp"

#include <algorithm>
#include <cmath>

namespace flowcast::linalg {

BandedSpd::BandedSpd(int n, int bandwidth)
    : n_(n), bw_(bandwidth),
      data_(static_cast<std::size_t>(bandwidth + 1) * n, 0.0) {
  if (n < 1) throw ParamError("banded matrix needs n >= 1");
  if (bandwidth < 0 || bandwidth >= n) bw_ = std::max(0, std::min(bandwidth, n - 1));
}

void BandedSpd::factorize() {
  for (int j = 0; j < n_; ++j) {
    double d = band(0, j);
    for (int k = std::max(0, j - bw_); k < j; ++k) {
      double l = band(j - k, k);
      d -= l * l;
    }
    if (!(d > 0.0) || !std::isfinite(d))
      throw NumericError("banded Cholesky: non-positive pivot at column " +
                         std::to_string(j));
    double root = std::sqrt(d);
    band(0, j) = root;
    int imax = std::min(n_ - 1, j + bw_);
    for (int i = j + 1; i <= imax; ++i) {
      double s = band(i - j, j);
      for (int k = std::max(0, i - bw_); k < j; ++k)
        s -= band(i - k, k) * band(j - k, k);
      band(i - j, j) = s / root;
    }
  }
  factored_ = true;
}

void BandedSpd::solve(std::span<double> b) const {
  if (!factored_) throw NumericError("banded solve before factorization");
  if (static_cast<int>(b.size()) != n_)
    throw ParamError("banded solve: size mismatch");
  // forward substitution L y = b
  for (int i = 0; i < n_; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = std::max(0, i - bw_); k < i; ++k)
      s -= band(i - k, k) * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / band(0, i);
  }
  // back substitution L^T x = y
  for (int i = n_ - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    int jmax = std::min(n_ - 1, i + bw_);
    for (int j = i + 1; j <= jmax; ++j)
      s -= band(j - i, i) * b[static_cast<std::size_t>(j)];
    b[static_cast<std::size_t>(i)] = s / band(0, i);
  }
}

std::vector<double> diff_stencil(int order) {
  // order 1: [1, -1]; order 2: [1, -2, 1]
  std::vector<double> c{1.0};
  for (int k = 0; k < order; ++k) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i];
    }
    c = std::move(next);
  }
  return c;
}

BandedSpd gram_dtd(int n, int order, double rho, double diag_shift) {
  auto c = diff_stencil(order);
  const int m = n - order;
  if (m < 1) throw ParamError("series too short for difference order");
  BandedSpd A(n, order);
  // (D^T D)_{i,j} = sum over rows r of D_{r,i} D_{r,j};
  // row r has entries c[0..order] at columns r..r+order.
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k <= order && j + k < n; ++k) {
      int i = j + k;
      double s = 0.0;
      int rlo = std::max(0, i - order);
      int rhi = std::min(j, m - 1);
      for (int r = rlo; r <= rhi; ++r)
        s += c[static_cast<std::size_t>(i - r)] * c[static_cast<std::size_t>(j - r)];
      A.band(k, j) = rho * s + (k == 0 ? diag_shift : 0.0);
    }
  }
  return A;
}

BandedSpd gram_ddt(int n, int order) {
  auto c = diff_stencil(order);
  const int m = n - order;
  if (m < 1) throw ParamError("series too short for difference order");
  BandedSpd A(m, std::min(order, m - 1));
  // (D D^T)_{r,s} = sum_k c[k] c[k + (s - r)]; Toeplitz, no edge truncation.
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k <= A.bandwidth() && j + k < m; ++k) {
      double s = 0.0;
      for (int t = 0; t + k <= order; ++t)
        s += c[static_cast<std::size_t>(t)] * c[static_cast<std::size_t>(t + k)];
      A.band(k, j) = s;
    }
  }
  return A;
}

void apply_diff(std::span<const double> f, int order, std::span<double> out) {
  auto c = diff_stencil(order);
  const int m = static_cast<int>(f.size()) - order;
  if (static_cast<int>(out.size()) != m) throw ParamError("apply_diff: size mismatch");
  for (int r = 0; r < m; ++r) {
    double s = 0.0;
    for (int k = 0; k <= order; ++k)
      s += c[static_cast<std::size_t>(k)] * f[static_cast<std::size_t>(r + k)];
    out[static_cast<std::size_t>(r)] = s;
  }
}

void apply_diff_transpose(std::span<const double> v, int order,
                          std::span<double> out) {
  auto c = diff_stencil(order);
  const int m = static_cast<int>(v.size());
  if (static_cast<int>(out.size()) != m + order)
    throw ParamError("apply_diff_transpose: size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (int r = 0; r < m; ++r)
    for (int k = 0; k <= order; ++k)
      out[static_cast<std::size_t>(r + k)] +=
          c[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(r)];
}

}  // namespace flowcast::linalg
