#pragma once

#include <span>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast::linalg {

/// Symmetric positive definite banded matrix with lower-triangle storage:
/// band(k, j) holds A(j + k, j) for k = 0..bandwidth. Cholesky factorization
/// and solves run in O(n * bandwidth^2).
class BandedSpd {
 public:
  BandedSpd(int n, int bandwidth);

  int size() const { return n_; }
  int bandwidth() const { return bw_; }

  double& band(int k, int j) { return data_[static_cast<std::size_t>(k) * n_ + j]; }
  double band(int k, int j) const {
    return data_[static_cast<std::size_t>(k) * n_ + j];
  }

  /// In-place LL^T factorization; throws NumericError if a pivot fails.
  void factorize();
  /// Solves A x = b using the factorization; b is overwritten with x.
  void solve(std::span<double> b) const;

 private:
  int n_;
  int bw_;
  bool factored_ = false;
  std::vector<double> data_;
};

/// Builds I * diag_shift + rho * D^T D for the difference operator of the
/// given order (stencil = alternating binomial row), as a banded SPD matrix.
BandedSpd gram_dtd(int n, int order, double rho, double diag_shift);
/// Builds D D^T (m x m with m = n - order); banded Toeplitz, SPD.
BandedSpd gram_ddt(int n, int order);

/// Applies D (order-th difference) to a series: out has size n - order.
void apply_diff(std::span<const double> f, int order, std::span<double> out);
/// Applies D^T: out has size n, accumulating from v of size n - order.
void apply_diff_transpose(std::span<const double> v, int order,
                          std::span<double> out);
/// Alternating-sign binomial stencil of the order-th difference row.
std::vector<double> diff_stencil(int order);

}  // namespace flowcast::linalg
