#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace pmlsv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when the SVD backend fails to converge; callers abort the run.
class SvdConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thin SVD factors m = u * sigma.asDiagonal() * v^T with r = min(rows, cols)
/// singular values; zero singular values are retained. Column signs are fixed
/// so the largest-magnitude entry of each left singular vector is positive,
/// which makes the factors deterministic.
struct SvdFactors {
  Matrix u;      // rows x r, orthonormal columns
  Vector sigma;  // length r, nonincreasing, all >= 0
  Matrix v;      // cols x r, orthonormal columns
};

bool is_finite(const Matrix& m);

/// Sum of squared entries.
double frobenius_norm_sq(const Matrix& m);

/// Signed sum of all entries. On nonnegative matrices this is the total
/// intensity I.
double entry_sum_norm(const Matrix& m);

/// Sum of singular values.
double nuclear_norm(const Matrix& m);

SvdFactors svd(const Matrix& m);

/// Singular value thresholding: u * diag((sigma_i - tau)+) * v^T, the
/// minimizer of 1/2 ||y - m||_F^2 + tau ||y||_*.
Matrix svt(const Matrix& m, double tau);

/// As above; also reports the post-threshold rank (count of sigma_i > tau).
Matrix svt(const Matrix& m, double tau, int& rank_out);

/// Count of singular values above rel_tol * sigma_max.
int numerical_rank(const Vector& sigma, double rel_tol);

}  // namespace pmlsv
