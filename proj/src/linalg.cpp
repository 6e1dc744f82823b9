// Route this translation unit's decompositions through LAPACK; the solver
// spends most of its time in svd() and the LAPACK backend is several times
// faster than the built-in one-sided Jacobi at the sizes used here.
#define EIGEN_USE_LAPACKE

#include "pmlsv/linalg.hpp"

#include <Eigen/SVD>

namespace pmlsv {

bool is_finite(const Matrix& m) { return m.allFinite(); }

double frobenius_norm_sq(const Matrix& m) { return m.squaredNorm(); }

double entry_sum_norm(const Matrix& m) { return m.sum(); }

double nuclear_norm(const Matrix& m) { return svd(m).sigma.sum(); }

SvdFactors svd(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("svd: matrix must be nonempty");
  }
  if (!is_finite(m)) {
    throw std::invalid_argument("svd: matrix has NaN or Inf entries");
  }
  // JacobiSVD over BDCSVD: the 3.4.0 divide-and-conquer path has an
  // out-of-bounds workspace access on some inputs, and every matrix here is
  // small enough that one-sided Jacobi is accurate and fast enough.
  Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw SvdConvergenceError("svd: decomposition failed to converge");
  }
  SvdFactors f{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  for (Eigen::Index j = 0; j < f.u.cols(); ++j) {
    Eigen::Index peak = 0;
    f.u.col(j).cwiseAbs().maxCoeff(&peak);
    if (f.u(peak, j) < 0.0) {
      f.u.col(j) = -f.u.col(j);
      f.v.col(j) = -f.v.col(j);
    }
  }
  return f;
}

Matrix svt(const Matrix& m, double tau) {
  int rank = 0;
  return svt(m, tau, rank);
}

Matrix svt(const Matrix& m, double tau, int& rank_out) {
  if (!(tau >= 0.0)) {
    throw std::invalid_argument("svt: threshold must be nonnegative");
  }
  SvdFactors f = svd(m);
  Vector shrunk = (f.sigma.array() - tau).max(0.0).matrix();
  rank_out = static_cast<int>((f.sigma.array() > tau).count());
  return f.u * shrunk.asDiagonal() * f.v.transpose();
}

int numerical_rank(const Vector& sigma, double rel_tol) {
  if (sigma.size() == 0) return 0;
  const double cutoff = rel_tol * sigma[0];
  return static_cast<int>((sigma.array() > cutoff).count());
}

}  // namespace pmlsv
