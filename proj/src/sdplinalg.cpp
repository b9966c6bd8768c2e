#include "treeloc/sdplinalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace treeloc {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

VectorXd svec(const MatrixXd& X, double tol) {
  if (X.rows() != X.cols()) throw std::invalid_argument("svec: matrix not square");
  const int n = static_cast<int>(X.rows());
  double asym = (X - X.transpose()).cwiseAbs().maxCoeff();
  double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  if (asym > tol * scale)
    throw std::invalid_argument("svec: matrix not symmetric within tolerance");
  MatrixXd S = 0.5 * (X + X.transpose());
  VectorXd v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v[k++] = (i == j) ? S(i, j) : kSqrt2 * S(i, j);
  return v;
}

MatrixXd smat(const VectorXd& v) {
  // recover n from n(n+1)/2
  const int m = static_cast<int>(v.size());
  int n = static_cast<int>(std::round((std::sqrt(8.0 * m + 1.0) - 1.0) / 2.0));
  if (svec_size(n) != m) throw std::invalid_argument("smat: invalid length");
  MatrixXd X(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      double val = (i == j) ? v[k] : v[k] / kSqrt2;
      X(i, j) = val;
      X(j, i) = val;
      ++k;
    }
  return X;
}

MatrixXd skron(const MatrixXd& X, const MatrixXd& Y) {
  if (X.rows() != X.cols() || Y.rows() != Y.cols() || X.rows() != Y.rows())
    throw std::invalid_argument("skron: order mismatch");
  const int n = static_cast<int>(X.rows());
  const int m = svec_size(n);
  MatrixXd out(m, m);
  // column k of the operator is svec((X S Y^T + Y S X^T)/2) with S the
  // k-th symmetric basis matrix in svec coordinates
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      MatrixXd S = MatrixXd::Zero(n, n);
      if (i == j) {
        S(i, j) = 1.0;
      } else {
        S(i, j) = 1.0 / kSqrt2;
        S(j, i) = 1.0 / kSqrt2;
      }
      MatrixXd R = 0.5 * (X * S * Y.transpose() + Y * S * X.transpose());
      R = 0.5 * (R + R.transpose());
      int l = 0;
      for (int jj = 0; jj < n; ++jj)
        for (int ii = jj; ii < n; ++ii)
          out(l++, k) = (ii == jj) ? R(ii, jj) : kSqrt2 * R(ii, jj);
      ++k;
    }
  return out;
}

MatrixXd h_op(const MatrixXd& D, const MatrixXd& M) {
  Eigen::PartialPivLU<MatrixXd> lu(D);
  if (std::abs(lu.determinant()) < 1e-300)
    throw std::invalid_argument("h_op: singular scaling matrix");
  MatrixXd Dinv = lu.inverse();
  return 0.5 * (D * M * Dinv + Dinv.transpose() * M.transpose() * D.transpose());
}

MatrixXd sym_sqrt(const MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(X);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

bool is_positive_definite(const MatrixXd& X) {
  if (X.rows() != X.cols()) return false;
  MatrixXd S = 0.5 * (X + X.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() > 1e-12 * scale;
}

ScalingPoint nt_scaling(const MatrixXd& X, const MatrixXd& Z) {
  if (!is_positive_definite(X))
    throw std::invalid_argument("nt_scaling: X not positive definite");
  if (!is_positive_definite(Z))
    throw std::invalid_argument("nt_scaling: Z not positive definite");
  MatrixXd Xh = sym_sqrt(0.5 * (X + X.transpose()));
  MatrixXd inner = sym_sqrt(Xh * Z * Xh);
  ScalingPoint sp;
  // W = X^{1/2} (X^{1/2} Z X^{1/2})^{-1/2} X^{1/2}
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(inner);
  MatrixXd inner_inv_half =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(1e-300).cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  sp.W_scal = Xh * inner_inv_half * Xh;
  sp.W_scal = 0.5 * (sp.W_scal + sp.W_scal.transpose());
  sp.G = sym_sqrt(sp.W_scal);
  sp.G_inv = sp.G.llt().solve(MatrixXd::Identity(X.rows(), X.cols()));
  const MatrixXd& D = sp.G_inv;
  MatrixXd Dinv_t = sp.G.transpose();  // D^{-T} = G^T (G symmetric here)
  sp.U_op = skron(D, Dinv_t * Z);
  sp.F_op = skron(D * X, Dinv_t);
  return sp;
}

MatrixXd solve_sym_indefinite(const MatrixXd& A, const MatrixXd& B) {
  SymIndefFactor f(A);
  if (f.singular()) throw std::runtime_error("solve_sym_indefinite: singular matrix");
  return f.solve(B);
}

SymIndefFactor::SymIndefFactor(const MatrixXd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("SymIndefFactor: not square");
  lu_ = 0.5 * (A + A.transpose());
  const int n = static_cast<int>(lu_.rows());
  ipiv_.resize(std::max(1, n));
  int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, lu_.data(), std::max(1, n),
                            ipiv_.data());
  singular_ = (info != 0);
}

MatrixXd SymIndefFactor::solve(const MatrixXd& B) const {
  if (singular_) throw std::runtime_error("SymIndefFactor: singular matrix");
  const int n = static_cast<int>(lu_.rows());
  MatrixXd X = B;
  int info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, static_cast<int>(B.cols()),
                            lu_.data(), std::max(1, n), ipiv_.data(), X.data(),
                            std::max(1, n));
  if (info != 0) throw std::runtime_error("SymIndefFactor: solve failed");
  return X;
}

VectorXd SymIndefFactor::solve(const VectorXd& b) const {
  MatrixXd B = b;
  return solve(static_cast<const MatrixXd&>(B)).col(0);
}

}  // namespace treeloc

namespace treeloc {

namespace {

Eigen::VectorXd equilibration_scale(const MatrixXd& A) {
  Eigen::VectorXd d(A.rows());
  for (int i = 0; i < A.rows(); ++i) {
    double rn = A.row(i).lpNorm<Eigen::Infinity>();
    d[i] = rn > 0 ? 1.0 / std::sqrt(rn) : 1.0;
  }
  return d;
}

}  // namespace

RefinedSymIndefSolver::RefinedSymIndefSolver(const MatrixXd& A)
    : A_(A),
      scale_(equilibration_scale(A)),
      factor_(scale_.asDiagonal() * A * scale_.asDiagonal()) {}

VectorXd RefinedSymIndefSolver::solve(const VectorXd& b) const {
  auto base = [&](const VectorXd& rhs) -> VectorXd {
    VectorXd t = factor_.solve(VectorXd(scale_.asDiagonal() * rhs));
    return scale_.asDiagonal() * t;
  };
  VectorXd x = base(b);
  double prev = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 6; ++pass) {
    VectorXd resid = b - A_ * x;
    double rn = resid.norm();
    if (!(rn < 0.5 * prev)) break;
    prev = rn;
    x += base(resid);
  }
  return x;
}

MatrixXd RefinedSymIndefSolver::solve(const MatrixXd& B) const {
  MatrixXd X(B.rows(), B.cols());
  for (int j = 0; j < B.cols(); ++j) X.col(j) = solve(VectorXd(B.col(j)));
  return X;
}

}  // namespace treeloc
