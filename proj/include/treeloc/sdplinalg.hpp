#pragma once

#include <Eigen/Dense>

// Symmetric-cone kernels: svec/smat, symmetrized Kronecker products,
// Nesterov-Todd scaling points and the H operator used in the
// complementarity residuals.

namespace treeloc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Length of svec(X) for X of order n.
inline int svec_size(int n) { return n * (n + 1) / 2; }

// Position of entry (i,j), i >= j, in the lower-triangle column-major
// svec ordering.
inline int svec_index(int n, int i, int j) {
  // column j contributes n-j entries starting at offset
  // sum_{c<j} (n-c) = j*n - j(j-1)/2
  return j * n - j * (j - 1) / 2 + (i - j);
}

// svec(X) = (X_11, sqrt(2) X_21, ..., sqrt(2) X_n1, X_22, ...).
// X must be symmetric to within `tol`; it is symmetrized on input.
VectorXd svec(const MatrixXd& X, double tol = 1e-12);

// Inverse of svec.
MatrixXd smat(const VectorXd& v);

// Operator matrix of the symmetrized Kronecker product X (x)_s Y:
// skron(X,Y) * svec(S) = svec( (X S Y^T + Y S X^T) / 2 ) for symmetric S.
MatrixXd skron(const MatrixXd& X, const MatrixXd& Y);

// H_D(M) = (D M D^{-1} + (D M D^{-1})^T) / 2.
MatrixXd h_op(const MatrixXd& D, const MatrixXd& M);

// Symmetric PSD square root via eigendecomposition.
MatrixXd sym_sqrt(const MatrixXd& X);

// Strict positive-definiteness check: min eig > 1e-12 * ||X||.
bool is_positive_definite(const MatrixXd& X);

// Nesterov-Todd scaling point for an SPD pair (X, Z):
//   W_scal Z W_scal = X,  W_scal = G G^T,  D = G^{-1},
//   U_op = D (x)_s D^{-T} Z,  F_op = D X (x)_s D^{-T}.
struct ScalingPoint {
  MatrixXd W_scal;
  MatrixXd G;
  MatrixXd G_inv;
  MatrixXd U_op;
  MatrixXd F_op;
};

ScalingPoint nt_scaling(const MatrixXd& X, const MatrixXd& Z);

// Solves A X = B for symmetric indefinite A (LAPACK Bunch-Kaufman).
// Throws on singular A.
MatrixXd solve_sym_indefinite(const MatrixXd& A, const MatrixXd& B);

// Factor-once variant for repeated right-hand sides.
class SymIndefFactor {
 public:
  explicit SymIndefFactor(const MatrixXd& A);
  MatrixXd solve(const MatrixXd& B) const;
  VectorXd solve(const VectorXd& b) const;
  bool singular() const { return singular_; }

 private:
  MatrixXd lu_;
  std::vector<int> ipiv_;
  bool singular_ = false;
};

// Symmetric diagonal equilibration + Bunch-Kaufman factorization with
// adaptive iterative refinement. Used for all saddle-point solves, which
// become very ill-conditioned near the central-path boundary.
class RefinedSymIndefSolver {
 public:
  explicit RefinedSymIndefSolver(const MatrixXd& A);
  bool singular() const { return factor_.singular(); }
  VectorXd solve(const VectorXd& b) const;
  MatrixXd solve(const MatrixXd& B) const;  // column-wise

 private:
  MatrixXd A_;
  VectorXd scale_;
  SymIndefFactor factor_;
};

}  // namespace treeloc
