#pragma once

#include "gmrfglm/lattice.hpp"
#include "gmrfglm/sparse.hpp"

#include <memory>
#include <optional>

namespace gmrfglm {

/// Posterior precision of a stacked coefficient field in regressor-major
/// order (entry k*N + n is regressor k at voxel n):
///
///   B = H^T blkdiag_n(C_n) H + diag(alpha) (x) D
///
/// where C_n is the K x K data block of voxel n. In the i.i.d. noise case
/// C_n = lambda_n X^T X, which gives B = X^T X (x) diag(lambda) + diag(alpha) (x) D.
class PrecisionOperator {
public:
  PrecisionOperator() = default;

  /// i.i.d. noise: C_n = lambda_n * xtx.
  PrecisionOperator(Eigen::MatrixXd xtx, Eigen::VectorXd lambda, Eigen::VectorXd alpha,
                    std::shared_ptr<const SparseSym> prior);

  /// General case: explicit K x K blocks stored side by side in a
  /// K x (K*N) matrix, block n in columns [n*K, (n+1)*K).
  static PrecisionOperator with_blocks(Eigen::MatrixXd blocks, Eigen::VectorXd alpha,
                                       std::shared_ptr<const SparseSym> prior);

  int blocks() const { return static_cast<int>(alpha_.size()); }
  int voxels() const { return prior_ ? prior_->size() : 0; }
  long size() const { return static_cast<long>(blocks()) * voxels(); }
  bool iid() const { return iid_; }

  const Eigen::VectorXd &alpha() const { return alpha_; }
  const SparseSym &prior() const { return *prior_; }
  std::shared_ptr<const SparseSym> prior_ptr() const { return prior_; }
  Eigen::MatrixXd data_block(int voxel) const;

  void apply(const Eigen::VectorXd &x, Eigen::VectorXd &y) const;
  Eigen::VectorXd apply(const Eigen::VectorXd &x) const;
  LinearOperator as_operator() const;

  SparseSym assemble() const;

private:
  bool iid_ = true;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd blocks_;
  Eigen::VectorXd alpha_;
  std::shared_ptr<const SparseSym> prior_;
};

/// Shares the precision matrix of a prior structure without copying it.
inline std::shared_ptr<const SparseSym>
shared_precision(const std::shared_ptr<const GmrfStructure> &g) {
  return std::shared_ptr<const SparseSym>(g, &g->precision);
}

/// Explicit sparse B in regressor-major ordering. `blocks`, when given,
/// replaces lambda_n * xtx as the per-voxel data block.
SparseSym assemble_precision(const Eigen::MatrixXd &xtx, const Eigen::VectorXd &lambda,
                             const Eigen::VectorXd &alpha, const SparseSym &prior,
                             const std::optional<Eigen::MatrixXd> &blocks = std::nullopt);

/// Matrix-free B x.
Eigen::VectorXd apply_precision(const PrecisionOperator &op, const Eigen::VectorXd &x);

/// Per-voxel Cholesky factors L_n of the data blocks (C_n = L_n L_n^T).
class BlockFactor {
public:
  BlockFactor() = default;
  /// Throws Error naming the voxel when a block is not positive definite.
  explicit BlockFactor(const PrecisionOperator &op);

  int blocks() const { return k_; }
  int voxels() const { return n_; }
  Eigen::MatrixXd factor(int voxel) const { return l_.block(0, voxel * k_, k_, k_); }

  /// y += H^T blkdiag(L_n) H z, with z and y regressor-major.
  void apply_add(const double *z, double *y) const;

private:
  int k_ = 0;
  int n_ = 0;
  Eigen::MatrixXd l_;
};

/// Dense permutation H with vec(W) = H vec(W^T) for a K x N matrix W.
Eigen::MatrixXd stacking_permutation(int k, int n);

/// Dense Kronecker product.
Eigen::MatrixXd kron(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b);

/// Verifies H^T (diag(lambda) (x) XtX) H == XtX (x) diag(lambda) exactly.
bool permute_kron_identity_check(int k, int n, const Eigen::VectorXd &lambda,
                                 const Eigen::MatrixXd &xtx);

} // namespace gmrfglm
