#include "gmrfglm/precision.hpp"

#include <Eigen/Cholesky>

namespace gmrfglm {

PrecisionOperator::PrecisionOperator(Eigen::MatrixXd xtx, Eigen::VectorXd lambda,
                                     Eigen::VectorXd alpha,
                                     std::shared_ptr<const SparseSym> prior)
    : iid_(true), xtx_(std::move(xtx)), lambda_(std::move(lambda)), alpha_(std::move(alpha)),
      prior_(std::move(prior)) {
  if (!prior_)
    throw Error("PrecisionOperator: missing prior precision");
  if (xtx_.rows() != alpha_.size() || xtx_.cols() != alpha_.size())
    throw Error("PrecisionOperator: XtX must be K x K with K = len(alpha)");
  if (lambda_.size() != prior_->size())
    throw Error("PrecisionOperator: lambda length must equal the number of voxels");
}

PrecisionOperator PrecisionOperator::with_blocks(Eigen::MatrixXd blocks, Eigen::VectorXd alpha,
                                                 std::shared_ptr<const SparseSym> prior) {
  if (!prior)
    throw Error("PrecisionOperator: missing prior precision");
  const Eigen::Index k = alpha.size();
  if (blocks.rows() != k || blocks.cols() != k * prior->size())
    throw Error("PrecisionOperator: blocks must be K x (K*N)");
  PrecisionOperator op;
  op.iid_ = false;
  op.blocks_ = std::move(blocks);
  op.alpha_ = std::move(alpha);
  op.prior_ = std::move(prior);
  return op;
}

Eigen::MatrixXd PrecisionOperator::data_block(int voxel) const {
  if (iid_)
    return lambda_[voxel] * xtx_;
  const int k = blocks();
  return blocks_.block(0, static_cast<Eigen::Index>(voxel) * k, k, k);
}

void PrecisionOperator::apply(const Eigen::VectorXd &x, Eigen::VectorXd &y) const {
  const int k = blocks();
  const int n = voxels();
  if (x.size() != size())
    throw Error("apply_precision: dimension mismatch");
  y.setZero(size());
  Eigen::VectorXd u(k), v(k);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < k; ++a)
      u[a] = x[static_cast<long>(a) * n + i];
    if (iid_)
      v.noalias() = lambda_[i] * (xtx_ * u);
    else
      v.noalias() = blocks_.block(0, static_cast<Eigen::Index>(i) * k, k, k) * u;
    for (int a = 0; a < k; ++a)
      y[static_cast<long>(a) * n + i] = v[a];
  }
  Eigen::VectorXd tmp(n);
  for (int a = 0; a < k; ++a) {
    tmp.setZero();
    prior_->multiply_add(x.data() + static_cast<long>(a) * n, tmp.data());
    y.segment(static_cast<long>(a) * n, n).noalias() += alpha_[a] * tmp;
  }
}

Eigen::VectorXd PrecisionOperator::apply(const Eigen::VectorXd &x) const {
  Eigen::VectorXd y;
  apply(x, y);
  return y;
}

LinearOperator PrecisionOperator::as_operator() const {
  return [this](const Eigen::VectorXd &x, Eigen::VectorXd &y) { apply(x, y); };
}

SparseSym PrecisionOperator::assemble() const {
  const int k = blocks();
  const int n = voxels();
  const auto &rp = prior_->row_ptr();
  const auto &ci = prior_->col_idx();
  const auto &pv = prior_->values();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(k) * (prior_->nnz_lower() + static_cast<long>(n) * (k + 1) / 2 + n));
  Eigen::MatrixXd blk;
  for (int i = 0; i < n; ++i) {
    blk = data_block(i);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b <= a; ++b)
        t.push_back({a * n + i, b * n + i, blk(a, b)});
  }
  for (int a = 0; a < k; ++a)
    for (int i = 0; i < n; ++i)
      for (long p = rp[i]; p < rp[i + 1]; ++p)
        t.push_back({a * n + i, a * n + ci[p], alpha_[a] * pv[p]});
  return SparseSym::from_triplets(k * n, t);
}

SparseSym assemble_precision(const Eigen::MatrixXd &xtx, const Eigen::VectorXd &lambda,
                             const Eigen::VectorXd &alpha, const SparseSym &prior,
                             const std::optional<Eigen::MatrixXd> &blocks) {
  auto d = std::make_shared<const SparseSym>(prior);
  if (blocks)
    return PrecisionOperator::with_blocks(*blocks, alpha, d).assemble();
  return PrecisionOperator(xtx, lambda, alpha, d).assemble();
}

Eigen::VectorXd apply_precision(const PrecisionOperator &op, const Eigen::VectorXd &x) {
  return op.apply(x);
}

// ---------------------------------------------------------------------------

BlockFactor::BlockFactor(const PrecisionOperator &op) : k_(op.blocks()), n_(op.voxels()) {
  l_.resize(k_, static_cast<Eigen::Index>(k_) * n_);
  for (int i = 0; i < n_; ++i) {
    Eigen::LLT<Eigen::MatrixXd> li(op.data_block(i));
    if (li.info() != Eigen::Success)
      throw Error("data block of voxel " + std::to_string(i) + " is not positive definite");
    l_.block(0, static_cast<Eigen::Index>(i) * k_, k_, k_) = li.matrixL();
  }
}

void BlockFactor::apply_add(const double *z, double *y) const {
  Eigen::VectorXd u(k_), v(k_);
  for (int i = 0; i < n_; ++i) {
    for (int a = 0; a < k_; ++a)
      u[a] = z[static_cast<long>(a) * n_ + i];
    v.noalias() = l_.block(0, static_cast<Eigen::Index>(i) * k_, k_, k_).triangularView<Eigen::Lower>() * u;
    for (int a = 0; a < k_; ++a)
      y[static_cast<long>(a) * n_ + i] += v[a];
  }
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd stacking_permutation(int k, int n) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k) * n,
                                            static_cast<Eigen::Index>(k) * n);
  // vec(W)[i*K + a] = W(a, i) = vec(W^T)[a*N + i]
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a)
      h(static_cast<Eigen::Index>(i) * k + a, static_cast<Eigen::Index>(a) * n + i) = 1.0;
  return h;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

bool permute_kron_identity_check(int k, int n, const Eigen::VectorXd &lambda,
                                 const Eigen::MatrixXd &xtx) {
  if (static_cast<long>(k) * n > 10000)
    throw Error("permute_kron_identity_check: K*N too large for a dense check");
  if (lambda.size() != n || xtx.rows() != k || xtx.cols() != k)
    throw Error("permute_kron_identity_check: dimension mismatch");
  const Eigen::MatrixXd h = stacking_permutation(k, n);
  const Eigen::MatrixXd voxel_major = kron(lambda.asDiagonal().toDenseMatrix(), xtx);
  const Eigen::MatrixXd regressor_major = kron(xtx, lambda.asDiagonal().toDenseMatrix());
  const Eigen::MatrixXd lhs = h.transpose() * voxel_major * h;
  return (lhs.array() == regressor_major.array()).all();
}

} // namespace gmrfglm
