#pragma once

#include "gmrfglm/error.hpp"

#include <Eigen/Dense>

#include <functional>
#include <ostream>
#include <vector>

namespace gmrfglm {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Symmetric sparse matrix stored as the lower triangle (diagonal
/// included) in compressed row form. Column indices within a row are
/// strictly increasing; the diagonal, when present, is the last entry.
class SparseSym {
public:
  SparseSym() = default;

  /// Builds from triplets. Entries above the diagonal are mirrored into the
  /// lower triangle and duplicates are summed, so callers may pass either
  /// one triangle or both (in which case off-diagonals must be halved).
  static SparseSym from_triplets(int n, const std::vector<Triplet> &triplets);
  static SparseSym identity(int n, double scale = 1.0);
  static SparseSym from_dense(const Eigen::MatrixXd &dense, double drop_tol = 0.0);

  int size() const { return n_; }
  long nnz_lower() const { return static_cast<long>(cols_.size()); }

  const std::vector<long> &row_ptr() const { return row_ptr_; }
  const std::vector<int> &col_idx() const { return cols_; }
  const std::vector<double> &values() const { return vals_; }
  std::vector<double> &values() { return vals_; }

  double diagonal(int i) const;
  Eigen::VectorXd diagonal() const;
  double max_abs() const;
  /// Number of stored entries in row i of the full symmetric matrix.
  std::vector<int> row_counts_full() const;

  Eigen::VectorXd multiply(const Eigen::VectorXd &x) const;
  void multiply_add(const double *x, double *y) const;
  Eigen::MatrixXd to_dense() const;

  /// P A P^T where perm.forward()[new] = old.
  SparseSym permuted(const class Permutation &perm) const;

  void write_triplets(std::ostream &out) const;

private:
  int n_ = 0;
  std::vector<long> row_ptr_{0};
  std::vector<int> cols_;
  std::vector<double> vals_;
};

/// forward[new_index] = old_index, inverse[old_index] = new_index.
class Permutation {
public:
  Permutation() = default;
  explicit Permutation(std::vector<int> forward);
  static Permutation identity(int n);

  int size() const { return static_cast<int>(forward_.size()); }
  const std::vector<int> &forward() const { return forward_; }
  const std::vector<int> &inverse() const { return inverse_; }
  bool is_identity() const;

  /// y[new] = x[forward[new]]
  Eigen::VectorXd apply(const Eigen::VectorXd &x) const;
  /// y[forward[new]] = x[new]
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd &x) const;

private:
  std::vector<int> forward_;
  std::vector<int> inverse_;
};

/// Lower triangular sparse factor L in compressed column form (diagonal
/// first in every column), with the permutation it was computed under:
/// L L^T ~ P A P^T.
class TriangularFactor {
public:
  TriangularFactor() = default;
  TriangularFactor(int n, std::vector<long> col_ptr, std::vector<int> row_idx,
                   std::vector<double> values, Permutation perm);

  int size() const { return n_; }
  long nnz() const { return static_cast<long>(rows_.size()); }
  const Permutation &permutation() const { return perm_; }
  const std::vector<long> &col_ptr() const { return col_ptr_; }
  const std::vector<int> &row_idx() const { return rows_; }
  const std::vector<double> &values() const { return vals_; }

  /// Solves L x = b in place (factor coordinates).
  void forward_solve(double *x) const;
  /// Solves L^T x = b in place (factor coordinates).
  void backward_solve(double *x) const;
  /// x = P^T L^{-T} L^{-1} P b, i.e. an (approximate) solve with A.
  Eigen::VectorXd solve(const Eigen::VectorXd &b) const;
  void solve_in_place(Eigen::VectorXd &b, Eigen::VectorXd &work) const;

  Eigen::MatrixXd to_dense() const;

private:
  int n_ = 0;
  std::vector<long> col_ptr_{0};
  std::vector<int> rows_;
  std::vector<double> vals_;
  Permutation perm_;
};

enum class SolveDirection { Forward, Backward };

/// L x = b (forward) or L^T x = b (backward), in factor coordinates.
Eigen::VectorXd tri_solve(const TriangularFactor &factor, const Eigen::VectorXd &b,
                          SolveDirection direction);

/// Deterministic fill-reducing ordering (approximate minimum degree).
Permutation fill_reducing_order(const SparseSym &a);

/// Nonzeros (diagonal included) of the exact Cholesky factor of P A P^T,
/// from the symbolic analysis only.
long cholesky_factor_nnz(const SparseSym &a, const Permutation &perm);

/// Sparse up-looking Cholesky of P A P^T. Throws NotPositiveDefinite.
TriangularFactor cholesky(const SparseSym &a, const Permutation &perm);

/// Symbolic analysis reusable across numeric factorizations of matrices
/// sharing one sparsity pattern.
class CholeskySymbolic {
public:
  CholeskySymbolic() = default;
  CholeskySymbolic(const SparseSym &pattern, Permutation perm);
  const Permutation &permutation() const { return perm_; }
  long factor_nnz() const { return col_ptr_.back(); }
  TriangularFactor factorize(const SparseSym &a) const;

private:
  Permutation perm_;
  std::vector<int> parent_;
  std::vector<long> col_ptr_{0};
  // Map from permuted lower-CSR position to original lower-CSR position.
  std::vector<long> value_map_;
  std::vector<long> perm_row_ptr_;
  std::vector<int> perm_cols_;
};

struct Ic0Result {
  TriangularFactor factor;
  /// Diagonal shift tau actually used (0 when no shift was needed).
  double shift = 0.0;
};

/// Zero-fill incomplete Cholesky of P A P^T on the pattern of A. On a
/// non-positive pivot the factorization is retried on A + tau diag(A) for
/// tau in {1e-3, 1e-2, 1e-1, 1}. Throws NotPositiveDefinite if all shifts
/// break down.
Ic0Result ic0(const SparseSym &a, const Permutation &perm);
Ic0Result ic0(const SparseSym &a);

/// Preconditioner for PCG: identity, Jacobi, or a (possibly incomplete)
/// triangular factor.
class Preconditioner {
public:
  enum class Kind { Identity, Jacobi, Factor };

  static Preconditioner identity();
  static Preconditioner jacobi(const Eigen::VectorXd &diagonal);
  static Preconditioner factor(TriangularFactor l);
  /// IC(0) with the documented shift escalation; falls back to Jacobi
  /// (and reports a warning on stderr) when every shift breaks down.
  static Preconditioner incomplete_cholesky(const SparseSym &a, const Permutation &perm);

  Kind kind() const { return kind_; }
  double shift() const { return shift_; }
  /// z = M^{-1} r
  void apply(const Eigen::VectorXd &r, Eigen::VectorXd &z) const;

private:
  Kind kind_ = Kind::Identity;
  Eigen::VectorXd inv_diag_;
  TriangularFactor factor_;
  double shift_ = 0.0;
};

using LinearOperator = std::function<void(const Eigen::VectorXd &, Eigen::VectorXd &)>;

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relres = 0.0;
};

/// Raised when PCG exhausts its iteration budget.
class PcgNotConverged : public Error {
public:
  PcgNotConverged(const std::string &what, PcgResult best)
      : Error(what), best_(std::move(best)) {}
  const PcgResult &best() const { return best_; }

private:
  PcgResult best_;
};

/// Default iteration cap: 10 sqrt(n), at most 1e5.
int default_pcg_max_iter(long n);

/// Preconditioned conjugate gradients stopping on the true relative
/// residual |A x - b| / |b| <= delta. b = 0 returns x = 0 immediately.
/// max_iter <= 0 selects default_pcg_max_iter.
PcgResult pcg(const LinearOperator &apply_a, const Eigen::VectorXd &b,
              const Preconditioner &m, const Eigen::VectorXd &x0, double delta,
              int max_iter = 0);

PcgResult pcg(const SparseSym &a, const Eigen::VectorXd &b, const Preconditioner &m,
              const Eigen::VectorXd &x0, double delta, int max_iter = 0);

} // namespace gmrfglm
