#include "gmrfglm/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace gmrfglm {

// ---------------------------------------------------------------------------
// SparseSym

SparseSym SparseSym::from_triplets(int n, const std::vector<Triplet> &triplets) {
  std::vector<long> counts(n + 1, 0);
  for (const auto &t : triplets) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw Error("SparseSym::from_triplets: index out of range");
    ++counts[std::max(t.row, t.col) + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<std::pair<int, double>> entries(triplets.size());
  std::vector<long> next(counts.begin(), counts.end() - 1);
  for (const auto &t : triplets) {
    const int r = std::max(t.row, t.col);
    const int c = std::min(t.row, t.col);
    entries[next[r]++] = {c, t.value};
  }

  SparseSym out;
  out.n_ = n;
  out.row_ptr_.assign(n + 1, 0);
  out.cols_.reserve(entries.size());
  out.vals_.reserve(entries.size());
  for (int r = 0; r < n; ++r) {
    auto first = entries.begin() + counts[r];
    auto last = entries.begin() + counts[r + 1];
    std::sort(first, last,
              [](const auto &a, const auto &b) { return a.first < b.first; });
    for (auto it = first; it != last; ++it) {
      if (!out.cols_.empty() && static_cast<long>(out.cols_.size()) > out.row_ptr_[r] &&
          out.cols_.back() == it->first) {
        out.vals_.back() += it->second;
      } else {
        out.cols_.push_back(it->first);
        out.vals_.push_back(it->second);
      }
    }
    out.row_ptr_[r + 1] = static_cast<long>(out.cols_.size());
  }
  return out;
}

SparseSym SparseSym::identity(int n, double scale) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i)
    t.push_back({i, i, scale});
  return from_triplets(n, t);
}

SparseSym SparseSym::from_dense(const Eigen::MatrixXd &dense, double drop_tol) {
  const int n = static_cast<int>(dense.rows());
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      if (i == j || std::abs(dense(i, j)) > drop_tol)
        t.push_back({i, j, dense(i, j)});
  return from_triplets(n, t);
}

double SparseSym::diagonal(int i) const {
  const long last = row_ptr_[i + 1];
  if (last > row_ptr_[i] && cols_[last - 1] == i)
    return vals_[last - 1];
  return 0.0;
}

Eigen::VectorXd SparseSym::diagonal() const {
  Eigen::VectorXd d(n_);
  for (int i = 0; i < n_; ++i)
    d[i] = diagonal(i);
  return d;
}

double SparseSym::max_abs() const {
  double m = 0.0;
  for (double v : vals_)
    m = std::max(m, std::abs(v));
  return m;
}

std::vector<int> SparseSym::row_counts_full() const {
  std::vector<int> counts(n_, 0);
  for (int i = 0; i < n_; ++i)
    for (long p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      ++counts[i];
      if (cols_[p] != i)
        ++counts[cols_[p]];
    }
  return counts;
}

void SparseSym::multiply_add(const double *x, double *y) const {
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    const double xi = x[i];
    for (long p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const int j = cols_[p];
      const double v = vals_[p];
      acc += v * x[j];
      if (j != i)
        y[j] += v * xi;
    }
    y[i] += acc;
  }
}

Eigen::VectorXd SparseSym::multiply(const Eigen::VectorXd &x) const {
  if (x.size() != n_)
    throw Error("SparseSym::multiply: dimension mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  multiply_add(x.data(), y.data());
  return y;
}

Eigen::MatrixXd SparseSym::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (long p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      d(i, cols_[p]) += vals_[p];
      if (cols_[p] != i)
        d(cols_[p], i) += vals_[p];
    }
  return d;
}

SparseSym SparseSym::permuted(const Permutation &perm) const {
  if (perm.size() != n_)
    throw Error("SparseSym::permuted: permutation size mismatch");
  const auto &inv = perm.inverse();
  std::vector<Triplet> t;
  t.reserve(vals_.size());
  for (int i = 0; i < n_; ++i)
    for (long p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      t.push_back({inv[i], inv[cols_[p]], vals_[p]});
  return from_triplets(n_, t);
}

void SparseSym::write_triplets(std::ostream &out) const {
  out.precision(17);
  for (int i = 0; i < n_; ++i)
    for (long p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      out << i << ' ' << cols_[p] << ' ' << vals_[p] << '\n';
      if (cols_[p] != i)
        out << cols_[p] << ' ' << i << ' ' << vals_[p] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Permutation

Permutation::Permutation(std::vector<int> forward) : forward_(std::move(forward)) {
  const int n = static_cast<int>(forward_.size());
  inverse_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const int old = forward_[i];
    if (old < 0 || old >= n || inverse_[old] != -1)
      throw Error("Permutation: not a bijection");
    inverse_[old] = i;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> f(n);
  std::iota(f.begin(), f.end(), 0);
  return Permutation(std::move(f));
}

bool Permutation::is_identity() const {
  for (int i = 0; i < size(); ++i)
    if (forward_[i] != i)
      return false;
  return true;
}

Eigen::VectorXd Permutation::apply(const Eigen::VectorXd &x) const {
  Eigen::VectorXd y(x.size());
  for (int i = 0; i < size(); ++i)
    y[i] = x[forward_[i]];
  return y;
}

Eigen::VectorXd Permutation::apply_inverse(const Eigen::VectorXd &x) const {
  Eigen::VectorXd y(x.size());
  for (int i = 0; i < size(); ++i)
    y[forward_[i]] = x[i];
  return y;
}

// ---------------------------------------------------------------------------
// TriangularFactor

TriangularFactor::TriangularFactor(int n, std::vector<long> col_ptr, std::vector<int> row_idx,
                                   std::vector<double> values, Permutation perm)
    : n_(n), col_ptr_(std::move(col_ptr)), rows_(std::move(row_idx)), vals_(std::move(values)),
      perm_(std::move(perm)) {}

void TriangularFactor::forward_solve(double *x) const {
  for (int j = 0; j < n_; ++j) {
    const long start = col_ptr_[j];
    const double d = vals_[start];
    if (d == 0.0)
      throw Error("tri_solve: zero diagonal");
    const double xj = x[j] /= d;
    for (long p = start + 1; p < col_ptr_[j + 1]; ++p)
      x[rows_[p]] -= vals_[p] * xj;
  }
}

void TriangularFactor::backward_solve(double *x) const {
  for (int j = n_ - 1; j >= 0; --j) {
    const long start = col_ptr_[j];
    double acc = x[j];
    for (long p = start + 1; p < col_ptr_[j + 1]; ++p)
      acc -= vals_[p] * x[rows_[p]];
    const double d = vals_[start];
    if (d == 0.0)
      throw Error("tri_solve: zero diagonal");
    x[j] = acc / d;
  }
}

void TriangularFactor::solve_in_place(Eigen::VectorXd &b, Eigen::VectorXd &work) const {
  const auto &f = perm_.forward();
  work.resize(n_);
  for (int i = 0; i < n_; ++i)
    work[i] = b[f[i]];
  forward_solve(work.data());
  backward_solve(work.data());
  for (int i = 0; i < n_; ++i)
    b[f[i]] = work[i];
}

Eigen::VectorXd TriangularFactor::solve(const Eigen::VectorXd &b) const {
  Eigen::VectorXd x = b, work;
  solve_in_place(x, work);
  return x;
}

Eigen::MatrixXd TriangularFactor::to_dense() const {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (long p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
      l(rows_[p], j) = vals_[p];
  return l;
}

Eigen::VectorXd tri_solve(const TriangularFactor &factor, const Eigen::VectorXd &b,
                          SolveDirection direction) {
  if (b.size() != factor.size())
    throw Error("tri_solve: dimension mismatch");
  Eigen::VectorXd x = b;
  if (direction == SolveDirection::Forward)
    factor.forward_solve(x.data());
  else
    factor.backward_solve(x.data());
  return x;
}

// ---------------------------------------------------------------------------
// Ordering

Permutation fill_reducing_order(const SparseSym &a) {
  const int n = a.size();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * a.nnz_lower());
  const auto &rp = a.row_ptr();
  const auto &ci = a.col_idx();
  bool has_offdiag = false;
  for (int i = 0; i < n; ++i)
    for (long p = rp[i]; p < rp[i + 1]; ++p) {
      t.emplace_back(i, ci[p], 1.0);
      if (ci[p] != i) {
        t.emplace_back(ci[p], i, 1.0);
        has_offdiag = true;
      }
    }
  if (!has_offdiag)
    return Permutation::identity(n);
  Eigen::SparseMatrix<double> pattern(n, n);
  pattern.setFromTriplets(t.begin(), t.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p;
  Eigen::AMDOrdering<int> amd;
  amd(pattern, p);
  // AMD returns the elimination sequence: indices[new] = old.
  std::vector<int> forward(p.indices().data(), p.indices().data() + n);
  return Permutation(std::move(forward));
}

// ---------------------------------------------------------------------------
// Cholesky

namespace {

/// Pivots below this fraction of the original diagonal count as breakdown.
constexpr double kPivotTol = 1e-13;

struct PermutedPattern {
  std::vector<long> row_ptr;
  std::vector<int> cols;
  std::vector<long> source; // position in the original lower CSR
};

PermutedPattern permute_pattern(const SparseSym &a, const Permutation &perm) {
  const int n = a.size();
  const auto &inv = perm.inverse();
  const auto &rp = a.row_ptr();
  const auto &ci = a.col_idx();
  std::vector<long> counts(n + 1, 0);
  for (int i = 0; i < n; ++i)
    for (long p = rp[i]; p < rp[i + 1]; ++p)
      ++counts[std::max(inv[i], inv[ci[p]]) + 1];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  PermutedPattern out;
  out.row_ptr = counts;
  out.cols.resize(a.nnz_lower());
  out.source.resize(a.nnz_lower());
  std::vector<long> next(counts.begin(), counts.end() - 1);
  for (int i = 0; i < n; ++i)
    for (long p = rp[i]; p < rp[i + 1]; ++p) {
      const int r = std::max(inv[i], inv[ci[p]]);
      const int c = std::min(inv[i], inv[ci[p]]);
      out.cols[next[r]] = c;
      out.source[next[r]] = p;
      ++next[r];
    }
  std::vector<std::pair<int, long>> buf;
  for (int r = 0; r < n; ++r) {
    buf.clear();
    for (long p = out.row_ptr[r]; p < out.row_ptr[r + 1]; ++p)
      buf.emplace_back(out.cols[p], out.source[p]);
    std::sort(buf.begin(), buf.end());
    long p = out.row_ptr[r];
    for (const auto &[c, s] : buf) {
      out.cols[p] = c;
      out.source[p] = s;
      ++p;
    }
  }
  return out;
}

std::vector<int> elimination_tree(int n, const std::vector<long> &rp, const std::vector<int> &ci) {
  std::vector<int> parent(n, -1), ancestor(n, -1);
  for (int k = 0; k < n; ++k)
    for (long p = rp[k]; p < rp[k + 1]; ++p) {
      int i = ci[p];
      while (i != -1 && i < k) {
        const int next = ancestor[i];
        ancestor[i] = k;
        if (next == -1)
          parent[i] = k;
        i = next;
      }
    }
  return parent;
}

// Nonzero pattern of row k of L in topological order, written to
// stack[top..n). Uses `mark` (stamped with k).
int ereach(int k, const std::vector<long> &rp, const std::vector<int> &ci,
           const std::vector<int> &parent, std::vector<int> &stack, std::vector<int> &mark) {
  const int n = static_cast<int>(parent.size());
  int top = n;
  mark[k] = k;
  for (long p = rp[k]; p < rp[k + 1]; ++p) {
    int i = ci[p];
    if (i >= k)
      continue;
    int len = 0;
    // Path from i up the etree to the first marked node, pushed in reverse.
    std::vector<int> &path = stack;
    while (mark[i] != k) {
      path[len++] = i;
      mark[i] = k;
      i = parent[i];
    }
    while (len > 0)
      stack[--top] = path[--len];
  }
  return top;
}

} // namespace

CholeskySymbolic::CholeskySymbolic(const SparseSym &pattern, Permutation perm)
    : perm_(std::move(perm)) {
  const int n = pattern.size();
  if (perm_.size() != n)
    throw Error("cholesky: permutation size mismatch");
  auto pp = permute_pattern(pattern, perm_);
  perm_row_ptr_ = std::move(pp.row_ptr);
  perm_cols_ = std::move(pp.cols);
  value_map_ = std::move(pp.source);
  parent_ = elimination_tree(n, perm_row_ptr_, perm_cols_);

  std::vector<long> counts(n, 1);
  std::vector<int> stack(n), mark(n, -1);
  for (int k = 0; k < n; ++k) {
    const int top = ereach(k, perm_row_ptr_, perm_cols_, parent_, stack, mark);
    for (int t = top; t < n; ++t)
      ++counts[stack[t]];
  }
  col_ptr_.assign(n + 1, 0);
  for (int j = 0; j < n; ++j)
    col_ptr_[j + 1] = col_ptr_[j] + counts[j];
}

TriangularFactor CholeskySymbolic::factorize(const SparseSym &a) const {
  const int n = perm_.size();
  if (a.size() != n || a.nnz_lower() != static_cast<long>(value_map_.size()))
    throw Error("cholesky: matrix pattern does not match symbolic analysis");
  const auto &av = a.values();
  std::vector<long> next(col_ptr_.begin(), col_ptr_.end() - 1);
  std::vector<int> li(col_ptr_.back());
  std::vector<double> lx(col_ptr_.back());
  std::vector<double> x(n, 0.0);
  std::vector<int> stack(n), mark(n, -1);

  for (int k = 0; k < n; ++k) {
    int top = ereach(k, perm_row_ptr_, perm_cols_, parent_, stack, mark);
    x[k] = 0.0;
    for (long p = perm_row_ptr_[k]; p < perm_row_ptr_[k + 1]; ++p)
      x[perm_cols_[p]] += av[value_map_[p]];
    double d = x[k];
    const double akk = d;
    x[k] = 0.0;
    for (; top < n; ++top) {
      const int i = stack[top];
      const double lki = x[i] / lx[col_ptr_[i]];
      x[i] = 0.0;
      for (long p = col_ptr_[i] + 1; p < next[i]; ++p)
        x[li[p]] -= lx[p] * lki;
      d -= lki * lki;
      const long p = next[i]++;
      li[p] = k;
      lx[p] = lki;
    }
    if (!(d > kPivotTol * akk))
      throw NotPositiveDefinite("cholesky: matrix is not positive definite (pivot " +
                                    std::to_string(k) + ")",
                                k);
    const long p = next[k]++;
    li[p] = k;
    lx[p] = std::sqrt(d);
  }
  return TriangularFactor(n, col_ptr_, std::move(li), std::move(lx), perm_);
}

long cholesky_factor_nnz(const SparseSym &a, const Permutation &perm) {
  return CholeskySymbolic(a, perm).factor_nnz();
}

TriangularFactor cholesky(const SparseSym &a, const Permutation &perm) {
  return CholeskySymbolic(a, perm).factorize(a);
}

// ---------------------------------------------------------------------------
// IC(0)

namespace {

// Returns false on breakdown.
bool try_ic0(const PermutedPattern &pp, const std::vector<double> &av, int n, double shift,
             std::vector<double> &lv, long &bad_pivot) {
  lv.assign(pp.cols.size(), 0.0);
  const auto &rp = pp.row_ptr;
  const auto &ci = pp.cols;
  for (int i = 0; i < n; ++i) {
    double diag_sum = 0.0;
    long diag_pos = -1;
    for (long p = rp[i]; p < rp[i + 1]; ++p) {
      const int k = ci[p];
      if (k == i) {
        diag_pos = p;
        break;
      }
      // s = a_ik - sum_{j<k} L_ij L_kj over the shared pattern
      double s = av[pp.source[p]];
      long pi = rp[i], pk = rp[k];
      const long end_i = p, end_k = rp[k + 1] - 1; // row k's diagonal is last
      while (pi < end_i && pk < end_k) {
        const int ji = ci[pi], jk = ci[pk];
        if (ji == jk) {
          s -= lv[pi] * lv[pk];
          ++pi;
          ++pk;
        } else if (ji < jk) {
          ++pi;
        } else {
          ++pk;
        }
      }
      const double lkk = lv[rp[k + 1] - 1];
      lv[p] = s / lkk;
      diag_sum += lv[p] * lv[p];
    }
    if (diag_pos < 0) {
      bad_pivot = i;
      return false;
    }
    const double aii = av[pp.source[diag_pos]] * (1.0 + shift);
    const double d = aii - diag_sum;
    if (!(d > kPivotTol * aii) || !std::isfinite(d)) {
      bad_pivot = i;
      return false;
    }
    lv[diag_pos] = std::sqrt(d);
  }
  return true;
}

TriangularFactor csr_lower_to_factor(int n, const PermutedPattern &pp,
                                     const std::vector<double> &lv, const Permutation &perm) {
  std::vector<long> cp(n + 1, 0);
  for (int c : pp.cols)
    ++cp[c + 1];
  std::partial_sum(cp.begin(), cp.end(), cp.begin());
  std::vector<long> next(cp.begin(), cp.end() - 1);
  std::vector<int> ri(pp.cols.size());
  std::vector<double> rv(pp.cols.size());
  for (int i = 0; i < n; ++i)
    for (long p = pp.row_ptr[i]; p < pp.row_ptr[i + 1]; ++p) {
      const long q = next[pp.cols[p]]++;
      ri[q] = i;
      rv[q] = lv[p];
    }
  return TriangularFactor(n, std::move(cp), std::move(ri), std::move(rv), perm);
}

} // namespace

Ic0Result ic0(const SparseSym &a, const Permutation &perm) {
  const int n = a.size();
  const auto pp = permute_pattern(a, perm);
  std::vector<double> lv;
  long bad = -1;
  for (double shift : {0.0, 1e-3, 1e-2, 1e-1, 1.0}) {
    if (try_ic0(pp, a.values(), n, shift, lv, bad))
      return {csr_lower_to_factor(n, pp, lv, perm), shift};
  }
  throw NotPositiveDefinite("ic0: breakdown at every diagonal shift", bad);
}

Ic0Result ic0(const SparseSym &a) { return ic0(a, Permutation::identity(a.size())); }

// ---------------------------------------------------------------------------
// Preconditioner / PCG

Preconditioner Preconditioner::identity() { return Preconditioner(); }

Preconditioner Preconditioner::jacobi(const Eigen::VectorXd &diagonal) {
  Preconditioner m;
  m.kind_ = Kind::Jacobi;
  m.inv_diag_ = diagonal.cwiseInverse();
  for (Eigen::Index i = 0; i < diagonal.size(); ++i)
    if (!(diagonal[i] > 0.0))
      throw Error("Jacobi preconditioner: non-positive diagonal");
  return m;
}

Preconditioner Preconditioner::factor(TriangularFactor l) {
  Preconditioner m;
  m.kind_ = Kind::Factor;
  m.factor_ = std::move(l);
  return m;
}

Preconditioner Preconditioner::incomplete_cholesky(const SparseSym &a, const Permutation &perm) {
  try {
    auto r = ic0(a, perm);
    Preconditioner m = factor(std::move(r.factor));
    m.shift_ = r.shift;
    return m;
  } catch (const NotPositiveDefinite &) {
    std::cerr << "warning: IC(0) broke down at every shift; using Jacobi preconditioner\n";
    return jacobi(a.diagonal());
  }
}

void Preconditioner::apply(const Eigen::VectorXd &r, Eigen::VectorXd &z) const {
  switch (kind_) {
  case Kind::Identity:
    z = r;
    break;
  case Kind::Jacobi:
    z = r.cwiseProduct(inv_diag_);
    break;
  case Kind::Factor: {
    thread_local Eigen::VectorXd work;
    z = r;
    factor_.solve_in_place(z, work);
    break;
  }
  }
}

int default_pcg_max_iter(long n) {
  const double m = 10.0 * std::sqrt(static_cast<double>(std::max<long>(n, 1)));
  return static_cast<int>(std::min(1e5, std::ceil(m)));
}

PcgResult pcg(const LinearOperator &apply_a, const Eigen::VectorXd &b, const Preconditioner &m,
              const Eigen::VectorXd &x0, double delta, int max_iter) {
  if (!(delta > 0.0))
    throw Error("pcg: tolerance must be positive");
  const Eigen::Index n = b.size();
  if (max_iter <= 0)
    max_iter = default_pcg_max_iter(n);
  PcgResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x = Eigen::VectorXd::Zero(n);
    return res;
  }
  res.x = x0.size() == n ? x0 : Eigen::VectorXd::Zero(n);

  Eigen::VectorXd r(n), z(n), p(n), q(n);
  apply_a(res.x, q);
  r = b - q;
  res.relres = r.norm() / bnorm;
  if (res.relres <= delta)
    return res;

  PcgResult best = res;
  m.apply(r, z);
  p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    apply_a(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0) || !std::isfinite(pq)) {
      throw PcgNotConverged("pcg: breakdown (operator not positive definite)", best);
    }
    const double step = rz / pq;
    res.x.noalias() += step * p;
    r.noalias() -= step * q;
    res.iterations = it;
    res.relres = r.norm() / bnorm;
    if (res.relres <= delta) {
      // Confirm with the true residual; restart on drift.
      apply_a(res.x, q);
      r = b - q;
      res.relres = r.norm() / bnorm;
      if (res.relres <= delta)
        return res;
      m.apply(r, z);
      p = z;
      rz = r.dot(z);
      continue;
    }
    if (res.relres < best.relres) {
      best.x = res.x;
      best.relres = res.relres;
    }
    best.iterations = it;
    m.apply(r, z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw PcgNotConverged("pcg: no convergence within " + std::to_string(max_iter) +
                            " iterations (relres " + std::to_string(best.relres) + ")",
                        best);
}

PcgResult pcg(const SparseSym &a, const Eigen::VectorXd &b, const Preconditioner &m,
              const Eigen::VectorXd &x0, double delta, int max_iter) {
  return pcg(
      [&a](const Eigen::VectorXd &x, Eigen::VectorXd &y) {
        y.setZero(x.size());
        a.multiply_add(x.data(), y.data());
      },
      b, m, x0, delta, max_iter);
}

} // namespace gmrfglm
