#pragma once

#include "gmrfglm/lattice.hpp"
#include "gmrfglm/model.hpp"
#include "gmrfglm/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>

namespace testing {

using namespace gmrfglm;

inline Eigen::MatrixXd random_matrix(long rows, long cols, std::uint64_t seed) {
  StreamRng rng(seed, Purpose::Test);
  Eigen::MatrixXd m(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i)
      m(i, j) = rng.normal();
  return m;
}

inline Eigen::MatrixXd random_spd(long n, std::uint64_t seed) {
  const Eigen::MatrixXd a = random_matrix(n, n, seed);
  return a * a.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd random_positive(long n, std::uint64_t seed, double lo = 0.5,
                                       double hi = 2.0) {
  StreamRng rng(seed, Purpose::Test, 7);
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

/// Dataset on a box lattice with a random design (intercept last) and
/// Y = X W + AR noise.
inline GlmDataset random_dataset(const GridDims &dims, int t, int k, int p, std::uint64_t seed,
                                 double noise_sd = 1.0,
                                 NeighborMode mode = NeighborMode::Volume3D) {
  GlmDataset d;
  d.lattice = std::make_shared<const VoxelLattice>(build_box_lattice(dims, mode));
  const int n = d.lattice->size();
  d.x = random_matrix(t, k, seed);
  d.x.col(k - 1).setOnes();
  d.p = p;
  const Eigen::MatrixXd w = random_matrix(k, n, seed + 1);
  d.y = d.x * w;
  StreamRng rng(seed, Purpose::Test, 3);
  for (int v = 0; v < n; ++v) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(t);
    for (int i = 0; i < t; ++i) {
      e[i] = noise_sd * rng.normal();
      for (int q = 0; q < p && q < i; ++q)
        e[i] += (0.3 / (q + 1)) * e[i - 1 - q];
    }
    d.y.col(v) += e;
  }
  return d;
}

inline double rel_err(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Running mean and sample covariance; draws are buffered and folded in
/// with one matrix product per batch.
class CovAccumulator {
public:
  explicit CovAccumulator(long dim, long batch = 512)
      : sum_(Eigen::VectorXd::Zero(dim)), outer_(Eigen::MatrixXd::Zero(dim, dim)),
        buf_(dim, batch) {}

  void add(const Eigen::VectorXd &x) {
    buf_.col(used_++) = x;
    ++n_;
    if (used_ == buf_.cols())
      flush();
  }
  long count() const { return n_; }
  Eigen::VectorXd mean() {
    flush();
    return sum_ / static_cast<double>(n_);
  }
  Eigen::MatrixXd cov() {
    const Eigen::VectorXd m = mean();
    return (outer_ - static_cast<double>(n_) * m * m.transpose()) / static_cast<double>(n_ - 1);
  }

private:
  void flush() {
    if (used_ == 0)
      return;
    const auto b = buf_.leftCols(used_);
    sum_ += b.rowwise().sum();
    outer_.noalias() += b * b.transpose();
    used_ = 0;
  }

  long n_ = 0;
  long used_ = 0;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd outer_;
  Eigen::MatrixXd buf_;
};

/// Largest |z| over the mean and over the lower-triangle covariance
/// entries, against a Gaussian with the given mean and covariance, plus the
/// number of covariance entries at or beyond 4 standard errors.
struct MomentCheck {
  double max_mean_z = 0.0;
  double max_cov_z = 0.0;
  long cov_entries = 0;
  long cov_beyond_4 = 0;

  /// Every mean entry within 4 standard errors. With many covariance
  /// entries a few 4-sigma excursions are expected by chance, so the
  /// count may not exceed five times its expectation (at least 3) and no
  /// entry may pass the Bonferroni bound at the same per-entry level.
  bool ok() const {
    const double p4 = 6.334e-5; // P(|z| >= 4)
    const double allowed = std::max(3.0, 5.0 * p4 * static_cast<double>(cov_entries));
    const double target = p4 / static_cast<double>(std::max(cov_entries, 1L));
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (std::erfc(mid / std::sqrt(2.0)) > target ? lo : hi) = mid;
    }
    const double bonferroni = hi;
    return max_mean_z < 4.0 && static_cast<double>(cov_beyond_4) <= allowed &&
           max_cov_z < std::max(4.0, bonferroni);
  }
};

inline MomentCheck moment_check(CovAccumulator &acc, const Eigen::VectorXd &mean,
                                const Eigen::MatrixXd &cov) {
  MomentCheck r;
  const Eigen::VectorXd m = acc.mean();
  const Eigen::MatrixXd c = acc.cov();
  const double n = static_cast<double>(acc.count());
  for (long i = 0; i < m.size(); ++i) {
    r.max_mean_z = std::max(r.max_mean_z, std::abs(m[i] - mean[i]) / std::sqrt(cov(i, i) / n));
    for (long j = 0; j <= i; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      const double z = std::abs(c(i, j) - cov(i, j)) / se;
      r.max_cov_z = std::max(r.max_cov_z, z);
      ++r.cov_entries;
      if (z >= 4.0)
        ++r.cov_beyond_4;
    }
  }
  return r;
}

} // namespace testing
