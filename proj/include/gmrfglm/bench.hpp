#pragma once

#include "gmrfglm/diagnostics.hpp"
#include "gmrfglm/gibbs.hpp"
#include "gmrfglm/svb.hpp"
#include "gmrfglm/synth.hpp"

#include <string>
#include <vector>

namespace gmrfglm {

struct SamplingBenchConfig {
  std::vector<int> sizes{1000, 10000};
  int k = 5;
  int t = 351;
  std::vector<double> deltas{1e-6, 1e-8};
  int draws = 100;
  /// Draws for the Cholesky method; 0 uses `draws`.
  int cholesky_draws = 0;
  bool cholesky = true;
  /// Also run PCG without IC(0).
  bool unpreconditioned = true;
  /// Cholesky is skipped (status "skipped") above this predicted factor size.
  long cholesky_max_nnz = 200'000'000;
  std::uint64_t seed = 1;
};

struct SamplingBenchRow {
  std::string method; // "cholesky", "pcg" or "cg"
  int n = 0;
  long dim = 0;
  double delta = 0.0;
  int draws = 0;
  double mean_seconds = 0.0;
  double mean_iterations = 0.0;
  std::string status = "ok";
};

/// Times draws from the W full conditional of a K-regressor model on a
/// compact 3D lattice of each size. Each draw refreshes the factor or
/// preconditioner, as a Gibbs sweep does.
std::vector<SamplingBenchRow> bench_sampling(const SamplingBenchConfig &cfg);

/// Slope of log(y) against log(x) through two points.
double loglog_slope(double x1, double y1, double x2, double y2);

/// Lattice holding the first n voxels (scan order) of a near-cubic box.
VoxelLattice compact_lattice(int n, NeighborMode mode = NeighborMode::Volume3D);

struct AccuracyBenchConfig {
  SynthConfig synth;
  int regressors = 4;
  double reference_delta = 1e-8;
  int n_burn = 1000;
  int n_iter = 20000;
  int thin = 5;
  std::vector<double> mcmc_deltas{1e-6};
  std::vector<double> svb_deltas{1e-4, 1e-6};
  std::vector<int> svb_ns{100};
  SvbConfig svb;
  std::uint64_t seed = 1;
};

struct AccuracyRow {
  std::string method; // "mcmc" or "svb"
  double delta = 0.0;
  int ns = 0;
  double rmse = 0.0;
  double seconds = 0.0;
  long pcg_iterations = 0;
};

struct AccuracyResult {
  std::vector<AccuracyRow> rows;
  Eigen::MatrixXd reference_mean; // first `regressors` rows of W
  /// RMS over coefficients of the reference chain's MC standard errors.
  double mc_se_floor = 0.0;
  double reference_seconds = 0.0;
};

/// RMSE of posterior-mean W (first `rows` regressors) against a reference.
double rmse_rows(const Eigen::MatrixXd &w, const Eigen::MatrixXd &ref, int rows);

/// RMS over coefficients of sd * sqrt(IF / n) computed from thinned draws.
double mc_se_floor(const std::vector<Eigen::MatrixXf> &row_draws);

/// Reference MCMC at the reference delta, then every MCMC and SVB
/// configuration, all with PCG and the same seed.
AccuracyResult bench_accuracy(const AccuracyBenchConfig &cfg);
AccuracyResult bench_accuracy(const GlmDataset &data, const AccuracyBenchConfig &cfg);

struct ConvergenceRow {
  std::string parameter;
  double final_value = 0.0;
  int first_within = -1;
  double last_rel_error = 0.0;
};

/// Per-column iterations-to-tol. The final value is the mean of the last
/// `tail` rows (the whole trace when tail <= 0 or larger than the trace).
std::vector<ConvergenceRow> convergence_table(const Eigen::MatrixXd &traces,
                                              const std::vector<std::string> &names,
                                              bool cumulative, int tail = 200, double tol = 0.01);

/// SVB alpha means per iteration, iterations x K.
Eigen::MatrixXd svb_alpha_trace(const SvbPosterior &post);

/// Appends rows to a CSV, writing the header when the file is new and
/// refusing a file whose header differs.
void append_csv(const std::string &path, const std::vector<std::string> &header,
                const std::vector<std::vector<std::string>> &rows);

} // namespace gmrfglm
