#pragma once

#include "gmrfglm/model.hpp"

#include <cstdint>
#include <vector>

namespace gmrfglm {

/// Canonical double-gamma HRF at time t seconds (shapes 6 and 16, ratio 1/6).
double canonical_hrf(double t);

struct DesignConfig {
  int t = 351;
  int n_task = 4;
  double tr = 2.0;
  /// Stimulus blocks per task regressor; negative picks T / 50.
  int blocks = -1;
  int block_length = 5;
  double amplitude = 1.0;
  std::uint64_t seed = 1;
};

/// Convolves each stimulus column (T x n_task, one value per scan) with the
/// HRF, removes column means and appends an intercept column of ones.
Eigen::MatrixXd design_from_stimulus(const Eigen::MatrixXd &stimulus, double tr);
/// Random block stimuli per task regressor.
Eigen::MatrixXd make_stimulus(const DesignConfig &cfg);
Eigen::MatrixXd make_design(const DesignConfig &cfg);
Eigen::MatrixXd make_design(int t, int n_task, std::uint64_t seed);

struct SynthConfig {
  GridDims block{53, 63, 46};
  GridDims mask{10, 10, 10};
  std::array<double, 3> voxel_size{3.0, 3.0, 3.0};
  NeighborMode mode = NeighborMode::Volume3D;
  int k = 5;
  int p = 1;
  int t = 351;
  double tr = 2.0;
  std::vector<double> alpha_true{1e-4, 5e-4, 2e-3, 1e-2};
  double beta_true = 10.0;
  double noise_var = 100.0;
  double intercept_mean = 900.0;
  double intercept_sd = 130.0;
  double target_mean = 100.0;
  double prior_delta = 1e-8;
  std::uint64_t seed = 1;
};

struct SynthResult {
  GlmDataset data;   // masked voxels, scaled
  ModelState truth;  // masked voxels, in scaled units
  std::shared_ptr<const VoxelLattice> lattice;
  std::vector<std::uint8_t> mask; // over the block grid
  double scale = 1.0;             // factor applied to Y
  double raw_grand_mean = 0.0;    // block mean before scaling
  Eigen::VectorXd raw_intercepts; // whole block, before scaling
  Eigen::MatrixXd raw_task_fields; // whole block, (K-1) x block voxels, before scaling
};

/// Centered box mask of size `mask` inside `block`.
std::vector<std::uint8_t> centered_mask(const GridDims &block, const GridDims &mask);

SynthResult simulate(const SynthConfig &cfg);

} // namespace gmrfglm
