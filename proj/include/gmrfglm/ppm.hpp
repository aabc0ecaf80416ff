#pragma once

#include "gmrfglm/contrast.hpp"
#include "gmrfglm/gibbs.hpp"
#include "gmrfglm/svb.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmrfglm {

struct PpmMap {
  Eigen::VectorXd prob;
  std::string method;
  long draws = 0;
  std::string contrast;
  double gamma = 0.0;
};

/// Per-voxel fraction of draws (rows of `draws`) strictly above gamma.
PpmMap marginal_ppm_mcmc(const Eigen::MatrixXd &draws, double gamma);
PpmMap marginal_ppm_mcmc(const PosteriorChain &chain, int contrast_index, double grand_mean);

/// Gaussian tail Phi((mean - gamma) / sd); zero variance compares the mean.
PpmMap marginal_ppm_svb(const Eigen::VectorXd &mean, const Eigen::VectorXd &var, double gamma,
                        long draws);
PpmMap marginal_ppm_svb(const std::vector<Eigen::MatrixXd> &w_samples, const Contrast &contrast,
                        double grand_mean);

/// Fraction of draws in which every voxel of `set` exceeds gamma.
double joint_ppm(const Eigen::MatrixXd &draws, double gamma, const std::vector<int> &set);

/// Greedy excursion set: voxels sorted by descending marginal PPM are added
/// while the joint PPM stays >= level. `domain` restricts the candidates
/// (empty means every voxel).
std::vector<int> excursion_set_greedy(const Eigen::MatrixXd &draws, double gamma, double level,
                                      const std::vector<int> &domain = {});

/// Indicator prob > cutoff.
std::vector<std::uint8_t> threshold_map(const PpmMap &ppm, double cutoff = 0.9);

} // namespace gmrfglm
