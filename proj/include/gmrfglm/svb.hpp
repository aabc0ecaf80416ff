#pragma once

#include "gmrfglm/contrast.hpp"
#include "gmrfglm/model.hpp"
#include "gmrfglm/sampler.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace gmrfglm {

struct SvbConfig {
  int max_iter = 50;
  int ns_warm = 5;
  int warm_iters = 10;
  int ns_main = 100;
  double delta = 1e-8;
  double conv_tol = 1e-3;
  /// Regressors whose alpha drives the stopping rule; empty means all.
  std::vector<int> conv_regressors;
  std::uint64_t seed = 1;
  int workers = 1;
  bool extrapolate = true;
  double far_factor = 20.0;
  double clamp_factor = 5.0;
  /// Keep the VB value unless the last two steps share a sign and the
  /// second is more than a third of the first.
  bool guard_extrapolation = true;
  /// IC(0) preconditioning for the sample solves.
  bool precondition = true;
  int max_pcg_iter = 0;
};

/// Variational state. Gamma factors use the mean = scale * shape convention.
struct SvbState {
  int k = 0, n = 0, p = 0;
  Eigen::VectorXd q1t; // alpha scales
  double q2t = 0.0;
  Eigen::VectorXd u1t; // lambda scales
  double u2t = 0.0;
  Eigen::VectorXd r1t; // beta scales
  double r2t = 0.0;
  Eigen::VectorXd alpha_bar, lambda_bar, beta_bar;
  std::vector<Eigen::MatrixXd> w_samples; // N_s of K x N
  std::vector<Eigen::MatrixXd> a_samples; // N_s of P x N
  /// Accepted alpha / beta means of the previous iterations, oldest first.
  std::vector<Eigen::VectorXd> alpha_history, beta_history;
  int iteration = 0;
};

struct SvbIterationLog {
  int iteration = 0;
  int ns = 0;
  Eigen::VectorXd alpha_bar;
  Eigen::VectorXd beta_bar;
  long pcg_iterations_w = 0;
  long pcg_iterations_a = 0;
  double rel_change = 0.0;
  bool extrapolated = false;
};

struct SvbPosterior {
  SvbState state;
  std::vector<SvbIterationLog> log;
  /// Conditional used for the final block of W samples.
  GaussianConditional last_w;
  bool converged = false;
  int iterations = 0;
};

SvbState svb_initial_state(const PrecomputedStats &st, const PriorHyper &hyper);

/// Noise vectors of sample j for the W (or A) block; identical every iteration.
NoiseVectors svb_noise(const SvbConfig &cfg, bool a_block, int sample, int rows, int n_edges,
                       int n_voxels);

/// Draws ns samples of q(W) by perturbation sampling with fixed noise and warm starts.
/// Returns the total PCG iteration count; `used` receives the conditional.
long svb_update_w(SvbState &s, const PrecomputedStats &st, const GmrfPriors &priors,
                  const SvbConfig &cfg, int ns, GaussianConditional *used = nullptr);
long svb_update_a(SvbState &s, const PrecomputedStats &st, const GmrfPriors &priors,
                  const SvbConfig &cfg, int ns);
void svb_update_lambda(SvbState &s, const PrecomputedStats &st, const PriorHyper &hyper);
/// Plain VB updates of q(alpha) and q(beta) (no extrapolation).
void svb_update_alpha(SvbState &s, const GmrfPriors &priors, const PriorHyper &hyper);
void svb_update_beta(SvbState &s, const GmrfPriors &priors, const PriorHyper &hyper);

/// Quadratic extrapolation through (0, h2), (1, h1), (2, current): the value
/// at the vertex if it lies beyond 2, else h1 + far * (current - h1); the
/// result is clamped to [proposal / clamp, clamp * proposal].
double extrapolate_alpha(double h2, double h1, double current, double proposal,
                         double far = 20.0, double clamp = 5.0);

SvbPosterior run_svb(const GlmDataset &data, const GmrfPriors &priors, const PriorHyper &hyper,
                     const SvbConfig &cfg);
SvbPosterior run_svb(const PrecomputedStats &st, const GmrfPriors &priors,
                     const PriorHyper &hyper, const SvbConfig &cfg);

struct MarginalStats {
  Eigen::MatrixXd mean;   // K x N
  Eigen::MatrixXd var;    // K x N
  Eigen::MatrixXd cov;    // K x (K*N), block n in columns [n*K, (n+1)*K)
  Eigen::MatrixXd contrast_mean; // contrasts x N
  Eigen::MatrixXd contrast_var;  // contrasts x N
};

/// Unbiased per-voxel sample moments; requires at least two samples.
MarginalStats svb_marginal_stats(const std::vector<Eigen::MatrixXd> &w_samples,
                                 const std::vector<Contrast> &contrasts);

/// Posterior mean state (sample means of W and A, gamma means).
ModelState svb_mean_state(const SvbState &s);

/// Runs f(i) for i in [0, count) on up to `workers` threads.
void parallel_for(int count, int workers, const std::function<void(int)> &f);

} // namespace gmrfglm
