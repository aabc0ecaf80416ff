#pragma once

#include "gmrfglm/contrast.hpp"
#include "gmrfglm/model.hpp"
#include "gmrfglm/rng.hpp"
#include "gmrfglm/sampler.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gmrfglm {

/// Which blocks are resampled; frozen blocks keep their initial values.
struct GibbsUpdates {
  bool w = true;
  bool a = true;
  bool lambda = true;
  bool alpha = true;
  bool beta = true;
};

struct GibbsConfig {
  int n_burn = 1000;
  int n_iter = 20000;
  int thin = 5;
  double delta = 1e-8;
  SamplerConfig sampler;
  std::vector<Contrast> contrasts;
  bool store_full_w = false;
  std::string full_w_path;
  /// Regressors whose thinned W draws are kept in memory.
  std::vector<int> trace_rows;
  std::uint64_t seed = 1;
  GibbsUpdates updates;
  std::optional<ModelState> init;
};

struct PosteriorChain {
  int k = 0, n = 0, p = 0;
  int n_burn = 0, n_iter = 0, thin = 1;
  std::vector<Contrast> contrasts;
  /// Per contrast: stored draws x N matrix of c^T W_{.,n}.
  std::vector<Eigen::MatrixXd> contrast_samples;
  /// Unthinned traces over all iterations, burn-in included.
  Eigen::MatrixXd alpha_trace;
  Eigen::MatrixXd beta_trace;
  Eigen::VectorXd lambda_mean_trace;
  /// Means and variances over the stored draws.
  Eigen::MatrixXd w_mean, w_var;
  Eigen::MatrixXd a_mean;
  Eigen::VectorXd lambda_mean;
  std::vector<int> trace_rows;
  /// Per traced regressor: stored draws x N.
  std::vector<Eigen::MatrixXf> w_row_draws;
  ModelState initial_state;
  ModelState final_state;
  long pcg_iterations = 0;

  int stored() const { return thin > 0 ? n_iter / thin : 0; }
};

std::vector<GammaParams> lambda_conditional(const ModelState &state, const PrecomputedStats &st,
                                            const PriorHyper &hyper);
std::vector<GammaParams> alpha_conditional(const Eigen::MatrixXd &w, const GmrfStructure &dw,
                                           const PriorHyper &hyper);
std::vector<GammaParams> beta_conditional(const Eigen::MatrixXd &a, const GmrfStructure &da,
                                          const PriorHyper &hyper);

Eigen::VectorXd update_lambda(const ModelState &state, const PrecomputedStats &st,
                              const PriorHyper &hyper, StreamRng &rng);
Eigen::VectorXd update_alpha(const ModelState &state, const GmrfPriors &priors,
                             const PriorHyper &hyper, StreamRng &rng);
Eigen::VectorXd update_beta(const ModelState &state, const GmrfPriors &priors,
                            const PriorHyper &hyper, StreamRng &rng);

/// Gibbs updates of W and A with samplers that cache orderings across calls.
class GibbsKernel {
public:
  GibbsKernel(const PrecomputedStats &st, const GmrfPriors &priors, SamplerConfig cfg);

  Eigen::MatrixXd update_w(const ModelState &state, StreamRng &rng);
  Eigen::MatrixXd update_a(const ModelState &state, StreamRng &rng);
  /// Conditional mean of W given (A, lambda, alpha).
  Eigen::MatrixXd mean_w(const ModelState &state);

  long pcg_iterations() const { return pcg_iterations_; }

private:
  const PrecomputedStats *st_;
  GmrfPriors priors_;
  FieldSampler w_sampler_;
  FieldSampler a_sampler_;
  long pcg_iterations_ = 0;
};

/// One-shot conveniences around GibbsKernel.
Eigen::MatrixXd update_w(const ModelState &state, const PrecomputedStats &st,
                         const GmrfPriors &priors, const SamplerConfig &cfg, StreamRng &rng);
Eigen::MatrixXd update_a(const ModelState &state, const PrecomputedStats &st,
                         const GmrfPriors &priors, const SamplerConfig &cfg, StreamRng &rng);

/// Prior means for the hyperparameters, W from the conditional mean at
/// those values, A = 0.
ModelState gibbs_initial_state(const PrecomputedStats &st, const GmrfPriors &priors,
                               const PriorHyper &hyper, const SamplerConfig &cfg);

/// Sweeps W, A, lambda, alpha, beta per iteration.
PosteriorChain run_gibbs(const GlmDataset &data, const GmrfPriors &priors,
                         const PriorHyper &hyper, const GibbsConfig &cfg);
PosteriorChain run_gibbs(const PrecomputedStats &st, const GmrfPriors &priors,
                         const PriorHyper &hyper, const GibbsConfig &cfg);

} // namespace gmrfglm
