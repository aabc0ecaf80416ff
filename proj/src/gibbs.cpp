#include "gmrfglm/gibbs.hpp"

#include <fstream>

namespace gmrfglm {

std::vector<GammaParams> lambda_conditional(const ModelState &state, const PrecomputedStats &st,
                                            const PriorHyper &hyper) {
  std::vector<GammaParams> out(st.n);
  const double count = st.t - st.p;
  const Eigen::VectorXd a0 = Eigen::VectorXd::Zero(st.p);
  for (int v = 0; v < st.n; ++v) {
    const Eigen::VectorXd av = st.p > 0 ? Eigen::VectorXd(state.a.col(v)) : a0;
    out[v] = gamma_update(residual_ss(st, v, state.w.col(v), av), count, hyper.u1, hyper.u2);
  }
  return out;
}

namespace {

std::vector<GammaParams> field_conditional(const Eigen::MatrixXd &m, const GmrfStructure &g,
                                           double scale, double shape, const char *what) {
  const Eigen::VectorXd q = row_quadratic_forms(m, g);
  std::vector<GammaParams> out(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (q[r] < 0.0)
      throw Error(std::string(what) + ": negative prior quadratic form");
    out[r] = gamma_update(q[r], static_cast<double>(g.size()), scale, shape);
  }
  return out;
}

Eigen::VectorXd draw_gammas(const std::vector<GammaParams> &params, StreamRng &rng) {
  Eigen::VectorXd out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    out[i] = rng.gamma(params[i].shape, params[i].scale);
  return out;
}

} // namespace

std::vector<GammaParams> alpha_conditional(const Eigen::MatrixXd &w, const GmrfStructure &dw,
                                           const PriorHyper &hyper) {
  return field_conditional(w, dw, hyper.q1, hyper.q2, "update_alpha");
}

std::vector<GammaParams> beta_conditional(const Eigen::MatrixXd &a, const GmrfStructure &da,
                                          const PriorHyper &hyper) {
  return field_conditional(a, da, hyper.r1, hyper.r2, "update_beta");
}

Eigen::VectorXd update_lambda(const ModelState &state, const PrecomputedStats &st,
                              const PriorHyper &hyper, StreamRng &rng) {
  return draw_gammas(lambda_conditional(state, st, hyper), rng);
}

Eigen::VectorXd update_alpha(const ModelState &state, const GmrfPriors &priors,
                             const PriorHyper &hyper, StreamRng &rng) {
  return draw_gammas(alpha_conditional(state.w, *priors.dw, hyper), rng);
}

Eigen::VectorXd update_beta(const ModelState &state, const GmrfPriors &priors,
                            const PriorHyper &hyper, StreamRng &rng) {
  if (state.a.rows() == 0)
    throw Error("update_beta: requires P >= 1");
  return draw_gammas(beta_conditional(state.a, *priors.da, hyper), rng);
}

// ---------------------------------------------------------------------------

GibbsKernel::GibbsKernel(const PrecomputedStats &st, const GmrfPriors &priors, SamplerConfig cfg)
    : st_(&st), priors_(priors), w_sampler_(cfg, priors.dw), a_sampler_(cfg, priors.da) {}

Eigen::MatrixXd GibbsKernel::update_w(const ModelState &state, StreamRng &rng) {
  const GaussianConditional cond = w_conditional(*st_, {state.a}, state.lambda, state.alpha, priors_);
  w_sampler_.prepare(cond.op);
  const NoiseVectors noise = w_sampler_.draw_noise(rng);
  const GaussianDraw d = w_sampler_.draw(cond.b, noise, stack_rows(state.w));
  pcg_iterations_ += d.iterations;
  return unstack_rows(d.w, st_->k, st_->n);
}

Eigen::MatrixXd GibbsKernel::update_a(const ModelState &state, StreamRng &rng) {
  if (st_->p < 1)
    throw Error("update_a: requires P >= 1");
  const GaussianConditional cond = a_conditional(*st_, {state.w}, state.lambda, state.beta, priors_);
  a_sampler_.prepare(cond.op);
  const NoiseVectors noise = a_sampler_.draw_noise(rng);
  const GaussianDraw d = a_sampler_.draw(cond.b, noise, stack_rows(state.a));
  pcg_iterations_ += d.iterations;
  return unstack_rows(d.w, st_->p, st_->n);
}

Eigen::MatrixXd GibbsKernel::mean_w(const ModelState &state) {
  const GaussianConditional cond = w_conditional(*st_, {state.a}, state.lambda, state.alpha, priors_);
  w_sampler_.prepare(cond.op);
  const GaussianDraw d = w_sampler_.mean(cond.b);
  pcg_iterations_ += d.iterations;
  return unstack_rows(d.mu, st_->k, st_->n);
}

Eigen::MatrixXd update_w(const ModelState &state, const PrecomputedStats &st,
                         const GmrfPriors &priors, const SamplerConfig &cfg, StreamRng &rng) {
  GibbsKernel kernel(st, priors, cfg);
  return kernel.update_w(state, rng);
}

Eigen::MatrixXd update_a(const ModelState &state, const PrecomputedStats &st,
                         const GmrfPriors &priors, const SamplerConfig &cfg, StreamRng &rng) {
  GibbsKernel kernel(st, priors, cfg);
  return kernel.update_a(state, rng);
}

ModelState gibbs_initial_state(const PrecomputedStats &st, const GmrfPriors &priors,
                               const PriorHyper &hyper, const SamplerConfig &cfg) {
  ModelState s = prior_mean_state(st.k, st.n, st.p, hyper);
  GibbsKernel kernel(st, priors, cfg);
  s.w = kernel.mean_w(s);
  return s;
}

// ---------------------------------------------------------------------------

PosteriorChain run_gibbs(const GlmDataset &data, const GmrfPriors &priors,
                         const PriorHyper &hyper, const GibbsConfig &cfg) {
  data.validate();
  return run_gibbs(precompute(data), priors, hyper, cfg);
}

PosteriorChain run_gibbs(const PrecomputedStats &st, const GmrfPriors &priors, const PriorHyper &hyper,
                         const GibbsConfig &cfg) {
  if (cfg.n_burn < 0 || cfg.n_iter < 0 || cfg.thin < 1)
    throw Error("run_gibbs: invalid run lengths");
  if (priors.dw->size() != st.n)
    throw Error("run_gibbs: prior size does not match the number of voxels");
  for (const auto &c : cfg.contrasts)
    if (c.c.size() != st.k)
      throw Error("run_gibbs: contrast '" + c.name + "' must have K weights");
  for (int r : cfg.trace_rows)
    if (r < 0 || r >= st.k)
      throw Error("run_gibbs: trace row out of range");

  SamplerConfig scfg = cfg.sampler;
  scfg.delta = cfg.delta;
  GibbsKernel kernel(st, priors, scfg);

  PosteriorChain ch;
  ch.k = st.k;
  ch.n = st.n;
  ch.p = st.p;
  ch.n_burn = cfg.n_burn;
  ch.n_iter = cfg.n_iter;
  ch.thin = cfg.thin;
  ch.contrasts = cfg.contrasts;
  ch.trace_rows = cfg.trace_rows;

  ModelState state;
  if (cfg.init) {
    state = *cfg.init;
  } else {
    state = prior_mean_state(st.k, st.n, st.p, hyper);
    state.w = kernel.mean_w(state);
  }
  ch.initial_state = state;

  const int total = cfg.n_burn + cfg.n_iter;
  const int stored = ch.stored();
  ch.alpha_trace.resize(total, st.k);
  ch.beta_trace.resize(total, st.p);
  ch.lambda_mean_trace.resize(total);
  for (std::size_t c = 0; c < cfg.contrasts.size(); ++c)
    ch.contrast_samples.emplace_back(stored, st.n);
  for (std::size_t r = 0; r < cfg.trace_rows.size(); ++r)
    ch.w_row_draws.emplace_back(stored, st.n);
  Eigen::MatrixXd w_sum = Eigen::MatrixXd::Zero(st.k, st.n);
  Eigen::MatrixXd w_sq = Eigen::MatrixXd::Zero(st.k, st.n);
  Eigen::MatrixXd a_sum = Eigen::MatrixXd::Zero(st.p, st.n);
  Eigen::VectorXd l_sum = Eigen::VectorXd::Zero(st.n);

  std::ofstream full_w;
  if (cfg.store_full_w) {
    if (cfg.full_w_path.empty())
      throw Error("run_gibbs: store_full_w requires full_w_path");
    full_w.open(cfg.full_w_path, std::ios::binary);
    if (!full_w)
      throw Error("run_gibbs: cannot open " + cfg.full_w_path);
  }

  int slot = 0;
  for (int it = 0; it < total; ++it) {
    try {
      const std::uint64_t u = static_cast<std::uint64_t>(it);
      if (cfg.updates.w) {
        StreamRng rng(cfg.seed, Purpose::GibbsW, u);
        state.w = kernel.update_w(state, rng);
      }
      if (st.p > 0 && cfg.updates.a) {
        StreamRng rng(cfg.seed, Purpose::GibbsA, u);
        state.a = kernel.update_a(state, rng);
      }
      if (cfg.updates.lambda) {
        StreamRng rng(cfg.seed, Purpose::GibbsLambda, u);
        state.lambda = update_lambda(state, st, hyper, rng);
      }
      if (cfg.updates.alpha) {
        StreamRng rng(cfg.seed, Purpose::GibbsAlpha, u);
        state.alpha = update_alpha(state, priors, hyper, rng);
      }
      if (st.p > 0 && cfg.updates.beta) {
        StreamRng rng(cfg.seed, Purpose::GibbsBeta, u);
        state.beta = update_beta(state, priors, hyper, rng);
      }
    } catch (const std::exception &e) {
      throw Error("gibbs iteration " + std::to_string(it) + ": " + e.what());
    }

    ch.alpha_trace.row(it) = state.alpha.transpose();
    if (st.p > 0)
      ch.beta_trace.row(it) = state.beta.transpose();
    ch.lambda_mean_trace[it] = state.lambda.mean();

    const int j = it - cfg.n_burn + 1;
    if (j >= 1 && j % cfg.thin == 0 && slot < stored) {
      for (std::size_t c = 0; c < cfg.contrasts.size(); ++c)
        ch.contrast_samples[c].row(slot) = cfg.contrasts[c].c.transpose() * state.w;
      for (std::size_t r = 0; r < cfg.trace_rows.size(); ++r)
        ch.w_row_draws[r].row(slot) = state.w.row(cfg.trace_rows[r]).cast<float>();
      w_sum += state.w;
      w_sq += state.w.cwiseAbs2();
      a_sum += state.a;
      l_sum += state.lambda;
      if (full_w)
        full_w.write(reinterpret_cast<const char *>(state.w.data()),
                     static_cast<std::streamsize>(sizeof(double) * state.w.size()));
      ++slot;
    }
  }

  if (stored > 0) {
    ch.w_mean = w_sum / stored;
    ch.w_var = stored > 1 ? Eigen::MatrixXd((w_sq - stored * ch.w_mean.cwiseAbs2()) / (stored - 1))
                          : Eigen::MatrixXd::Zero(st.k, st.n);
    ch.a_mean = a_sum / stored;
    ch.lambda_mean = l_sum / stored;
  } else {
    ch.w_mean = state.w;
    ch.w_var = Eigen::MatrixXd::Zero(st.k, st.n);
    ch.a_mean = state.a;
    ch.lambda_mean = state.lambda;
  }
  ch.final_state = state;
  ch.pcg_iterations = kernel.pcg_iterations();
  return ch;
}

} // namespace gmrfglm
