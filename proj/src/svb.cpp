#include "gmrfglm/svb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace gmrfglm {

void parallel_for(int count, int workers, const std::function<void(int)> &f) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i)
      f(i);
    return;
  }
  const int nt = std::min(workers, count);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> threads;
  threads.reserve(nt);
  for (int t = 0; t < nt; ++t)
    threads.emplace_back([&]() {
      for (int i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto &th : threads)
    th.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

SvbState svb_initial_state(const PrecomputedStats &st, const PriorHyper &hyper) {
  SvbState s;
  s.k = st.k;
  s.n = st.n;
  s.p = st.p;
  s.q2t = 0.5 * st.n + hyper.q2;
  s.u2t = 0.5 * (st.t - st.p) + hyper.u2;
  s.r2t = 0.5 * st.n + hyper.r2;
  // Prior means: every gamma factor starts at its prior.
  s.alpha_bar = Eigen::VectorXd::Constant(st.k, hyper.q1 * hyper.q2);
  s.lambda_bar = Eigen::VectorXd::Constant(st.n, hyper.u1 * hyper.u2);
  s.beta_bar = Eigen::VectorXd::Constant(st.p, hyper.r1 * hyper.r2);
  s.q1t = s.alpha_bar / s.q2t;
  s.u1t = s.lambda_bar / s.u2t;
  s.r1t = s.beta_bar / s.r2t;
  return s;
}

NoiseVectors svb_noise(const SvbConfig &cfg, bool a_block, int sample, int rows, int n_edges,
                       int n_voxels) {
  StreamRng rng(cfg.seed, a_block ? Purpose::SvbA : Purpose::SvbW,
                static_cast<std::uint64_t>(sample));
  return NoiseVectors::draw(rows, n_edges, n_voxels, rng);
}

namespace {

Eigen::MatrixXd sample_mean(const std::vector<Eigen::MatrixXd> &s, int rows, int cols) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto &x : s)
    m += x;
  if (!s.empty())
    m /= static_cast<double>(s.size());
  return m;
}

long draw_block(std::vector<Eigen::MatrixXd> &samples, const GaussianConditional &cond,
                const std::shared_ptr<const GmrfStructure> &prior, const SvbConfig &cfg,
                bool a_block, int rows, int ns) {
  SamplerConfig scfg;
  scfg.method = SamplerMethod::Pcg;
  scfg.delta = cfg.delta;
  scfg.precondition = cfg.precondition;
  scfg.max_iter = cfg.max_pcg_iter;
  scfg.reuse_noise = true;
  FieldSampler fs(scfg, prior);
  fs.prepare(cond.op);

  const int n = prior->size();
  const int ng = prior->incidence.rows();
  const Eigen::VectorXd prev_mean = stack_rows(sample_mean(samples, rows, n));
  std::vector<Eigen::MatrixXd> out(ns);
  std::vector<long> iters(ns, 0);
  parallel_for(ns, cfg.workers, [&](int j) {
    try {
      const NoiseVectors noise = svb_noise(cfg, a_block, j, rows, ng, n);
      const Eigen::VectorXd x0 =
          j < static_cast<int>(samples.size()) ? stack_rows(samples[j]) : prev_mean;
      const GaussianDraw d = fs.draw(cond.b, noise, x0);
      out[j] = unstack_rows(d.w, rows, n);
      iters[j] = d.iterations;
    } catch (const std::exception &e) {
      throw Error(std::string("svb: ") + (a_block ? "A" : "W") + " sample " +
                  std::to_string(j) + ": " + e.what());
    }
  });
  samples = std::move(out);
  long total = 0;
  for (long i : iters)
    total += i;
  return total;
}

} // namespace

long svb_update_w(SvbState &s, const PrecomputedStats &st, const GmrfPriors &priors,
                  const SvbConfig &cfg, int ns, GaussianConditional *used) {
  if (ns < 1)
    throw Error("svb_update_w: N_s must be positive");
  std::vector<Eigen::MatrixXd> a_use = s.a_samples;
  if (st.p > 0 && a_use.empty())
    a_use.push_back(Eigen::MatrixXd::Zero(st.p, st.n));
  const GaussianConditional cond = w_conditional(st, a_use, s.lambda_bar, s.alpha_bar, priors);
  const long it = draw_block(s.w_samples, cond, priors.dw, cfg, false, st.k, ns);
  if (used)
    *used = cond;
  return it;
}

long svb_update_a(SvbState &s, const PrecomputedStats &st, const GmrfPriors &priors,
                  const SvbConfig &cfg, int ns) {
  if (st.p < 1)
    throw Error("svb_update_a: requires P >= 1");
  if (s.w_samples.empty())
    throw Error("svb_update_a: W samples are required");
  const GaussianConditional cond = a_conditional(st, s.w_samples, s.lambda_bar, s.beta_bar, priors);
  return draw_block(s.a_samples, cond, priors.da, cfg, true, st.p, ns);
}

void svb_update_lambda(SvbState &s, const PrecomputedStats &st, const PriorHyper &hyper) {
  if (s.w_samples.empty())
    throw Error("svb_update_lambda: W samples are required");
  const int ns = static_cast<int>(s.w_samples.size());
  const int na = static_cast<int>(s.a_samples.size());
  const Eigen::VectorXd a0 = Eigen::VectorXd::Zero(st.p);
  for (int v = 0; v < st.n; ++v) {
    double q = 0.0;
    for (int j = 0; j < ns; ++j) {
      const Eigen::VectorXd av =
          (st.p > 0 && na > 0) ? Eigen::VectorXd(s.a_samples[j % na].col(v)) : a0;
      q += residual_ss(st, v, s.w_samples[j].col(v), av);
    }
    const GammaParams g = gamma_update(q / ns, st.t - st.p, hyper.u1, hyper.u2);
    s.u1t[v] = g.scale;
    s.lambda_bar[v] = g.mean();
  }
}

namespace {

void field_update(const std::vector<Eigen::MatrixXd> &samples, const GmrfStructure &g,
                  double scale, double shape, Eigen::VectorXd &tilde1, double tilde2,
                  Eigen::VectorXd &mean) {
  const Eigen::Index rows = tilde1.size();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(rows);
  for (const auto &m : samples)
    q += row_quadratic_forms(m, g);
  q /= static_cast<double>(samples.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const GammaParams gp = gamma_update(q[r], static_cast<double>(g.size()), scale, shape);
    tilde1[r] = gp.scale;
    mean[r] = gp.scale * tilde2;
  }
}

} // namespace

void svb_update_alpha(SvbState &s, const GmrfPriors &priors, const PriorHyper &hyper) {
  if (s.w_samples.empty())
    throw Error("svb_update_alpha: W samples are required");
  field_update(s.w_samples, *priors.dw, hyper.q1, hyper.q2, s.q1t, s.q2t, s.alpha_bar);
}

void svb_update_beta(SvbState &s, const GmrfPriors &priors, const PriorHyper &hyper) {
  if (s.a_samples.empty())
    throw Error("svb_update_beta: A samples are required");
  field_update(s.a_samples, *priors.da, hyper.r1, hyper.r2, s.r1t, s.r2t, s.beta_bar);
}

double extrapolate_alpha(double h2, double h1, double current, double proposal, double far,
                         double clamp) {
  // f(t) = c2 t^2 + c1 t + c0 through (0, h2), (1, h1), (2, current).
  const double c2 = 0.5 * (current - 2.0 * h1 + h2);
  const double c1 = (h1 - h2) - c2;
  const double c0 = h2;
  double pred;
  const double vertex = c2 != 0.0 ? -c1 / (2.0 * c2) : 0.0;
  if (c2 != 0.0 && vertex > 2.0)
    pred = c0 + c1 * vertex + c2 * vertex * vertex;
  else
    pred = h1 + far * (current - h1);
  return std::clamp(pred, proposal / clamp, clamp * proposal);
}

SvbPosterior run_svb(const GlmDataset &data, const GmrfPriors &priors, const PriorHyper &hyper,
                     const SvbConfig &cfg) {
  data.validate();
  return run_svb(precompute(data), priors, hyper, cfg);
}

namespace {

void extrapolate_block(Eigen::VectorXd &mean, Eigen::VectorXd &tilde1, double tilde2,
                       const std::vector<Eigen::VectorXd> &hist, const SvbConfig &cfg) {
  const Eigen::VectorXd &h2 = hist[hist.size() - 2];
  const Eigen::VectorXd &h1 = hist[hist.size() - 1];
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double d1 = h1[i] - h2[i], d2 = mean[i] - h1[i];
    if (cfg.guard_extrapolation && (d1 == 0.0 || d2 / d1 <= 1.0 / 3.0))
      continue;
    mean[i] = extrapolate_alpha(h2[i], h1[i], mean[i], mean[i], cfg.far_factor, cfg.clamp_factor);
    tilde1[i] = mean[i] / tilde2;
  }
}

void push_history(std::vector<Eigen::VectorXd> &hist, const Eigen::VectorXd &v) {
  hist.push_back(v);
  if (hist.size() > 2)
    hist.erase(hist.begin());
}

bool finite_positive(const Eigen::VectorXd &v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0) || !(v[i] < 1e300))
      return false;
  return true;
}

} // namespace

SvbPosterior run_svb(const PrecomputedStats &st, const GmrfPriors &priors,
                     const PriorHyper &hyper, const SvbConfig &cfg) {
  if (cfg.ns_warm < 1 || cfg.ns_main < 1 || cfg.max_iter < 0)
    throw Error("run_svb: invalid configuration");
  if (priors.dw->size() != st.n)
    throw Error("run_svb: prior size does not match the number of voxels");
  for (int r : cfg.conv_regressors)
    if (r < 0 || r >= st.k)
      throw Error("run_svb: convergence regressor out of range");

  SvbPosterior post;
  SvbState &s = post.state;
  s = svb_initial_state(st, hyper);
  const double q2_const = s.q2t, r2_const = s.r2t;

  for (int j = 1; j <= cfg.max_iter; ++j) {
    s.iteration = j;
    SvbIterationLog entry;
    entry.iteration = j;
    entry.ns = j <= cfg.warm_iters ? cfg.ns_warm : cfg.ns_main;
    const Eigen::VectorXd prev_alpha = s.alpha_bar;

    entry.pcg_iterations_w = svb_update_w(s, st, priors, cfg, entry.ns, &post.last_w);
    if (st.p > 0)
      entry.pcg_iterations_a = svb_update_a(s, st, priors, cfg, entry.ns);
    svb_update_lambda(s, st, hyper);
    svb_update_alpha(s, priors, hyper);
    if (st.p > 0)
      svb_update_beta(s, priors, hyper);

    if (cfg.extrapolate && j >= 3 && j % 2 == 1 && s.alpha_history.size() >= 2) {
      extrapolate_block(s.alpha_bar, s.q1t, s.q2t, s.alpha_history, cfg);
      if (st.p > 0)
        extrapolate_block(s.beta_bar, s.r1t, s.r2t, s.beta_history, cfg);
      entry.extrapolated = true;
    }
    push_history(s.alpha_history, s.alpha_bar);
    if (st.p > 0)
      push_history(s.beta_history, s.beta_bar);

    if (s.q2t != q2_const || s.r2t != r2_const)
      throw Error("run_svb: gamma shape parameters changed");
    if (!finite_positive(s.alpha_bar) || !finite_positive(s.beta_bar)) {
      std::ostringstream msg;
      msg << "run_svb: divergence at iteration " << j << "; alpha trace:";
      for (const auto &l : post.log)
        msg << " [" << l.alpha_bar.transpose() << "]";
      msg << " [" << s.alpha_bar.transpose() << "]";
      throw Error(msg.str());
    }

    double change = 0.0;
    for (int k = 0; k < st.k; ++k) {
      bool use = cfg.conv_regressors.empty();
      for (int r : cfg.conv_regressors)
        use = use || r == k;
      if (use)
        change = std::max(change, std::abs(s.alpha_bar[k] - prev_alpha[k]) / prev_alpha[k]);
    }
    entry.rel_change = change;
    entry.alpha_bar = s.alpha_bar;
    entry.beta_bar = s.beta_bar;
    post.log.push_back(entry);
    post.iterations = j;
    if (j > cfg.warm_iters && change < cfg.conv_tol) {
      post.converged = true;
      break;
    }
  }
  return post;
}

MarginalStats svb_marginal_stats(const std::vector<Eigen::MatrixXd> &w_samples,
                                 const std::vector<Contrast> &contrasts) {
  const int ns = static_cast<int>(w_samples.size());
  if (ns < 2)
    throw Error("svb_marginal_stats: at least two samples are required");
  const int k = static_cast<int>(w_samples[0].rows());
  const int n = static_cast<int>(w_samples[0].cols());
  MarginalStats m;
  m.mean = sample_mean(w_samples, k, n);
  m.cov = Eigen::MatrixXd::Zero(k, static_cast<long>(k) * n);
  for (const auto &w : w_samples) {
    const Eigen::MatrixXd c = w - m.mean;
    for (int v = 0; v < n; ++v)
      m.cov.block(0, static_cast<long>(v) * k, k, k).noalias() += c.col(v) * c.col(v).transpose();
  }
  m.cov /= static_cast<double>(ns - 1);
  m.var.resize(k, n);
  for (int v = 0; v < n; ++v)
    m.var.col(v) = m.cov.block(0, static_cast<long>(v) * k, k, k).diagonal();
  m.contrast_mean.resize(contrasts.size(), n);
  m.contrast_var.resize(contrasts.size(), n);
  for (std::size_t c = 0; c < contrasts.size(); ++c) {
    const Eigen::VectorXd &cv = contrasts[c].c;
    if (cv.size() != k)
      throw Error("svb_marginal_stats: contrast '" + contrasts[c].name + "' must have K weights");
    for (int v = 0; v < n; ++v) {
      m.contrast_mean(c, v) = cv.dot(m.mean.col(v));
      m.contrast_var(c, v) = cv.dot(m.cov.block(0, static_cast<long>(v) * k, k, k) * cv);
    }
  }
  return m;
}

ModelState svb_mean_state(const SvbState &s) {
  ModelState m;
  m.w = sample_mean(s.w_samples, s.k, s.n);
  m.a = sample_mean(s.a_samples, s.p, s.n);
  m.lambda = s.lambda_bar;
  m.alpha = s.alpha_bar;
  m.beta = s.beta_bar;
  return m;
}

} // namespace gmrfglm
