#include "gmrfglm/model.hpp"

#include <cmath>

namespace gmrfglm {

void GlmDataset::validate() const {
  if (x.rows() != y.rows())
    throw Error("dataset: X and Y must have the same number of rows");
  if (p < 0)
    throw Error("dataset: AR order must be non-negative");
  if (t() <= k() + p)
    throw Error("dataset: need T > K + P");
  for (int c = 0; c < k(); ++c)
    if ((x.col(c).array() == 0.0).all())
      throw Error("dataset: design column " + std::to_string(c) + " is all zero");
  if (!y.allFinite() || !x.allFinite())
    throw Error("dataset: non-finite values");
  if (lattice && lattice->size() != n())
    throw Error("dataset: lattice size does not match the number of voxels");
}

Eigen::MatrixXd PrecomputedStats::lags(const GlmDataset &data, int voxel) {
  const int p = data.p;
  const int m = data.t() - p;
  Eigen::MatrixXd d(p, m);
  for (int l = 0; l < p; ++l)
    for (int i = 0; i < m; ++i)
      d(l, i) = data.y(i + p - 1 - l, voxel);
  return d;
}

PrecomputedStats precompute(const GlmDataset &data) {
  PrecomputedStats st;
  st.t = data.t();
  st.n = data.n();
  st.k = data.k();
  st.p = data.p;
  if (st.p >= st.t)
    throw Error("precompute: AR order must be smaller than T");
  const int p = st.p, m = st.t - p, n = st.n, k = st.k;

  const auto y0 = data.y.bottomRows(m);
  const auto x0 = data.x.bottomRows(m);
  st.yty = y0.colwise().squaredNorm().transpose();
  st.ytx = y0.transpose() * x0;
  st.xtx = x0.transpose() * x0;
  if (p == 0)
    return st;

  std::vector<Eigen::MatrixXd> ylag(p);
  st.xlag.resize(p);
  for (int l = 0; l < p; ++l) {
    st.xlag[l] = data.x.middleRows(p - 1 - l, m);
    ylag[l] = data.y.middleRows(p - 1 - l, m);
  }
  st.r.resize(p);
  st.s.resize(static_cast<std::size_t>(p) * p);
  for (int l = 0; l < p; ++l) {
    st.r[l] = x0.transpose() * st.xlag[l];
    for (int q = 0; q < p; ++q)
      st.s[l * p + q] = st.xlag[l].transpose() * st.xlag[q];
  }

  st.yd.resize(p, n);
  for (int l = 0; l < p; ++l)
    st.yd.row(l) = y0.cwiseProduct(ylag[l]).colwise().sum();

  st.b.assign(n, Eigen::MatrixXd(p, k));
  st.dx.assign(n, Eigen::MatrixXd(k, p * p));
  st.dd.assign(n, Eigen::MatrixXd(p, p));
  for (int l = 0; l < p; ++l) {
    const Eigen::MatrixXd bl = y0.transpose() * st.xlag[l] + ylag[l].transpose() * x0; // N x K
    for (int v = 0; v < n; ++v)
      st.b[v].row(l) = bl.row(v);
    for (int q = 0; q < p; ++q) {
      const Eigen::MatrixXd dlq = ylag[l].transpose() * st.xlag[q]; // N x K
      const Eigen::VectorXd ddlq = ylag[l].cwiseProduct(ylag[q]).colwise().sum().transpose();
      for (int v = 0; v < n; ++v) {
        st.dx[v].col(l * p + q) = dlq.row(v).transpose();
        st.dd[v](l, q) = ddlq[v];
      }
    }
  }
  return st;
}

GmrfPriors make_priors(const VoxelLattice &lattice) {
  return make_priors(std::make_shared<const GmrfStructure>(build_ugl(lattice)));
}

GmrfPriors make_priors(std::shared_ptr<const GmrfStructure> dw) {
  GmrfPriors pr;
  pr.dw = dw;
  pr.da = std::move(dw);
  return pr;
}

GammaParams gamma_update(double quad, double count, double prior_scale, double prior_shape) {
  const double inv = 0.5 * quad + 1.0 / prior_scale;
  if (!(inv > 0.0) || !std::isfinite(inv))
    throw Error("gamma update: non-positive inverse scale");
  return {1.0 / inv, 0.5 * count + prior_shape};
}

ModelState prior_mean_state(int k, int n, int p, const PriorHyper &hyper) {
  ModelState s;
  s.w = Eigen::MatrixXd::Zero(k, n);
  s.a = Eigen::MatrixXd::Zero(p, n);
  s.lambda = Eigen::VectorXd::Constant(n, hyper.u1 * hyper.u2);
  s.alpha = Eigen::VectorXd::Constant(k, hyper.q1 * hyper.q2);
  s.beta = Eigen::VectorXd::Constant(p, hyper.r1 * hyper.r2);
  return s;
}

Eigen::VectorXd stack_rows(const Eigen::MatrixXd &w) {
  const Eigen::MatrixXd wt = w.transpose();
  return Eigen::Map<const Eigen::VectorXd>(wt.data(), wt.size());
}

Eigen::MatrixXd unstack_rows(const Eigen::VectorXd &v, int rows, int cols) {
  if (v.size() != static_cast<long>(rows) * cols)
    throw Error("unstack_rows: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), cols, rows).transpose();
}

Eigen::MatrixXd filtered_gram(const PrecomputedStats &st, const Eigen::VectorXd &a) {
  Eigen::MatrixXd g = st.xtx;
  for (int p = 0; p < st.p; ++p) {
    g.noalias() -= a[p] * (st.r[p] + st.r[p].transpose());
    for (int q = 0; q < st.p; ++q)
      g.noalias() += (a[p] * a[q]) * st.s_at(p, q);
  }
  return g;
}

Eigen::VectorXd filtered_cross(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &a) {
  Eigen::VectorXd c = st.ytx.row(voxel).transpose();
  for (int p = 0; p < st.p; ++p) {
    c.noalias() -= a[p] * st.b[voxel].row(p).transpose();
    for (int q = 0; q < st.p; ++q)
      c.noalias() += (a[p] * a[q]) * st.dx[voxel].col(p * st.p + q);
  }
  return c;
}

Eigen::MatrixXd lag_gram(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &w) {
  const int pp = st.p;
  Eigen::MatrixXd m = st.dd[voxel];
  const Eigen::VectorXd dw = st.dx[voxel].transpose() * w; // entry p*P + q = d_p Xlag_q w
  for (int p = 0; p < pp; ++p)
    for (int q = 0; q < pp; ++q)
      m(p, q) += -dw[p * pp + q] - dw[q * pp + p] + w.dot(st.s_at(p, q) * w);
  return m;
}

Eigen::VectorXd lag_cross(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &w) {
  Eigen::VectorXd v = st.yd.col(voxel) - st.b[voxel] * w;
  for (int p = 0; p < st.p; ++p)
    v[p] += w.dot(st.r[p] * w);
  return v;
}

double residual_ss(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &w,
                   const Eigen::VectorXd &a) {
  double q = st.yty[voxel];
  if (st.p > 0)
    q += -2.0 * a.dot(st.yd.col(voxel)) + a.dot(st.dd[voxel] * a);
  q += -2.0 * w.dot(filtered_cross(st, voxel, a)) + w.dot(filtered_gram(st, a) * w);
  return q;
}

GaussianConditional w_conditional(const PrecomputedStats &st,
                                  const std::vector<Eigen::MatrixXd> &a_samples,
                                  const Eigen::VectorXd &lambda, const Eigen::VectorXd &alpha,
                                  const GmrfPriors &priors) {
  const int k = st.k, n = st.n;
  if (lambda.size() != n || alpha.size() != k)
    throw Error("w_conditional: dimension mismatch");
  GaussianConditional out;
  out.b.resize(static_cast<long>(k) * n);
  auto d = shared_precision(priors.dw);
  if (st.p == 0) {
    for (int a = 0; a < k; ++a)
      out.b.segment(static_cast<long>(a) * n, n) = lambda.cwiseProduct(st.ytx.col(a));
    out.op = PrecisionOperator(st.xtx, lambda, alpha, d);
    return out;
  }
  if (a_samples.empty())
    throw Error("w_conditional: at least one A sample is required");
  const double inv_ns = 1.0 / static_cast<double>(a_samples.size());
  Eigen::MatrixXd blocks(k, static_cast<long>(k) * n);
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd c(k);
  for (int v = 0; v < n; ++v) {
    g.setZero();
    c.setZero();
    for (const auto &as : a_samples) {
      const Eigen::VectorXd av = as.col(v);
      g += filtered_gram(st, av);
      c += filtered_cross(st, v, av);
    }
    blocks.block(0, static_cast<long>(v) * k, k, k) = (lambda[v] * inv_ns) * g;
    for (int a = 0; a < k; ++a)
      out.b[static_cast<long>(a) * n + v] = lambda[v] * inv_ns * c[a];
  }
  out.op = PrecisionOperator::with_blocks(std::move(blocks), alpha, d);
  return out;
}

GaussianConditional a_conditional(const PrecomputedStats &st,
                                  const std::vector<Eigen::MatrixXd> &w_samples,
                                  const Eigen::VectorXd &lambda, const Eigen::VectorXd &beta,
                                  const GmrfPriors &priors) {
  const int p = st.p, n = st.n;
  if (p < 1)
    throw Error("a_conditional: requires P >= 1");
  if (lambda.size() != n || beta.size() != p)
    throw Error("a_conditional: dimension mismatch");
  if (w_samples.empty())
    throw Error("a_conditional: at least one W sample is required");
  const double inv_ns = 1.0 / static_cast<double>(w_samples.size());
  GaussianConditional out;
  out.b.resize(static_cast<long>(p) * n);
  Eigen::MatrixXd blocks(p, static_cast<long>(p) * n);
  Eigen::MatrixXd g(p, p);
  Eigen::VectorXd c(p);
  for (int v = 0; v < n; ++v) {
    g.setZero();
    c.setZero();
    for (const auto &ws : w_samples) {
      const Eigen::VectorXd wv = ws.col(v);
      g += lag_gram(st, v, wv);
      c += lag_cross(st, v, wv);
    }
    blocks.block(0, static_cast<long>(v) * p, p, p) = (lambda[v] * inv_ns) * g;
    for (int l = 0; l < p; ++l)
      out.b[static_cast<long>(l) * n + v] = lambda[v] * inv_ns * c[l];
  }
  out.op = PrecisionOperator::with_blocks(std::move(blocks), beta, shared_precision(priors.da));
  return out;
}

double loglik_fast(const ModelState &state, const PrecomputedStats &st) {
  const double m = st.t - st.p;
  double ll = 0.0;
  const Eigen::VectorXd a0 = Eigen::VectorXd::Zero(st.p);
  for (int v = 0; v < st.n; ++v) {
    const Eigen::VectorXd av = st.p > 0 ? Eigen::VectorXd(state.a.col(v)) : a0;
    const double q = residual_ss(st, v, state.w.col(v), av);
    ll += 0.5 * m * std::log(state.lambda[v]) - 0.5 * state.lambda[v] * q;
  }
  return ll;
}

double loglik_direct(const ModelState &state, const GlmDataset &data) {
  const int p = data.p;
  const double m = data.t() - p;
  double ll = 0.0;
  for (int v = 0; v < data.n(); ++v) {
    const Eigen::VectorXd w = state.w.col(v);
    double ss = 0.0;
    for (int t = p; t < data.t(); ++t) {
      double e = data.y(t, v) - data.x.row(t).dot(w);
      for (int l = 0; l < p; ++l)
        e -= state.a(l, v) * (data.y(t - 1 - l, v) - data.x.row(t - 1 - l).dot(w));
      ss += e * e;
    }
    ll += 0.5 * m * std::log(state.lambda[v]) - 0.5 * state.lambda[v] * ss;
  }
  return ll;
}

Eigen::VectorXd row_quadratic_forms(const Eigen::MatrixXd &m, const GmrfStructure &g) {
  Eigen::VectorXd out(m.rows());
  Eigen::VectorXd row;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    row = m.row(r).transpose();
    out[r] = g.quadratic_form(row.data());
  }
  return out;
}

double log_joint_unnorm(const ModelState &state, const PrecomputedStats &st,
                        const GmrfPriors &priors, const PriorHyper &hyper) {
  const double n = st.n;
  double lj = loglik_fast(state, st);
  const Eigen::VectorXd qw = row_quadratic_forms(state.w, *priors.dw);
  for (int k = 0; k < st.k; ++k) {
    const double a = state.alpha[k];
    lj += 0.5 * n * std::log(a) - 0.5 * a * qw[k];
    lj += (hyper.q2 - 1.0) * std::log(a) - a / hyper.q1;
  }
  if (st.p > 0) {
    const Eigen::VectorXd qa = row_quadratic_forms(state.a, *priors.da);
    for (int p = 0; p < st.p; ++p) {
      const double b = state.beta[p];
      lj += 0.5 * n * std::log(b) - 0.5 * b * qa[p];
      lj += (hyper.r2 - 1.0) * std::log(b) - b / hyper.r1;
    }
  }
  for (int v = 0; v < st.n; ++v)
    lj += (hyper.u2 - 1.0) * std::log(state.lambda[v]) - state.lambda[v] / hyper.u1;
  return lj;
}

} // namespace gmrfglm
