#include "gmrfglm/sampler.hpp"

#include <cmath>

namespace gmrfglm {

SamplerMethod resolve_method(const SamplerConfig &cfg, long dim) {
  if (cfg.method != SamplerMethod::Auto)
    return cfg.method;
  return dim <= cfg.dimension_threshold ? SamplerMethod::Cholesky : SamplerMethod::Pcg;
}

const char *method_name(SamplerMethod m) {
  switch (m) {
  case SamplerMethod::Auto:
    return "auto";
  case SamplerMethod::Cholesky:
    return "cholesky";
  case SamplerMethod::Pcg:
    return "pcg";
  }
  return "?";
}

NoiseVectors NoiseVectors::draw(int rows, int n_edges, int n_voxels, StreamRng &rng) {
  NoiseVectors nv;
  nv.z1 = rng.normal_vector(static_cast<long>(rows) * n_edges);
  nv.z2 = rng.normal_vector(static_cast<long>(rows) * n_voxels);
  return nv;
}

NoiseVectors NoiseVectors::zeros(int rows, int n_edges, int n_voxels) {
  NoiseVectors nv;
  nv.z1 = Eigen::VectorXd::Zero(static_cast<long>(rows) * n_edges);
  nv.z2 = Eigen::VectorXd::Zero(static_cast<long>(rows) * n_voxels);
  return nv;
}

GaussianDraw sample_cholesky(const TriangularFactor &l, const Eigen::VectorXd &b_w,
                             const Eigen::VectorXd &z) {
  if (b_w.size() != l.size() || z.size() != l.size())
    throw Error("sample_cholesky: dimension mismatch");
  GaussianDraw out;
  out.mu = l.solve(b_w);
  Eigen::VectorXd v = z;
  l.backward_solve(v.data());
  out.w = out.mu + l.permutation().apply_inverse(v);
  return out;
}

GaussianDraw sample_cholesky(const SparseSym &btilde, const Eigen::VectorXd &b_w, StreamRng &rng) {
  const Permutation perm = fill_reducing_order(btilde);
  const TriangularFactor l = cholesky(btilde, perm);
  return sample_cholesky(l, b_w, rng.normal_vector(btilde.size()));
}

Eigen::VectorXd perturbation_rhs(const PrecisionOperator &op, const Incidence &g,
                                 const BlockFactor &l_data, const NoiseVectors &noise,
                                 const Eigen::VectorXd &b_w) {
  const int k = op.blocks();
  const int n = op.voxels();
  const long ng = g.rows();
  if (g.cols() != n || noise.z1.size() != k * ng || noise.z2.size() != op.size() ||
      b_w.size() != op.size())
    throw Error("perturbation_rhs: dimension mismatch");
  Eigen::VectorXd b = b_w;
  for (int a = 0; a < k; ++a)
    g.apply_transpose_add(noise.z1.data() + a * ng, std::sqrt(op.alpha()[a]),
                          b.data() + static_cast<long>(a) * n);
  l_data.apply_add(noise.z2.data(), b.data());
  return b;
}

Preconditioner build_preconditioner(const PrecisionOperator &op, const Permutation *perm) {
  const SparseSym a = op.assemble();
  if (perm)
    return Preconditioner::incomplete_cholesky(a, *perm);
  return Preconditioner::incomplete_cholesky(a, fill_reducing_order(a));
}

PcgResult sample_pcg(const PrecisionOperator &op, const Eigen::VectorXd &b_w, const Incidence &g,
                     const BlockFactor &l_data, const NoiseVectors &noise,
                     const Preconditioner &m, const Eigen::VectorXd &x_start, double delta,
                     int max_iter) {
  const Eigen::VectorXd b = perturbation_rhs(op, g, l_data, noise, b_w);
  return pcg(op.as_operator(), b, m, x_start, delta, max_iter);
}

Eigen::VectorXd solve_mean(const SparseSym &btilde, const Eigen::VectorXd &b_w) {
  return cholesky(btilde, fill_reducing_order(btilde)).solve(b_w);
}

PcgResult solve_mean(const PrecisionOperator &op, const Eigen::VectorXd &b_w,
                     const Preconditioner &m, double delta, const Eigen::VectorXd &x_start,
                     int max_iter) {
  return pcg(op.as_operator(), b_w, m, x_start, delta, max_iter);
}

Eigen::VectorXd sample_prior(const GmrfStructure &prior, double alpha, const Eigen::VectorXd &z1,
                             double delta, int max_iter) {
  if (!(alpha > 0.0))
    throw Error("sample_prior: alpha must be positive");
  const int n = prior.size();
  if (z1.size() != prior.incidence.rows())
    throw Error("sample_prior: z1 length must equal the number of adjacent pairs");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  prior.incidence.apply_transpose_add(z1.data(), std::sqrt(alpha), b.data());
  const SparseSym &d = prior.precision;
  LinearOperator op = [&d, alpha](const Eigen::VectorXd &x, Eigen::VectorXd &y) {
    y.setZero(x.size());
    d.multiply_add(x.data(), y.data());
    y *= alpha;
  };
  if (max_iter <= 0)
    max_iter = std::max(default_pcg_max_iter(n), 1000);
  return pcg(op, b, Preconditioner::identity(), Eigen::VectorXd::Zero(n), delta, max_iter).x;
}

// ---------------------------------------------------------------------------

FieldSampler::FieldSampler(SamplerConfig cfg, std::shared_ptr<const GmrfStructure> prior)
    : cfg_(cfg), prior_(std::move(prior)) {
  if (!prior_)
    throw Error("FieldSampler: missing prior structure");
}

void FieldSampler::prepare(const PrecisionOperator &op) {
  op_ = op;
  method_ = resolve_method(cfg_, op.size());
  if (method_ == SamplerMethod::Cholesky || cfg_.precondition) {
    const SparseSym a = op.assemble();
    if (!perm_)
      perm_ = fill_reducing_order(a);
    if (method_ == SamplerMethod::Cholesky) {
      if (!symbolic_)
        symbolic_.emplace(a, *perm_);
      l_ = symbolic_->factorize(a);
    } else {
      m_ = Preconditioner::incomplete_cholesky(a, *perm_);
    }
  } else {
    m_ = Preconditioner::identity();
  }
  if (method_ == SamplerMethod::Pcg)
    l_data_ = BlockFactor(op);
  prepared_ = true;
}

NoiseVectors FieldSampler::draw_noise(StreamRng &rng) const {
  return NoiseVectors::draw(op_.blocks(), prior_->incidence.rows(), op_.voxels(), rng);
}

GaussianDraw FieldSampler::draw(const Eigen::VectorXd &b_w, const NoiseVectors &noise,
                                const Eigen::VectorXd &x_start) const {
  if (!prepared_)
    throw Error("FieldSampler::draw: prepare() has not been called");
  if (method_ == SamplerMethod::Cholesky)
    return sample_cholesky(l_, b_w, noise.z2);
  const PcgResult r = sample_pcg(op_, b_w, prior_->incidence, l_data_, noise, m_, x_start,
                                 cfg_.delta, cfg_.max_iter);
  GaussianDraw out;
  out.w = r.x;
  out.iterations = r.iterations;
  out.relres = r.relres;
  return out;
}

GaussianDraw FieldSampler::mean(const Eigen::VectorXd &b_w, const Eigen::VectorXd &x_start) const {
  if (!prepared_)
    throw Error("FieldSampler::mean: prepare() has not been called");
  GaussianDraw out;
  if (method_ == SamplerMethod::Cholesky) {
    out.mu = l_.solve(b_w);
    out.w = out.mu;
    return out;
  }
  const PcgResult r = solve_mean(op_, b_w, m_, cfg_.delta, x_start, cfg_.max_iter);
  out.mu = r.x;
  out.w = r.x;
  out.iterations = r.iterations;
  out.relres = r.relres;
  return out;
}

} // namespace gmrfglm
