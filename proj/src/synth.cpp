#include "gmrfglm/synth.hpp"

#include "gmrfglm/error.hpp"
#include "gmrfglm/rng.hpp"
#include "gmrfglm/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace gmrfglm {

namespace {

double gamma_pdf(double t, double shape) {
  if (t <= 0.0)
    return 0.0;
  return std::exp((shape - 1.0) * std::log(t) - t - std::lgamma(shape));
}

constexpr int kArBurnIn = 100;
constexpr int kMaxResample = 1000;

} // namespace

double canonical_hrf(double t) { return gamma_pdf(t, 6.0) - gamma_pdf(t, 16.0) / 6.0; }

Eigen::MatrixXd design_from_stimulus(const Eigen::MatrixXd &stimulus, double tr) {
  if (!(tr > 0.0))
    throw Error("design: TR must be positive");
  const long t = stimulus.rows();
  const long n_task = stimulus.cols();
  const int len = std::max(1, static_cast<int>(std::ceil(32.0 / tr)));
  Eigen::VectorXd kernel(len);
  for (int i = 0; i < len; ++i)
    kernel[i] = canonical_hrf(i * tr);
  kernel /= kernel.sum();

  Eigen::MatrixXd x(t, n_task + 1);
  for (long j = 0; j < n_task; ++j) {
    for (long i = 0; i < t; ++i) {
      double acc = 0.0;
      for (long l = 0; l < len && l <= i; ++l)
        acc += kernel[l] * stimulus(i - l, j);
      x(i, j) = acc;
    }
    x.col(j).array() -= x.col(j).mean();
  }
  x.col(n_task).setOnes();
  return x;
}

Eigen::MatrixXd make_stimulus(const DesignConfig &cfg) {
  if (cfg.t <= 0 || cfg.n_task < 0 || cfg.block_length <= 0)
    throw Error("design: invalid dimensions");
  const int blocks = cfg.blocks >= 0 ? cfg.blocks : std::max(1, cfg.t / 50);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(cfg.t, cfg.n_task);
  const int span = std::max(1, cfg.t - cfg.block_length);
  for (int j = 0; j < cfg.n_task; ++j) {
    StreamRng rng(cfg.seed, Purpose::SynthDesign, static_cast<std::uint64_t>(j));
    for (int b = 0; b < blocks; ++b) {
      const int onset = std::min(span - 1, static_cast<int>(rng.uniform() * span));
      for (int i = onset; i < std::min(cfg.t, onset + cfg.block_length); ++i)
        s(i, j) = cfg.amplitude;
    }
  }
  return s;
}

Eigen::MatrixXd make_design(const DesignConfig &cfg) {
  return design_from_stimulus(make_stimulus(cfg), cfg.tr);
}

Eigen::MatrixXd make_design(int t, int n_task, std::uint64_t seed) {
  DesignConfig cfg;
  cfg.t = t;
  cfg.n_task = n_task;
  cfg.seed = seed;
  return make_design(cfg);
}

std::vector<std::uint8_t> centered_mask(const GridDims &block, const GridDims &mask) {
  for (int d = 0; d < 3; ++d)
    if (mask[d] <= 0 || mask[d] > block[d])
      throw Error("synth: mask does not fit inside the block");
  std::array<int, 3> lo{};
  for (int d = 0; d < 3; ++d)
    lo[d] = (block[d] - mask[d]) / 2;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(block[0]) * block[1] * block[2], 0);
  for (int z = lo[2]; z < lo[2] + mask[2]; ++z)
    for (int y = lo[1]; y < lo[1] + mask[1]; ++y)
      for (int x = lo[0]; x < lo[0] + mask[0]; ++x)
        out[(static_cast<std::size_t>(z) * block[1] + y) * block[0] + x] = 1;
  return out;
}

SynthResult simulate(const SynthConfig &cfg) {
  const int k = cfg.k, p = cfg.p, t = cfg.t;
  if (k < 1)
    throw Error("synth: need at least the intercept regressor");
  if (p < 0)
    throw Error("synth: AR order must be non-negative");
  if (t <= k + p)
    throw Error("synth: too few time points");
  if (cfg.alpha_true.empty() && k > 1)
    throw Error("synth: alpha_true is empty");
  if (!(cfg.noise_var > 0.0) || !(cfg.beta_true > 0.0) || !(cfg.target_mean > 0.0))
    throw Error("synth: noise variance, beta and target mean must be positive");
  for (double a : cfg.alpha_true)
    if (!(a > 0.0))
      throw Error("synth: alpha_true must be positive");

  const VoxelLattice block =
      build_box_lattice(cfg.block, cfg.mode, cfg.voxel_size);
  const int nb = block.size();
  const GmrfStructure dblock = build_ugl(block);
  const int ne = dblock.incidence.rows();

  DesignConfig dc;
  dc.t = t;
  dc.n_task = k - 1;
  dc.tr = cfg.tr;
  dc.seed = cfg.seed;
  const Eigen::MatrixXd x = make_design(dc);

  // Task fields from the prior, intercepts iid normal.
  Eigen::MatrixXd w(k, nb);
  for (int j = 0; j < k - 1; ++j) {
    const double alpha = cfg.alpha_true[std::min<std::size_t>(j, cfg.alpha_true.size() - 1)];
    StreamRng rng(cfg.seed, Purpose::SynthField, static_cast<std::uint64_t>(j));
    const Eigen::VectorXd z = rng.normal_vector(ne);
    w.row(j) = sample_prior(dblock, alpha, z, cfg.prior_delta).transpose();
  }
  {
    StreamRng rng(cfg.seed, Purpose::SynthIntercept);
    for (int n = 0; n < nb; ++n)
      w(k - 1, n) = cfg.intercept_mean + cfg.intercept_sd * rng.normal();
  }

  Eigen::MatrixXd a(p, nb);
  for (int j = 0; j < p; ++j) {
    StreamRng rng(cfg.seed, Purpose::SynthField, static_cast<std::uint64_t>(k + j));
    const Eigen::VectorXd z = rng.normal_vector(ne);
    a.row(j) = sample_prior(dblock, cfg.beta_true, z, cfg.prior_delta).transpose();
  }
  if (p > 0) {
    // Non-stationary voxels are redrawn from the prior full conditional.
    std::vector<std::vector<int>> nbrs(nb);
    for (const auto &[i, j] : block.adjacent_pairs()) {
      nbrs[i].push_back(j);
      nbrs[j].push_back(i);
    }
    for (int n = 0; n < nb; ++n) {
      if (a.col(n).cwiseAbs().sum() < 1.0)
        continue;
      StreamRng rng(cfg.seed, Purpose::SynthField, static_cast<std::uint64_t>(n),
                    static_cast<std::uint64_t>(k + p));
      int tries = 0;
      while (a.col(n).cwiseAbs().sum() >= 1.0) {
        if (++tries > kMaxResample)
          throw Error("synth: cannot draw a stationary AR coefficient");
        const double deg = static_cast<double>(nbrs[n].size());
        for (int j = 0; j < p; ++j) {
          double mean = 0.0;
          for (int m : nbrs[n])
            mean += a(j, m);
          if (deg > 0)
            mean /= deg;
          const double sd = 1.0 / std::sqrt(cfg.beta_true * std::max(1.0, deg));
          a(j, n) = mean + sd * rng.normal();
        }
      }
    }
  }

  const double sigma = std::sqrt(cfg.noise_var);
  auto voxel_series = [&](int n, Eigen::VectorXd &y) {
    StreamRng rng(cfg.seed, Purpose::SynthNoise, static_cast<std::uint64_t>(n));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(kArBurnIn + t);
    for (int i = 0; i < kArBurnIn + t; ++i) {
      double v = sigma * rng.normal();
      for (int j = 0; j < p && j < i; ++j)
        v += a(j, n) * e[i - 1 - j];
      e[i] = v;
    }
    y = x * w.col(n) + e.tail(t);
  };

  Eigen::VectorXd y(t);
  double total = 0.0;
  for (int n = 0; n < nb; ++n) {
    voxel_series(n, y);
    total += y.sum();
  }
  const double raw_mean = total / (static_cast<double>(nb) * t);
  if (!(raw_mean > 0.0))
    throw Error("synth: grand mean is not positive");
  const double s = cfg.target_mean / raw_mean;

  SynthResult out;
  out.mask = centered_mask(cfg.block, cfg.mask);
  out.lattice = std::make_shared<const VoxelLattice>(
      build_lattice(cfg.block, out.mask, cfg.mode, cfg.voxel_size));
  const int nm = out.lattice->size();
  out.scale = s;
  out.raw_grand_mean = raw_mean;
  out.raw_intercepts = w.row(k - 1).transpose();
  out.raw_task_fields = w.topRows(k - 1);

  GlmDataset &d = out.data;
  d.x = x;
  d.p = p;
  d.lattice = out.lattice;
  d.grand_mean = cfg.target_mean;
  d.y.resize(t, nm);
  for (int j = 0; j < k - 1; ++j)
    d.regressor_names.push_back("task" + std::to_string(j + 1));
  d.regressor_names.push_back("intercept");

  ModelState &tr = out.truth;
  tr.w.resize(k, nm);
  tr.a.resize(p, nm);
  tr.lambda = Eigen::VectorXd::Constant(nm, 1.0 / (cfg.noise_var * s * s));
  tr.alpha = Eigen::VectorXd::Zero(k);
  for (int j = 0; j < k - 1; ++j)
    tr.alpha[j] = cfg.alpha_true[std::min<std::size_t>(j, cfg.alpha_true.size() - 1)] / (s * s);
  tr.beta = Eigen::VectorXd::Constant(p, cfg.beta_true);

  for (int v = 0; v < nm; ++v) {
    const int n = block.voxel_at(out.lattice->grid_index(v));
    voxel_series(n, y);
    d.y.col(v) = s * y;
    tr.w.col(v) = s * w.col(n);
    tr.a.col(v) = a.col(n);
  }
  return out;
}

} // namespace gmrfglm
