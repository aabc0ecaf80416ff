#include "gmrfglm/bench.hpp"

#include "gmrfglm/error.hpp"
#include "gmrfglm/rng.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <new>

namespace gmrfglm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join(const std::vector<std::string> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + v[i];
  return s;
}

struct BenchProblem {
  GmrfPriors priors;
  GaussianConditional cond;
};

BenchProblem bench_problem(int n, int k, int t, std::uint64_t seed) {
  auto lattice = std::make_shared<const VoxelLattice>(compact_lattice(n));
  GlmDataset d;
  d.lattice = lattice;
  d.p = 0;
  d.x = make_design(t, k - 1, seed);
  StreamRng rng(seed, Purpose::General, static_cast<std::uint64_t>(n));
  Eigen::MatrixXd w(k, n);
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < k - 1; ++j)
      w(j, v) = rng.normal();
    w(k - 1, v) = 100.0;
  }
  d.y = d.x * w;
  for (Eigen::Index i = 0; i < d.y.size(); ++i)
    d.y.data()[i] += 10.0 * rng.normal();
  const PrecomputedStats st = precompute(d);

  const SynthConfig defaults;
  Eigen::VectorXd alpha(k);
  for (int j = 0; j < k; ++j)
    alpha[j] = defaults.alpha_true[std::min<std::size_t>(j, defaults.alpha_true.size() - 1)];
  BenchProblem bp;
  bp.priors = make_priors(*lattice);
  bp.cond = w_conditional(st, {}, Eigen::VectorXd::Constant(n, 0.01), alpha, bp.priors);
  return bp;
}

SamplingBenchRow time_draws(const BenchProblem &bp, SamplerMethod method, bool precondition,
                            double delta, int draws, std::uint64_t seed) {
  SamplingBenchRow row;
  row.method = method == SamplerMethod::Cholesky ? "cholesky" : precondition ? "pcg" : "cg";
  row.n = bp.cond.op.voxels();
  row.dim = bp.cond.op.size();
  row.delta = method == SamplerMethod::Cholesky ? 0.0 : delta;
  row.draws = draws;
  SamplerConfig sc;
  sc.method = method;
  sc.delta = delta;
  sc.precondition = precondition;
  FieldSampler fs(sc, bp.priors.dw);
  double secs = 0.0;
  long iters = 0;
  for (int i = 0; i < draws; ++i) {
    StreamRng rng(seed, Purpose::General, static_cast<std::uint64_t>(i), 1);
    const auto t0 = Clock::now();
    fs.prepare(bp.cond.op);
    const NoiseVectors z = fs.draw_noise(rng);
    const GaussianDraw d = fs.draw(bp.cond.b, z);
    secs += seconds_since(t0);
    iters += d.iterations;
  }
  row.mean_seconds = secs / draws;
  row.mean_iterations = static_cast<double>(iters) / draws;
  return row;
}

} // namespace

VoxelLattice compact_lattice(int n, NeighborMode mode) {
  if (n < 1)
    throw Error("compact_lattice: size must be positive");
  const int side = std::max(1, static_cast<int>(std::lround(std::cbrt(static_cast<double>(n)))));
  const int nz = (n + side * side - 1) / (side * side);
  const GridDims dims{side, side, nz};
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(side) * side * nz, 0);
  std::fill(mask.begin(), mask.begin() + n, 1);
  return build_lattice(dims, mask, mode);
}

double loglog_slope(double x1, double y1, double x2, double y2) {
  if (!(x1 > 0 && x2 > 0 && y1 > 0 && y2 > 0) || x1 == x2)
    throw Error("loglog_slope: need distinct positive abscissae and positive values");
  return (std::log(y2) - std::log(y1)) / (std::log(x2) - std::log(x1));
}

std::vector<SamplingBenchRow> bench_sampling(const SamplingBenchConfig &cfg) {
  if (cfg.k < 1 || cfg.draws < 1 || cfg.t <= cfg.k)
    throw Error("bench_sampling: invalid configuration");
  std::vector<SamplingBenchRow> rows;
  for (int n : cfg.sizes) {
    const BenchProblem bp = bench_problem(n, cfg.k, cfg.t, cfg.seed);
    if (cfg.cholesky) {
      const int draws = cfg.cholesky_draws > 0 ? cfg.cholesky_draws : cfg.draws;
      try {
        const SparseSym b = bp.cond.op.assemble();
        const long nnz = cholesky_factor_nnz(b, fill_reducing_order(b));
        if (nnz > cfg.cholesky_max_nnz) {
          SamplingBenchRow r;
          r.method = "cholesky";
          r.n = n;
          r.dim = bp.cond.op.size();
          r.status = "skipped: factor would hold " + std::to_string(nnz) + " nonzeros";
          rows.push_back(r);
        } else {
          rows.push_back(time_draws(bp, SamplerMethod::Cholesky, true, 0.0, draws, cfg.seed));
        }
      } catch (const std::bad_alloc &) {
        SamplingBenchRow r;
        r.method = "cholesky";
        r.n = n;
        r.dim = bp.cond.op.size();
        r.status = "out of memory";
        rows.push_back(r);
      }
    }
    for (double delta : cfg.deltas) {
      rows.push_back(time_draws(bp, SamplerMethod::Pcg, true, delta, cfg.draws, cfg.seed));
      if (cfg.unpreconditioned)
        rows.push_back(time_draws(bp, SamplerMethod::Pcg, false, delta, cfg.draws, cfg.seed));
    }
  }
  return rows;
}

double rmse_rows(const Eigen::MatrixXd &w, const Eigen::MatrixXd &ref, int rows) {
  if (rows < 1 || w.rows() < rows || ref.rows() < rows || w.cols() != ref.cols())
    throw Error("rmse_rows: dimension mismatch");
  const Eigen::MatrixXd d = w.topRows(rows) - ref.topRows(rows);
  return std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
}

double mc_se_floor(const std::vector<Eigen::MatrixXf> &row_draws) {
  double acc = 0.0;
  long count = 0;
  for (const auto &m : row_draws)
    for (Eigen::Index v = 0; v < m.cols(); ++v) {
      const double se = mc_standard_error(m.col(v).cast<double>());
      acc += se * se;
      ++count;
    }
  if (count == 0)
    throw Error("mc_se_floor: no traced draws");
  return std::sqrt(acc / static_cast<double>(count));
}

AccuracyResult bench_accuracy(const AccuracyBenchConfig &cfg) {
  return bench_accuracy(simulate(cfg.synth).data, cfg);
}

AccuracyResult bench_accuracy(const GlmDataset &data, const AccuracyBenchConfig &cfg) {
  if (cfg.regressors < 1 || cfg.regressors > data.k())
    throw Error("bench_accuracy: regressor count out of range");
  const PrecomputedStats st = precompute(data);
  const GmrfPriors priors = make_priors(*data.lattice);
  const PriorHyper hyper;

  GibbsConfig gc;
  gc.n_burn = cfg.n_burn;
  gc.n_iter = cfg.n_iter;
  gc.thin = cfg.thin;
  gc.seed = cfg.seed;
  gc.sampler.method = SamplerMethod::Pcg;
  for (int r = 0; r < cfg.regressors; ++r)
    gc.trace_rows.push_back(r);

  AccuracyResult res;
  gc.delta = cfg.reference_delta;
  auto t0 = Clock::now();
  const PosteriorChain ref = run_gibbs(st, priors, hyper, gc);
  res.reference_seconds = seconds_since(t0);
  res.reference_mean = ref.w_mean.topRows(cfg.regressors);
  res.mc_se_floor = mc_se_floor(ref.w_row_draws);

  gc.trace_rows.clear();
  for (double delta : cfg.mcmc_deltas) {
    gc.delta = delta;
    t0 = Clock::now();
    const PosteriorChain ch = run_gibbs(st, priors, hyper, gc);
    AccuracyRow row;
    row.method = "mcmc";
    row.delta = delta;
    row.seconds = seconds_since(t0);
    row.rmse = rmse_rows(ch.w_mean, res.reference_mean, cfg.regressors);
    row.pcg_iterations = ch.pcg_iterations;
    res.rows.push_back(row);
  }
  for (int ns : cfg.svb_ns)
    for (double delta : cfg.svb_deltas) {
      SvbConfig sc = cfg.svb;
      sc.delta = delta;
      sc.ns_main = ns;
      sc.seed = cfg.seed;
      t0 = Clock::now();
      const SvbPosterior post = run_svb(st, priors, hyper, sc);
      AccuracyRow row;
      row.method = "svb";
      row.delta = delta;
      row.ns = ns;
      row.seconds = seconds_since(t0);
      row.rmse = rmse_rows(svb_mean_state(post.state).w, res.reference_mean, cfg.regressors);
      for (const auto &l : post.log)
        row.pcg_iterations += l.pcg_iterations_w + l.pcg_iterations_a;
      res.rows.push_back(row);
    }
  return res;
}

std::vector<ConvergenceRow> convergence_table(const Eigen::MatrixXd &traces,
                                              const std::vector<std::string> &names,
                                              bool cumulative, int tail, double tol) {
  if (traces.rows() == 0)
    throw Error("convergence_table: empty trace");
  if (static_cast<long>(names.size()) != traces.cols())
    throw Error("convergence_table: one name per column is required");
  const Eigen::MatrixXd series = cumulative ? cumulative_mean(traces) : traces;
  const long rows = traces.rows();
  const long used = tail <= 0 || tail > rows ? rows : tail;
  std::vector<ConvergenceRow> out;
  for (Eigen::Index j = 0; j < traces.cols(); ++j) {
    const double final_value =
        cumulative ? series(rows - 1, j) : traces.col(j).tail(used).mean();
    const ConvergenceCurve c = convergence_curve(series.col(j), final_value, tol);
    ConvergenceRow r;
    r.parameter = names[j];
    r.final_value = final_value;
    r.first_within = c.first_within;
    r.last_rel_error = c.rel_error.back();
    out.push_back(r);
  }
  return out;
}

Eigen::MatrixXd svb_alpha_trace(const SvbPosterior &post) {
  if (post.log.empty())
    return {};
  Eigen::MatrixXd out(static_cast<long>(post.log.size()), post.log.front().alpha_bar.size());
  for (std::size_t i = 0; i < post.log.size(); ++i)
    out.row(static_cast<long>(i)) = post.log[i].alpha_bar.transpose();
  return out;
}

void append_csv(const std::string &path, const std::vector<std::string> &header,
                const std::vector<std::vector<std::string>> &rows) {
  const std::string head = join(header);
  const bool exists = std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
  if (exists) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    if (first != head)
      throw Error(path + ": existing header differs from '" + head + "'");
  }
  std::ofstream out(path, std::ios::app);
  if (!out)
    throw Error("cannot open " + path + " for writing");
  if (!exists)
    out << head << '\n';
  for (const auto &r : rows) {
    if (r.size() != header.size())
      throw Error("append_csv: row width differs from the header");
    out << join(r) << '\n';
  }
}

} // namespace gmrfglm
