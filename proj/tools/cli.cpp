#include "gmrfglm/cli.hpp"

#include "gmrfglm/bench.hpp"
#include "gmrfglm/diagnostics.hpp"
#include "gmrfglm/error.hpp"
#include "gmrfglm/gibbs.hpp"
#include "gmrfglm/io.hpp"
#include "gmrfglm/ppm.hpp"
#include "gmrfglm/rng.hpp"
#include "gmrfglm/svb.hpp"
#include "gmrfglm/synth.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#ifndef GMRFGLM_VERSION
#define GMRFGLM_VERSION "0.0.0"
#endif

namespace gmrfglm {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct RunConfig {
  std::string mode;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string prior = "3d";
  double delta = 1e-8;
  int ns = 100;
  std::vector<std::string> contrasts;
  std::string out = "out";

  std::string data, mask, design, input;
  int ar_order = 1;
  std::string block = "53x63x46";
  std::string mask_size = "10x10x10";
  int frames = 351;
  int regressors = 5;

  int n_burn = 1000, n_iter = 20000, thin = 5;
  std::string sampler = "auto";
  int max_iter = 50;

  std::vector<int> sizes{1000, 10000};
  int draws = 100;
  int cholesky_draws = 0;
  std::vector<double> deltas{1e-6, 1e-8};
  std::vector<double> mcmc_deltas{1e-6};
  std::vector<double> svb_deltas{1e-4, 1e-6};

  double grand_mean = 100.0;
  double level = 0.95;
  double cutoff = 0.9;
  bool cumulative = false;
  int tail = 200;
};

class Run {
public:
  Run(const RunConfig &cfg, std::string config_text)
      : cfg_(cfg), config_text_(std::move(config_text)), t0_(std::chrono::steady_clock::now()) {
    fs::create_directories(cfg_.out);
  }

  std::string path(const std::string &name) {
    const std::string p = (fs::path(cfg_.out) / name).string();
    outputs_.push_back(name);
    return p;
  }

  void timing(const std::string &name, double seconds) { timings_[name] = seconds; }

  void finish(json extra = json::object()) {
    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    timings_["total"] = total;
    std::ofstream(fs::path(cfg_.out) / "run.ini") << config_text_;
    json m;
    m["mode"] = cfg_.mode;
    m["seed"] = cfg_.seed;
    m["workers"] = cfg_.workers;
    m["config"] = config_text_;
    m["versions"] = {{"gmrfglm", GMRFGLM_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    m["timings_seconds"] = timings_;
    m["outputs"] = outputs_;
    m["results"] = std::move(extra);
    write_json((fs::path(cfg_.out) / "manifest.json").string(), m);
  }

  const RunConfig &cfg() const { return cfg_; }

private:
  RunConfig cfg_;
  std::string config_text_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::string> outputs_;
  std::map<std::string, double> timings_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GridDims parse_dims(const std::string &s) {
  GridDims d{};
  char x1 = 0, x2 = 0;
  std::istringstream in(s);
  in >> d[0] >> x1 >> d[1] >> x2 >> d[2];
  if (!in || x1 != 'x' || x2 != 'x' || d[0] < 1 || d[1] < 1 || d[2] < 1 ||
      in.peek() != std::char_traits<char>::eof())
    throw CLI::ValidationError("dims", "expected NXxNYxNZ, got '" + s + "'");
  return d;
}

NeighborMode neighbor_mode(const RunConfig &c) {
  return c.prior == "2d" ? NeighborMode::Slice2D : NeighborMode::Volume3D;
}

SamplerMethod sampler_method(const std::string &s) {
  if (s == "cholesky")
    return SamplerMethod::Cholesky;
  if (s == "pcg")
    return SamplerMethod::Pcg;
  return SamplerMethod::Auto;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::vector<Contrast> parse_contrasts(const RunConfig &c, int k) {
  std::vector<Contrast> out;
  for (const auto &s : c.contrasts) {
    if (s.empty())
      continue;
    Contrast ct = parse_contrast(s);
    if (ct.c.size() != k)
      throw Error("contrast '" + ct.name + "' has " + std::to_string(ct.c.size()) +
                  " weights but the design has " + std::to_string(k) + " columns");
    out.push_back(std::move(ct));
  }
  return out;
}

/// One independent model per axial slice in 2D mode, the whole mask otherwise.
struct Part {
  GlmDataset data;
  std::vector<int> voxels; // global voxel indices
  std::string suffix;
  std::uint64_t seed = 0;
};

std::vector<Part> split_parts(const GlmDataset &d, const RunConfig &c) {
  std::vector<Part> parts;
  if (neighbor_mode(c) == NeighborMode::Volume3D) {
    Part p;
    p.data = d;
    p.voxels.resize(d.n());
    std::iota(p.voxels.begin(), p.voxels.end(), 0);
    p.seed = c.seed;
    parts.push_back(std::move(p));
    return parts;
  }
  const VoxelLattice &lat = *d.lattice;
  for (int z = 0; z < lat.dims()[2]; ++z) {
    std::vector<int> vox = lat.slice_voxels(z);
    if (vox.empty())
      continue;
    std::vector<std::uint8_t> mask(lat.grid_size(), 0);
    for (int v : vox)
      mask[lat.grid_index(v)] = 1;
    Part p;
    p.data.lattice = std::make_shared<const VoxelLattice>(
        build_lattice(lat.dims(), mask, NeighborMode::Slice2D, lat.voxel_size()));
    p.data.x = d.x;
    p.data.p = d.p;
    p.data.grand_mean = d.grand_mean;
    p.data.regressor_names = d.regressor_names;
    p.data.y.resize(d.t(), static_cast<long>(vox.size()));
    for (std::size_t i = 0; i < vox.size(); ++i)
      p.data.y.col(static_cast<long>(i)) = d.y.col(vox[i]);
    p.voxels = std::move(vox);
    p.suffix = "_z" + std::to_string(z);
    p.seed = stream_key(c.seed, Purpose::General, static_cast<std::uint64_t>(z));
    parts.push_back(std::move(p));
  }
  return parts;
}

std::vector<std::string> voxel_header(int n) {
  std::vector<std::string> h;
  for (int v = 0; v < n; ++v)
    h.push_back("v" + std::to_string(v));
  return h;
}

GlmDataset load_input(const RunConfig &c) {
  if (c.data.empty() || c.mask.empty() || c.design.empty())
    throw Error("--data, --mask and --design are required");
  for (const auto &p : {c.data, c.mask, c.design})
    if (!fs::exists(p))
      throw Error("file not found: " + p);
  return load_dataset(c.data, c.mask, c.design, c.ar_order, neighbor_mode(c));
}

void write_maps(Run &run, const VoxelLattice &lat, const std::string &name,
                const Eigen::MatrixXd &maps) {
  VolumeSeries v = volume_from_voxels(lat, maps);
  write_volume_series(run.path(name + ".vol"), v);
}

void write_ppm_outputs(Run &run, const VoxelLattice &lat, const PpmMap &m, json &res) {
  write_maps(run, lat, "ppm_" + m.contrast, m.prob.transpose());
  const auto above = threshold_map(m, run.cfg().cutoff);
  Eigen::VectorXd ind(static_cast<long>(above.size()));
  for (std::size_t i = 0; i < above.size(); ++i)
    ind[static_cast<long>(i)] = above[i];
  write_maps(run, lat, "ppm_" + m.contrast + "_above", ind.transpose());
  const int z = lat.dims()[2] / 2;
  write_pgm_slice(run.path("ppm_" + m.contrast + "_z" + std::to_string(z) + ".pgm"), lat, m.prob,
                  z, 0.0, 1.0);
  res["ppm"][m.contrast] = {{"gamma", m.gamma},
                            {"voxels_above_cutoff", static_cast<long>(ind.sum())},
                            {"method", m.method}};
}

int run_simulate(const RunConfig &c, Run &run) {
  SynthConfig sc;
  sc.block = parse_dims(c.block);
  sc.mask = parse_dims(c.mask_size);
  sc.mode = neighbor_mode(c);
  sc.k = c.regressors;
  sc.p = c.ar_order;
  sc.t = c.frames;
  sc.seed = c.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const SynthResult r = simulate(sc);
  run.timing("simulate", seconds_since(t0));

  // Volumes cover the mask's bounding box; the box origin is kept in the header.
  const VoxelLattice lat = build_box_lattice(sc.mask, sc.mode, sc.voxel_size);
  std::string origin;
  for (int a = 0; a < 3; ++a)
    origin += (a ? " " : "") + std::to_string((sc.block[a] - sc.mask[a]) / 2);
  VolumeSeries data = volume_from_voxels(lat, r.data.y);
  data.meta["grand_mean"] = fmt(r.data.grand_mean);
  data.meta["scale"] = fmt(r.scale);
  data.meta["raw_grand_mean"] = fmt(r.raw_grand_mean);
  data.meta["scaling"] = "global multiplicative, whole block";
  data.meta["seed"] = std::to_string(c.seed);
  data.meta["block"] = c.block;
  data.meta["origin"] = origin;
  write_volume_series(run.path("data.vol"), data);

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(1, lat.size());
  write_maps(run, lat, "mask", ones);
  write_matrix_csv(run.path("design.csv"), r.data.x, r.data.regressor_names);
  write_maps(run, lat, "truth_w", r.truth.w);
  if (r.truth.a.rows() > 0)
    write_maps(run, lat, "truth_a", r.truth.a);
  write_checkpoint(run.path("truth.ckpt"), r.truth);

  json res;
  res["voxels"] = lat.size();
  res["scale"] = r.scale;
  res["raw_grand_mean"] = r.raw_grand_mean;
  res["truth_alpha"] = std::vector<double>(r.truth.alpha.data(),
                                           r.truth.alpha.data() + r.truth.alpha.size());
  run.finish(res);
  std::cout << "simulated " << lat.size() << " voxels, " << r.data.t() << " frames into "
            << c.out << "\n";
  return 0;
}

int run_fit_mcmc(const RunConfig &c, Run &run) {
  const GlmDataset d = load_input(c);
  const auto contrasts = parse_contrasts(c, d.k());
  GibbsConfig gc;
  gc.n_burn = c.n_burn;
  gc.n_iter = c.n_iter;
  gc.thin = c.thin;
  gc.delta = c.delta;
  gc.sampler.method = sampler_method(c.sampler);
  gc.contrasts = contrasts;

  Eigen::MatrixXd w_mean(d.k(), d.n()), w_var(d.k(), d.n());
  std::vector<Eigen::MatrixXd> csamples(contrasts.size());
  json res;
  const auto t0 = std::chrono::steady_clock::now();
  for (const Part &part : split_parts(d, c)) {
    gc.seed = part.seed;
    const PosteriorChain ch =
        run_gibbs(part.data, make_priors(*part.data.lattice), PriorHyper{}, gc);
    for (std::size_t i = 0; i < part.voxels.size(); ++i) {
      w_mean.col(part.voxels[i]) = ch.w_mean.col(static_cast<long>(i));
      w_var.col(part.voxels[i]) = ch.w_var.col(static_cast<long>(i));
    }
    for (std::size_t j = 0; j < contrasts.size(); ++j) {
      auto &m = csamples[j];
      if (m.size() == 0)
        m.resize(ch.contrast_samples[j].rows(), d.n());
      for (std::size_t i = 0; i < part.voxels.size(); ++i)
        m.col(part.voxels[i]) = ch.contrast_samples[j].col(static_cast<long>(i));
    }
    const long iters = ch.alpha_trace.rows();
    Eigen::MatrixXd hyper(iters, ch.k + ch.p + 1);
    std::vector<std::string> names;
    for (int k = 0; k < ch.k; ++k)
      names.push_back("alpha_" + d.regressor_names[k]);
    for (int p = 0; p < ch.p; ++p)
      names.push_back("beta_" + std::to_string(p + 1));
    names.push_back("lambda_mean");
    hyper << ch.alpha_trace, ch.beta_trace, ch.lambda_mean_trace;
    write_matrix_csv(run.path("hyper_trace" + part.suffix + ".csv"), hyper, names);
    write_checkpoint(run.path("final_state" + part.suffix + ".ckpt"), ch.final_state);
    res["pcg_iterations"][part.suffix.empty() ? "all" : part.suffix.substr(1)] =
        ch.pcg_iterations;
  }
  run.timing("gibbs", seconds_since(t0));

  write_maps(run, *d.lattice, "w_mean", w_mean);
  write_maps(run, *d.lattice, "w_var", w_var);
  for (std::size_t j = 0; j < contrasts.size(); ++j) {
    write_matrix_csv(run.path("contrast_" + contrasts[j].name + "_draws.csv"), csamples[j],
                     voxel_header(d.n()));
    PpmMap m = marginal_ppm_mcmc(csamples[j], contrasts[j].threshold(d.grand_mean));
    m.contrast = contrasts[j].name;
    write_ppm_outputs(run, *d.lattice, m, res);
  }
  run.finish(res);
  std::cout << "gibbs finished: " << gc.n_iter / gc.thin << " stored draws, " << d.n()
            << " voxels\n";
  return 0;
}

int run_fit_svb(const RunConfig &c, Run &run) {
  const GlmDataset d = load_input(c);
  const auto contrasts = parse_contrasts(c, d.k());
  SvbConfig sc;
  sc.delta = c.delta;
  sc.ns_main = c.ns;
  sc.workers = c.workers;
  sc.max_iter = c.max_iter;

  Eigen::MatrixXd w_mean(d.k(), d.n()), w_var(d.k(), d.n());
  Eigen::MatrixXd cmean(contrasts.size(), d.n()), cvar(contrasts.size(), d.n());
  json res;
  const auto t0 = std::chrono::steady_clock::now();
  for (const Part &part : split_parts(d, c)) {
    sc.seed = part.seed;
    const SvbPosterior post =
        run_svb(part.data, make_priors(*part.data.lattice), PriorHyper{}, sc);
    const MarginalStats ms = svb_marginal_stats(post.state.w_samples, contrasts);
    for (std::size_t i = 0; i < part.voxels.size(); ++i) {
      const long v = part.voxels[i];
      w_mean.col(v) = ms.mean.col(static_cast<long>(i));
      w_var.col(v) = ms.var.col(static_cast<long>(i));
      if (!contrasts.empty()) {
        cmean.col(v) = ms.contrast_mean.col(static_cast<long>(i));
        cvar.col(v) = ms.contrast_var.col(static_cast<long>(i));
      }
    }
    const Eigen::MatrixXd alpha = svb_alpha_trace(post);
    std::vector<std::string> names;
    for (int k = 0; k < d.k(); ++k)
      names.push_back("alpha_" + d.regressor_names[k]);
    write_matrix_csv(run.path("svb_alpha" + part.suffix + ".csv"), alpha, names);
    const std::string key = part.suffix.empty() ? "all" : part.suffix.substr(1);
    res["iterations"][key] = post.iterations;
    res["converged"][key] = post.converged;
    write_checkpoint(run.path("svb_mean" + part.suffix + ".ckpt"), svb_mean_state(post.state));
  }
  run.timing("svb", seconds_since(t0));

  write_maps(run, *d.lattice, "w_mean", w_mean);
  write_maps(run, *d.lattice, "w_var", w_var);
  for (std::size_t j = 0; j < contrasts.size(); ++j) {
    PpmMap m = marginal_ppm_svb(cmean.row(static_cast<long>(j)).transpose(),
                                cvar.row(static_cast<long>(j)).transpose(),
                                contrasts[j].threshold(d.grand_mean), c.ns);
    m.contrast = contrasts[j].name;
    write_ppm_outputs(run, *d.lattice, m, res);
  }
  run.finish(res);
  std::cout << "svb finished for " << d.n() << " voxels\n";
  return 0;
}

int run_ppm(const RunConfig &c, Run &run) {
  if (c.input.empty() || c.mask.empty())
    throw Error("--input (contrast draws CSV) and --mask are required");
  std::vector<std::string> given;
  for (const auto &s : c.contrasts)
    if (!s.empty())
      given.push_back(s);
  if (given.size() != 1)
    throw Error("exactly one --contrast is required to set the threshold");
  for (const auto &p : {c.input, c.mask})
    if (!fs::exists(p))
      throw Error("file not found: " + p);
  const Contrast ct = parse_contrast(given.front());
  const VolumeSeries mvol = read_volume_series(c.mask);
  const VoxelLattice lat =
      build_lattice(mvol.dims, mask_from_volume(mvol), neighbor_mode(c), mvol.voxel_size);
  const Eigen::MatrixXd draws = read_matrix_csv(c.input);
  if (draws.cols() != lat.size())
    throw Error("draw matrix has " + std::to_string(draws.cols()) + " columns but the mask has " +
                std::to_string(lat.size()) + " voxels");
  const double gamma = ct.threshold(c.grand_mean);
  PpmMap m = marginal_ppm_mcmc(draws, gamma);
  m.contrast = ct.name;
  json res;
  write_ppm_outputs(run, lat, m, res);
  const std::vector<int> set = excursion_set_greedy(draws, gamma, c.level);
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(lat.size());
  for (int v : set)
    ind[v] = 1.0;
  write_maps(run, lat, "excursion_" + ct.name, ind.transpose());
  res["excursion"] = {{"level", c.level},
                      {"voxels", set.size()},
                      {"joint_ppm", set.empty() ? 1.0 : joint_ppm(draws, gamma, set)}};
  run.finish(res);
  std::cout << "ppm: " << set.size() << " voxels in the excursion set at level " << c.level
            << "\n";
  return 0;
}

int run_bench_sampling(const RunConfig &c, Run &run) {
  SamplingBenchConfig bc;
  bc.sizes = c.sizes;
  bc.k = c.regressors;
  bc.deltas = c.deltas;
  bc.draws = c.draws;
  bc.cholesky_draws = c.cholesky_draws;
  bc.seed = c.seed;
  const auto rows = bench_sampling(bc);
  std::vector<std::vector<std::string>> table;
  std::cout << std::left << std::setw(10) << "method" << std::setw(8) << "N" << std::setw(10)
            << "delta" << std::setw(14) << "seconds" << std::setw(12) << "iterations"
            << "status\n";
  for (const auto &r : rows) {
    table.push_back({r.method, std::to_string(r.n), std::to_string(r.dim), fmt(r.delta),
                     std::to_string(r.draws), fmt(r.mean_seconds), fmt(r.mean_iterations),
                     r.status});
    std::cout << std::left << std::setw(10) << r.method << std::setw(8) << r.n << std::setw(10)
              << r.delta << std::setw(14) << r.mean_seconds << std::setw(12)
              << r.mean_iterations << r.status << "\n";
  }
  append_csv(run.path("bench_sampling.csv"),
             {"method", "n", "dim", "delta", "draws", "mean_seconds", "mean_iterations", "status"},
             table);
  json res = json::array();
  for (const auto &r : rows)
    res.push_back({{"method", r.method},
                   {"n", r.n},
                   {"delta", r.delta},
                   {"mean_seconds", r.mean_seconds},
                   {"mean_iterations", r.mean_iterations},
                   {"status", r.status}});
  run.finish({{"rows", res}});
  return 0;
}

int run_bench_accuracy(const RunConfig &c, Run &run) {
  AccuracyBenchConfig ac;
  ac.synth.block = parse_dims(c.block);
  ac.synth.mask = parse_dims(c.mask_size);
  ac.synth.mode = neighbor_mode(c);
  ac.synth.seed = c.seed;
  ac.synth.p = c.ar_order;
  ac.reference_delta = c.delta;
  ac.n_burn = c.n_burn;
  ac.n_iter = c.n_iter;
  ac.thin = c.thin;
  ac.mcmc_deltas = c.mcmc_deltas;
  ac.svb_deltas = c.svb_deltas;
  ac.svb_ns = {c.ns};
  ac.svb.workers = c.workers;
  ac.svb.max_iter = c.max_iter;
  ac.seed = c.seed;
  const AccuracyResult r = bench_accuracy(ac);
  run.timing("reference_chain", r.reference_seconds);
  std::vector<std::vector<std::string>> table;
  std::cout << "reference MC-SE floor " << r.mc_se_floor << "\n";
  for (const auto &row : r.rows) {
    table.push_back({row.method, fmt(row.delta), std::to_string(row.ns), fmt(row.rmse),
                     fmt(r.mc_se_floor), fmt(row.seconds), std::to_string(row.pcg_iterations)});
    std::cout << row.method << " delta=" << row.delta << " ns=" << row.ns
              << " rmse=" << row.rmse << "\n";
  }
  append_csv(run.path("bench_accuracy.csv"),
             {"method", "delta", "ns", "rmse", "mc_se_floor", "seconds", "pcg_iterations"}, table);
  run.finish({{"mc_se_floor", r.mc_se_floor}});
  return 0;
}

int run_diagnostics(const RunConfig &c, Run &run) {
  if (c.input.empty())
    throw Error("--input (trace CSV) is required");
  if (!fs::exists(c.input))
    throw Error("file not found: " + c.input);
  std::vector<std::string> names;
  const Eigen::MatrixXd traces = read_matrix_csv(c.input, &names);
  const auto table = convergence_table(traces, names, c.cumulative, c.tail);
  std::vector<std::vector<std::string>> rows;
  json res = json::array();
  for (std::size_t j = 0; j < table.size(); ++j) {
    std::string ifs = "NA";
    double ifv = 0.0;
    if (traces.rows() >= 100) {
      try {
        ifv = inefficiency_factor(traces.col(static_cast<long>(j)));
        ifs = fmt(ifv);
      } catch (const Error &) {
      }
    }
    const auto &t = table[j];
    rows.push_back({t.parameter, fmt(t.final_value), std::to_string(t.first_within),
                    fmt(t.last_rel_error), ifs});
    res.push_back({{"parameter", t.parameter},
                   {"final", t.final_value},
                   {"first_within_1pct", t.first_within},
                   {"inefficiency_factor", ifs}});
    std::cout << t.parameter << ": final " << t.final_value << ", within 1% from "
              << t.first_within << ", IF " << ifs << "\n";
  }
  append_csv(run.path("diagnostics.csv"),
             {"parameter", "final", "first_within", "last_rel_error", "inefficiency_factor"},
             rows);
  run.finish({{"parameters", res}});
  return 0;
}

} // namespace

int cli_main(int argc, char **argv) {
  RunConfig c;
  CLI::App app{"Spatial GLM with GMRF priors: simulation, MCMC and SVB fitting, PPMs, "
               "benchmarks"};
  app.set_config("--config", "", "Key-value configuration file");
  app.add_option("mode", c.mode, "Run mode")
      ->required()
      ->check(CLI::IsMember({"simulate", "fit-mcmc", "fit-svb", "ppm", "bench-sampling",
                             "bench-accuracy", "diagnostics"}));
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", c.workers, "Worker threads for SVB")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--prior", c.prior, "Prior neighbourhood")
      ->check(CLI::IsMember({"2d", "3d"}))
      ->capture_default_str();
  app.add_option("--delta", c.delta, "PCG relative residual tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--ns", c.ns, "SVB samples per iteration")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  app.add_option("--contrast", c.contrasts, "Contrast name:w1,...,wK:gamma[%]");
  app.add_option("--out", c.out, "Output directory")->capture_default_str();
  app.add_option("--data", c.data, "Volume-series data file");
  app.add_option("--mask", c.mask, "Mask volume file");
  app.add_option("--design", c.design, "Design matrix CSV");
  app.add_option("--input", c.input, "Contrast draws (ppm) or trace CSV (diagnostics)");
  app.add_option("--ar-order", c.ar_order, "AR noise order P")
      ->check(CLI::Range(0, 10))
      ->capture_default_str();
  app.add_option("--block", c.block, "Simulation block NXxNYxNZ")->capture_default_str();
  app.add_option("--mask-size", c.mask_size, "Centred mask NXxNYxNZ")->capture_default_str();
  app.add_option("--frames", c.frames, "Time points T")->capture_default_str();
  app.add_option("--regressors", c.regressors, "Regressors K, intercept included")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  app.add_option("--n-burn", c.n_burn, "Gibbs burn-in")->capture_default_str();
  app.add_option("--n-iter", c.n_iter, "Gibbs iterations after burn-in")->capture_default_str();
  app.add_option("--thin", c.thin, "Gibbs thinning")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--sampler", c.sampler, "Gaussian sampler")
      ->check(CLI::IsMember({"auto", "cholesky", "pcg"}))
      ->capture_default_str();
  app.add_option("--max-iter", c.max_iter, "SVB iterations")->capture_default_str();
  app.add_option("--sizes", c.sizes, "bench-sampling voxel counts")->capture_default_str();
  app.add_option("--draws", c.draws, "bench-sampling draws per configuration")
      ->capture_default_str();
  app.add_option("--cholesky-draws", c.cholesky_draws, "Draws for Cholesky (0 = --draws)")
      ->capture_default_str();
  app.add_option("--deltas", c.deltas, "bench-sampling tolerances")->capture_default_str();
  app.add_option("--mcmc-deltas", c.mcmc_deltas, "bench-accuracy MCMC tolerances")
      ->capture_default_str();
  app.add_option("--svb-deltas", c.svb_deltas, "bench-accuracy SVB tolerances")
      ->capture_default_str();
  app.add_option("--grand-mean", c.grand_mean, "Grand mean for percent thresholds")
      ->capture_default_str();
  app.add_option("--level", c.level, "Excursion-set joint PPM level")->capture_default_str();
  app.add_option("--cutoff", c.cutoff, "PPM display cutoff")->capture_default_str();
  app.add_flag("--cumulative", c.cumulative, "Use running means (MCMC traces)");
  app.add_option("--tail", c.tail, "Rows averaged for the final value (0 = all)")
      ->capture_default_str();

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }

  try {
    Run run(c, app.config_to_str(true, false));
    if (c.mode == "simulate")
      return run_simulate(c, run);
    if (c.mode == "fit-mcmc")
      return run_fit_mcmc(c, run);
    if (c.mode == "fit-svb")
      return run_fit_svb(c, run);
    if (c.mode == "ppm")
      return run_ppm(c, run);
    if (c.mode == "bench-sampling")
      return run_bench_sampling(c, run);
    if (c.mode == "bench-accuracy")
      return run_bench_accuracy(c, run);
    return run_diagnostics(c, run);
  } catch (const CLI::ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace gmrfglm
