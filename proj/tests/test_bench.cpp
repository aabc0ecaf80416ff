#include "gmrfglm/bench.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

using namespace gmrfglm;
namespace fs = std::filesystem;

TEST_CASE("compact lattice") {
  const VoxelLattice l = compact_lattice(10);
  CHECK(l.size() == 10);
  CHECK(l.dims() == GridDims{2, 2, 3});
  for (int v = 0; v < 10; ++v)
    CHECK(l.grid_index(v) == v);
  CHECK(compact_lattice(27).dims() == GridDims{3, 3, 3});
  CHECK_THROWS(compact_lattice(0));
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope(1, 1, 10, 100) == doctest::Approx(2.0));
  CHECK(loglog_slope(1e3, 2.0, 1e4, 2.0 * std::pow(10.0, 1.5)) == doctest::Approx(1.5));
  CHECK_THROWS(loglog_slope(1, 1, 1, 2));
  CHECK_THROWS(loglog_slope(1, 0, 2, 2));
}

TEST_CASE("RMSE and MC floor") {
  const Eigen::MatrixXd w = testing::random_matrix(3, 4, 80);
  CHECK(rmse_rows(w, w, 3) == 0.0);
  Eigen::MatrixXd r = w;
  r.topRows(2).array() += 0.5;
  CHECK(rmse_rows(w, r, 2) == doctest::Approx(0.5));
  CHECK(rmse_rows(w, r, 3) == doctest::Approx(std::sqrt(0.25 * 8 / 12)));
  CHECK_THROWS(rmse_rows(w, r, 4));
  CHECK_THROWS(rmse_rows(w, r.leftCols(2), 1));

  const Eigen::MatrixXd x = testing::random_matrix(400, 2, 81);
  const std::vector<Eigen::MatrixXf> draws{x.cast<float>()};
  const double se0 = mc_standard_error(x.col(0).cast<float>().cast<double>());
  const double se1 = mc_standard_error(x.col(1).cast<float>().cast<double>());
  CHECK(mc_se_floor(draws) == doctest::Approx(std::sqrt((se0 * se0 + se1 * se1) / 2)));
  CHECK_THROWS(mc_se_floor({}));
}

TEST_CASE("sampling benchmark rows") {
  SamplingBenchConfig c;
  c.sizes = {20};
  c.k = 2;
  c.t = 30;
  c.deltas = {1e-6};
  c.draws = 2;
  const auto rows = bench_sampling(c);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].method == "cholesky");
  CHECK(rows[1].method == "pcg");
  CHECK(rows[2].method == "cg");
  for (const auto &r : rows) {
    CHECK(r.status == "ok");
    CHECK(r.n == 20);
    CHECK(r.dim == 40);
    CHECK(r.mean_seconds > 0.0);
  }
  CHECK(rows[0].delta == 0.0);
  CHECK(rows[1].mean_iterations > 0.0);
  CHECK(rows[1].mean_iterations <= rows[2].mean_iterations);

  c.cholesky_max_nnz = 1;
  c.unpreconditioned = false;
  const auto skipped = bench_sampling(c);
  REQUIRE(skipped.size() == 2);
  CHECK(skipped[0].status.rfind("skipped", 0) == 0);
  c.t = 2;
  CHECK_THROWS(bench_sampling(c));
}

TEST_CASE("accuracy benchmark on a tiny problem") {
  AccuracyBenchConfig c;
  c.synth.block = {6, 6, 6};
  c.synth.mask = {3, 3, 2};
  c.synth.t = 40;
  c.synth.k = 3;
  c.regressors = 2;
  c.n_burn = 20;
  c.n_iter = 200;
  c.thin = 2;
  c.svb_deltas = {1e-4};
  c.svb_ns = {10};
  c.svb.max_iter = 10;
  const auto r = bench_accuracy(c);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].method == "mcmc");
  CHECK(r.rows[1].method == "svb");
  CHECK(r.rows[1].ns == 10);
  CHECK(r.reference_mean.rows() == 2);
  CHECK(r.reference_mean.cols() == 18);
  CHECK(r.mc_se_floor > 0.0);
  for (const auto &row : r.rows) {
    CHECK(std::isfinite(row.rmse));
    CHECK(row.pcg_iterations > 0);
  }
  c.regressors = 4;
  CHECK_THROWS(bench_accuracy(c));
}

TEST_CASE("convergence table") {
  Eigen::MatrixXd t(4, 2);
  t << 2, 1, 1.1, 1, 1.005, 1, 1.0, 1;
  const auto rows = convergence_table(t, {"a", "b"}, false, 1);
  CHECK(rows[0].parameter == "a");
  CHECK(rows[0].final_value == 1.0);
  CHECK(rows[0].first_within == 3);
  CHECK(rows[1].first_within == 1);
  const auto cum = convergence_table(t, {"a", "b"}, true);
  CHECK(cum[0].final_value == doctest::Approx((2 + 1.1 + 1.005 + 1.0) / 4));
  CHECK_THROWS(convergence_table(t, {"a"}, false));
  CHECK(svb_alpha_trace(SvbPosterior{}).size() == 0);
}

TEST_CASE("CSV appending") {
  const fs::path dir = fs::temp_directory_path() / ("gmrfglm_bench_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string p = (dir / "t.csv").string();
  append_csv(p, {"a", "b"}, {{"1", "2"}});
  append_csv(p, {"a", "b"}, {{"3", "4"}});
  std::ifstream in(p);
  std::string all((std::istreambuf_iterator<char>(in)), {});
  CHECK(all == "a,b\n1,2\n3,4\n");
  CHECK_THROWS(append_csv(p, {"a", "c"}, {}));
  CHECK_THROWS(append_csv((dir / "u.csv").string(), {"a"}, {{"1", "2"}}));
  fs::remove_all(dir);
}
