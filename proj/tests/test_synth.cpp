#include "gmrfglm/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace gmrfglm;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.block = {8, 7, 6};
  c.mask = {4, 3, 2};
  c.t = 60;
  return c;
}

} // namespace

TEST_CASE("canonical HRF") {
  CHECK(canonical_hrf(0.0) == 0.0);
  CHECK(canonical_hrf(-1.0) == 0.0);
  // Peak of the positive lobe near 5 s, undershoot after 10 s.
  double best = 0.0, arg = 0.0;
  for (double t = 0.0; t < 30.0; t += 0.01)
    if (canonical_hrf(t) > best) {
      best = canonical_hrf(t);
      arg = t;
    }
  CHECK(arg == doctest::Approx(5.0).epsilon(0.05));
  CHECK(canonical_hrf(15.0) < 0.0);
  // gamma(6) density at 5 minus gamma(16) density at 5 over 6.
  const double g6 = std::pow(5.0, 5) * std::exp(-5.0) / 120.0;
  const double g16 = std::pow(5.0, 15) * std::exp(-5.0) / std::tgamma(16.0);
  CHECK(canonical_hrf(5.0) == doctest::Approx(g6 - g16 / 6.0));
}

TEST_CASE("design matrix") {
  const Eigen::MatrixXd x = make_design(200, 3, 7);
  CHECK(x.rows() == 200);
  CHECK(x.cols() == 4);
  CHECK(x.col(3).isOnes());
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(x.col(j).mean()) < 1e-12);
    CHECK(x.col(j).norm() > 0.0);
  }
  CHECK(make_design(200, 3, 7) == x);
  CHECK(make_design(200, 3, 8) != x);

  SUBCASE("stimulus blocks") {
    DesignConfig c;
    c.t = 300;
    c.n_task = 2;
    c.blocks = 1;
    c.block_length = 7;
    c.amplitude = 2.0;
    const Eigen::MatrixXd s = make_stimulus(c);
    for (int j = 0; j < 2; ++j) {
      CHECK(s.col(j).sum() == doctest::Approx(14.0));
      CHECK(s.col(j).maxCoeff() == 2.0);
    }
    c.blocks = -1;
    CHECK(make_stimulus(c).col(0).sum() <= 6 * 7 * 2.0);
  }
  SUBCASE("single impulse gives the normalised kernel") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(40, 1);
    s(0, 0) = 1.0;
    const Eigen::MatrixXd d = design_from_stimulus(s, 2.0);
    double ksum = 0.0;
    for (int i = 0; i < 16; ++i)
      ksum += canonical_hrf(2.0 * i);
    const double shift = 1.0 / 40.0;
    for (int i = 0; i < 16; ++i)
      CHECK(d(i, 0) == doctest::Approx(canonical_hrf(2.0 * i) / ksum - shift));
    CHECK(d(30, 0) == doctest::Approx(-shift));
    CHECK_THROWS(design_from_stimulus(s, 0.0));
  }
}

TEST_CASE("centered mask") {
  const auto m = centered_mask({5, 4, 3}, {3, 2, 1});
  CHECK(std::accumulate(m.begin(), m.end(), 0) == 6);
  CHECK(m[(1 * 4 + 1) * 5 + 1] == 1);
  CHECK(m[(1 * 4 + 1) * 5 + 0] == 0);
  CHECK(m[(0 * 4 + 1) * 5 + 1] == 0);
  CHECK_THROWS(centered_mask({5, 4, 3}, {6, 1, 1}));
  CHECK_THROWS(centered_mask({5, 4, 3}, {0, 1, 1}));
}

TEST_CASE("simulation bookkeeping") {
  const SynthConfig c = small_config();
  const SynthResult r = simulate(c);
  const auto &d = r.data;
  CHECK(d.n() == 24);
  CHECK(d.k() == 5);
  CHECK(d.p == 1);
  CHECK(d.regressor_names.back() == "intercept");
  CHECK(r.raw_grand_mean * r.scale == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(d.grand_mean == 100.0);
  CHECK(r.truth.lambda.isApproxToConstant(1.0 / (100.0 * r.scale * r.scale)));
  CHECK(r.truth.alpha[4] == 0.0);
  CHECK(r.truth.alpha[0] == doctest::Approx(1e-4 / (r.scale * r.scale)));
  CHECK(r.truth.beta.isApproxToConstant(10.0));
  CHECK(r.raw_intercepts.size() == 8 * 7 * 6);
  CHECK(r.truth.a.cwiseAbs().maxCoeff() < 1.0);

  SUBCASE("truth restricts and scales the block fields") {
    const VoxelLattice block = build_box_lattice(c.block, NeighborMode::Volume3D);
    for (int v = 0; v < d.n(); ++v) {
      const int n = block.voxel_at(r.lattice->grid_index(v));
      CHECK(r.truth.w(4, v) == doctest::Approx(r.scale * r.raw_intercepts[n]));
      CHECK(r.truth.w(1, v) == doctest::Approx(r.scale * r.raw_task_fields(1, n)));
    }
  }
  SUBCASE("deterministic in the seed") {
    const SynthResult again = simulate(c);
    CHECK(again.data.y == d.y);
    SynthConfig other = c;
    other.seed = 2;
    CHECK(simulate(other).data.y != d.y);
  }
  SUBCASE("invalid configurations") {
    SynthConfig b = c;
    b.t = 5;
    CHECK_THROWS(simulate(b));
    b = c;
    b.noise_var = 0.0;
    CHECK_THROWS(simulate(b));
    b = c;
    b.alpha_true = {1e-4, -1.0};
    CHECK_THROWS(simulate(b));
    b = c;
    b.mask = {9, 1, 1};
    CHECK_THROWS(simulate(b));
  }
}

TEST_CASE("vanishing noise gives Y = X W") {
  SynthConfig c = small_config();
  c.noise_var = 1e-20;
  const SynthResult r = simulate(c);
  const Eigen::MatrixXd fit = r.data.x * r.truth.w;
  CHECK((r.data.y - fit).norm() <= 1e-8 * r.data.y.norm());
}

TEST_CASE("task fields carry the prior precision") {
  SynthConfig c;
  c.block = {22, 22, 21};
  c.mask = {2, 2, 2};
  c.t = 12;
  c.k = 3;
  c.p = 0;
  c.alpha_true = {2e-3, 0.5};
  const SynthResult r = simulate(c);
  const VoxelLattice block = build_box_lattice(c.block, NeighborMode::Volume3D);
  const GmrfStructure ug = build_ugl(block);
  const double n = block.size();
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd w = r.raw_task_fields.row(j).transpose();
    CHECK(std::abs(w.mean()) < 1e-6 * w.cwiseAbs().maxCoeff());
    const double q = ug.incidence.apply(w).squaredNorm();
    const double ahat = (n - 1.0) / q;
    INFO("j=", j, " ahat=", ahat);
    CHECK(std::abs(ahat / c.alpha_true[j] - 1.0) < 4.0 * std::sqrt(2.0 / (n - 1.0)));
  }
  CHECK(r.raw_intercepts.mean() == doctest::Approx(900.0).epsilon(4.0 * 130.0 / std::sqrt(n) / 900.0));
}

TEST_CASE("AR coefficients are recoverable from long series") {
  SynthConfig c;
  c.block = {2, 1, 1};
  c.mask = {2, 1, 1};
  c.t = 10000;
  c.k = 1;
  c.alpha_true = {};
  c.beta_true = 4.0;
  const SynthResult r = simulate(c);
  for (int v = 0; v < 2; ++v) {
    const Eigen::VectorXd e = r.data.y.col(v).array() - r.truth.w(0, v);
    const Eigen::VectorXd cur = e.tail(c.t - 1), prev = e.head(c.t - 1);
    const double ahat = prev.dot(cur) / prev.squaredNorm();
    const double a = r.truth.a(0, v);
    INFO("a=", a, " ahat=", ahat);
    CHECK(std::abs(ahat - a) < 4.0 * std::sqrt((1.0 - a * a) / c.t));
  }
}
