#include "gmrfglm/ppm.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace gmrfglm;

TEST_CASE("contrast parsing") {
  const auto c = parse_contrast("task:1,-1,0:0.5%");
  CHECK(c.name == "task");
  CHECK(c.c.size() == 3);
  CHECK(c.c[1] == -1.0);
  CHECK(c.percent);
  CHECK(c.threshold(200.0) == doctest::Approx(1.0));
  const auto d = parse_contrast("a:2:-3");
  CHECK(!d.percent);
  CHECK(d.threshold(200.0) == -3.0);
  CHECK_THROWS(parse_contrast("a:1"));
  CHECK_THROWS(parse_contrast(":1:0"));
  CHECK_THROWS(parse_contrast("a:0,0:1"));
  CHECK_THROWS(parse_contrast("a:x:1"));
}

TEST_CASE("marginal PPM from draws") {
  Eigen::MatrixXd draws(10, 2);
  draws.col(0) << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  draws.col(1).setConstant(3.0);
  SUBCASE("fraction strictly above") {
    const auto m = marginal_ppm_mcmc(draws, 3.0);
    CHECK(m.prob[0] == doctest::Approx(0.7));
    CHECK(m.prob[1] == 0.0);
    CHECK(m.draws == 10);
  }
  SUBCASE("minus infinity gives one") {
    const auto m = marginal_ppm_mcmc(draws, -std::numeric_limits<double>::infinity());
    CHECK(m.prob.isApproxToConstant(1.0));
  }
  SUBCASE("no draws") { CHECK_THROWS(marginal_ppm_mcmc(Eigen::MatrixXd(0, 2), 0.0)); }
}

TEST_CASE("Gaussian PPM") {
  const Eigen::Vector3d mean(1.0, 1.0, 2.0), var(4.0, 0.0, 1.0);
  const auto m = marginal_ppm_svb(mean, var, 1.0, 50);
  CHECK(m.prob[0] == doctest::Approx(0.5));
  CHECK(m.prob[1] == 0.0);
  CHECK(m.prob[2] == doctest::Approx(0.841344746068543));
  CHECK(marginal_ppm_svb(mean, var, 0.5, 50).prob[1] == 1.0);
  CHECK_THROWS(marginal_ppm_svb(mean, Eigen::Vector2d(1, 1), 0.0, 1));

  SUBCASE("from samples through a contrast") {
    std::vector<Eigen::MatrixXd> s;
    for (int j = 0; j < 4; ++j)
      s.push_back(testing::random_matrix(2, 5, 50 + j));
    Contrast c;
    c.name = "d";
    c.c = Eigen::Vector2d(1, -1);
    c.gamma = 10.0;
    c.percent = true;
    const auto p = marginal_ppm_svb(s, c, 2.0);
    const auto ms = svb_marginal_stats(s, {c});
    for (int v = 0; v < 5; ++v)
      CHECK(p.prob[v] == doctest::Approx(0.5 * std::erfc(-(ms.contrast_mean(0, v) - 0.2) /
                                                         std::sqrt(2.0 * ms.contrast_var(0, v)))));
    CHECK(p.contrast == "d");
    CHECK(p.gamma == doctest::Approx(0.2));
  }
}

TEST_CASE("threshold map is strict") {
  PpmMap m;
  m.prob = Eigen::Vector3d(0.9, 0.95, 0.5);
  const auto t = threshold_map(m);
  CHECK(t == std::vector<std::uint8_t>{0, 1, 0});
  CHECK_THROWS(threshold_map(m, 1.0));
}

TEST_CASE("joint PPM and excursion sets") {
  const Eigen::MatrixXd draws = testing::random_matrix(2000, 12, 60).array() + 0.8;
  SUBCASE("joint never exceeds the smallest marginal") {
    const auto marg = marginal_ppm_mcmc(draws, 0.0).prob;
    const std::vector<int> set{0, 3, 7};
    const double j = joint_ppm(draws, 0.0, set);
    CHECK(j <= std::min({marg[0], marg[3], marg[7]}));
    CHECK(joint_ppm(draws, 0.0, {4}) == doctest::Approx(marg[4]));
    CHECK_THROWS(joint_ppm(draws, 0.0, {}));
    CHECK_THROWS(joint_ppm(draws, 0.0, {12}));
  }
  SUBCASE("greedy set holds its level and nests") {
    const auto lo = excursion_set_greedy(draws, 0.0, 0.3);
    const auto hi = excursion_set_greedy(draws, 0.0, 0.6);
    REQUIRE(!lo.empty());
    CHECK(joint_ppm(draws, 0.0, lo) >= 0.3);
    CHECK(hi.size() <= lo.size());
    for (std::size_t i = 0; i < hi.size(); ++i)
      CHECK(hi[i] == lo[i]);
    const auto marg = marginal_ppm_mcmc(draws, 0.0).prob;
    for (std::size_t i = 1; i < lo.size(); ++i)
      CHECK(marg[lo[i - 1]] >= marg[lo[i]]);
  }
  SUBCASE("domain restriction") {
    const auto s = excursion_set_greedy(draws, 0.0, 0.5, {2, 5});
    for (int v : s)
      CHECK((v == 2 || v == 5));
    CHECK_THROWS(excursion_set_greedy(draws, 0.0, 1.0));
  }
}

TEST_CASE("chain overload resolves percent thresholds") {
  PosteriorChain ch;
  Contrast c;
  c.name = "x";
  c.c = Eigen::VectorXd::Ones(1);
  c.gamma = 1.0;
  c.percent = true;
  ch.contrasts = {c};
  Eigen::MatrixXd d(4, 1);
  d << 0.5, 1.5, 2.5, 0.9;
  ch.contrast_samples = {d};
  const auto m = marginal_ppm_mcmc(ch, 0, 100.0);
  CHECK(m.prob[0] == doctest::Approx(0.5));
  CHECK(m.contrast == "x");
  CHECK_THROWS(marginal_ppm_mcmc(ch, 1, 100.0));
}
