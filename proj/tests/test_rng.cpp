#include "gmrfglm/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace gmrfglm;

TEST_CASE("streams are reproducible") {
  StreamRng a(42, Purpose::GibbsW, 7, 3), b(42, Purpose::GibbsW, 7, 3);
  for (int i = 0; i < 100; ++i)
    CHECK(a() == b());
  CHECK(a.counter() == 100);
  StreamRng c(42, Purpose::GibbsW, 7, 3);
  CHECK(c.normal_vector(50) == StreamRng(42, Purpose::GibbsW, 7, 3).normal_vector(50));
}

TEST_CASE("every key component separates streams") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t seed : {1, 2})
    for (auto p : {Purpose::General, Purpose::GibbsW, Purpose::SvbW})
      for (std::uint64_t i : {0, 1, 2})
        for (std::uint64_t blk : {0, 1})
          keys.insert(stream_key(seed, p, i, blk));
  CHECK(keys.size() == 2 * 3 * 3 * 2);
  CHECK(StreamRng(1, Purpose::SvbW, 0)() != StreamRng(1, Purpose::SvbW, 1)());
}

TEST_CASE("uniform, normal and gamma moments") {
  StreamRng rng(9, Purpose::Test);
  const int n = 200000;
  double su = 0, su2 = 0, umin = 1, umax = 0;
  double sn = 0, sn2 = 0, sn4 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    su += u;
    su2 += u * u;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(su2 / n - 1.0 / 3.0) < 0.005);
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sn4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));

  for (auto [shape, scale] : {std::pair{0.5, 2.0}, std::pair{50.1, 0.01}, std::pair{3.0, 7.0}}) {
    double s = 0, s2 = 0, gmin = 1e300;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape, scale);
      gmin = std::min(gmin, g);
      s += g;
      s2 += g * g;
    }
    CHECK(gmin >= 0.0);
    const double mean = scale * shape, var = scale * scale * shape;
    CHECK(std::abs(s / n - mean) < 4.0 * std::sqrt(var / n));
    const double emp_var = s2 / n - (s / n) * (s / n);
    CHECK(std::abs(emp_var - var) / var < 0.05);
  }
}

TEST_CASE("fill_normal matches successive draws") {
  StreamRng a(5), b(5);
  std::vector<double> buf(17);
  a.fill_normal(buf.data(), 17);
  for (double v : buf)
    CHECK(v == b.normal());
}
