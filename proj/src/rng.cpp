#include "gmrfglm/rng.hpp"

namespace gmrfglm {

namespace {

constexpr std::uint64_t kPhi = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

std::uint64_t stream_key(std::uint64_t seed, Purpose purpose, std::uint64_t index,
                         std::uint64_t block) {
  std::uint64_t h = mix64(seed + kPhi);
  h = mix64(h ^ (static_cast<std::uint64_t>(purpose) * kPhi));
  h = mix64(h ^ mix64(index + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ mix64(block + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

StreamRng::result_type StreamRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kPhi);
}

double StreamRng::uniform() {
  // 53 random bits in (0, 1).
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double StreamRng::normal() { return normal_(*this); }

double StreamRng::gamma(double shape, double scale) {
  std::gamma_distribution<double> g(shape, scale);
  return g(*this);
}

Eigen::VectorXd StreamRng::normal_vector(long n) {
  Eigen::VectorXd z(n);
  fill_normal(z.data(), n);
  return z;
}

void StreamRng::fill_normal(double *out, long n) {
  for (long i = 0; i < n; ++i)
    out[i] = normal_(*this);
}

} // namespace gmrfglm
