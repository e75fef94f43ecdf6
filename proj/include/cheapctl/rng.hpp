#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace cheapctl {

/// Deterministic uniform sampler. Draws are derived from the raw mt19937_64
/// stream so sequences do not depend on the standard library's distribution
/// implementation.
class UniformSampler {
 public:
  explicit UniformSampler(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * next01(); }

  Eigen::VectorXd vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  double next01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 gen_;
};

}  // namespace cheapctl
