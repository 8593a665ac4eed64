// Reproducible random streams: one engine per (seed, stream) pair so
// patient-level simulation is deterministic regardless of evaluation order.
#ifndef JFM_RNG_HPP_
#define JFM_RNG_HPP_

#include <cstdint>
#include <random>

namespace jfm {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed;
    detail::splitmix64(state);
    state ^= 0xD1B54A32D192ED03ULL * (stream + 1);
    engine_.seed(detail::splitmix64(state));
  }

  // uniform on the open interval (0, 1)
  double uniform01() {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double u;
    do {
      u = dist(engine_);
    } while (u <= 0.0);
    return u;
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }
  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  double exponential(double rate = 1.0) {
    return std::exponential_distribution<double>(rate)(engine_);
  }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace jfm

#endif  // JFM_RNG_HPP_
