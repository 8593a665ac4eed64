// Gamma frailty with mean one and variance theta:
//   g(u) = u^{1/theta - 1} exp(-u/theta) / (theta^{1/theta} Gamma(1/theta)).
#ifndef JFM_FRAILTY_HPP_
#define JFM_FRAILTY_HPP_

#include <cmath>
#include <stdexcept>

namespace jfm {

struct FrailtyParams {
  double variance = 1.0;  // theta > 0
};

inline void validate(const FrailtyParams& p) {
  if (!(p.variance > 0.0))
    throw std::invalid_argument("FrailtyParams: variance must be positive");
}

inline double log_frailty_density(double theta, double u) {
  if (!(theta > 0.0)) throw std::invalid_argument("frailty density: theta must be positive");
  if (!(u > 0.0)) throw std::domain_error("frailty density: u must be positive");
  const double a = 1.0 / theta;
  return (a - 1.0) * std::log(u) - u / theta - a * std::log(theta) - std::lgamma(a);
}

inline double frailty_density(double theta, double u) {
  return std::exp(log_frailty_density(theta, u));
}

}  // namespace jfm

#endif  // JFM_FRAILTY_HPP_
