// Small numeric helpers shared across the library.
#ifndef JFM_NUMERIC_HPP_
#define JFM_NUMERIC_HPP_

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace jfm {

inline constexpr double kDaysPerYear = 365.0;

inline double years_to_days(double years) { return years * kDaysPerYear; }
inline double days_to_years(double days) { return days / kDaysPerYear; }

// log(1 - exp(-d)) for d > 0, accurate near both ends.
inline double log1mexp(double d) {
  if (d <= 0.0) return -std::numeric_limits<double>::infinity();
  return d > 0.6931471805599453 ? std::log1p(-std::exp(-d))
                                : std::log(-std::expm1(-d));
}

// log sum_i w_i exp(l_i) with nonnegative weights; max-shifted.
inline double log_weighted_sum_exp(std::span<const double> log_values,
                                   std::span<const double> weights) {
  double m = -std::numeric_limits<double>::infinity();
  for (double l : log_values) m = std::max(m, l);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < log_values.size(); ++i)
    s += weights[i] * std::exp(log_values[i] - m);
  return m + std::log(s);
}

}  // namespace jfm

#endif  // JFM_NUMERIC_HPP_
