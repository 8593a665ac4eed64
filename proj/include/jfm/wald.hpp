// Wald test of H0: gamma * (shape_r - 1) = 0 -- the hypothesis that the
// timing of hospitalizations is irrelevant to the predicted risk of death.
// With R(gamma, shape_r) = gamma*(shape_r - 1) and gradient
// (shape_r - 1, gamma)', the statistic R^2 / (grad' V grad) is chi-square(1)
// under H0.
#ifndef JFM_WALD_HPP_
#define JFM_WALD_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "jfm/fit.hpp"

namespace jfm {

struct WaldReport {
  double r_value = 0.0;                    // gamma * (shape_r - 1)
  std::array<double, 2> gradient{0.0, 0.0};  // (shape_r - 1, gamma)
  double statistic = 0.0;                  // W
  double p_value = 1.0;                    // chi-square(1) upper tail
};

inline WaldReport wald_distribution_test(double gamma, double recurrence_shape,
                                         const Eigen::Matrix2d& covariance) {
  if (std::abs(covariance(0, 1) - covariance(1, 0)) >
      1e-8 * (1.0 + std::abs(covariance(0, 1))))
    throw std::invalid_argument("wald_distribution_test: covariance must be symmetric");
  WaldReport report;
  report.r_value = gamma * (recurrence_shape - 1.0);
  report.gradient = {recurrence_shape - 1.0, gamma};
  Eigen::Vector2d grad(report.gradient[0], report.gradient[1]);
  const double denom = grad.dot(covariance * grad);
  if (report.r_value == 0.0) {
    report.statistic = 0.0;
    report.p_value = 1.0;
    return report;
  }
  if (!(denom > 0.0))
    throw std::runtime_error("wald_distribution_test: degenerate test (grad' V grad <= 0)");
  report.statistic = report.r_value * report.r_value / denom;
  report.p_value = std::min(1.0, std::erfc(std::sqrt(0.5 * report.statistic)));
  return report;
}

// Convenience overload pulling (gamma, shape_r) and their covariance block
// out of a fit.
inline WaldReport wald_distribution_test(const FitResult& fit) {
  const auto& names = fit.parameter_names;
  const auto find = [&names](const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw std::invalid_argument("wald_distribution_test: fit lacks parameter " + name);
    return static_cast<Eigen::Index>(it - names.begin());
  };
  const Eigen::Index ig = find("gamma"), is = find("recurrence_shape");
  if (fit.covariance.rows() <= std::max(ig, is))
    throw std::invalid_argument("wald_distribution_test: fit has no covariance");
  Eigen::Matrix2d v;
  v << fit.covariance(ig, ig), fit.covariance(ig, is), fit.covariance(is, ig),
      fit.covariance(is, is);
  return wald_distribution_test(fit.estimates.gamma_link,
                                fit.estimates.recurrence_baseline.shape(), v);
}

}  // namespace jfm

#endif  // JFM_WALD_HPP_
