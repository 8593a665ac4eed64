// Weibull baseline hazard and the baseline-hazard interface shared by the
// death and hospitalization processes.
//
// Parameterization: hazard(t) = shape * t^(shape-1) / scale^shape, so the
// cumulative hazard is (t/scale)^shape. Time is measured in days.
#ifndef JFM_WEIBULL_HPP_
#define JFM_WEIBULL_HPP_

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>

namespace jfm {

// Anything providing hazard / cumulative hazard / survival / inverse
// cumulative hazard on [0, inf). Weibull is the production family; tests add
// further baselines (e.g. affine hazards) through the same interface.
template <typename B>
concept BaselineHazard = requires(const B& b, double t) {
  { b.hazard(t) } -> std::convertible_to<double>;
  { b.cumulative_hazard(t) } -> std::convertible_to<double>;
  { b.survival(t) } -> std::convertible_to<double>;
  { b.inverse_cumulative_hazard(t) } -> std::convertible_to<double>;
};

class WeibullHazard {
 public:
  WeibullHazard(double shape, double scale) : shape_(shape), scale_(scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
      throw std::invalid_argument("WeibullHazard: shape and scale must be positive (got shape=" +
                                  std::to_string(shape) + ", scale=" + std::to_string(scale) + ")");
  }

  double shape() const { return shape_; }
  double scale() const { return scale_; }

  // shape * t^(shape-1) / scale^shape; infinite at t=0 when shape < 1.
  double hazard(double t) const {
    check_time(t);
    if (t == 0.0 && shape_ < 1.0)
      throw std::domain_error("WeibullHazard: hazard is infinite at t=0 for shape < 1");
    if (t == 0.0) return shape_ == 1.0 ? 1.0 / scale_ : 0.0;
    return std::exp(log_hazard(t));
  }

  // log hazard, valid for t > 0.
  double log_hazard(double t) const {
    check_time(t);
    if (t <= 0.0)
      throw std::domain_error("WeibullHazard: log hazard requires t > 0");
    return std::log(shape_) + (shape_ - 1.0) * std::log(t) - shape_ * std::log(scale_);
  }

  // (t/scale)^shape
  double cumulative_hazard(double t) const {
    check_time(t);
    if (t == 0.0) return 0.0;
    return std::pow(t / scale_, shape_);
  }

  double survival(double t) const { return std::exp(-cumulative_hazard(t)); }

  // t with cumulative_hazard(t) = y.
  double inverse_cumulative_hazard(double y) const {
    if (!(y >= 0.0))
      throw std::domain_error("WeibullHazard: inverse cumulative hazard requires y >= 0");
    return scale_ * std::pow(y, 1.0 / shape_);
  }

 private:
  static void check_time(double t) {
    if (!(t >= 0.0))
      throw std::domain_error("WeibullHazard: time must be nonnegative");
  }

  double shape_;
  double scale_;
};

static_assert(BaselineHazard<WeibullHazard>);

}  // namespace jfm

#endif  // JFM_WEIBULL_HPP_
