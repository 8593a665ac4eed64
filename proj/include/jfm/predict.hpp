// Dynamic prediction of the risk of death in (T, T+w] given survival to T
// and the hospitalization history h(T):
//
//             int [S0d(T)^{Cd u^g} - S0d(T+w)^{Cd u^g}] u^J Sr(T|h)^{Cr u} g(u) du
//  P(T,w) =  ---------------------------------------------------------------------
//             int  S0d(T)^{Cd u^g}                      u^J Sr(T|h)^{Cr u} g(u) du
//
// Writing A = Cd*L0d(T), B = Cd*L0d(T+w), R = Cr*L_r(T|h) in cumulative-hazard
// form, both integrands are exp(-A u^g + J ln u - R u) up to the numerator's
// extra factor (1 - exp(-(B-A) u^g)); everything is evaluated in log space.
#ifndef JFM_PREDICT_HPP_
#define JFM_PREDICT_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "jfm/history.hpp"
#include "jfm/model.hpp"
#include "jfm/numeric.hpp"
#include "jfm/quadrature.hpp"
#include "jfm/recurrent.hpp"

namespace jfm {

namespace detail {

// log of u^power * exp(-death_load * u^gamma - recurrence_load * u)
struct JointIntegrand {
  double power;            // exponent on u (J, or J + delta*gamma in the likelihood)
  double death_load;       // A (or B): C_d * baseline cumulative hazard for death
  double gamma;            // frailty link
  double recurrence_load;  // R: C_r * history-conditional cumulative hazard

  double operator()(double u) const {
    return power * std::log(u) - death_load * std::pow(u, gamma) - recurrence_load * u;
  }
};

// log int u^power exp(-A u^gamma - R u) g(u) du
inline double log_joint_integral(double theta, const JointIntegrand& f, const QuadratureSpec& spec) {
  return log_integrate_frailty(theta, f, spec);
}

// Numerator of the prediction probability: the same integrand times
// (1 - exp(-(B - A) u^gamma)), B >= A.
inline double log_risk_numerator(double theta, JointIntegrand den, double death_load_end,
                                 const QuadratureSpec& spec) {
  const double delta = death_load_end - den.death_load;
  return log_integrate_frailty(
      theta,
      [&den, delta](double u) { return den(u) + log1mexp(delta * std::pow(u, den.gamma)); },
      spec);
}

}  // namespace detail

struct PredictionResult {
  double probability = 0.0;   // in [0, 1]
  double numerator = 0.0;     // marginal mass of {survive to T, history, die in (T, T+w]}
  double denominator = 0.0;   // marginal mass of {survive to T, history}
  QuadratureSpec quadrature;  // settings the result was computed with
};

// P(T, w | z, h(T)) for the configured submodel.
inline PredictionResult risk_of_death(const ModelParams& params, const CovariateProfile& profile,
                                      const EventHistory& h, double follow_up_days,
                                      double window_days, const QuadratureSpec& spec = {}) {
  validate(params);
  if (h.horizon() != follow_up_days)
    throw std::invalid_argument("risk_of_death: history horizon does not equal the follow-up time");
  if (!(window_days >= 0.0)) throw std::invalid_argument("risk_of_death: window must be >= 0");

  const double c_d = profile.death_index(params);
  const double c_r = profile.recurrence_index(params);
  const double load_at_T = c_d * params.death_baseline.cumulative_hazard(follow_up_days);
  const double load_at_end = c_d * params.death_baseline.cumulative_hazard(follow_up_days + window_days);
  const double rec_load =
      c_r * cumulative_hazard_given_history(params.submodel, params.recurrence_baseline, h);

  detail::JointIntegrand den{static_cast<double>(h.count()), load_at_T, params.gamma_link, rec_load};
  const double theta = params.frailty.variance;
  const double log_den = detail::log_joint_integral(theta, den, spec);

  PredictionResult result;
  result.quadrature = spec;
  result.denominator = std::exp(log_den);
  if (window_days == 0.0) return result;  // numerator vanishes exactly

  const double log_num = detail::log_risk_numerator(theta, den, load_at_end, spec);
  result.numerator = std::exp(log_num);
  result.probability = std::min(1.0, std::exp(log_num - log_den));
  return result;
}

// Auxiliary ratio phi(x, y, v; J, gamma) with x = S0d(T)^{Cd},
// y = S0d(T+w)^{Cd}, v = Sr(T|h)^{Cr}; equals the prediction probability.
inline double phi(double x, double y, double v, std::size_t count, double gamma, double theta,
                  const QuadratureSpec& spec = {}) {
  if (!(x > 0.0) || x > 1.0 || !(y > 0.0) || y > 1.0 || !(v > 0.0) || v > 1.0)
    throw std::invalid_argument("phi: x, y, v must lie in (0, 1]");
  if (y > x) throw std::invalid_argument("phi: requires y <= x");
  detail::JointIntegrand den{static_cast<double>(count), -std::log(x), gamma, -std::log(v)};
  if (y == x) return 0.0;
  const double log_den = detail::log_joint_integral(theta, den, spec);
  const double log_num = detail::log_risk_numerator(theta, den, -std::log(y), spec);
  return std::min(1.0, std::exp(log_num - log_den));
}

// Frailty density conditional on surviving to T with history h(T)
// (Bayes update of g by the survival and history factors).
class FrailtyPosterior {
 public:
  FrailtyPosterior(double theta, detail::JointIntegrand kernel, const QuadratureSpec& spec)
      : theta_(theta), kernel_(kernel), spec_(spec) {
    log_normalizer_ = detail::log_joint_integral(theta_, kernel_, spec_);
  }

  double log_pdf(double u) const {
    return kernel_(u) + log_frailty_density(theta_, u) - log_normalizer_;
  }
  double pdf(double u) const { return std::exp(log_pdf(u)); }

  // E[u^p | survive to T, h(T)]
  double moment(double p) const {
    detail::JointIntegrand shifted = kernel_;
    shifted.power += p;
    return std::exp(detail::log_joint_integral(theta_, shifted, spec_) - log_normalizer_);
  }
  double mean() const { return moment(1.0); }

  // integral of the unnormalized kernel against g; pdf integrates to 1
  double log_normalizer() const { return log_normalizer_; }

 private:
  double theta_;
  detail::JointIntegrand kernel_;
  QuadratureSpec spec_;
  double log_normalizer_;
};

inline FrailtyPosterior conditional_frailty_density(const ModelParams& params,
                                                    const CovariateProfile& profile,
                                                    const EventHistory& h, double follow_up_days,
                                                    const QuadratureSpec& spec = {}) {
  validate(params);
  if (h.horizon() != follow_up_days)
    throw std::invalid_argument(
        "conditional_frailty_density: history horizon does not equal the follow-up time");
  const double c_d = profile.death_index(params);
  const double c_r = profile.recurrence_index(params);
  detail::JointIntegrand kernel{
      static_cast<double>(h.count()),
      c_d * params.death_baseline.cumulative_hazard(follow_up_days), params.gamma_link,
      c_r * cumulative_hazard_given_history(params.submodel, params.recurrence_baseline, h)};
  return FrailtyPosterior(params.frailty.variance, kernel, spec);
}

// Risk of death in (T, T+w] conditioning on survival to T only (all
// hospitalization terms removed from Eq. 7's integrands).
inline double unconditional_risk(const ModelParams& params, const CovariateProfile& profile,
                                 double follow_up_days, double window_days,
                                 const QuadratureSpec& spec = {}) {
  validate(params);
  if (!(window_days >= 0.0)) throw std::invalid_argument("unconditional_risk: window must be >= 0");
  if (window_days == 0.0) return 0.0;
  const double c_d = profile.death_index(params);
  detail::JointIntegrand den{0.0, c_d * params.death_baseline.cumulative_hazard(follow_up_days),
                             params.gamma_link, 0.0};
  const double load_at_end =
      c_d * params.death_baseline.cumulative_hazard(follow_up_days + window_days);
  const double theta = params.frailty.variance;
  const double log_den = detail::log_joint_integral(theta, den, spec);
  const double log_num = detail::log_risk_numerator(theta, den, load_at_end, spec);
  return std::min(1.0, std::exp(log_num - log_den));
}

inline constexpr double kDefaultHazardRatioWindowDays = 7.0;

// P(T,w|z,h) / P(T,w|z,h_ref) over a short window.
inline double hazard_ratio(const ModelParams& params, const CovariateProfile& profile,
                           const EventHistory& h, const EventHistory& h_ref, double follow_up_days,
                           double window_days = kDefaultHazardRatioWindowDays,
                           const QuadratureSpec& spec = {}) {
  if (h.horizon() != h_ref.horizon())
    throw std::invalid_argument("hazard_ratio: histories must share the horizon");
  const double p = risk_of_death(params, profile, h, follow_up_days, window_days, spec).probability;
  const double p_ref =
      risk_of_death(params, profile, h_ref, follow_up_days, window_days, spec).probability;
  return p / p_ref;
}

// Equispaced times t_j = j*T/(J+1), j = 1..J.
inline EventHistory dispersed_times(std::size_t count, double horizon) {
  if (count < 1) throw std::invalid_argument("dispersed_times: count must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("dispersed_times: horizon must be positive");
  std::vector<double> times(count);
  for (std::size_t j = 1; j <= count; ++j)
    times[j - 1] = static_cast<double>(j) * horizon / static_cast<double>(count + 1);
  return EventHistory(std::move(times), horizon);
}

// Times clustered at the end of follow-up, ((100-J+k)*T/100)_{k=1..J}; the
// final point lands exactly on T and is clipped inward by a relative 1e-9 to
// keep the strict t_J < T invariant (the probability is continuous in t_J).
inline EventHistory concentrated_times(std::size_t count, double horizon) {
  if (count < 2 || count > 99)
    throw std::invalid_argument("concentrated_times: count must be in [2, 99]");
  if (!(horizon > 0.0)) throw std::invalid_argument("concentrated_times: horizon must be positive");
  std::vector<double> times(count);
  for (std::size_t k = 1; k <= count; ++k)
    times[k - 1] = (100.0 - static_cast<double>(count) + static_cast<double>(k)) * horizon / 100.0;
  times[count - 1] = horizon * (1.0 - 1e-9);
  return EventHistory(std::move(times), horizon);
}

struct CurvePoint {
  double horizon_days;  // T + w
  double probability;
};

// Pointwise risk over a nondecreasing window grid.
inline std::vector<CurvePoint> prediction_curve(const ModelParams& params,
                                                const CovariateProfile& profile,
                                                const EventHistory& h, double follow_up_days,
                                                const std::vector<double>& window_grid_days,
                                                const QuadratureSpec& spec = {}) {
  std::vector<CurvePoint> curve;
  curve.reserve(window_grid_days.size());
  double prev = 0.0;
  bool first = true;
  for (double w : window_grid_days) {
    if (!(w >= 0.0) || (!first && w < prev))
      throw std::invalid_argument("prediction_curve: window grid must be nonnegative and nondecreasing");
    prev = w;
    first = false;
    curve.push_back({follow_up_days + w,
                     risk_of_death(params, profile, h, follow_up_days, w, spec).probability});
  }
  return curve;
}

}  // namespace jfm

#endif  // JFM_PREDICT_HPP_
