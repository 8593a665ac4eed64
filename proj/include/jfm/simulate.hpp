// Synthetic cohorts drawn from the joint model, by inverse transform:
//   death:        S(t | u, z) = S0d(t)^{C_d u^gamma}
//                 => t = L0d^{-1}( -log U / (C_d u^gamma) )
//   renewal gaps: S(g | u, z) = S0r(g)^{C_r u}
//                 => g = L0r^{-1}( -log U / (C_r u) )
//   poisson path: t_k = L0r^{-1}( E_k / (C_r u) ), E_k a unit-rate
//                 Poisson-process cumulative sum.
// Events are instantaneous (no hospitalization durations); follow-up stops at
// min(death, administrative censoring).
#ifndef JFM_SIMULATE_HPP_
#define JFM_SIMULATE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jfm/likelihood.hpp"
#include "jfm/model.hpp"
#include "jfm/rng.hpp"

namespace jfm {

struct CovariateGenerator {
  enum class Kind { bernoulli, normal, uniform };
  Kind kind = Kind::normal;
  double a = 0.0;  // p, mean, or lower bound
  double b = 1.0;  // (unused), sd, or upper bound

  static CovariateGenerator bernoulli(double p) { return {Kind::bernoulli, p, 0.0}; }
  static CovariateGenerator normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
  static CovariateGenerator uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }

  double draw(RngStream& rng) const {
    switch (kind) {
      case Kind::bernoulli: return rng.bernoulli(a) ? 1.0 : 0.0;
      case Kind::normal: return rng.normal(a, b);
      case Kind::uniform: return rng.uniform(a, b);
    }
    throw std::logic_error("CovariateGenerator: unknown kind");
  }
};

struct SimulationConfig {
  int n_patients = 0;
  ModelParams true_params;
  std::vector<std::pair<std::string, CovariateGenerator>> covariates;
  double censoring_days = 0.0;  // administrative censoring
  std::uint64_t seed = 0;
};

inline void validate(const SimulationConfig& config) {
  validate(config.true_params);
  if (config.n_patients <= 0)
    throw std::invalid_argument("SimulationConfig: n_patients must be positive");
  if (!(config.censoring_days > 0.0))
    throw std::invalid_argument("SimulationConfig: censoring time must be positive");
  for (const auto& name : config.true_params.death_schema) {
    if (std::none_of(config.covariates.begin(), config.covariates.end(),
                     [&](const auto& c) { return c.first == name; }))
      throw std::invalid_argument("SimulationConfig: no generator for covariate '" + name + "'");
  }
  for (const auto& name : config.true_params.recurrence_schema) {
    if (std::none_of(config.covariates.begin(), config.covariates.end(),
                     [&](const auto& c) { return c.first == name; }))
      throw std::invalid_argument("SimulationConfig: no generator for covariate '" + name + "'");
  }
}

// gamma(1/theta, theta): mean 1, variance theta
inline double sample_frailty(double theta, RngStream& rng) {
  if (!(theta > 0.0)) throw std::invalid_argument("sample_frailty: theta must be positive");
  return rng.gamma(1.0 / theta, theta);
}

inline double sample_death_time(double frailty, const CovariateProfile& profile,
                                const ModelParams& params, RngStream& rng) {
  if (!(frailty > 0.0)) throw std::invalid_argument("sample_death_time: frailty must be positive");
  const double rate = profile.death_index(params) * std::pow(frailty, params.gamma_link);
  return params.death_baseline.inverse_cumulative_hazard(-std::log(rng.uniform01()) / rate);
}

inline std::vector<double> sample_hospitalization_path(double frailty,
                                                       const CovariateProfile& profile,
                                                       const ModelParams& params, double horizon,
                                                       RngStream& rng) {
  if (!(horizon > 0.0))
    throw std::invalid_argument("sample_hospitalization_path: horizon must be positive");
  const double rate = profile.recurrence_index(params) * frailty;
  std::vector<double> times;
  if (params.submodel == Submodel::renewal) {
    double t = 0.0;
    while (true) {
      t += params.recurrence_baseline.inverse_cumulative_hazard(-std::log(rng.uniform01()) / rate);
      if (!(t < horizon)) break;
      times.push_back(t);
    }
  } else {
    double load = 0.0;
    while (true) {
      load += rng.exponential();
      const double t = params.recurrence_baseline.inverse_cumulative_hazard(load / rate);
      if (!(t < horizon)) break;
      times.push_back(t);
    }
  }
  return times;
}

inline std::vector<PatientRecord> simulate_cohort(const SimulationConfig& config) {
  validate(config);
  std::vector<PatientRecord> cohort;
  cohort.reserve(config.n_patients);
  for (int i = 0; i < config.n_patients; ++i) {
    RngStream rng(config.seed, static_cast<std::uint64_t>(i));
    PatientRecord r;
    char id[16];
    std::snprintf(id, sizeof(id), "p%06d", i + 1);
    r.id = id;
    for (const auto& [name, gen] : config.covariates) r.covariates[name] = gen.draw(rng);
    const CovariateProfile profile(r.covariates);
    const double u = sample_frailty(config.true_params.frailty.variance, rng);
    const double death_time = sample_death_time(u, profile, config.true_params, rng);
    r.death_observed = death_time <= config.censoring_days;
    r.follow_up_days = std::min(death_time, config.censoring_days);
    r.hospitalization_days =
        sample_hospitalization_path(u, profile, config.true_params, r.follow_up_days, rng);
    cohort.push_back(std::move(r));
  }
  return cohort;
}

}  // namespace jfm

#endif  // JFM_SIMULATE_HPP_
