// Marginal log likelihood of the joint model. Conditional on the frailty u,
// a patient contributes
//   [u^g C_d l0d(T)]^delta * S0d(T)^{C_d u^g}                (death part)
//   * (C_r u)^J * prod_j l^r(t_j | h(t_j)) * S^r(T|h)^{C_r u} (history part)
// and the marginal contribution integrates this against the gamma frailty
// density. The u-free factors are pulled out of the integral; what remains is
// the same integrand family as the prediction module, evaluated in log space.
#ifndef JFM_LIKELIHOOD_HPP_
#define JFM_LIKELIHOOD_HPP_

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jfm/history.hpp"
#include "jfm/model.hpp"
#include "jfm/predict.hpp"
#include "jfm/quadrature.hpp"

namespace jfm {

struct PatientRecord {
  std::string id;
  double follow_up_days = 0.0;                 // T_i > 0
  bool death_observed = false;                 // delta_i
  std::vector<double> hospitalization_days;    // strictly increasing, in (0, T_i)
  std::map<std::string, double> covariates;
};

inline void validate(const PatientRecord& r) {
  if (!(r.follow_up_days > 0.0))
    throw std::invalid_argument("PatientRecord: follow-up must be positive");
  double prev = 0.0;
  for (double t : r.hospitalization_days) {
    if (!(t > prev))
      throw std::invalid_argument("PatientRecord: hospitalization days must be strictly increasing and positive");
    if (!(t < r.follow_up_days))
      throw std::invalid_argument("PatientRecord: hospitalization at or after the follow-up end");
    prev = t;
  }
}

namespace detail {

// Per-patient quantities that do not depend on the parameters.
struct PreparedPatient {
  double follow_up = 0.0;
  double log_follow_up = 0.0;
  bool death = false;
  double event_count = 0.0;            // J
  std::vector<double> log_gaps;        // all J+1 gaps (renewal)
  double sum_log_event_gaps = 0.0;     // gaps ending at an event (renewal intensities)
  double sum_log_event_times = 0.0;    // event times (poisson intensities)
  std::vector<double> z_death;         // aligned with the death schema
  std::vector<double> z_recurrence;    // aligned with the recurrence schema
};

inline PreparedPatient prepare_patient(const PatientRecord& r,
                                       const std::vector<std::string>& death_schema,
                                       const std::vector<std::string>& recurrence_schema) {
  validate(r);
  PreparedPatient p;
  p.follow_up = r.follow_up_days;
  p.log_follow_up = std::log(r.follow_up_days);
  p.death = r.death_observed;
  p.event_count = static_cast<double>(r.hospitalization_days.size());
  const EventHistory h(r.hospitalization_days, r.follow_up_days);
  const auto gaps = h.gap_times();
  p.log_gaps.reserve(gaps.size());
  for (double g : gaps) p.log_gaps.push_back(std::log(g));
  for (std::size_t j = 0; j + 1 < gaps.size(); ++j) p.sum_log_event_gaps += p.log_gaps[j];
  for (double t : r.hospitalization_days) p.sum_log_event_times += std::log(t);
  auto pick = [&r](const std::vector<std::string>& schema) {
    std::vector<double> z;
    z.reserve(schema.size());
    for (const auto& name : schema) {
      auto it = r.covariates.find(name);
      if (it == r.covariates.end())
        throw std::invalid_argument("PatientRecord: missing covariate '" + name + "'");
      z.push_back(it->second);
    }
    return z;
  };
  p.z_death = pick(death_schema);
  p.z_recurrence = pick(recurrence_schema);
  return p;
}

// The patient contribution splits into a u-free constant and the log of a
// joint frailty integral.
struct PatientTerms {
  double constant = 0.0;    // delta*log(C_d l0d(T)) + J log C_r + sum_j log l^r(t_j|h)
  JointIntegrand integrand;  // u^{J + delta*gamma} exp(-A u^gamma - R u)
};

inline PatientTerms patient_terms(const PreparedPatient& p, const ModelParams& params) {
  const double shape_d = params.death_baseline.shape();
  const double log_scale_d = std::log(params.death_baseline.scale());
  const double shape_r = params.recurrence_baseline.shape();
  const double log_scale_r = std::log(params.recurrence_baseline.scale());

  double lp_d = 0.0, lp_r = 0.0;
  for (std::size_t k = 0; k < p.z_death.size(); ++k) lp_d += params.death_coefs[k] * p.z_death[k];
  for (std::size_t k = 0; k < p.z_recurrence.size(); ++k)
    lp_r += params.recurrence_coefs[k] * p.z_recurrence[k];

  const double death_load = std::exp(lp_d) * params.death_baseline.cumulative_hazard(p.follow_up);

  double rec_cumhaz;
  double log_intensities;
  const double count = p.event_count;
  if (params.submodel == Submodel::renewal) {
    rec_cumhaz = 0.0;
    for (double lg : p.log_gaps) rec_cumhaz += std::exp(shape_r * (lg - log_scale_r));
    log_intensities = count * std::log(shape_r) + (shape_r - 1.0) * p.sum_log_event_gaps -
                      count * shape_r * log_scale_r;
  } else {
    rec_cumhaz = std::exp(shape_r * (p.log_follow_up - log_scale_r));
    log_intensities = count * std::log(shape_r) + (shape_r - 1.0) * p.sum_log_event_times -
                      count * shape_r * log_scale_r;
  }

  PatientTerms t;
  t.constant = count * lp_r + log_intensities;
  if (p.death)
    t.constant += lp_d + std::log(shape_d) + (shape_d - 1.0) * p.log_follow_up - shape_d * log_scale_d;

  t.integrand.power = count + (p.death ? params.gamma_link : 0.0);
  t.integrand.death_load = death_load;
  t.integrand.gamma = params.gamma_link;
  t.integrand.recurrence_load = std::exp(lp_r) * rec_cumhaz;
  return t;
}

}  // namespace detail

// Marginal log likelihood of one patient, via the certified quadrature chain.
inline double patient_log_likelihood(const PatientRecord& record, const ModelParams& params,
                                     const QuadratureSpec& spec = {}) {
  validate(params);
  const auto prepared =
      detail::prepare_patient(record, params.death_schema, params.recurrence_schema);
  const auto terms = detail::patient_terms(prepared, params);
  return terms.constant +
         log_integrate_frailty(params.frailty.variance, terms.integrand, spec);
}

// Sum of patient contributions, in cohort order. Failures are annotated with
// the patient index.
inline double cohort_log_likelihood(std::span<const PatientRecord> cohort,
                                    const ModelParams& params, const QuadratureSpec& spec = {}) {
  if (cohort.empty()) throw std::invalid_argument("cohort_log_likelihood: empty cohort");
  double total = 0.0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    try {
      total += patient_log_likelihood(cohort[i], params, spec);
    } catch (const std::exception& e) {
      throw std::runtime_error("cohort_log_likelihood: patient " + std::to_string(i) +
                               (cohort[i].id.empty() ? "" : " (" + cohort[i].id + ")") + ": " +
                               e.what());
    }
  }
  return total;
}

namespace detail {

// Repeated-evaluation engine for fitting: covariates, gaps and logs are
// prepared once; each call builds one quadrature rule for the current theta
// and streams a max-shifted log-sum-exp per patient. Uncertified by design --
// reported likelihood values come from the public functions above.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(std::span<const PatientRecord> cohort,
                      const std::vector<std::string>& death_schema,
                      const std::vector<std::string>& recurrence_schema, int node_count)
      : node_count_(node_count) {
    patients_.reserve(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      try {
        patients_.push_back(prepare_patient(cohort[i], death_schema, recurrence_schema));
      } catch (const std::exception& e) {
        throw std::runtime_error("patient " + std::to_string(i) + ": " + e.what());
      }
    }
  }

  std::size_t size() const { return patients_.size(); }

  double operator()(const ModelParams& params) const {
    const auto rule = gamma_rule(params.frailty.variance, node_count_);
    const std::size_t n = rule->nodes.size();
    // node powers u^gamma are shared across patients
    log_nodes_.resize(n);
    pow_nodes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      log_nodes_[i] = std::log(rule->nodes[i]);
      pow_nodes_[i] = std::pow(rule->nodes[i], params.gamma_link);
    }
    double total = 0.0;
    for (const auto& p : patients_) {
      const auto terms = patient_terms(p, params);
      double m = -std::numeric_limits<double>::infinity();
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double l = terms.integrand.power * log_nodes_[i] -
                         terms.integrand.death_load * pow_nodes_[i] -
                         terms.integrand.recurrence_load * rule->nodes[i];
        if (l > m) {
          s = s * std::exp(m - l) + rule->weights[i];
          m = l;
        } else {
          s += rule->weights[i] * std::exp(l - m);
        }
      }
      total += terms.constant + m + std::log(s);
    }
    return total;
  }

 private:
  std::vector<PreparedPatient> patients_;
  int node_count_;
  mutable std::vector<double> log_nodes_, pow_nodes_;
};

}  // namespace detail

}  // namespace jfm

#endif  // JFM_LIKELIHOOD_HPP_
