// Reference parameter sets used across tests: the fitted COPD joint models
// (renewal and calendar-time hospitalization submodels) for a median
// reference patient, so both proportionality indexes are 1.
#ifndef JFM_TESTS_REFERENCE_PARAMS_HPP_
#define JFM_TESTS_REFERENCE_PARAMS_HPP_

#include "jfm/model.hpp"

namespace jfm_tests {

inline jfm::ModelParams renewal_fit_params() {
  jfm::ModelParams p;
  p.submodel = jfm::Submodel::renewal;
  p.gamma_link = 0.730;
  p.frailty.variance = 1.268;
  p.death_baseline = jfm::WeibullHazard(1.723, 4487.937);
  p.recurrence_baseline = jfm::WeibullHazard(0.857, 3520.435);
  return p;
}

inline jfm::ModelParams poisson_fit_params() {
  jfm::ModelParams p;
  p.submodel = jfm::Submodel::poisson;
  p.gamma_link = 0.715;
  p.frailty.variance = 1.567;
  p.death_baseline = jfm::WeibullHazard(1.748, 4313.069);
  p.recurrence_baseline = jfm::WeibullHazard(1.142, 2651.037);
  return p;
}

}  // namespace jfm_tests

#endif  // JFM_TESTS_REFERENCE_PARAMS_HPP_
