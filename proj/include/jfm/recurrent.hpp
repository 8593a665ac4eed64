// Recurrent-event submodels: hazard, cumulative hazard, and survival of the
// hospitalization process given its history.
//
// Renewal (gap time): the hazard at t is the baseline hazard evaluated at the
// time since the last event, so the cumulative hazard decomposes into J+1
// per-gap integrals. Poisson (calendar time): the hazard ignores the history.
#ifndef JFM_RECURRENT_HPP_
#define JFM_RECURRENT_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jfm/history.hpp"
#include "jfm/weibull.hpp"

namespace jfm {

enum class Submodel { poisson, renewal };

inline const char* to_string(Submodel kind) {
  return kind == Submodel::poisson ? "poisson" : "renewal";
}

template <BaselineHazard B>
double hazard_given_history(Submodel kind, const B& baseline, const EventHistory& h, double t) {
  if (!(t >= 0.0) || t > h.horizon())
    throw std::out_of_range("hazard_given_history: t outside [0, horizon]");
  if (kind == Submodel::poisson) return baseline.hazard(t);
  // Right-continuous at events: the gap resets to 0 at each hospitalization,
  // so for baselines unbounded at 0 this raises a domain error there.
  const auto& times = h.times();
  double last = h.last_event_before(t);
  if (std::binary_search(times.begin(), times.end(), t)) last = t;
  return baseline.hazard(t - last);
}

// Integral of the history-conditional hazard over [0, horizon]. Renewal gaps
// are integrated in closed form via the baseline cumulative hazard, which
// stays finite even where the hazard has an integrable singularity at gap 0.
template <BaselineHazard B>
double cumulative_hazard_given_history(Submodel kind, const B& baseline, const EventHistory& h) {
  if (kind == Submodel::poisson) return baseline.cumulative_hazard(h.horizon());
  double total = 0.0;
  for (double gap : h.gap_times()) total += baseline.cumulative_hazard(gap);
  return total;
}

// Renewal: product of baseline survivals over the J+1 gaps; Poisson: baseline
// survival at the horizon.
template <BaselineHazard B>
double survival_given_history(Submodel kind, const B& baseline, const EventHistory& h) {
  if (kind == Submodel::poisson) return baseline.survival(h.horizon());
  double prod = 1.0;
  for (double gap : h.gap_times()) prod *= baseline.survival(gap);
  return prod;
}

}  // namespace jfm

#endif  // JFM_RECURRENT_HPP_
