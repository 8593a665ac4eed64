// Realized hospitalization history h(T): the number of events before the
// horizon T and their strictly increasing times 0 < t_1 < ... < t_J < T.
#ifndef JFM_HISTORY_HPP_
#define JFM_HISTORY_HPP_

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace jfm {

class EventHistory {
 public:
  // Horizon-only history with no events.
  explicit EventHistory(double horizon) : EventHistory({}, horizon) {}

  EventHistory(std::vector<double> times, double horizon)
      : times_(std::move(times)), horizon_(horizon) {
    if (!(horizon >= 0.0))
      throw std::invalid_argument("EventHistory: horizon must be nonnegative");
    double prev = 0.0;
    for (std::size_t j = 0; j < times_.size(); ++j) {
      if (!(times_[j] > prev))
        throw std::invalid_argument("EventHistory: event times must be strictly increasing and positive (index " +
                                    std::to_string(j) + ")");
      if (!(times_[j] < horizon_))
        throw std::invalid_argument("EventHistory: event time " + std::to_string(times_[j]) +
                                    " is not strictly before the horizon " + std::to_string(horizon_));
      prev = times_[j];
    }
  }

  const std::vector<double>& times() const { return times_; }
  double horizon() const { return horizon_; }
  std::size_t count() const { return times_.size(); }

  // J(t) = #{j : t_j < t}, strict.
  std::size_t count_before(double t) const {
    check_in_range(t);
    return static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
  }

  // Time of the last event strictly before t; 0 if none.
  double last_event_before(double t) const {
    std::size_t j = count_before(t);
    return j == 0 ? 0.0 : times_[j - 1];
  }

  // The truncation h(t): horizon t, events strictly before t.
  EventHistory truncated(double t) const {
    check_in_range(t);
    return EventHistory(std::vector<double>(times_.begin(), times_.begin() + count_before(t)), t);
  }

  // The J+1 inter-event gaps, with t_0 = 0 and t_{J+1} = horizon.
  std::vector<double> gap_times() const {
    std::vector<double> gaps;
    gaps.reserve(times_.size() + 1);
    double prev = 0.0;
    for (double t : times_) {
      gaps.push_back(t - prev);
      prev = t;
    }
    gaps.push_back(horizon_ - prev);
    return gaps;
  }

 private:
  void check_in_range(double t) const {
    if (!(t >= 0.0) || t > horizon_)
      throw std::out_of_range("EventHistory: time " + std::to_string(t) + " outside [0, " +
                              std::to_string(horizon_) + "]");
  }

  std::vector<double> times_;
  double horizon_;
};

inline EventHistory history_at(const EventHistory& h, double t) { return h.truncated(t); }

}  // namespace jfm

#endif  // JFM_HISTORY_HPP_
