// Expectations over the gamma frailty: E_g[f(u)] = int_0^inf f(u) g(u) du.
//
// The production scheme is a gamma-weighted Gaussian rule (generalized
// Gauss-Laguerre after the substitution u = theta * x, built by Golub-Welsch
// from the Jacobi matrix), so the weight absorbs g exactly and only f is
// approximated. A fixed rule alone is not certifiably accurate for the
// u^gamma exponents that appear in the prediction integrands, so the result
// at node_count nodes is verified against 2*node_count nodes and, on
// disagreement, against adaptive Gauss-Kronrod subdivision of
// [0, u_max(theta)].
//
// All prediction/likelihood integrands go through the log-space variant;
// u^J terms enter as J*log(u).
#ifndef JFM_QUADRATURE_HPP_
#define JFM_QUADRATURE_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jfm/frailty.hpp"
#include "jfm/numeric.hpp"

namespace jfm {

struct QuadratureSpec {
  int node_count = 64;  // >= 8
  enum class Scheme { gauss, adaptive };
  Scheme scheme = Scheme::gauss;
  double rel_tol = 1e-9;  // in (0, 1e-3]
};

inline void validate(const QuadratureSpec& spec) {
  if (spec.node_count < 8)
    throw std::invalid_argument("QuadratureSpec: node_count must be >= 8");
  if (!(spec.rel_tol > 0.0) || spec.rel_tol > 1e-3)
    throw std::invalid_argument("QuadratureSpec: rel_tol must be in (0, 1e-3]");
}

// Thrown when the escalation chain (n nodes -> 2n nodes -> adaptive) fails to
// produce two agreeing estimates; carries both.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double estimate_a, double estimate_b)
      : std::runtime_error(what + " (estimates " + std::to_string(estimate_a) + " vs " +
                           std::to_string(estimate_b) + ")"),
        estimate_a_(estimate_a),
        estimate_b_(estimate_b) {}
  double estimate_a() const { return estimate_a_; }
  double estimate_b() const { return estimate_b_; }

 private:
  double estimate_a_, estimate_b_;
};

// Nodes u_i and probability weights p_i (sum 1) with
//   int f(u) g(u) du ~= sum_i p_i f(u_i),
// exact for polynomials in u up to degree 2n-1.
struct GammaQuadRule {
  double theta = 1.0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline GammaQuadRule build_gamma_rule(double theta, int n) {
  if (!(theta > 0.0)) throw std::invalid_argument("gamma rule: theta must be positive");
  const double alpha = 1.0 / theta - 1.0;  // Laguerre parameter, > -1
  Eigen::VectorXd diag(n), sub(n - 1);
  for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(k * (k + alpha));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gamma rule: tridiagonal eigensolve failed");
  GammaQuadRule rule;
  rule.theta = theta;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = theta * es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  return rule;
}

}  // namespace detail

// Cached rule lookup; tables are immutable after construction.
inline std::shared_ptr<const GammaQuadRule> gamma_rule(double theta, int n) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<const GammaQuadRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(theta, n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (cache.size() > 512) cache.clear();
  auto rule = std::make_shared<const GammaQuadRule>(detail::build_gamma_rule(theta, n));
  cache.emplace(key, rule);
  return rule;
}

namespace detail {

// log sum_i p_i exp(log_f(u_i)) for one rule.
template <typename LogF>
double log_rule_sum(const GammaQuadRule& rule, LogF&& log_f) {
  const std::size_t n = rule.nodes.size();
  std::vector<double> lv(n);
  for (std::size_t i = 0; i < n; ++i) lv[i] = log_f(rule.nodes[i]);
  return log_weighted_sum_exp(lv, rule.weights);
}

inline double rel_gap(double log_a, double log_b) {
  if (log_a == log_b) return 0.0;  // covers -inf == -inf
  return std::abs(std::expm1(log_a - log_b));
}

// Gauss-Kronrod 7-15 pair on [a, b] for a linear-space integrand.
template <typename F>
void gauss_kronrod_15(F&& f, double a, double b, double* integral, double* error) {
  static const double xgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                                0.741531185599394, 0.586087235467691, 0.405845151377397,
                                0.207784955007898, 0.0};
  static const double wgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                                0.140653259715525, 0.169004726639267, 0.190350578064785,
                                0.204432940075298, 0.209482141084728};
  static const double wg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                               0.417959183673469};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double resk = 0.0, resg = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double fv = f(c - h * xgk[i]) + f(c + h * xgk[i]);
    resk += wgk[i] * fv;
    if (i % 2 == 1) resg += wg[i / 2] * fv;
  }
  const double f0 = f(c);
  resk += wgk[7] * f0;
  resg += wg[3] * f0;
  *integral = resk * h;
  *error = std::abs(resk - resg) * h;
}

struct Segment {
  double a, b, integral, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

// Adaptive bisection of [0, hi]; returns the integral and whether the error
// target was met.
template <typename F>
std::pair<double, bool> adaptive_integrate(F&& f, double hi, double rel_tol) {
  std::vector<Segment> segs;
  auto push = [&](double a, double b) {
    Segment s{a, b, 0.0, 0.0};
    gauss_kronrod_15(f, a, b, &s.integral, &s.error);
    segs.push_back(s);
    std::push_heap(segs.begin(), segs.end());
  };
  // geometric splits near 0 (integrable u^{1/theta-1} singularity when
  // theta > 1), uniform eighths above hi/8
  double lo = hi * 0x1p-16;
  push(0.0, lo);
  while (lo < hi / 8.0) {
    const double next = std::min(lo * 4.0, hi / 8.0);
    push(lo, next);
    lo = next;
  }
  for (int k = 1; k < 8; ++k) push(hi * k / 8.0, hi * (k + 1) / 8.0);

  for (int iter = 0; iter < 4000; ++iter) {
    double total = 0.0, err = 0.0;
    for (const auto& s : segs) {
      total += s.integral;
      err += s.error;
    }
    if (err <= rel_tol * std::abs(total) || err < std::numeric_limits<double>::min())
      return {total, true};
    std::pop_heap(segs.begin(), segs.end());
    Segment worst = segs.back();
    segs.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {  // interval exhausted
      segs.push_back(worst);
      std::push_heap(segs.begin(), segs.end());
      double total2 = 0.0;
      for (const auto& s : segs) total2 += s.integral;
      return {total2, false};
    }
    push(worst.a, mid);
    push(mid, worst.b);
  }
  double total = 0.0, err = 0.0;
  for (const auto& s : segs) {
    total += s.integral;
    err += s.error;
  }
  return {total, err <= 10.0 * rel_tol * std::abs(total)};
}

// Adaptive evaluation of log int exp(log_f(u)) g(u) du. Probes the integrand
// at the reference rule's nodes to locate its peak and an upper cutoff, then
// integrates the max-shifted linear integrand.
template <typename LogF>
std::pair<double, bool> adaptive_log_integral(double theta, LogF&& log_f, double rel_tol,
                                              const GammaQuadRule& probe_rule) {
  auto log_integrand = [&](double u) {
    return u > 0.0 ? log_f(u) + log_frailty_density(theta, u)
                   : -std::numeric_limits<double>::infinity();
  };
  double peak = -std::numeric_limits<double>::infinity();
  double u_hi = 1.0 + 10.0 * std::sqrt(theta);
  for (double u : probe_rule.nodes) {
    peak = std::max(peak, log_integrand(u));
    u_hi = std::max(u_hi, u);
  }
  if (!std::isfinite(peak)) return {-std::numeric_limits<double>::infinity(), true};
  // extend the cutoff until the integrand is decreasing and 1e-12-negligible
  // relative to its peak (e^-55 < 1e-23, leaving margin for interval length)
  int guard = 0;
  while (guard++ < 200) {
    const double l1 = log_integrand(u_hi), l2 = log_integrand(0.99 * u_hi);
    if (l1 <= l2 && l1 < peak - 55.0) break;
    u_hi *= 1.6;
  }
  auto shifted = [&](double u) {
    const double l = log_integrand(u);
    return std::isfinite(l) ? std::exp(l - peak) : 0.0;
  };
  auto [integral, ok] = adaptive_integrate(shifted, u_hi, rel_tol);
  if (!(integral > 0.0)) return {-std::numeric_limits<double>::infinity(), ok};
  return {peak + std::log(integral), ok};
}

}  // namespace detail

// log int_0^inf exp(log_f(u)) g(u) du, max-shifted; deterministic for a fixed
// spec. Throws AccuracyError when the escalation chain does not converge.
template <typename LogF>
double log_integrate_frailty(double theta, LogF&& log_f, const QuadratureSpec& spec = {}) {
  validate(spec);
  if (!(theta > 0.0)) throw std::invalid_argument("log_integrate_frailty: theta must be positive");
  // The returned estimate must be rel_tol-accurate, not merely rel_tol-close
  // to the previous stage, so the internal comparisons run ahead of rel_tol.
  const double trigger = 0.25 * spec.rel_tol;
  const double adaptive_target = std::max(spec.rel_tol / 64.0, 5e-14);
  const auto base = gamma_rule(theta, spec.node_count);
  if (spec.scheme == QuadratureSpec::Scheme::gauss) {
    const double l1 = detail::log_rule_sum(*base, log_f);
    const auto fine = gamma_rule(theta, 2 * spec.node_count);
    const double l2 = detail::log_rule_sum(*fine, log_f);
    if (detail::rel_gap(l1, l2) <= trigger) return l2;
    auto [la, ok] = detail::adaptive_log_integral(theta, log_f, adaptive_target, *fine);
    if (ok || detail::rel_gap(l2, la) <= spec.rel_tol) return la;
    throw AccuracyError("log_integrate_frailty: fixed-node and adaptive estimates did not converge",
                        l2, la);
  }
  auto [la, ok] = detail::adaptive_log_integral(theta, log_f, adaptive_target, *base);
  if (!ok) {
    const double l1 = detail::log_rule_sum(*base, log_f);
    if (!(detail::rel_gap(l1, la) <= spec.rel_tol))
      throw AccuracyError("log_integrate_frailty: adaptive integration did not converge", l1, la);
  }
  return la;
}

// int_0^inf f(u) g(u) du for nonnegative f.
template <typename F>
double integrate_frailty(double theta, F&& f, const QuadratureSpec& spec = {}) {
  return std::exp(log_integrate_frailty(
      theta, [&](double u) { return std::log(f(u)); }, spec));
}

}  // namespace jfm

#endif  // JFM_QUADRATURE_HPP_
