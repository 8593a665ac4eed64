// Maximum-likelihood fitting of the joint model.
//
// The free-parameter vector is the unconstrained reparameterization
//   [beta_d..., beta_r..., gamma, log theta, log shape_d, log scale_d,
//    log shape_r, log scale_r];
// a derivative-free simplex stage is followed by BFGS polishing on central
// finite-difference gradients. Both stages run on the smooth fixed-rule
// likelihood path (a fixed quadrature rule keeps the objective's error
// surface differentiable); the reported log likelihood comes from the
// certified path, and the returned estimate is the certified-best of
// {initial point, simplex result, polished result}, so the fitted log
// likelihood can never fall below the initial one.
//
// The covariance is the inverse numeric Hessian in the reparameterized
// space, mapped to the natural scale by the delta method; 95% intervals are
// symmetric on the natural scale.
#ifndef JFM_FIT_HPP_
#define JFM_FIT_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jfm/likelihood.hpp"
#include "jfm/model.hpp"
#include "jfm/quadrature.hpp"

namespace jfm {

struct FitOptions {
  QuadratureSpec quadrature;         // certified evaluations (reported loglik)
  int simplex_node_count = 64;       // fixed-rule nodes, simplex stage
  int polish_node_count = 256;       // fixed-rule nodes, BFGS/Hessian stage
  int max_simplex_iterations = 4000;
  int max_polish_iterations = 200;
  double gradient_tolerance = 1e-4;  // max-norm in the reparameterized space
  bool compute_covariance = true;
};

class CovarianceError : public std::runtime_error {
 public:
  CovarianceError(const std::string& what, double min_eigenvalue, double max_eigenvalue)
      : std::runtime_error(what + " (information matrix eigenvalue range [" +
                           std::to_string(min_eigenvalue) + ", " + std::to_string(max_eigenvalue) +
                           "])"),
        min_eigenvalue_(min_eigenvalue),
        max_eigenvalue_(max_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }
  double max_eigenvalue() const { return max_eigenvalue_; }

 private:
  double min_eigenvalue_, max_eigenvalue_;
};

struct FitResult {
  ModelParams estimates;
  std::vector<std::string> parameter_names;  // natural-scale order
  Eigen::MatrixXd covariance;                // natural scale
  std::vector<double> standard_errors;
  std::vector<double> ci_lower, ci_upper;    // estimate -/+ 1.96 se
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct ParamPacking {
  Submodel submodel;
  std::vector<std::string> death_schema, recurrence_schema;

  std::size_t dimension() const { return death_schema.size() + recurrence_schema.size() + 6; }

  std::vector<double> pack(const ModelParams& p) const {
    std::vector<double> x;
    x.reserve(dimension());
    x.insert(x.end(), p.death_coefs.begin(), p.death_coefs.end());
    x.insert(x.end(), p.recurrence_coefs.begin(), p.recurrence_coefs.end());
    x.push_back(p.gamma_link);
    x.push_back(std::log(p.frailty.variance));
    x.push_back(std::log(p.death_baseline.shape()));
    x.push_back(std::log(p.death_baseline.scale()));
    x.push_back(std::log(p.recurrence_baseline.shape()));
    x.push_back(std::log(p.recurrence_baseline.scale()));
    return x;
  }

  ModelParams unpack(std::span<const double> x) const {
    ModelParams p;
    p.submodel = submodel;
    p.death_schema = death_schema;
    p.recurrence_schema = recurrence_schema;
    std::size_t k = 0;
    p.death_coefs.assign(x.begin(), x.begin() + death_schema.size());
    k += death_schema.size();
    p.recurrence_coefs.assign(x.begin() + k, x.begin() + k + recurrence_schema.size());
    k += recurrence_schema.size();
    p.gamma_link = x[k++];
    p.frailty.variance = std::exp(x[k++]);
    const double shape_d = std::exp(x[k++]), scale_d = std::exp(x[k++]);
    const double shape_r = std::exp(x[k++]), scale_r = std::exp(x[k++]);
    p.death_baseline = WeibullHazard(shape_d, scale_d);
    p.recurrence_baseline = WeibullHazard(shape_r, scale_r);
    return p;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& s : death_schema) n.push_back("death:" + s);
    for (const auto& s : recurrence_schema) n.push_back("recurrence:" + s);
    n.insert(n.end(), {"gamma", "theta", "death_shape", "death_scale", "recurrence_shape",
                       "recurrence_scale"});
    return n;
  }

  // d(natural)/d(reparameterized), diagonal
  std::vector<double> jacobian(std::span<const double> x) const {
    std::vector<double> j(dimension(), 1.0);
    for (std::size_t k = death_schema.size() + recurrence_schema.size() + 1; k < dimension(); ++k)
      j[k] = std::exp(x[k]);
    return j;
  }
};

inline constexpr double kBadObjective = 1e100;

// Nelder-Mead on f (minimized); returns best point, f value, and iterations.
inline int nelder_mead(const std::function<double(std::span<const double>)>& f,
                       std::vector<double>& x, double& fx, int max_iterations) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> simplex(n + 1, x);
  std::vector<double> fvals(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += 0.25;
  for (std::size_t i = 0; i <= n; ++i) fvals[i] = f(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
    const std::size_t best = order[0], worst = order[n], second_worst = order[n - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      spread = std::max(spread, std::abs(simplex[worst][i] - simplex[best][i]));
    if (spread < 1e-9 && std::abs(fvals[worst] - fvals[best]) <
                             1e-10 * (1.0 + std::abs(fvals[best])))
      break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
    }
    for (std::size_t k = 0; k < n; ++k) centroid[k] /= static_cast<double>(n);

    auto blend = [&](std::vector<double>& out, double coef) {
      for (std::size_t k = 0; k < n; ++k)
        out[k] = centroid[k] + coef * (simplex[worst][k] - centroid[k]);
    };
    blend(trial, -1.0);  // reflection
    const double f_reflect = f(trial);
    if (f_reflect < fvals[best]) {
      blend(trial2, -2.0);  // expansion
      const double f_expand = f(trial2);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        fvals[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        fvals[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < fvals[second_worst]) {
      simplex[worst] = trial;
      fvals[worst] = f_reflect;
      continue;
    }
    blend(trial2, f_reflect < fvals[worst] ? -0.5 : 0.5);  // contraction
    const double f_contract = f(trial2);
    if (f_contract < std::min(f_reflect, fvals[worst])) {
      simplex[worst] = trial2;
      fvals[worst] = f_contract;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {  // shrink toward the best vertex
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k)
        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      fvals[i] = f(simplex[i]);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fvals[i] < fvals[best]) best = i;
  x = simplex[best];
  fx = fvals[best];
  return iter;
}

inline std::vector<double> central_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::span<const double> x, double rel_step) {
  std::vector<double> g(x.size());
  std::vector<double> p(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double dn = f(p);
    p[i] = x[i];
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd central_hessian(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double rel_step) {
  const std::size_t n = x.size();
  Eigen::MatrixXd hess(n, n);
  std::vector<double> p(x.begin(), x.end());
  const double f0 = f(p);
  std::vector<double> hsteps(n);
  for (std::size_t i = 0; i < n; ++i) hsteps[i] = rel_step * std::max(1.0, std::abs(x[i]));

  for (std::size_t i = 0; i < n; ++i) {
    p[i] = x[i] + hsteps[i];
    const double up = f(p);
    p[i] = x[i] - hsteps[i];
    const double dn = f(p);
    p[i] = x[i];
    hess(i, i) = (up - 2.0 * f0 + dn) / (hsteps[i] * hsteps[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      p[i] = x[i] + hsteps[i];
      p[j] = x[j] + hsteps[j];
      const double pp = f(p);
      p[j] = x[j] - hsteps[j];
      const double pm = f(p);
      p[i] = x[i] - hsteps[i];
      const double mm = f(p);
      p[j] = x[j] + hsteps[j];
      const double mp = f(p);
      p[i] = x[i];
      p[j] = x[j];
      const double v = (pp - pm - mp + mm) / (4.0 * hsteps[i] * hsteps[j]);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

struct BfgsOutcome {
  int iterations = 0;
  double gradient_max_norm = std::numeric_limits<double>::infinity();
  bool reached_tolerance = false;
};

inline BfgsOutcome bfgs(const std::function<double(std::span<const double>)>& f,
                        std::vector<double>& x, double& fx, int max_iterations,
                        double gradient_tolerance) {
  const std::size_t n = x.size();
  Eigen::MatrixXd inv_hess = Eigen::MatrixXd::Identity(n, n);
  auto grad = [&](std::span<const double> at) { return central_gradient(f, at, 1e-5); };
  std::vector<double> g = grad(x);
  BfgsOutcome out;
  fx = f(x);

  for (int iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter;
    double gnorm = 0.0;
    for (double v : g) gnorm = std::max(gnorm, std::abs(v));
    out.gradient_max_norm = gnorm;
    if (gnorm <= gradient_tolerance) {
      out.reached_tolerance = true;
      return out;
    }
    Eigen::Map<const Eigen::VectorXd> gv(g.data(), n);
    Eigen::VectorXd dir = -inv_hess * gv;
    if (dir.dot(gv) >= 0.0) {  // not a descent direction; reset
      inv_hess.setIdentity();
      dir = -gv;
    }
    double step = 1.0;
    std::vector<double> xn(n);
    double fn = kBadObjective;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t k = 0; k < n; ++k) xn[k] = x[k] + step * dir[k];
      fn = f(xn);
      if (fn <= fx + 1e-4 * step * dir.dot(gv)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return out;

    std::vector<double> gn = grad(xn);
    Eigen::VectorXd s(n), yv(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = xn[k] - x[k];
      yv[k] = gn[k] - g[k];
    }
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      inv_hess = (eye - rho * s * yv.transpose()) * inv_hess *
                     (eye - rho * yv * s.transpose()) +
                 rho * s * s.transpose();
    }
    x = xn;
    fx = fn;
    g = std::move(gn);
  }
  double gnorm = 0.0;
  for (double v : g) gnorm = std::max(gnorm, std::abs(v));
  out.gradient_max_norm = gnorm;
  out.reached_tolerance = gnorm <= gradient_tolerance;
  out.iterations = max_iterations;
  return out;
}

}  // namespace detail

// Default starting point: unit shapes, scales at the mean observed follow-up,
// gamma 0.5, theta 1, all coefficients 0.
inline ModelParams default_init(std::span<const PatientRecord> cohort, Submodel submodel,
                                std::vector<std::string> death_schema,
                                std::vector<std::string> recurrence_schema) {
  if (cohort.empty()) throw std::invalid_argument("default_init: empty cohort");
  double mean_t = 0.0;
  for (const auto& r : cohort) mean_t += r.follow_up_days;
  mean_t /= static_cast<double>(cohort.size());
  ModelParams p;
  p.submodel = submodel;
  p.gamma_link = 0.5;
  p.frailty.variance = 1.0;
  p.death_baseline = WeibullHazard(1.0, mean_t);
  p.recurrence_baseline = WeibullHazard(1.0, mean_t);
  p.death_schema = std::move(death_schema);
  p.recurrence_schema = std::move(recurrence_schema);
  p.death_coefs.assign(p.death_schema.size(), 0.0);
  p.recurrence_coefs.assign(p.recurrence_schema.size(), 0.0);
  return p;
}

inline FitResult fit(std::span<const PatientRecord> cohort, const ModelParams& init,
                     const FitOptions& options = {}) {
  validate(init);
  validate(options.quadrature);
  if (cohort.empty()) throw std::invalid_argument("fit: empty cohort");

  const detail::ParamPacking packing{init.submodel, init.death_schema, init.recurrence_schema};
  const detail::LikelihoodEvaluator coarse(cohort, init.death_schema, init.recurrence_schema,
                                           options.simplex_node_count);
  const detail::LikelihoodEvaluator fine(cohort, init.death_schema, init.recurrence_schema,
                                         options.polish_node_count);
  auto objective = [&](const detail::LikelihoodEvaluator& ev) {
    return [&ev, &packing](std::span<const double> x) {
      for (double v : x)
        if (!std::isfinite(v) || std::abs(v) > 50.0) return detail::kBadObjective;
      const double ll = ev(packing.unpack(x));
      return std::isfinite(ll) ? -ll : detail::kBadObjective;
    };
  };
  const std::function<double(std::span<const double>)> f_coarse = objective(coarse);
  const std::function<double(std::span<const double>)> f_fine = objective(fine);

  const std::vector<double> x_init = packing.pack(init);
  std::vector<double> x = x_init;
  double fx = f_coarse(x);
  FitResult result;
  result.iterations = detail::nelder_mead(f_coarse, x, fx, options.max_simplex_iterations);
  const std::vector<double> x_simplex = x;

  double f_fine_x = f_fine(x);
  const auto polish = detail::bfgs(f_fine, x, f_fine_x, options.max_polish_iterations,
                                   options.gradient_tolerance);
  result.iterations += polish.iterations;

  // certified-best of the three candidates; guarantees no decrease from init
  auto certified = [&](std::span<const double> at) {
    return cohort_log_likelihood(cohort, packing.unpack(at), options.quadrature);
  };
  std::vector<double> best = x_init;
  double best_ll = certified(x_init);
  for (const auto& candidate : {x_simplex, x}) {
    const double ll = certified(candidate);
    if (ll > best_ll) {
      best_ll = ll;
      best = candidate;
    }
  }
  result.estimates = packing.unpack(best);
  result.parameter_names = packing.names();
  result.loglik = best_ll;
  {
    const auto g = detail::central_gradient(f_fine, best, 1e-5);
    double gnorm = 0.0;
    for (double v : g) gnorm = std::max(gnorm, std::abs(v));
    result.gradient_max_norm = gnorm;
    result.converged = gnorm <= options.gradient_tolerance;
  }

  if (options.compute_covariance) {
    const std::size_t n = packing.dimension();
    // information = -Hessian of the log likelihood in the free parameters
    Eigen::MatrixXd info = detail::central_hessian(f_fine, best, 1e-4);
    info = 0.5 * (info + info.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    const double min_ev = es.eigenvalues().minCoeff();
    const double max_ev = es.eigenvalues().maxCoeff();
    if (!(min_ev > 0.0) || !(max_ev / min_ev < 1e12))
      throw CovarianceError("fit: information matrix is singular or ill-conditioned", min_ev,
                            max_ev);
    Eigen::MatrixXd cov_free = es.eigenvectors() *
                               es.eigenvalues().cwiseInverse().asDiagonal() *
                               es.eigenvectors().transpose();
    const auto jac = packing.jacobian(best);
    result.covariance.resize(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double v = jac[i] * cov_free(i, j) * jac[j];
        result.covariance(i, j) = v;
        result.covariance(j, i) = v;
      }
    }
    const std::vector<double> natural = [&] {
      std::vector<double> v(best.begin(), best.end());
      for (std::size_t k = packing.death_schema.size() + packing.recurrence_schema.size() + 1;
           k < n; ++k)
        v[k] = std::exp(v[k]);
      return v;
    }();
    result.standard_errors.resize(n);
    result.ci_lower.resize(n);
    result.ci_upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      result.standard_errors[i] = std::sqrt(std::max(0.0, result.covariance(i, i)));
      result.ci_lower[i] = natural[i] - 1.96 * result.standard_errors[i];
      result.ci_upper[i] = natural[i] + 1.96 * result.standard_errors[i];
    }
  }
  return result;
}

}  // namespace jfm

#endif  // JFM_FIT_HPP_
