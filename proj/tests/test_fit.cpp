#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "jfm/fit.hpp"
#include "jfm/simulate.hpp"
#include "jfm/wald.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using jfm::CovariateGenerator;
using jfm::FitOptions;
using jfm::FitResult;
using jfm::ModelParams;
using jfm::SimulationConfig;
using jfm::Submodel;
using jfm::WeibullHazard;

namespace {

SimulationConfig generator_config(int n, std::uint64_t seed) {
  SimulationConfig config;
  config.n_patients = n;
  config.seed = seed;
  config.censoring_days = 5.0 * 365.0;
  ModelParams& p = config.true_params;
  p.submodel = Submodel::renewal;
  p.gamma_link = 0.7;
  p.frailty.variance = 1.3;
  p.death_baseline = WeibullHazard(1.7, 3000.0);
  p.recurrence_baseline = WeibullHazard(0.85, 1500.0);
  p.death_schema = {"z1", "z2"};
  p.recurrence_schema = {"z1", "z2"};
  p.death_coefs = {0.5, -0.3};
  p.recurrence_coefs = {0.3, 0.4};
  config.covariates = {{"z1", CovariateGenerator::bernoulli(0.5)},
                       {"z2", CovariateGenerator::normal(0.0, 1.0)}};
  return config;
}

std::vector<double> natural_values(const ModelParams& p) {
  std::vector<double> v;
  v.insert(v.end(), p.death_coefs.begin(), p.death_coefs.end());
  v.insert(v.end(), p.recurrence_coefs.begin(), p.recurrence_coefs.end());
  v.push_back(p.gamma_link);
  v.push_back(p.frailty.variance);
  v.push_back(p.death_baseline.shape());
  v.push_back(p.death_baseline.scale());
  v.push_back(p.recurrence_baseline.shape());
  v.push_back(p.recurrence_baseline.scale());
  return v;
}

}  // namespace

TEST_CASE("fit recovers the generator", "[fit][slow]") {
  const SimulationConfig config = generator_config(500, 42);
  const auto cohort = jfm::simulate_cohort(config);
  const ModelParams init = jfm::default_init(cohort, Submodel::renewal,
                                             config.true_params.death_schema,
                                             config.true_params.recurrence_schema);
  const FitResult fit = jfm::fit(cohort, init);

  CAPTURE(fit.loglik, fit.iterations, fit.gradient_max_norm);
  REQUIRE(fit.converged);
  REQUIRE(fit.gradient_max_norm <= 1e-4);
  REQUIRE(fit.loglik >= jfm::cohort_log_likelihood(cohort, init));

  const auto truth = natural_values(config.true_params);
  const auto est = natural_values(fit.estimates);
  REQUIRE(truth.size() == est.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    CAPTURE(fit.parameter_names[k], est[k], truth[k], fit.standard_errors[k]);
    REQUIRE(fit.standard_errors[k] > 0.0);
    REQUIRE(std::abs(est[k] - truth[k]) <= 4.0 * fit.standard_errors[k]);
    REQUIRE_THAT(fit.ci_lower[k], WithinAbs(est[k] - 1.96 * fit.standard_errors[k], 1e-9));
    REQUIRE_THAT(fit.ci_upper[k], WithinAbs(est[k] + 1.96 * fit.standard_errors[k], 1e-9));
  }
  // covariance is symmetric with nonnegative diagonal
  for (int i = 0; i < fit.covariance.rows(); ++i) {
    REQUIRE(fit.covariance(i, i) >= 0.0);
    for (int j = 0; j < i; ++j)
      REQUIRE_THAT(fit.covariance(i, j), WithinAbs(fit.covariance(j, i), 1e-12));
  }
}

TEST_CASE("initializing at the truth cannot lower the fitted likelihood", "[fit][slow]") {
  const SimulationConfig config = generator_config(200, 77);
  const auto cohort = jfm::simulate_cohort(config);
  FitOptions options;
  options.compute_covariance = false;
  const FitResult fit = jfm::fit(cohort, config.true_params, options);
  REQUIRE(fit.loglik >= jfm::cohort_log_likelihood(cohort, config.true_params));
}

TEST_CASE("frailty-free generator still converges", "[fit][slow]") {
  SimulationConfig config = generator_config(300, 11);
  config.true_params.frailty.variance = 1e-6;
  const auto cohort = jfm::simulate_cohort(config);
  const ModelParams init = jfm::default_init(cohort, Submodel::renewal,
                                             config.true_params.death_schema,
                                             config.true_params.recurrence_schema);
  FitOptions options;
  options.compute_covariance = false;  // gamma is weakly identified here
  const FitResult fit = jfm::fit(cohort, init, options);
  CAPTURE(fit.estimates.frailty.variance, fit.gradient_max_norm);
  REQUIRE(fit.converged);
  REQUIRE(fit.estimates.frailty.variance < 0.2);
}

TEST_CASE("unidentified coefficient raises a covariance error", "[fit]") {
  SimulationConfig config = generator_config(80, 5);
  config.covariates[1] = {"z2", CovariateGenerator::uniform(0.0, 0.0)};  // constant zero
  config.true_params.death_coefs = {0.5, 0.0};
  config.true_params.recurrence_coefs = {0.3, 0.0};
  const auto cohort = jfm::simulate_cohort(config);
  const ModelParams init = jfm::default_init(cohort, Submodel::renewal,
                                             config.true_params.death_schema,
                                             config.true_params.recurrence_schema);
  FitOptions options;
  options.max_simplex_iterations = 300;  // the error comes from the Hessian stage
  options.max_polish_iterations = 10;
  REQUIRE_THROWS_AS(jfm::fit(cohort, init, options), jfm::CovarianceError);
}

TEST_CASE("raw Hessian cross-stencil is symmetric", "[fit]") {
  // evaluate the (i,j) four-point stencil in both orders on the likelihood
  const auto cohort = jfm::simulate_cohort(generator_config(50, 9));
  const ModelParams p = generator_config(50, 9).true_params;
  const jfm::detail::LikelihoodEvaluator ev(cohort, p.death_schema, p.recurrence_schema, 128);
  const jfm::detail::ParamPacking packing{p.submodel, p.death_schema, p.recurrence_schema};
  std::vector<double> x = packing.pack(p);
  const double hi = 1e-4 * std::max(1.0, std::abs(x[4])), hj = 1e-4 * std::max(1.0, std::abs(x[5]));
  auto f = [&](double di, double dj) {
    auto y = x;
    y[4] += di;
    y[5] += dj;
    return ev(packing.unpack(y));
  };
  const double order_ij = (f(hi, hj) - f(hi, -hj) - f(-hi, hj) + f(-hi, -hj)) / (4 * hi * hj);
  const double order_ji = (f(hi, hj) - f(-hi, hj) - f(hi, -hj) + f(-hi, -hj)) / (4 * hj * hi);
  REQUIRE_THAT(order_ij, WithinRel(order_ji, 1e-6));
}

TEST_CASE("distribution-relevance Wald test", "[fit][wald]") {
  SECTION("null holds exactly when gamma is zero or shape is one") {
    Eigen::Matrix2d v;
    v << 0.04, 0.01, 0.01, 0.002;
    const auto at_gamma0 = jfm::wald_distribution_test(0.0, 0.857, v);
    REQUIRE(at_gamma0.statistic == 0.0);
    REQUIRE(at_gamma0.p_value == 1.0);
    const auto at_shape1 = jfm::wald_distribution_test(0.73, 1.0, v);
    REQUIRE(at_shape1.statistic == 0.0);
    REQUIRE(at_shape1.p_value == 1.0);
  }
  SECTION("published point estimates with a diagonal covariance") {
    // standard errors backed out of the reported 95% intervals:
    // se_gamma = (1.101 - 0.359)/3.92, se_shape = (0.925 - 0.789)/3.92
    const double se_gamma = (1.101 - 0.359) / 3.92;
    const double se_shape = (0.925 - 0.789) / 3.92;
    Eigen::Matrix2d v = Eigen::Matrix2d::Zero();
    v(0, 0) = se_gamma * se_gamma;
    v(1, 1) = se_shape * se_shape;
    const auto report = jfm::wald_distribution_test(0.730, 0.857, v);
    REQUIRE_THAT(report.r_value, WithinRel(0.730 * (0.857 - 1.0), 1e-12));
    REQUIRE_THAT(report.statistic, WithinRel(7.930467867544143, 1e-10));
    REQUIRE(report.statistic > 6.0);
    REQUIRE(report.statistic < 10.0);
    REQUIRE(report.p_value < 0.05);
    REQUIRE_THAT(report.p_value, WithinRel(0.004860922622973, 1e-9));
  }
  SECTION("degenerate covariance") {
    REQUIRE_THROWS(jfm::wald_distribution_test(0.5, 1.3, Eigen::Matrix2d::Zero()));
  }
}
