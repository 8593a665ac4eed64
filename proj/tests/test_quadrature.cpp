#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "jfm/frailty.hpp"
#include "jfm/quadrature.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using jfm::QuadratureSpec;

namespace {

// direct long-double evaluation of the gamma density, independent of the
// library's log-space route
long double direct_density(long double theta, long double u) {
  const long double a = 1.0L / theta;
  return powl(u, a - 1.0L) * expl(-u / theta) / (powl(theta, a) * tgammal(a));
}

}  // namespace

TEST_CASE("frailty density", "[frailty]") {
  SECTION("exponential case theta = 1") {
    REQUIRE_THAT(jfm::frailty_density(1.0, 2.0), WithinRel(std::exp(-2.0), 1e-13));
  }
  SECTION("matches direct evaluation") {
    REQUIRE_THAT(jfm::frailty_density(0.5, 1.0),
                 WithinRel(static_cast<double>(direct_density(0.5L, 1.0L)), 1e-12));
    REQUIRE_THAT(jfm::frailty_density(0.5, 1.0), WithinRel(0.5413411329464508, 1e-12));
    REQUIRE_THAT(jfm::frailty_density(1.268, 1.0),
                 WithinRel(static_cast<double>(direct_density(1.268L, 1.0L)), 1e-12));
    REQUIRE_THAT(jfm::frailty_density(1.268, 1.0), WithinRel(0.32011727435651516, 1e-12));
  }
  SECTION("domain errors") {
    REQUIRE_THROWS_AS(jfm::frailty_density(1.0, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(jfm::frailty_density(1.0, -1.0), std::domain_error);
    REQUIRE_THROWS_AS(jfm::frailty_density(-0.5, 1.0), std::invalid_argument);
  }
}

TEST_CASE("gamma-weighted rule normalization and moments", "[quadrature]") {
  for (double theta : {0.1, 0.7, 1.0, 1.5, 2.8}) {
    REQUIRE_THAT(jfm::integrate_frailty(theta, [](double) { return 1.0; }), WithinRel(1.0, 1e-12));
    REQUIRE_THAT(jfm::integrate_frailty(theta, [](double u) { return u; }), WithinRel(1.0, 1e-12));
  }
  REQUIRE_THAT(jfm::integrate_frailty(1.5, [](double u) { return u * u; }), WithinRel(2.5, 1e-12));

  // E[u^k] = prod_{i=0}^{k-1} (1 + i theta)
  for (double theta : {0.2, 1.0, 2.5}) {
    for (int k = 1; k <= 6; ++k) {
      double expected = 1.0;
      for (int i = 0; i < k; ++i) expected *= 1.0 + i * theta;
      REQUIRE_THAT(jfm::integrate_frailty(theta, [k](double u) { return std::pow(u, k); }),
                   WithinRel(expected, 1e-10));
    }
  }
}

TEST_CASE("gamma Laplace transform identity", "[quadrature]") {
  for (double theta : {0.3, 1.0, 2.0}) {
    for (double c : {0.0, 0.5, 3.0, 12.0, 50.0}) {
      const double expected = std::pow(1.0 + theta * c, -1.0 / theta);
      REQUIRE_THAT(jfm::integrate_frailty(theta, [c](double u) { return std::exp(-c * u); }),
                   WithinRel(expected, 1e-10));
    }
  }
}

TEST_CASE("log-space integration", "[quadrature]") {
  SECTION("constant") {
    REQUIRE_THAT(jfm::log_integrate_frailty(1.3, [](double) { return 0.0; }),
                 WithinAbs(0.0, 1e-12));
  }
  SECTION("high moments via logs: E[u^50] = 50! for theta = 1") {
    const double got = jfm::log_integrate_frailty(1.0, [](double u) { return 50.0 * std::log(u); });
    REQUIRE_THAT(got, WithinRel(std::lgamma(51.0), 1e-10));
  }
  SECTION("Laplace transform in log space") {
    // (1 + 2*3)^(-1/2)
    const double got = jfm::log_integrate_frailty(2.0, [](double u) { return -3.0 * u; });
    REQUIRE_THAT(got, WithinRel(-0.5 * std::log(7.0), 1e-10));
  }
  SECTION("agrees with the linear route when both are representable") {
    for (double theta : {0.4, 1.1}) {
      const double log_route =
          jfm::log_integrate_frailty(theta, [](double u) { return -0.7 * std::pow(u, 1.3); });
      const double lin_route =
          jfm::integrate_frailty(theta, [](double u) { return std::exp(-0.7 * std::pow(u, 1.3)); });
      REQUIRE_THAT(std::exp(log_route), WithinRel(lin_route, 1e-11));
    }
  }
}

TEST_CASE("fixed-node and adaptive schemes agree", "[quadrature]") {
  QuadratureSpec adaptive;
  adaptive.scheme = QuadratureSpec::Scheme::adaptive;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th_d(0.2, 2.5), g_d(-1.5, 1.5), a_d(0.01, 3.0);
  std::uniform_int_distribution<int> j_d(0, 8);
  for (int rep = 0; rep < 40; ++rep) {
    const double theta = th_d(rng), gamma = g_d(rng), load_d = a_d(rng), load_r = a_d(rng);
    const int j = j_d(rng);
    auto log_f = [=](double u) {
      return j * std::log(u) - load_d * std::pow(u, gamma) - load_r * u;
    };
    const double fixed = jfm::log_integrate_frailty(theta, log_f);
    const double adapt = jfm::log_integrate_frailty(theta, log_f, adaptive);
    REQUIRE_THAT(std::abs(std::expm1(fixed - adapt)), WithinAbs(0.0, 1e-8));
  }
}

TEST_CASE("very small frailty variance concentrates at one", "[quadrature]") {
  const double theta = 1e-6;
  REQUIRE_THAT(jfm::integrate_frailty(theta, [](double u) { return u; }), WithinRel(1.0, 1e-9));
  // E[(u-1)^2] = theta
  REQUIRE_THAT(jfm::integrate_frailty(theta, [](double u) { return (u - 1.0) * (u - 1.0); }),
               WithinRel(theta, 1e-6));
}

TEST_CASE("quadrature spec validation", "[quadrature]") {
  QuadratureSpec bad;
  bad.node_count = 4;
  REQUIRE_THROWS_AS(jfm::log_integrate_frailty(1.0, [](double) { return 0.0; }, bad),
                    std::invalid_argument);
  bad.node_count = 64;
  bad.rel_tol = 0.5;
  REQUIRE_THROWS_AS(jfm::log_integrate_frailty(1.0, [](double) { return 0.0; }, bad),
                    std::invalid_argument);
}
