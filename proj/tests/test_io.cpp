#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "jfm/io.hpp"
#include "jfm/simulate.hpp"

namespace fs = std::filesystem;
using jfm::CohortPaths;
using jfm::CovariateGenerator;
using jfm::ModelParams;
using jfm::SimulationConfig;
using jfm::Submodel;
using jfm::WeibullHazard;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / ("jfm_io_" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

SimulationConfig demo_config() {
  SimulationConfig config;
  config.n_patients = 60;
  config.seed = 99;
  config.censoring_days = 4.0 * 365.0;
  ModelParams& p = config.true_params;
  p.submodel = Submodel::renewal;
  p.gamma_link = 0.6;
  p.frailty.variance = 1.1;
  p.death_baseline = WeibullHazard(1.6, 2800.0);
  p.recurrence_baseline = WeibullHazard(0.9, 1200.0);
  p.death_schema = {"age", "female"};
  p.recurrence_schema = {"age"};
  p.death_coefs = {0.08, -0.3};
  p.recurrence_coefs = {0.04};
  config.covariates = {{"age", CovariateGenerator::normal(0.0, 7.0)},
                       {"female", CovariateGenerator::bernoulli(0.3)}};
  return config;
}

}  // namespace

TEST_CASE("cohort files round-trip exactly", "[io]") {
  TempDir dir;
  const auto cohort = jfm::simulate_cohort(demo_config());
  const CohortPaths paths{dir.file("patients.csv"), dir.file("hospitalizations.csv")};
  jfm::write_cohort(paths, cohort);
  const auto loaded = jfm::load_cohort(paths);
  REQUIRE(loaded.size() == cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    REQUIRE(loaded[i].id == cohort[i].id);
    REQUIRE(loaded[i].follow_up_days == cohort[i].follow_up_days);
    REQUIRE(loaded[i].death_observed == cohort[i].death_observed);
    REQUIRE(loaded[i].hospitalization_days == cohort[i].hospitalization_days);
    REQUIRE(loaded[i].covariates == cohort[i].covariates);
  }
}

TEST_CASE("cohort validation is row-addressed", "[io]") {
  TempDir dir;
  const CohortPaths paths{dir.file("patients.csv"), dir.file("hospitalizations.csv")};

  SECTION("single patient without hospitalizations") {
    write_file(paths.patients, "patient_id,follow_up_days,death_observed,age\np1,400,0,63\n");
    write_file(paths.hospitalizations, "patient_id,event_day\n");
    const auto cohort = jfm::load_cohort(paths);
    REQUIRE(cohort.size() == 1);
    REQUIRE(cohort[0].hospitalization_days.empty());
    REQUIRE(cohort[0].covariates.at("age") == 63.0);
  }
  SECTION("event at the follow-up end is rejected with its row") {
    write_file(paths.patients, "patient_id,follow_up_days,death_observed\np1,400,1\n");
    write_file(paths.hospitalizations, "patient_id,event_day\np1,100\np1,400\n");
    try {
      jfm::load_cohort(paths);
      FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      REQUIRE(msg.find("hospitalizations.csv:3") != std::string::npos);
      REQUIRE(msg.find("p1") != std::string::npos);
    }
  }
  SECTION("orphan hospitalization") {
    write_file(paths.patients, "patient_id,follow_up_days,death_observed\np1,400,1\n");
    write_file(paths.hospitalizations, "patient_id,event_day\nzz,100\n");
    REQUIRE_THROWS_WITH(jfm::load_cohort(paths),
                        Catch::Matchers::ContainsSubstring("unknown patient_id"));
  }
  SECTION("missing required column") {
    write_file(paths.patients, "patient_id,death_observed\np1,1\n");
    write_file(paths.hospitalizations, "patient_id,event_day\n");
    REQUIRE_THROWS_WITH(jfm::load_cohort(paths),
                        Catch::Matchers::ContainsSubstring("follow_up_days"));
  }
  SECTION("duplicate event day") {
    write_file(paths.patients, "patient_id,follow_up_days,death_observed\np1,400,1\n");
    write_file(paths.hospitalizations, "patient_id,event_day\np1,100\np1,100\n");
    REQUIRE_THROWS_WITH(jfm::load_cohort(paths),
                        Catch::Matchers::ContainsSubstring("duplicate event_day"));
  }
  SECTION("malformed number") {
    write_file(paths.patients, "patient_id,follow_up_days,death_observed\np1,4e00x,1\n");
    write_file(paths.hospitalizations, "patient_id,event_day\n");
    REQUIRE_THROWS_WITH(jfm::load_cohort(paths),
                        Catch::Matchers::ContainsSubstring("not a number"));
  }
}

TEST_CASE("parameter JSON round-trips", "[io]") {
  TempDir dir;
  ModelParams p = demo_config().true_params;
  SECTION("bare parameters") {
    jfm::write_params(dir.file("params.json"), p);
    const auto file = jfm::read_params(dir.file("params.json"));
    REQUIRE_FALSE(file.has_fit);
    REQUIRE(file.params.submodel == p.submodel);
    REQUIRE(file.params.gamma_link == p.gamma_link);
    REQUIRE(file.params.frailty.variance == p.frailty.variance);
    REQUIRE(file.params.death_baseline.shape() == p.death_baseline.shape());
    REQUIRE(file.params.death_baseline.scale() == p.death_baseline.scale());
    REQUIRE(file.params.death_schema == p.death_schema);
    REQUIRE(file.params.death_coefs == p.death_coefs);
    REQUIRE(file.params.recurrence_schema == p.recurrence_schema);
    REQUIRE(file.params.recurrence_coefs == p.recurrence_coefs);
  }
  SECTION("with a fit block") {
    jfm::FitResult fit;
    fit.estimates = p;
    fit.parameter_names = {"death:age", "death:female", "recurrence:age", "gamma",
                           "theta",     "death_shape",  "death_scale",    "recurrence_shape",
                           "recurrence_scale"};
    const std::size_t n = fit.parameter_names.size();
    fit.standard_errors.assign(n, 0.25);
    fit.ci_lower.assign(n, -1.0);
    fit.ci_upper.assign(n, 1.0);
    fit.covariance = Eigen::MatrixXd::Identity(n, n) * 0.0625;
    fit.covariance(3, 7) = fit.covariance(7, 3) = -0.001;
    fit.loglik = -1234.5678901234;
    fit.converged = true;
    fit.iterations = 321;
    jfm::write_params(dir.file("fit.json"), fit);
    const auto file = jfm::read_params(dir.file("fit.json"));
    REQUIRE(file.has_fit);
    REQUIRE(file.loglik == fit.loglik);
    REQUIRE(file.converged);
    REQUIRE(file.iterations == 321);
    REQUIRE(file.parameter_names == fit.parameter_names);
    REQUIRE(file.standard_errors == fit.standard_errors);
    REQUIRE(file.covariance == fit.covariance);
  }
  SECTION("simulation block") {
    write_file(dir.file("gen.json"), R"({
      "submodel": "poisson", "gamma": 0.5, "frailty_variance": 1.0,
      "death": {"shape": 1.5, "scale": 3000},
      "recurrence": {"shape": 1.1, "scale": 2000},
      "simulation": {
        "censoring_years": 5,
        "covariate_generators": {
          "age": {"kind": "normal", "mean": 0, "sd": 8},
          "female": {"kind": "bernoulli", "p": 0.25}
        }
      }
    })");
    const auto file = jfm::read_params(dir.file("gen.json"));
    REQUIRE(file.params.submodel == Submodel::poisson);
    REQUIRE(file.censoring_days.has_value());
    REQUIRE(*file.censoring_days == 5 * 365.0);
    REQUIRE(file.covariate_generators.size() == 2);
  }
  SECTION("bad json is reported with the path") {
    write_file(dir.file("bad.json"), "{nope");
    REQUIRE_THROWS_WITH(jfm::read_params(dir.file("bad.json")),
                        Catch::Matchers::ContainsSubstring("bad.json"));
  }
}

TEST_CASE("curve files round-trip", "[io]") {
  TempDir dir;
  const std::vector<jfm::CurvePoint> points{{730.0, 0.0}, {1095.5, 0.123456789012345}, {1825.0, 0.2}};
  const jfm::Metadata metadata{{"submodel", "renewal"}, {"history_timing", "dispersed"}};
  jfm::write_curve(dir.file("curve.csv"), metadata, points);
  const auto loaded = jfm::read_curve(dir.file("curve.csv"));
  REQUIRE(loaded.metadata == metadata);
  REQUIRE(loaded.points.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    REQUIRE(loaded.points[i].horizon_days == points[i].horizon_days);
    REQUIRE(loaded.points[i].probability == points[i].probability);
  }
}

TEST_CASE("hazard-ratio tables round-trip", "[io]") {
  TempDir dir;
  jfm::HazardRatioTable table;
  table.metadata = {{"mode", "count"}, {"window_days", "7"}};
  table.counts = {1, 2, 5};
  table.follow_up_days = {365.0, 730.0};
  table.values = {{1.9, 1.89}, {2.66, 2.64}, {4.38, 4.43}};
  jfm::write_hr_table(dir.file("hr.csv"), table);
  const auto loaded = jfm::read_hr_table(dir.file("hr.csv"));
  REQUIRE(loaded.metadata == table.metadata);
  REQUIRE(loaded.counts == table.counts);
  REQUIRE(loaded.follow_up_days == table.follow_up_days);
  REQUIRE(loaded.values == table.values);
}
