// Command-line front end. Subcommands: simulate, fit, predict, curve, hr,
// test-distribution. Times are given in years on the command line and
// converted to days (365 days/year) at this boundary; engine output is in
// days, with the conversion factor recorded in file metadata.
#ifndef JFM_CLI_HPP_
#define JFM_CLI_HPP_

#include <CLI11.hpp>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "jfm/fit.hpp"
#include "jfm/io.hpp"
#include "jfm/numeric.hpp"
#include "jfm/predict.hpp"
#include "jfm/simulate.hpp"
#include "jfm/wald.hpp"

namespace jfm {

namespace cli_detail {

inline std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    values.push_back(detail::parse_double(item, flag));
  }
  if (values.empty()) throw std::runtime_error(flag + ": empty list");
  return values;
}

// "1,2,5" or "1..5"
inline std::vector<std::size_t> parse_count_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> counts;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const long lo = std::lround(detail::parse_double(text.substr(0, dots), flag));
    const long hi = std::lround(detail::parse_double(text.substr(dots + 2), flag));
    if (lo < 0 || hi < lo) throw std::runtime_error(flag + ": bad range '" + text + "'");
    for (long j = lo; j <= hi; ++j) counts.push_back(static_cast<std::size_t>(j));
  } else {
    for (double v : parse_number_list(text, flag)) {
      if (v < 0.0 || v != std::floor(v))
        throw std::runtime_error(flag + ": counts must be nonnegative integers");
      counts.push_back(static_cast<std::size_t>(v));
    }
  }
  return counts;
}

inline CovariateProfile profile_from_entries(const ModelParams& params,
                                             const std::vector<std::string>& entries) {
  auto values = CovariateProfile::baseline(params).values();
  for (const auto& e : entries) {
    const auto eq = e.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--covariate expects name=value, got '" + e + "'");
    values[e.substr(0, eq)] = detail::parse_double(e.substr(eq + 1), "--covariate");
  }
  return CovariateProfile(values);
}

struct HistorySpec {
  std::string history_years;  // explicit times
  std::size_t count = 0;
  std::string timing = "dispersed";

  EventHistory build(double horizon_days) const {
    if (!history_years.empty()) {
      std::vector<double> days;
      for (double y : parse_number_list(history_years, "--history")) days.push_back(years_to_days(y));
      return EventHistory(days, horizon_days);
    }
    if (count == 0) return EventHistory(horizon_days);
    if (timing == "dispersed") return dispersed_times(count, horizon_days);
    if (timing == "concentrated") return concentrated_times(count, horizon_days);
    throw std::runtime_error("--timing must be 'dispersed' or 'concentrated'");
  }

  std::string describe() const {
    if (!history_years.empty()) return "explicit";
    return count == 0 ? "none" : timing;
  }
};

inline QuadratureSpec spec_from_flags(int nodes, double rel_tol, bool adaptive) {
  QuadratureSpec spec;
  if (nodes > 0) {
    spec.node_count = nodes;
  } else if (const char* env = std::getenv("JFM_QUAD_NODES")) {
    spec.node_count = static_cast<int>(detail::parse_double(env, "JFM_QUAD_NODES"));
  }
  spec.rel_tol = rel_tol;
  spec.scheme = adaptive ? QuadratureSpec::Scheme::adaptive : QuadratureSpec::Scheme::gauss;
  validate(spec);
  return spec;
}

inline Metadata quadrature_metadata(const QuadratureSpec& spec) {
  return {{"quadrature_nodes", std::to_string(spec.node_count)},
          {"quadrature_rel_tol", detail::format_double(spec.rel_tol)},
          {"quadrature_scheme",
           spec.scheme == QuadratureSpec::Scheme::gauss ? "gauss" : "adaptive"}};
}

inline std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> names;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) names.push_back(item);
  }
  return names;
}

}  // namespace cli_detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"joint frailty modeling of recurrent hospitalizations and death,"
               " with dynamic prediction of death risk"};
  app.name("jfm");
  app.require_subcommand(1);

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "draw a synthetic cohort from the model");
  std::string sim_params, sim_out_dir = ".";
  int sim_n = 0;
  std::uint64_t sim_seed = 1;
  double sim_censoring_years = 0.0;
  sim->add_option("--params", sim_params, "parameter JSON with a 'simulation' block")->required();
  sim->add_option("--n", sim_n, "number of patients")->required();
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--censoring-years", sim_censoring_years,
                  "administrative censoring (overrides the file)");
  sim->add_option("--out-dir", sim_out_dir, "directory for patients.csv and hospitalizations.csv");

  // --- fit ---
  auto* fit_cmd = app.add_subcommand("fit", "maximum-likelihood fit on a cohort");
  std::string fit_patients, fit_hosp, fit_submodel = "renewal", fit_out, fit_init;
  std::string fit_death_cov, fit_rec_cov;
  int fit_nodes = 0;
  double fit_rel_tol = 1e-9;
  fit_cmd->add_option("--patients", fit_patients, "patients CSV")->required();
  fit_cmd->add_option("--hospitalizations", fit_hosp, "hospitalizations CSV")->required();
  fit_cmd->add_option("--submodel", fit_submodel, "renewal|poisson");
  fit_cmd->add_option("--death-covariates", fit_death_cov, "comma-separated column names");
  fit_cmd->add_option("--recurrence-covariates", fit_rec_cov, "comma-separated column names");
  fit_cmd->add_option("--out", fit_out, "output parameter JSON")->required();
  fit_cmd->add_option("--init", fit_init, "starting values (parameter JSON)");
  fit_cmd->add_option("--nodes", fit_nodes, "quadrature nodes");
  fit_cmd->add_option("--rel-tol", fit_rel_tol, "quadrature relative tolerance");

  // shared prediction flags
  struct PredictFlags {
    std::string params;
    double follow_up_years = 0.0;
    cli_detail::HistorySpec history;
    std::vector<std::string> covariates;
    int nodes = 0;
    double rel_tol = 1e-9;
    bool adaptive = false;
    std::string out;
  };
  auto add_predict_flags = [](CLI::App* cmd, PredictFlags& flags, bool need_T) {
    cmd->add_option("--params", flags.params, "parameter JSON")->required();
    auto* t = cmd->add_option("--T", flags.follow_up_years, "follow-up time (years)");
    if (need_T) t->required();
    cmd->add_option("--history", flags.history.history_years,
                    "hospitalization times in years, comma separated");
    cmd->add_option("--J", flags.history.count, "number of hospitalizations (with --timing)");
    cmd->add_option("--timing", flags.history.timing, "dispersed|concentrated");
    cmd->add_option("--covariate", flags.covariates, "name=value (repeatable)");
    cmd->add_option("--nodes", flags.nodes, "quadrature nodes");
    cmd->add_option("--rel-tol", flags.rel_tol, "quadrature relative tolerance");
    cmd->add_flag("--adaptive", flags.adaptive, "use the adaptive scheme");
    cmd->add_option("--out", flags.out, "output file");
  };

  auto* predict = app.add_subcommand("predict", "risk of death in (T, T+w]");
  PredictFlags predict_flags;
  double predict_window_years = 0.0;
  add_predict_flags(predict, predict_flags, true);
  predict->add_option("--w", predict_window_years, "prediction window (years)")->required();

  auto* curve = app.add_subcommand("curve", "risk curve over a window grid");
  PredictFlags curve_flags;
  double curve_wmax_years = 0.0;
  int curve_steps = 120;
  add_predict_flags(curve, curve_flags, true);
  curve->add_option("--w-max", curve_wmax_years, "largest window (years)")->required();
  curve->add_option("--steps", curve_steps, "number of grid steps");
  curve->get_option("--out")->required();

  auto* hr = app.add_subcommand("hr", "hazard-ratio table over (J, T) grids");
  PredictFlags hr_flags;
  std::string hr_counts = "1..5", hr_follow_ups = "1,2,4,6,8", hr_mode = "count";
  double hr_window_days = kDefaultHazardRatioWindowDays;
  hr->add_option("--params", hr_flags.params, "parameter JSON")->required();
  hr->add_option("--J", hr_counts, "hospitalization counts, e.g. 1..5 or 1,3,5");
  hr->add_option("--T", hr_follow_ups, "follow-up times in years, comma separated");
  hr->add_option("--mode", hr_mode,
                 "count: history vs no hospitalizations (dispersed timing); "
                 "timing: concentrated vs dispersed");
  hr->add_option("--window-days", hr_window_days, "hazard-ratio window in days");
  hr->add_option("--covariate", hr_flags.covariates, "name=value (repeatable)");
  hr->add_option("--nodes", hr_flags.nodes, "quadrature nodes");
  hr->add_option("--rel-tol", hr_flags.rel_tol, "quadrature relative tolerance");
  hr->add_flag("--adaptive", hr_flags.adaptive, "use the adaptive scheme");
  hr->add_option("--out", hr_flags.out, "output CSV")->required();

  auto* wald = app.add_subcommand("test-distribution",
                                  "Wald test of gamma*(shape_r - 1) = 0");
  std::string wald_params;
  wald->add_option("--params", wald_params, "fitted parameter JSON")->required();

  std::vector<const char*> argv;
  argv.push_back("jfm");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*sim) {
      ParamsFile file = read_params(sim_params);
      SimulationConfig config;
      config.true_params = file.params;
      config.covariates = file.covariate_generators;
      config.n_patients = sim_n;
      config.seed = sim_seed;
      if (sim_censoring_years > 0.0) {
        config.censoring_days = years_to_days(sim_censoring_years);
      } else if (file.censoring_days) {
        config.censoring_days = *file.censoring_days;
      } else {
        throw std::runtime_error(
            "simulate: censoring time missing (--censoring-years or simulation.censoring_years)");
      }
      const auto cohort = simulate_cohort(config);
      const CohortPaths paths{sim_out_dir + "/patients.csv",
                              sim_out_dir + "/hospitalizations.csv"};
      write_cohort(paths, cohort);
      int deaths = 0;
      std::size_t events = 0;
      for (const auto& r : cohort) {
        deaths += r.death_observed ? 1 : 0;
        events += r.hospitalization_days.size();
      }
      out << "wrote " << paths.patients << " and " << paths.hospitalizations << " ("
          << cohort.size() << " patients, " << deaths << " deaths, " << events
          << " hospitalizations)\n";
      return 0;
    }

    if (*fit_cmd) {
      const auto cohort = load_cohort({fit_patients, fit_hosp});
      Submodel submodel;
      if (fit_submodel == "renewal") {
        submodel = Submodel::renewal;
      } else if (fit_submodel == "poisson") {
        submodel = Submodel::poisson;
      } else {
        throw std::runtime_error("fit: --submodel must be renewal or poisson");
      }
      FitOptions options;
      options.quadrature = cli_detail::spec_from_flags(fit_nodes, fit_rel_tol, false);
      ModelParams init;
      if (!fit_init.empty()) {
        init = read_params(fit_init).params;
        init.submodel = submodel;
      } else {
        init = default_init(cohort, submodel, cli_detail::split_names(fit_death_cov),
                            cli_detail::split_names(fit_rec_cov));
      }
      const FitResult result = fit(cohort, init, options);
      write_params(fit_out, result);
      out << "fit: submodel=" << to_string(submodel) << " patients=" << cohort.size()
          << " loglik=" << detail::format_double(result.loglik)
          << " converged=" << (result.converged ? "true" : "false")
          << " iterations=" << result.iterations << "\n";
      out << "wrote " << fit_out << "\n";
      return result.converged ? 0 : 2;
    }

    auto run_prediction = [&](const PredictFlags& flags, double window_years, bool single_point,
                              int steps) {
      const ParamsFile file = read_params(flags.params);
      const auto spec = cli_detail::spec_from_flags(flags.nodes, flags.rel_tol, flags.adaptive);
      const auto profile = cli_detail::profile_from_entries(file.params, flags.covariates);
      const double follow_up = years_to_days(flags.follow_up_years);
      const EventHistory history = flags.history.build(follow_up);

      std::vector<double> grid;
      if (single_point) {
        grid = {years_to_days(window_years)};
      } else {
        for (int k = 0; k <= steps; ++k)
          grid.push_back(years_to_days(window_years) * k / static_cast<double>(steps));
      }
      const auto points = prediction_curve(file.params, profile, history, follow_up, grid, spec);

      Metadata metadata{{"submodel", to_string(file.params.submodel)},
                        {"follow_up_days", detail::format_double(follow_up)},
                        {"history_timing", flags.history.describe()},
                        {"hospitalizations", std::to_string(history.count())},
                        {"years_to_days", detail::format_double(kDaysPerYear)}};
      for (const auto& [k, v] : cli_detail::quadrature_metadata(spec)) metadata.emplace_back(k, v);
      for (const auto& [name, value] : profile.values())
        metadata.emplace_back("covariate:" + name, detail::format_double(value));

      if (single_point) {
        for (const auto& [k, v] : metadata) out << k << "=" << v << "\n";
        out << "window_days=" << detail::format_double(grid[0]) << "\n";
        out << "probability=" << detail::format_double(points[0].probability) << "\n";
      }
      if (!flags.out.empty()) {
        write_curve(flags.out, metadata, points);
        out << "wrote " << flags.out << " (" << points.size() << " points)\n";
      }
    };

    if (*predict) {
      run_prediction(predict_flags, predict_window_years, true, 1);
      return 0;
    }
    if (*curve) {
      run_prediction(curve_flags, curve_wmax_years, false, curve_steps);
      return 0;
    }

    if (*hr) {
      const ParamsFile file = read_params(hr_flags.params);
      const auto spec = cli_detail::spec_from_flags(hr_flags.nodes, hr_flags.rel_tol,
                                                    hr_flags.adaptive);
      const auto profile = cli_detail::profile_from_entries(file.params, hr_flags.covariates);
      const auto counts = cli_detail::parse_count_list(hr_counts, "--J");
      const auto follow_ups_years = cli_detail::parse_number_list(hr_follow_ups, "--T");
      const bool timing_mode = hr_mode == "timing";
      if (!timing_mode && hr_mode != "count")
        throw std::runtime_error("hr: --mode must be count or timing");

      HazardRatioTable table;
      table.metadata = {{"submodel", to_string(file.params.submodel)},
                        {"mode", hr_mode},
                        {"reference", timing_mode ? "dispersed" : "no hospitalizations"},
                        {"window_days", detail::format_double(hr_window_days)},
                        {"years_to_days", detail::format_double(kDaysPerYear)}};
      for (const auto& [k, v] : cli_detail::quadrature_metadata(spec))
        table.metadata.emplace_back(k, v);
      table.counts = counts;
      for (double ty : follow_ups_years) table.follow_up_days.push_back(years_to_days(ty));
      for (std::size_t count : counts) {
        std::vector<double> row;
        for (double t_days : table.follow_up_days) {
          const EventHistory h = timing_mode ? concentrated_times(count, t_days)
                                             : dispersed_times(count, t_days);
          const EventHistory ref =
              timing_mode ? dispersed_times(count, t_days) : EventHistory(t_days);
          row.push_back(
              hazard_ratio(file.params, profile, h, ref, t_days, hr_window_days, spec));
        }
        table.values.push_back(std::move(row));
      }
      write_hr_table(hr_flags.out, table);
      out << "wrote " << hr_flags.out << " (" << counts.size() << " x "
          << table.follow_up_days.size() << " ratios)\n";
      return 0;
    }

    if (*wald) {
      const ParamsFile file = read_params(wald_params);
      Eigen::Matrix2d v = Eigen::Matrix2d::Zero();
      bool have_cov = false;
      if (file.has_fit && file.covariance.size() > 0) {
        const auto& names = file.parameter_names;
        const auto ig = std::find(names.begin(), names.end(), "gamma") - names.begin();
        const auto is = std::find(names.begin(), names.end(), "recurrence_shape") - names.begin();
        if (ig < static_cast<long>(names.size()) && is < static_cast<long>(names.size())) {
          v << file.covariance(ig, ig), file.covariance(ig, is), file.covariance(is, ig),
              file.covariance(is, is);
          have_cov = true;
        }
      }
      if (!have_cov && file.has_fit && !file.standard_errors.empty()) {
        const auto& names = file.parameter_names;
        const auto ig = std::find(names.begin(), names.end(), "gamma") - names.begin();
        const auto is = std::find(names.begin(), names.end(), "recurrence_shape") - names.begin();
        if (ig < static_cast<long>(file.standard_errors.size()) &&
            is < static_cast<long>(file.standard_errors.size())) {
          v(0, 0) = file.standard_errors[ig] * file.standard_errors[ig];
          v(1, 1) = file.standard_errors[is] * file.standard_errors[is];
          have_cov = true;
          out << "note: using a diagonal covariance from standard errors\n";
        }
      }
      const auto report = wald_distribution_test(
          file.params.gamma_link, file.params.recurrence_baseline.shape(), v);
      out << "R=" << detail::format_double(report.r_value) << "\n";
      out << "gradient=(" << detail::format_double(report.gradient[0]) << ","
          << detail::format_double(report.gradient[1]) << ")\n";
      out << "W=" << detail::format_double(report.statistic) << "\n";
      out << "p_value=" << detail::format_double(report.p_value) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << "jfm: " << e.what() << "\n";
    return 1;
  }
  err << "jfm: no subcommand given\n";
  return 1;
}

}  // namespace jfm

#endif  // JFM_CLI_HPP_
