// File formats:
//   - cohorts: two CSV files (UTF-8, header row, '.' decimal, comma
//     separated). patients.csv holds patient_id, follow_up_days,
//     death_observed and one column per covariate; hospitalizations.csv
//     holds (patient_id, event_day) rows.
//   - model parameters and fit results: JSON.
//   - prediction curves and hazard-ratio tables: CSV with a leading block of
//     '# key=value' metadata lines.
// Numbers are written with shortest round-trip precision, so
// write-then-read is exact.
#ifndef JFM_IO_HPP_
#define JFM_IO_HPP_

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "jfm/fit.hpp"
#include "jfm/likelihood.hpp"
#include "jfm/model.hpp"
#include "jfm/simulate.hpp"

namespace jfm {

struct CohortPaths {
  std::string patients;
  std::string hospitalizations;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // row index 0 is file line 2
  std::vector<std::pair<std::string, std::string>> metadata;

  int column(const std::string& name, const std::string& file) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error(file + ": missing required column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        table.metadata.emplace_back(key, line.substr(eq + 1));
      }
      continue;
    }
    auto fields = split_csv_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw std::runtime_error(path + ": missing header row");
  return table;
}

}  // namespace detail

inline void write_cohort(const CohortPaths& paths, std::span<const PatientRecord> cohort) {
  std::set<std::string> covariate_names;
  for (const auto& r : cohort)
    for (const auto& [name, _] : r.covariates) covariate_names.insert(name);

  std::ofstream pat(paths.patients);
  if (!pat) throw std::runtime_error("cannot write " + paths.patients);
  pat << "patient_id,follow_up_days,death_observed";
  for (const auto& name : covariate_names) pat << "," << name;
  pat << "\n";
  for (const auto& r : cohort) {
    pat << r.id << "," << detail::format_double(r.follow_up_days) << ","
        << (r.death_observed ? 1 : 0);
    for (const auto& name : covariate_names) {
      const auto it = r.covariates.find(name);
      if (it == r.covariates.end())
        throw std::runtime_error("write_cohort: patient " + r.id + " lacks covariate '" + name +
                                 "'");
      pat << "," << detail::format_double(it->second);
    }
    pat << "\n";
  }

  std::ofstream hosp(paths.hospitalizations);
  if (!hosp) throw std::runtime_error("cannot write " + paths.hospitalizations);
  hosp << "patient_id,event_day\n";
  for (const auto& r : cohort)
    for (double t : r.hospitalization_days)
      hosp << r.id << "," << detail::format_double(t) << "\n";
}

inline std::vector<PatientRecord> load_cohort(const CohortPaths& paths) {
  const auto pat = detail::read_csv(paths.patients);
  const int col_id = pat.column("patient_id", paths.patients);
  const int col_t = pat.column("follow_up_days", paths.patients);
  const int col_d = pat.column("death_observed", paths.patients);

  std::vector<int> covariate_cols;
  for (int c = 0; c < static_cast<int>(pat.header.size()); ++c)
    if (c != col_id && c != col_t && c != col_d) covariate_cols.push_back(c);

  std::vector<PatientRecord> cohort;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pat.rows.size(); ++i) {
    const auto& row = pat.rows[i];
    const std::string where = paths.patients + ":" + std::to_string(i + 2);
    PatientRecord r;
    r.id = row[col_id];
    if (r.id.empty()) throw std::runtime_error(where + ": empty patient_id");
    if (index.count(r.id)) throw std::runtime_error(where + ": duplicate patient_id " + r.id);
    r.follow_up_days = detail::parse_double(row[col_t], where);
    if (!(r.follow_up_days > 0.0))
      throw std::runtime_error(where + ": follow_up_days must be positive");
    const std::string& d = row[col_d];
    if (d == "1" || d == "true") {
      r.death_observed = true;
    } else if (d == "0" || d == "false") {
      r.death_observed = false;
    } else {
      throw std::runtime_error(where + ": death_observed must be 0/1, got '" + d + "'");
    }
    for (int c : covariate_cols) r.covariates[pat.header[c]] = detail::parse_double(row[c], where);
    index[r.id] = cohort.size();
    cohort.push_back(std::move(r));
  }

  const auto hosp = detail::read_csv(paths.hospitalizations);
  const int hcol_id = hosp.column("patient_id", paths.hospitalizations);
  const int hcol_t = hosp.column("event_day", paths.hospitalizations);
  std::vector<std::vector<std::pair<double, std::size_t>>> events(cohort.size());
  for (std::size_t i = 0; i < hosp.rows.size(); ++i) {
    const std::string where = paths.hospitalizations + ":" + std::to_string(i + 2);
    const auto& row = hosp.rows[i];
    const auto it = index.find(row[hcol_id]);
    if (it == index.end())
      throw std::runtime_error(where + ": hospitalization for unknown patient_id '" +
                               row[hcol_id] + "'");
    const double day = detail::parse_double(row[hcol_t], where);
    const auto& patient = cohort[it->second];
    if (!(day > 0.0) || !(day < patient.follow_up_days))
      throw std::runtime_error(where + ": event_day " + row[hcol_t] +
                               " outside (0, follow_up_days) for patient " + patient.id);
    events[it->second].emplace_back(day, i + 2);
  }
  for (std::size_t k = 0; k < cohort.size(); ++k) {
    auto& ev = events[k];
    std::sort(ev.begin(), ev.end());
    for (std::size_t j = 0; j + 1 < ev.size(); ++j)
      if (!(ev[j].first < ev[j + 1].first))
        throw std::runtime_error(paths.hospitalizations + ":" + std::to_string(ev[j + 1].second) +
                                 ": duplicate event_day for patient " + cohort[k].id);
    for (const auto& [day, _] : ev) cohort[k].hospitalization_days.push_back(day);
  }
  return cohort;
}

// ---------------------------------------------------------------------------
// parameter files (JSON)

struct ParamsFile {
  ModelParams params;
  // optional generator block for the simulate command
  std::vector<std::pair<std::string, CovariateGenerator>> covariate_generators;
  std::optional<double> censoring_days;
  // optional fit block
  bool has_fit = false;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> parameter_names;
  std::vector<double> standard_errors, ci_lower, ci_upper;
  Eigen::MatrixXd covariance;  // 0x0 when absent
};

namespace detail {

inline nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json j;
  j["submodel"] = to_string(p.submodel);
  j["gamma"] = p.gamma_link;
  j["frailty_variance"] = p.frailty.variance;
  j["death"] = {{"shape", p.death_baseline.shape()},
                {"scale", p.death_baseline.scale()},
                {"covariates", p.death_schema},
                {"coefficients", p.death_coefs}};
  j["recurrence"] = {{"shape", p.recurrence_baseline.shape()},
                     {"scale", p.recurrence_baseline.scale()},
                     {"covariates", p.recurrence_schema},
                     {"coefficients", p.recurrence_coefs}};
  return j;
}

inline ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  const std::string submodel = j.at("submodel").get<std::string>();
  if (submodel == "renewal") {
    p.submodel = Submodel::renewal;
  } else if (submodel == "poisson") {
    p.submodel = Submodel::poisson;
  } else {
    throw std::runtime_error("params: submodel must be 'renewal' or 'poisson', got '" + submodel +
                             "'");
  }
  p.gamma_link = j.at("gamma").get<double>();
  p.frailty.variance = j.at("frailty_variance").get<double>();
  const auto& d = j.at("death");
  p.death_baseline = WeibullHazard(d.at("shape").get<double>(), d.at("scale").get<double>());
  p.death_schema = d.value("covariates", std::vector<std::string>{});
  p.death_coefs = d.value("coefficients", std::vector<double>{});
  const auto& r = j.at("recurrence");
  p.recurrence_baseline = WeibullHazard(r.at("shape").get<double>(), r.at("scale").get<double>());
  p.recurrence_schema = r.value("covariates", std::vector<std::string>{});
  p.recurrence_coefs = r.value("coefficients", std::vector<double>{});
  validate(p);
  return p;
}

}  // namespace detail

inline void write_params(const std::string& path, const ModelParams& params,
                         const FitResult* fit = nullptr) {
  nlohmann::json j = detail::params_to_json(params);
  if (fit != nullptr) {
    nlohmann::json f;
    f["loglik"] = fit->loglik;
    f["converged"] = fit->converged;
    f["iterations"] = fit->iterations;
    f["gradient_max_norm"] = fit->gradient_max_norm;
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t k = 0; k < fit->parameter_names.size(); ++k) {
      nlohmann::json e;
      e["name"] = fit->parameter_names[k];
      if (k < fit->standard_errors.size()) {
        e["se"] = fit->standard_errors[k];
        e["ci95"] = {fit->ci_lower[k], fit->ci_upper[k]};
      }
      entries.push_back(e);
    }
    f["parameters"] = entries;
    if (fit->covariance.size() > 0) {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < fit->covariance.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < fit->covariance.cols(); ++c) row.push_back(fit->covariance(i, c));
        rows.push_back(row);
      }
      f["covariance"] = rows;
    }
    j["fit"] = f;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline void write_params(const std::string& path, const FitResult& fit) {
  write_params(path, fit.estimates, &fit);
}

inline ParamsFile read_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  ParamsFile file;
  try {
    file.params = detail::params_from_json(j);
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      if (s.contains("censoring_years"))
        file.censoring_days = s.at("censoring_years").get<double>() * kDaysPerYear;
      if (s.contains("censoring_days")) file.censoring_days = s.at("censoring_days").get<double>();
      if (s.contains("covariate_generators")) {
        for (const auto& [name, spec] : s.at("covariate_generators").items()) {
          const std::string kind = spec.at("kind").get<std::string>();
          if (kind == "bernoulli") {
            file.covariate_generators.emplace_back(
                name, CovariateGenerator::bernoulli(spec.at("p").get<double>()));
          } else if (kind == "normal") {
            file.covariate_generators.emplace_back(
                name,
                CovariateGenerator::normal(spec.at("mean").get<double>(), spec.at("sd").get<double>()));
          } else if (kind == "uniform") {
            file.covariate_generators.emplace_back(
                name,
                CovariateGenerator::uniform(spec.at("low").get<double>(), spec.at("high").get<double>()));
          } else {
            throw std::runtime_error("unknown covariate generator kind '" + kind + "'");
          }
        }
      }
    }
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      file.has_fit = true;
      file.loglik = f.at("loglik").get<double>();
      file.converged = f.at("converged").get<bool>();
      file.iterations = f.value("iterations", 0);
      for (const auto& e : f.at("parameters")) {
        file.parameter_names.push_back(e.at("name").get<std::string>());
        if (e.contains("se")) {
          file.standard_errors.push_back(e.at("se").get<double>());
          file.ci_lower.push_back(e.at("ci95")[0].get<double>());
          file.ci_upper.push_back(e.at("ci95")[1].get<double>());
        }
      }
      if (f.contains("covariance")) {
        const auto& rows = f.at("covariance");
        const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
        file.covariance.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index c = 0; c < n; ++c)
            file.covariance(i, c) = rows[i][c].get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return file;
}

// ---------------------------------------------------------------------------
// curve and table files

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct CurveFile {
  Metadata metadata;
  std::vector<CurvePoint> points;
};

inline void write_curve(const std::string& path, const Metadata& metadata,
                        std::span<const CurvePoint> points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
  out << "horizon_days,probability\n";
  for (const auto& p : points)
    out << detail::format_double(p.horizon_days) << "," << detail::format_double(p.probability)
        << "\n";
}

inline CurveFile read_curve(const std::string& path) {
  const auto table = detail::read_csv(path);
  const int col_h = table.column("horizon_days", path);
  const int col_p = table.column("probability", path);
  CurveFile file;
  file.metadata = table.metadata;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string where = path + ":" + std::to_string(i + 2);
    file.points.push_back({detail::parse_double(table.rows[i][col_h], where),
                           detail::parse_double(table.rows[i][col_p], where)});
  }
  return file;
}

struct HazardRatioTable {
  Metadata metadata;
  std::vector<std::size_t> counts;       // row labels (number of hospitalizations)
  std::vector<double> follow_up_days;    // column labels
  std::vector<std::vector<double>> values;  // values[row][col]
};

inline void write_hr_table(const std::string& path, const HazardRatioTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : table.metadata) out << "# " << k << "=" << v << "\n";
  out << "hospitalizations";
  for (double t : table.follow_up_days) out << ",T=" << detail::format_double(t);
  out << "\n";
  for (std::size_t r = 0; r < table.counts.size(); ++r) {
    out << table.counts[r];
    for (double v : table.values[r]) out << "," << detail::format_double(v);
    out << "\n";
  }
}

inline HazardRatioTable read_hr_table(const std::string& path) {
  const auto csv = detail::read_csv(path);
  if (csv.header.empty() || csv.header[0] != "hospitalizations")
    throw std::runtime_error(path + ": first column must be 'hospitalizations'");
  HazardRatioTable table;
  table.metadata = csv.metadata;
  for (std::size_t c = 1; c < csv.header.size(); ++c) {
    const auto& name = csv.header[c];
    if (name.rfind("T=", 0) != 0)
      throw std::runtime_error(path + ": column '" + name + "' is not of the form T=<days>");
    table.follow_up_days.push_back(detail::parse_double(name.substr(2), path));
  }
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const std::string where = path + ":" + std::to_string(i + 2);
    table.counts.push_back(
        static_cast<std::size_t>(detail::parse_double(csv.rows[i][0], where)));
    std::vector<double> row;
    for (std::size_t c = 1; c < csv.rows[i].size(); ++c)
      row.push_back(detail::parse_double(csv.rows[i][c], where));
    table.values.push_back(std::move(row));
  }
  return table;
}

}  // namespace jfm

#endif  // JFM_IO_HPP_
