// Joint-model parameters and covariate profiles.
//
// Death hazard:            u^gamma * exp(beta_d' z^d) * lambda0_d(t)
// Hospitalization hazard:  u       * exp(beta_r' z^r) * lambda^r(t | H(t))
// with gamma frailty u (mean 1, variance theta) shared by both processes.
#ifndef JFM_MODEL_HPP_
#define JFM_MODEL_HPP_

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "jfm/frailty.hpp"
#include "jfm/recurrent.hpp"
#include "jfm/weibull.hpp"

namespace jfm {

struct ModelParams {
  Submodel submodel = Submodel::renewal;
  double gamma_link = 0.0;  // gamma: frailty exponent in the death hazard
  FrailtyParams frailty;    // theta
  WeibullHazard death_baseline{1.0, 1.0};
  WeibullHazard recurrence_baseline{1.0, 1.0};
  std::vector<std::string> death_schema;       // covariate names for Z^d
  std::vector<std::string> recurrence_schema;  // covariate names for Z^r
  std::vector<double> death_coefs;             // beta_d, aligned with death_schema
  std::vector<double> recurrence_coefs;        // beta_r, aligned with recurrence_schema
};

inline void validate(const ModelParams& p) {
  validate(p.frailty);
  if (p.death_coefs.size() != p.death_schema.size())
    throw std::invalid_argument("ModelParams: death coefficients do not match the death schema");
  if (p.recurrence_coefs.size() != p.recurrence_schema.size())
    throw std::invalid_argument(
        "ModelParams: recurrence coefficients do not match the recurrence schema");
}

// Named covariate values z. The proportionality indexes are
// C_d = exp(beta_d' z^d) and C_r = exp(beta_r' z^r).
class CovariateProfile {
 public:
  CovariateProfile() = default;
  explicit CovariateProfile(std::map<std::string, double> values) : values_(std::move(values)) {}

  // All-zero profile over both schemas (the reference patient).
  static CovariateProfile baseline(const ModelParams& params) {
    std::map<std::string, double> z;
    for (const auto& name : params.death_schema) z[name] = 0.0;
    for (const auto& name : params.recurrence_schema) z[name] = 0.0;
    return CovariateProfile(std::move(z));
  }

  const std::map<std::string, double>& values() const { return values_; }

  double value(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end())
      throw std::invalid_argument("CovariateProfile: missing covariate '" + name + "'");
    return it->second;
  }

  double death_index(const ModelParams& params) const {  // C_d
    return std::exp(linear_predictor(params.death_schema, params.death_coefs));
  }
  double recurrence_index(const ModelParams& params) const {  // C_r
    return std::exp(linear_predictor(params.recurrence_schema, params.recurrence_coefs));
  }

  double linear_predictor(const std::vector<std::string>& schema,
                          const std::vector<double>& coefs) const {
    if (schema.size() != coefs.size())
      throw std::invalid_argument("CovariateProfile: schema/coefficient size mismatch");
    double lp = 0.0;
    for (std::size_t k = 0; k < schema.size(); ++k) lp += coefs[k] * value(schema[k]);
    return lp;
  }

 private:
  std::map<std::string, double> values_;
};

}  // namespace jfm

#endif  // JFM_MODEL_HPP_
