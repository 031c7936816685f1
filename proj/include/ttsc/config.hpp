#pragma once

// Run configuration for the command-line driver. JSON document; unknown
// keys are rejected and every field is validated before any computation.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttsc/error.hpp"
#include "ttsc/mixture.hpp"
#include "ttsc/paths.hpp"

namespace ttsc {

/// How an estimator's value becomes a score in [0, 1] for calibration.
enum class ConfidenceScaling {
  kRaw,         ///< value as estimated, clipped to [0, 1]
  kNormalized,  ///< value divided by the map's total
};

enum class CalibrationScope {
  kSelected,    ///< one item per problem: the selected answer
  kAllAnswers,  ///< one item per candidate in the confidence map
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::vector<EstimatorKind> methods{EstimatorKind::kSC, EstimatorKind::kPPL, EstimatorKind::kPC,
                                     EstimatorKind::kRPC};
  ProbMode prob_mode = ProbMode::kLengthNormalized;
  std::vector<std::size_t> n_grid{64, 128};
  std::size_t repeats = 10;
  std::size_t trials = 100000;
  std::size_t bins = 10;
  FitConfig fit;
  ConfidenceScaling scaling = ConfidenceScaling::kRaw;
  CalibrationScope calibration_scope = CalibrationScope::kSelected;
  std::optional<std::string> target;      // answer scored by convergence/decompose
  std::optional<std::string> truth_file;  // {"problem_id": "answer", ...} for estimate
  std::optional<std::string> oracle;
  std::optional<std::string> input;
  std::optional<std::string> out;
  std::string format = "csv";
  std::optional<std::string> report;
  bool lenient = false;

  void validate() const {
    if (methods.empty()) throw Error(ErrorCode::kConfigError, "methods must not be empty");
    if (n_grid.empty()) throw Error(ErrorCode::kConfigError, "n_grid must not be empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] == 0) throw Error(ErrorCode::kConfigError, "n_grid entries must be >= 1");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
        throw Error(ErrorCode::kConfigError, "n_grid must be strictly increasing");
      }
    }
    if (repeats == 0) throw Error(ErrorCode::kConfigError, "repeats must be >= 1");
    if (trials == 0) throw Error(ErrorCode::kConfigError, "trials must be >= 1");
    if (bins == 0) throw Error(ErrorCode::kConfigError, "bins must be >= 1");
    if (format != "csv" && format != "json") throw Error(ErrorCode::kConfigError, "format must be csv or json");
    fit.validate();
  }
};

namespace detail {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

template <typename T>
void take_optional(const nlohmann::json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                           std::string_view where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::kConfigError, "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  detail::reject_unknown(j,
                         {"seed", "methods", "prob_mode", "n_grid", "repeats", "trials", "bins", "fit",
                          "confidence_scaling", "calibration_scope", "target", "truth_file", "oracle",
                          "input", "out", "format", "report", "lenient"},
                         "config");
  RunConfig c;
  try {
    detail::take(j, "seed", c.seed);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_estimator_kind(m.get<std::string>()));
    }
    if (j.contains("prob_mode")) c.prob_mode = parse_prob_mode(j.at("prob_mode").get<std::string>());
    detail::take(j, "n_grid", c.n_grid);
    detail::take(j, "repeats", c.repeats);
    detail::take(j, "trials", c.trials);
    detail::take(j, "bins", c.bins);
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      detail::reject_unknown(f, {"weight_min", "weight_max", "max_iterations", "tolerance", "shape_min", "shape_max"},
                             "fit");
      detail::take(f, "weight_min", c.fit.weight_min);
      detail::take(f, "weight_max", c.fit.weight_max);
      detail::take(f, "max_iterations", c.fit.max_iterations);
      detail::take(f, "tolerance", c.fit.tolerance);
      detail::take(f, "shape_min", c.fit.shape_min);
      detail::take(f, "shape_max", c.fit.shape_max);
    }
    if (j.contains("confidence_scaling")) {
      const auto s = j.at("confidence_scaling").get<std::string>();
      if (s == "raw") c.scaling = ConfidenceScaling::kRaw;
      else if (s == "normalized") c.scaling = ConfidenceScaling::kNormalized;
      else throw Error(ErrorCode::kConfigError, "confidence_scaling must be raw or normalized");
    }
    if (j.contains("calibration_scope")) {
      const auto s = j.at("calibration_scope").get<std::string>();
      if (s == "selected") c.calibration_scope = CalibrationScope::kSelected;
      else if (s == "all_answers") c.calibration_scope = CalibrationScope::kAllAnswers;
      else throw Error(ErrorCode::kConfigError, "calibration_scope must be selected or all_answers");
    }
    detail::take_optional(j, "target", c.target);
    detail::take_optional(j, "truth_file", c.truth_file);
    detail::take_optional(j, "oracle", c.oracle);
    detail::take_optional(j, "input", c.input);
    detail::take_optional(j, "out", c.out);
    detail::take(j, "format", c.format);
    detail::take_optional(j, "report", c.report);
    detail::take(j, "lenient", c.lenient);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["methods"] = nlohmann::ordered_json::array();
  for (auto m : c.methods) j["methods"].push_back(std::string(to_string(m)));
  j["prob_mode"] = std::string(to_string(c.prob_mode));
  j["n_grid"] = c.n_grid;
  j["repeats"] = c.repeats;
  j["trials"] = c.trials;
  j["bins"] = c.bins;
  j["fit"] = {{"weight_min", c.fit.weight_min},   {"weight_max", c.fit.weight_max},
              {"max_iterations", c.fit.max_iterations}, {"tolerance", c.fit.tolerance},
              {"shape_min", c.fit.shape_min},     {"shape_max", c.fit.shape_max}};
  j["confidence_scaling"] = c.scaling == ConfidenceScaling::kRaw ? "raw" : "normalized";
  j["calibration_scope"] = c.calibration_scope == CalibrationScope::kSelected ? "selected" : "all_answers";
  auto opt = [](const std::optional<std::string>& s) {
    return s ? nlohmann::ordered_json(*s) : nlohmann::ordered_json(nullptr);
  };
  j["target"] = opt(c.target);
  j["truth_file"] = opt(c.truth_file);
  j["oracle"] = opt(c.oracle);
  j["input"] = opt(c.input);
  j["out"] = opt(c.out);
  j["format"] = c.format;
  j["report"] = opt(c.report);
  j["lenient"] = c.lenient;
  return j;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, "config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ttsc
