#pragma once

// Experiment drivers behind the command-line tool. Every driver is a pure
// function of (config, inputs) and renders to a string, so identical inputs
// give byte-identical output regardless of how the work is scheduled.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ttsc/config.hpp"
#include "ttsc/error.hpp"
#include "ttsc/error_analysis.hpp"
#include "ttsc/estimators.hpp"
#include "ttsc/ingestion.hpp"
#include "ttsc/metrics.hpp"
#include "ttsc/oracle.hpp"
#include "ttsc/paths.hpp"
#include "ttsc/random.hpp"

namespace ttsc {

namespace detail {

inline std::string num(double v) { return fmt::format("{}", v == 0.0 ? 0.0 : v); }

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline double scaled_confidence(double value, const ConfidenceMap& conf, ConfidenceScaling scaling) {
  if (scaling == ConfidenceScaling::kNormalized) {
    const double total = conf.total();
    return total > 0.0 ? value / total : 0.0;
  }
  return std::clamp(value, 0.0, 1.0);
}

inline void append_scored(const ConfidenceMap& conf, const AnswerLabel& truth, const RunConfig& cfg,
                          std::vector<ScoredItem>& items) {
  if (cfg.calibration_scope == CalibrationScope::kSelected) {
    const Selection sel = select_answer(conf);
    items.push_back({scaled_confidence(sel.confidence, conf, cfg.scaling), sel.answer == truth});
    return;
  }
  for (const auto& e : conf.entries()) {
    items.push_back({scaled_confidence(e.value, conf, cfg.scaling), e.answer == truth});
  }
}

inline EstimatorOptions options_of(const RunConfig& cfg) { return EstimatorOptions{cfg.fit}; }

}  // namespace detail

// ---------------------------------------------------------------- simulate

struct SimulationCell {
  EstimatorKind method = EstimatorKind::kSC;
  std::size_t n = 0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double ece = 0.0;
};

/// Repeat r uses seed derive_seed(cfg.seed, r); problem j within it uses
/// derive_seed(that, j). All methods see the same sampled batches.
inline std::vector<SimulationCell> simulate(const RunConfig& cfg, std::span<const OracleSpec> suite) {
  cfg.validate();
  if (suite.empty()) throw Error(ErrorCode::kEmptyInput, "oracle suite is empty");
  std::vector<OracleSampler> samplers;
  samplers.reserve(suite.size());
  for (const auto& o : suite) samplers.emplace_back(o);
  const EstimatorOptions options = detail::options_of(cfg);

  const std::size_t nm = cfg.methods.size();
  std::vector<SimulationCell> cells;
  for (std::size_t n : cfg.n_grid) {
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t seed = derive_seed(cfg.seed, r);
      std::vector<std::size_t> hits(nm, 0);
      std::vector<std::vector<ScoredItem>> scored(nm);
      for (std::size_t j = 0; j < suite.size(); ++j) {
        Rng rng(derive_seed(seed, j));
        const SampleBatch batch = samplers[j].draw(n, rng);
        for (std::size_t m = 0; m < nm; ++m) {
          const ConfidenceMap conf = estimate(cfg.methods[m], batch, options);
          hits[m] += select_answer(conf).answer == suite[j].truth ? 1 : 0;
          detail::append_scored(conf, suite[j].truth, cfg, scored[m]);
        }
      }
      for (std::size_t m = 0; m < nm; ++m) {
        cells.push_back(SimulationCell{cfg.methods[m], n, r, seed,
                                       static_cast<double>(hits[m]) / static_cast<double>(suite.size()),
                                       ece(scored[m], cfg.bins)});
      }
    }
  }
  // Canonical order: method (config order), then n, then repeat.
  std::stable_sort(cells.begin(), cells.end(), [&](const SimulationCell& a, const SimulationCell& b) {
    auto rank = [&](EstimatorKind k) {
      return std::find(cfg.methods.begin(), cfg.methods.end(), k) - cfg.methods.begin();
    };
    return std::tuple(rank(a.method), a.n, a.repeat) < std::tuple(rank(b.method), b.n, b.repeat);
  });
  return cells;
}

inline std::string render_simulation(std::span<const SimulationCell> cells) {
  std::string out = "method,n,repeat,seed,accuracy,ece\n";
  for (const auto& c : cells) {
    out += fmt::format("{},{},{},{},{},{}\n", to_string(c.method), c.n, c.repeat, c.seed,
                       detail::num(c.accuracy), detail::num(c.ece));
  }
  return out;
}

inline BudgetCurve budget_curve(std::span<const SimulationCell> cells, EstimatorKind method) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& c : cells) {
    if (c.method == method) by_n[c.n].push_back(c.accuracy);
  }
  BudgetCurve curve{method, {}};
  for (const auto& [n, accs] : by_n) curve.points.push_back(summarize_repeats(n, accs));
  return curve;
}

// ------------------------------------------------------------- convergence

struct ConvergenceRow {
  EstimatorKind method = EstimatorKind::kSC;
  std::size_t n = 0;
  std::size_t trials = 0;
  double mc_mse = 0.0;
  double mc_mse_stderr = 0.0;
  double mc_excess = 0.0;
  double mc_excess_stderr = 0.0;
  std::size_t nonzero_trials = 0;
  std::optional<double> closed_form;  // published closed-form estimation error
  std::optional<double> exact_form;   // exact value where one is known
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<std::pair<EstimatorKind, RateFit>> fits;
};

/// Minimum trials with phat != p before a point enters a rate fit.
inline constexpr std::size_t kResolvableTrials = 100;

namespace detail {

struct ScoredTarget {
  AnswerLabel answer;
  double p = 0.0;
  bool correct = false;
  std::size_t k = 0;                      // oracle paths yielding the answer
  bool equal_paths = true;                // those paths share one probability
  std::optional<std::size_t> first_path;  // PPL target
};

inline ScoredTarget resolve_target(const RunConfig& cfg, const OracleSpec& oracle) {
  ScoredTarget t;
  t.answer = cfg.target ? AnswerLabel::from_raw(*cfg.target) : oracle.truth;
  t.p = true_answer_prob(oracle, t.answer);
  t.correct = t.answer == oracle.truth;
  std::optional<double> q;
  for (std::size_t i = 0; i < oracle.num_paths(); ++i) {
    if (!(oracle.path_answers[i] == t.answer)) continue;
    ++t.k;
    if (!t.first_path) t.first_path = i;
    if (q && *q != oracle.path_probs[i]) t.equal_paths = false;
    q = oracle.path_probs[i];
  }
  if (t.k == 0) throw Error(ErrorCode::kDomainError, "target answer '" + t.answer.canonical + "' never sampled by the oracle");
  return t;
}

inline EstimatorTarget target_for(EstimatorKind kind, const ScoredTarget& t) {
  return kind == EstimatorKind::kPPL ? EstimatorTarget::of_path(*t.first_path)
                                     : EstimatorTarget::of_answer(t.answer);
}

inline std::optional<double> closed_form_for(EstimatorKind kind, const ScoredTarget& t,
                                             const OracleSpec& oracle, std::size_t n) {
  switch (kind) {
    case EstimatorKind::kSC: return sc_closed_form(t.p, n, t.correct).estimation_error;
    case EstimatorKind::kPPL: {
      const std::size_t i = *t.first_path;
      return ppl_closed_form(oracle.path_probs[i], n, oracle.path_answers[i] == oracle.truth).estimation_error;
    }
    case EstimatorKind::kPC: return pc_closed_form(t.p, t.k, n, t.correct).estimation_error;
    case EstimatorKind::kRPC: return std::nullopt;
  }
  return std::nullopt;
}

inline std::optional<double> exact_form_for(EstimatorKind kind, const ScoredTarget& t,
                                            const OracleSpec& oracle, std::size_t n) {
  if (kind == EstimatorKind::kPC) {
    if (!t.equal_paths) return std::nullopt;
    return pc_exact_form(t.p, t.k, n, t.correct).estimation_error;
  }
  return closed_form_for(kind, t, oracle, n);
}

}  // namespace detail

inline ConvergenceReport convergence(const RunConfig& cfg, const OracleSpec& oracle) {
  cfg.validate();
  oracle.validate();
  const detail::ScoredTarget target = detail::resolve_target(cfg, oracle);
  const EstimatorOptions options = detail::options_of(cfg);
  ConvergenceReport report;
  for (EstimatorKind kind : cfg.methods) {
    const EstimatorTarget et = detail::target_for(kind, target);
    const auto fn = make_estimator_functional(kind, et, options);
    std::vector<double> ns, errs;
    for (std::size_t n : cfg.n_grid) {
      const MonteCarloMoments mc = monte_carlo_moments(oracle, n, fn, et, cfg.trials, derive_seed(cfg.seed, n));
      ConvergenceRow row;
      row.method = kind;
      row.n = n;
      row.trials = mc.trials;
      row.mc_mse = mc.moments.mse;
      row.mc_mse_stderr = mc.mse_stderr;
      row.mc_excess = mc.moments.excess_error;
      row.mc_excess_stderr = mc.reasoning_stderr;
      row.nonzero_trials = mc.nonzero_mse_trials;
      row.closed_form = detail::closed_form_for(kind, target, oracle, n);
      row.exact_form = detail::exact_form_for(kind, target, oracle, n);
      if (row.mc_mse > 0.0 && row.nonzero_trials >= kResolvableTrials) {
        ns.push_back(static_cast<double>(n));
        errs.push_back(row.mc_mse);
      }
      report.rows.push_back(row);
    }
    if (ns.size() >= 4) {
      const RateScale scale = kind == EstimatorKind::kSC ? RateScale::kLogLog : RateScale::kSemiLog;
      report.fits.emplace_back(kind, fit_rate(ns, errs, scale));
    }
  }
  return report;
}

inline std::string render_convergence(const ConvergenceReport& report) {
  std::string out =
      "method,n,trials,mc_mse,mc_mse_stderr,mc_excess,mc_excess_stderr,nonzero_trials,closed_form,exact_form\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(r.method), r.n, r.trials,
                       detail::num(r.mc_mse), detail::num(r.mc_mse_stderr), detail::num(r.mc_excess),
                       detail::num(r.mc_excess_stderr), r.nonzero_trials, detail::opt_num(r.closed_form),
                       detail::opt_num(r.exact_form));
  }
  for (const auto& [kind, fit] : report.fits) {
    out += fmt::format("# rate_fit,{},{},slope={},intercept={},residual={},points={}\n", to_string(kind),
                       fit.scale == RateScale::kLogLog ? "loglog" : "semilog", detail::num(fit.slope),
                       detail::num(fit.intercept), detail::num(fit.residual), fit.ns.size());
  }
  return out;
}

// --------------------------------------------------------------- decompose

struct DecomposeRow {
  EstimatorKind method = EstimatorKind::kSC;
  std::size_t n = 0;
  bool exact = true;  // false: Monte Carlo fallback
  ErrorMoments moments;
  double residual = 0.0;  // reasoning - (mse + cross + model)
  std::optional<double> closed_form;
};

inline std::vector<DecomposeRow> decompose(const RunConfig& cfg, const OracleSpec& oracle) {
  cfg.validate();
  oracle.validate();
  const detail::ScoredTarget target = detail::resolve_target(cfg, oracle);
  const EstimatorOptions options = detail::options_of(cfg);
  std::vector<DecomposeRow> rows;
  for (EstimatorKind kind : cfg.methods) {
    const EstimatorTarget et = detail::target_for(kind, target);
    const auto fn = make_estimator_functional(kind, et, options);
    for (std::size_t n : cfg.n_grid) {
      DecomposeRow row;
      row.method = kind;
      row.n = n;
      if (outcome_count(oracle.num_paths(), n) <= kMaxEnumerationOutcomes) {
        row.moments = exact_estimator_moments(oracle, n, fn, et).moments;
      } else {
        row.exact = false;
        row.moments = monte_carlo_moments(oracle, n, fn, et, cfg.trials, derive_seed(cfg.seed, n)).moments;
      }
      const ErrorMoments& m = row.moments;
      row.residual = m.reasoning_error - (m.mse + m.cross_term + m.model_error);
      row.closed_form = detail::closed_form_for(kind, target, oracle, n);
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string render_decompose(std::span<const DecomposeRow> rows) {
  std::string out = "method,n,source,mse,cross,model,total,residual,closed_form_estimation\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(r.method), r.n,
                       r.exact ? "exact" : "monte_carlo", detail::num(r.moments.mse),
                       detail::num(r.moments.cross_term), detail::num(r.moments.model_error),
                       detail::num(r.moments.reasoning_error), detail::num(r.residual),
                       detail::opt_num(r.closed_form));
  }
  return out;
}

// ---------------------------------------------------------------- estimate

struct EstimateOutput {
  std::vector<ResultRow> rows;
  nlohmann::ordered_json report = nlohmann::ordered_json::array();  // RPC pruning reports
};

inline std::map<std::string, AnswerLabel> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open truth file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "truth file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "truth file must map problem_id to answer");
  std::map<std::string, AnswerLabel> truth;
  for (const auto& [key, value] : j.items()) truth.emplace(key, detail::answer_from_json(value));
  return truth;
}

inline nlohmann::ordered_json fit_to_json(const MixtureFit& fit) {
  nlohmann::ordered_json j;
  j["comp1"] = {{"shape", fit.comp1.shape}, {"scale", fit.comp1.scale}};
  j["comp2"] = {{"shape", fit.comp2.shape}, {"scale", fit.comp2.scale}};
  j["w1"] = fit.w1;
  j["w2"] = fit.w2;
  j["high_index"] = fit.high_index;
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  return j;
}

inline EstimateOutput run_estimate(const RunConfig& cfg, std::span<const SampleBatch> batches,
                                   const std::map<std::string, AnswerLabel>& truth) {
  cfg.validate();
  const EstimatorOptions options = detail::options_of(cfg);
  EstimateOutput out;
  for (const SampleBatch& batch : batches) {
    const auto t = truth.find(batch.problem_id);
    for (EstimatorKind kind : cfg.methods) {
      ConfidenceMap conf;
      if (kind == EstimatorKind::kRPC) {
        RpcResult rpc = rpc_confidence(batch, options);
        nlohmann::ordered_json rep;
        rep["problem_id"] = batch.problem_id;
        rep["fit"] = rpc.report.fit ? fit_to_json(*rpc.report.fit) : nlohmann::ordered_json(nullptr);
        rep["fallback_used"] = rpc.report.fallback_used;
        rep["mean_threshold"] = rpc.report.mean_threshold;
        auto list = [&](const std::vector<std::size_t>& idx) {
          nlohmann::ordered_json arr = nlohmann::ordered_json::array();
          for (std::size_t r : idx) {
            const ReasoningPath& p = batch.paths[rpc.unique_indices[r]];
            arr.push_back({{"index", rpc.unique_indices[r]},
                           {"answer", p.answer().canonical},
                           {"path_prob", p.path_prob()},
                           {"text", p.text()}});
          }
          return arr;
        };
        rep["retained"] = list(rpc.report.retained_indices);
        rep["removed"] = list(rpc.report.removed_indices);
        out.report.push_back(std::move(rep));
        conf = std::move(rpc.confidence);
      } else {
        conf = estimate(kind, batch, options);
      }
      const Selection sel = select_answer(conf);
      ResultRow row{batch.problem_id, std::string(to_string(kind)), batch.size(), sel.answer.canonical,
                    sel.confidence, std::nullopt};
      if (t != truth.end()) row.correct = sel.answer == t->second;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

// ------------------------------------------------------------- fit-mixture

struct NamedSample {
  std::string name;
  std::vector<double> values;
};

/// Either JSONL path records (one dataset per problem, unique-path
/// probabilities under cfg.prob_mode) or whitespace-separated numbers.
inline std::vector<NamedSample> load_fit_input(const std::string& path, const RunConfig& cfg) {
  const bool jsonl = path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0;
  std::vector<NamedSample> out;
  if (jsonl) {
    const IngestResult ingest = load_jsonl(path, cfg.prob_mode, cfg.lenient);
    for (const auto& batch : ingest.batches) {
      NamedSample s{batch.problem_id, {}};
      for (std::size_t i : unique_path_indices(batch.paths)) s.values.push_back(batch.paths[i].path_prob());
      out.push_back(std::move(s));
    }
    return out;
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  NamedSample s{"input", {}};
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      s.values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "not a number: '" + tok + "'");
    }
  }
  out.push_back(std::move(s));
  return out;
}

inline nlohmann::ordered_json run_fit_mixture(const RunConfig& cfg, std::span<const NamedSample> samples) {
  cfg.validate();
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["size"] = s.values.size();
    try {
      const MixtureFit fit = fit_mixture(s.values, cfg.fit);
      j["fit"] = fit_to_json(fit);
      j["high_mean"] = weibull_mean(fit.high());
      j["low_mean"] = weibull_mean(fit.low());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kFitDegenerate) throw;
      j["fit"] = nullptr;
      j["degenerate"] = e.what();
    }
    if (!s.values.empty()) {
      const PruningReport rep = prune(std::span<const double>(s.values), cfg.fit);
      j["mean_threshold"] = rep.mean_threshold;
      j["retained"] = rep.retained_indices;
      j["removed"] = rep.removed_indices;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

// ----------------------------------------------------------------- metrics

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace detail

/// Reads rows written by export_results in CSV form.
inline std::vector<ResultRow> parse_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("problem_id,method,n,selected_answer,confidence,correct", 0) != 0) {
    throw Error(ErrorCode::kParseError, "missing results header");
  }
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6) throw Error(ErrorCode::kParseError, fmt::format("line {}: expected 6 fields", lineno));
    try {
      ResultRow r{f[0], f[1], std::stoul(f[2]), f[3], std::stod(f[4]), std::nullopt};
      if (f[5] == "1") r.correct = true;
      else if (f[5] == "0") r.correct = false;
      else if (!f[5].empty()) throw std::invalid_argument(f[5]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, fmt::format("line {}: malformed field", lineno));
    }
  }
  return rows;
}

inline nlohmann::ordered_json run_metrics(const RunConfig& cfg, std::span<const ResultRow> rows) {
  cfg.validate();
  std::map<std::pair<std::string, std::size_t>, std::vector<ScoredItem>> groups;
  std::map<std::pair<std::string, std::size_t>, std::size_t> unscored;
  for (const auto& r : rows) {
    const auto key = std::pair(r.method, r.n);
    if (!r.correct) {
      ++unscored[key];
      groups.try_emplace(key);
      continue;
    }
    groups[key].push_back({std::clamp(r.confidence, 0.0, 1.0), *r.correct});
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [key, items] : groups) {
    nlohmann::ordered_json j;
    j["method"] = key.first;
    j["n"] = key.second;
    j["scored"] = items.size();
    j["unscored"] = unscored.count(key) ? unscored.at(key) : 0;
    if (!items.empty()) {
      std::size_t hits = 0;
      for (const auto& it : items) hits += it.correct ? 1 : 0;
      const CalibrationBins bins = reliability_bins(items, cfg.bins);
      j["accuracy"] = static_cast<double>(hits) / static_cast<double>(items.size());
      j["ece"] = ece_from_bins(bins);
      nlohmann::ordered_json jb = nlohmann::ordered_json::array();
      for (const auto& b : bins.bins) {
        jb.push_back({{"lower", b.lower},
                      {"upper", b.upper},
                      {"count", b.count},
                      {"mean_confidence", b.mean_confidence},
                      {"accuracy", b.accuracy}});
      }
      j["bins"] = std::move(jb);
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace ttsc
