// ttsc: command-line driver for the confidence-estimation lab.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttsc/commands.hpp"

namespace {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("TTSC_LOG_LEVEL");
  if (!env) return LogLevel::kQuiet;
  const std::string v(env);
  if (v == "debug") return LogLevel::kDebug;
  if (v == "info") return LogLevel::kInfo;
  return LogLevel::kQuiet;
}

void log(LogLevel level, const std::string& msg) {
  if (level <= log_level()) std::cerr << "[ttsc] " << msg << '\n';
}

// Outputs are staged in memory and only written once the command succeeds;
// a failed write removes whatever was created.
struct Outputs {
  std::vector<std::filesystem::path> written;

  void write(const std::optional<std::string>& path, const std::string& body) {
    if (!path) {
      std::cout << body;
      return;
    }
    const std::filesystem::path target(*path);
    std::filesystem::path tmp = target;
    tmp += ".partial";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw ttsc::Error(ttsc::ErrorCode::kIoError, "cannot write '" + tmp.string() + "'");
      out << body;
      if (!out.flush()) {
        out.close();
        std::filesystem::remove(tmp);
        throw ttsc::Error(ttsc::ErrorCode::kIoError, "write failed for '" + tmp.string() + "'");
      }
    }
    std::filesystem::rename(tmp, target);
    written.push_back(target);
    log(LogLevel::kInfo, "wrote " + target.string());
  }

  void rollback() {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
  }
};

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> oracle, input, out, format, report, target, truth;
  std::vector<std::size_t> n_grid;
  std::vector<std::string> methods;
  std::optional<std::size_t> trials, repeats;
  bool lenient = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
  cmd->add_option("--n", o.n_grid, "sample sizes, overrides n_grid")->delimiter(',');
  cmd->add_option("--methods", o.methods, "estimators: sc,ppl,pc,rpc")->delimiter(',');
}

ttsc::RunConfig resolve(const Overrides& o) {
  ttsc::RunConfig c = o.config_path.empty() ? ttsc::RunConfig{} : ttsc::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.oracle) c.oracle = o.oracle;
  if (o.input) c.input = o.input;
  if (o.out) c.out = o.out;
  if (o.format) c.format = *o.format;
  if (o.report) c.report = o.report;
  if (o.target) c.target = o.target;
  if (o.truth) c.truth_file = o.truth;
  if (!o.n_grid.empty()) c.n_grid = o.n_grid;
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(ttsc::parse_estimator_kind(m));
  }
  if (o.trials) c.trials = *o.trials;
  if (o.repeats) c.repeats = *o.repeats;
  if (o.lenient) c.lenient = true;
  c.validate();
  return c;
}

const std::string& require(const std::optional<std::string>& v, const char* what) {
  if (!v) throw ttsc::Error(ttsc::ErrorCode::kConfigError, std::string("missing ") + what);
  return *v;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ttsc: sampling-based confidence estimation lab"};
  app.require_subcommand(1);
  Overrides o;

  auto* sim = app.add_subcommand("simulate", "accuracy and ECE over seeded repeats of an oracle suite");
  add_common(sim, o);
  sim->add_option("--oracle", o.oracle, "oracle JSON (object or array)");
  sim->add_option("--repeats", o.repeats, "seeded repeats");

  auto* conv = app.add_subcommand("convergence", "Monte Carlo estimation error against closed forms");
  add_common(conv, o);
  conv->add_option("--oracle", o.oracle, "oracle JSON");
  conv->add_option("--trials", o.trials, "Monte Carlo trials per n");
  conv->add_option("--target", o.target, "scored answer (default: the oracle truth)");

  auto* dec = app.add_subcommand("decompose", "estimation/model error breakdown");
  add_common(dec, o);
  dec->add_option("--oracle", o.oracle, "oracle JSON");
  dec->add_option("--trials", o.trials, "Monte Carlo trials when enumeration is too large");
  dec->add_option("--target", o.target, "scored answer (default: the oracle truth)");

  auto* est = app.add_subcommand("estimate", "run estimators on JSONL reasoning paths");
  add_common(est, o);
  est->add_option("--input", o.input, "JSONL path records");
  est->add_option("--format", o.format, "csv or json");
  est->add_option("--report", o.report, "write RPC pruning reports to this JSON file");
  est->add_option("--truth", o.truth, "JSON map problem_id -> answer");
  est->add_flag("--lenient", o.lenient, "skip malformed lines instead of failing");

  auto* fit = app.add_subcommand("fit-mixture", "fit the two-component Weibull mixture");
  add_common(fit, o);
  fit->add_option("--input", o.input, "JSONL path records or whitespace-separated numbers");
  fit->add_flag("--lenient", o.lenient, "skip malformed JSONL lines");

  auto* met = app.add_subcommand("metrics", "accuracy, ECE and reliability bins from result rows");
  add_common(met, o);
  met->add_option("--input", o.input, "results CSV written by estimate");

  auto* cfg_cmd = app.add_subcommand("config", "inspect configuration");
  bool print_defaults = false;
  cfg_cmd->add_flag("--print-defaults", print_defaults, "print the default configuration");
  cfg_cmd->add_option("--config", o.config_path, "validate and print this configuration");

  CLI11_PARSE(app, argc, argv);

  Outputs outputs;
  try {
    if (cfg_cmd->parsed()) {
      const ttsc::RunConfig c = o.config_path.empty() ? ttsc::RunConfig{} : ttsc::load_config(o.config_path);
      std::cout << dump(ttsc::config_to_json(c));
      return 0;
    }
    const ttsc::RunConfig c = resolve(o);
    log(LogLevel::kDebug, "config: " + ttsc::config_to_json(c).dump());

    if (sim->parsed()) {
      const auto suite = ttsc::load_oracles(require(c.oracle, "--oracle"));
      const auto cells = ttsc::simulate(c, suite);
      outputs.write(c.out, ttsc::render_simulation(cells));
    } else if (conv->parsed()) {
      const auto suite = ttsc::load_oracles(require(c.oracle, "--oracle"));
      if (suite.size() != 1) throw ttsc::Error(ttsc::ErrorCode::kConfigError, "convergence takes a single oracle");
      outputs.write(c.out, ttsc::render_convergence(ttsc::convergence(c, suite.front())));
    } else if (dec->parsed()) {
      const auto suite = ttsc::load_oracles(require(c.oracle, "--oracle"));
      if (suite.size() != 1) throw ttsc::Error(ttsc::ErrorCode::kConfigError, "decompose takes a single oracle");
      outputs.write(c.out, ttsc::render_decompose(ttsc::decompose(c, suite.front())));
    } else if (est->parsed()) {
      const auto ingest = ttsc::load_jsonl(require(c.input, "--input"), c.prob_mode, c.lenient);
      for (const auto& e : ingest.errors) {
        log(LogLevel::kInfo, "skipped line " + std::to_string(e.line) + ": " + e.message);
      }
      std::map<std::string, ttsc::AnswerLabel> truth;
      if (c.truth_file) truth = ttsc::load_truth(*c.truth_file);
      const auto result = ttsc::run_estimate(c, ingest.batches, truth);
      std::ostringstream body;
      ttsc::export_results(body, result.rows, ttsc::parse_export_format(c.format));
      outputs.write(c.out, body.str());
      if (c.report) outputs.write(c.report, dump(result.report));
    } else if (fit->parsed()) {
      const auto samples = ttsc::load_fit_input(require(c.input, "--input"), c);
      outputs.write(c.out, dump(ttsc::run_fit_mixture(c, samples)));
    } else if (met->parsed()) {
      const std::string& path = require(c.input, "--input");
      std::ifstream in(path);
      if (!in) throw ttsc::Error(ttsc::ErrorCode::kIoError, "cannot open '" + path + "'");
      const auto rows = ttsc::parse_results_csv(in);
      outputs.write(c.out, dump(ttsc::run_metrics(c, rows)));
    }
  } catch (const ttsc::Error& e) {
    outputs.rollback();
    std::cerr << "ttsc: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    outputs.rollback();
    std::cerr << "ttsc: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
