#pragma once

// JSONL ingestion of sampled paths and CSV/JSON export of selections.
//
// One record per line:
//   {"problem_id": "...", "text": "...", "token_logprobs": [...],
//    "answer": "...", "class_id": 3, "ext_score": 0.7}
// class_id and ext_score are optional.

#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ttsc/error.hpp"
#include "ttsc/paths.hpp"

namespace ttsc {

struct PathRecord {
  std::string problem_id;
  std::string text;
  std::vector<double> token_logprobs;
  std::string answer;
  std::optional<std::int64_t> class_id;
  std::optional<double> ext_score;
};

inline PathRecord parse_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "record is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "problem_id" && key != "text" && key != "token_logprobs" && key != "answer" &&
        key != "class_id" && key != "ext_score") {
      throw Error(ErrorCode::kParseError, "unknown field '" + key + "'");
    }
  }
  PathRecord r;
  try {
    r.problem_id = j.at("problem_id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
    r.answer = j.at("answer").get<std::string>();
    if (j.contains("class_id") && !j["class_id"].is_null()) r.class_id = j["class_id"].get<std::int64_t>();
    if (j.contains("ext_score") && !j["ext_score"].is_null()) r.ext_score = j["ext_score"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (r.token_logprobs.empty()) throw Error(ErrorCode::kParseError, "token_logprobs is empty");
  for (double lp : r.token_logprobs) {
    if (!(lp <= 0.0)) throw Error(ErrorCode::kParseError, "token log-probability > 0");
  }
  if (canonicalize_answer(r.answer).empty() && !r.class_id) {
    throw Error(ErrorCode::kParseError, "answer is empty after canonicalization");
  }
  if (r.ext_score && !(*r.ext_score >= 0.0 && *r.ext_score <= 1.0)) {
    throw Error(ErrorCode::kParseError, "ext_score outside [0, 1]");
  }
  return r;
}

inline nlohmann::json record_to_json(const PathRecord& r) {
  nlohmann::json j{{"problem_id", r.problem_id},
                   {"text", r.text},
                   {"token_logprobs", r.token_logprobs},
                   {"answer", r.answer}};
  if (r.class_id) j["class_id"] = *r.class_id;
  if (r.ext_score) j["ext_score"] = *r.ext_score;
  return j;
}

inline ReasoningPath to_path(const PathRecord& r, ProbMode mode) {
  return ReasoningPath::from_logprobs(r.text, r.token_logprobs,
                                      AnswerLabel::from_raw(r.answer, r.class_id), mode, r.ext_score);
}

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<SampleBatch> batches;  // in order of first appearance
  std::vector<PathRecord> records;   // accepted records, file order
  std::vector<LineError> errors;     // skipped lines (lenient mode)
};

inline IngestResult parse_jsonl(std::istream& in, ProbMode mode, bool lenient = false) {
  IngestResult out;
  std::unordered_map<std::string, std::size_t> slot;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      PathRecord r = parse_record(line);
      ReasoningPath path = to_path(r, mode);
      auto [it, inserted] = slot.try_emplace(r.problem_id, out.batches.size());
      if (inserted) out.batches.push_back(SampleBatch{r.problem_id, {}});
      out.batches[it->second].paths.push_back(std::move(path));
      out.records.push_back(std::move(r));
    } catch (const Error& e) {
      out.errors.push_back(LineError{lineno, e.what()});
    }
  }
  if (!lenient && !out.errors.empty()) {
    std::string msg;
    for (const auto& e : out.errors) msg += fmt::format("line {}: {}; ", e.line, e.message);
    throw Error(ErrorCode::kParseError, msg);
  }
  return out;
}

inline IngestResult load_jsonl(const std::string& path, ProbMode mode, bool lenient = false) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return parse_jsonl(in, mode, lenient);
}

inline void write_jsonl(std::ostream& out, std::span<const PathRecord> records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

struct ResultRow {
  std::string problem_id;
  std::string method;
  std::size_t n = 0;
  std::string selected_answer;
  double confidence = 0.0;
  std::optional<bool> correct;  // unknown without ground truth
};

enum class ExportFormat { kCsv, kJson };

inline ExportFormat parse_export_format(std::string_view name) {
  if (name == "csv") return ExportFormat::kCsv;
  if (name == "json") return ExportFormat::kJson;
  throw Error(ErrorCode::kConfigError, "unknown format '" + std::string(name) + "'");
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Column order is fixed: problem_id, method, n, selected_answer, confidence, correct.
inline void export_results(std::ostream& out, std::span<const ResultRow> rows, ExportFormat format) {
  if (format == ExportFormat::kCsv) {
    out << "problem_id,method,n,selected_answer,confidence,correct\n";
    for (const auto& r : rows) {
      out << csv_field(r.problem_id) << ',' << csv_field(r.method) << ',' << r.n << ','
          << csv_field(r.selected_answer) << ',' << fmt::format("{}", r.confidence) << ','
          << (r.correct ? (*r.correct ? "1" : "0") : "") << '\n';
    }
    return;
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["problem_id"] = r.problem_id;
    j["method"] = r.method;
    j["n"] = r.n;
    j["selected_answer"] = r.selected_answer;
    j["confidence"] = r.confidence;
    j["correct"] = r.correct ? nlohmann::ordered_json(*r.correct) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

inline void export_results(const std::string& path, std::span<const ResultRow> rows, ExportFormat format) {
  std::ostringstream buf;
  export_results(buf, rows, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << buf.str()) || !out.flush()) {
    throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  }
}

}  // namespace ttsc
