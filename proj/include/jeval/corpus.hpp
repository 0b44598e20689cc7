#pragma once

// Data model and line-delimited JSON persistence for evaluation instances,
// expert labels and judge verdicts. Serialization is canonical: known
// fields in a fixed order, unknown fields preserved after them in sorted
// key order, minified JSON, one record per line, trailing newline. Loading
// then saving a canonical file is byte-identical.

#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "jeval/error.hpp"
#include "jeval/io.hpp"
#include "jeval/sha256.hpp"
#include "jeval/unicode.hpp"

namespace jeval {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct EvalInstance {
  std::string instance_id;
  std::string question_id;
  std::string generator_id;
  std::string question;
  std::string reference_answer;
  std::string candidate_answer;
  std::optional<int> expert_label;
  // Unknown input fields, kept for round-tripping; ignored semantically.
  json extra = json::object();

  bool operator==(const EvalInstance&) const = default;
};

enum class ParseStatus { strict, lenient, failed };

inline const char* parse_status_name(ParseStatus s) {
  switch (s) {
    case ParseStatus::strict: return "strict";
    case ParseStatus::lenient: return "lenient";
    case ParseStatus::failed: return "failed";
  }
  return "failed";
}

inline ParseStatus parse_status_from(const std::string& name) {
  if (name == "strict") return ParseStatus::strict;
  if (name == "lenient") return ParseStatus::lenient;
  if (name == "failed") return ParseStatus::failed;
  throw ValidationError("unknown parse_status: " + name);
}

struct JudgeVerdict {
  std::string instance_id;
  std::string judge_id;
  std::string raw_output;
  std::optional<int> parsed_label;
  ParseStatus parse_status = ParseStatus::failed;
  bool from_cache = false;

  bool operator==(const JudgeVerdict&) const = default;
};

struct Corpus {
  std::vector<EvalInstance> instances;
  std::string source_path;
  std::string fingerprint;
};

namespace detail {

inline std::string require_string(const json& j, const char* field,
                                  const std::string& context) {
  if (!j.contains(field))
    throw ValidationError(context + ": missing field '" + field + "'");
  const auto& v = j.at(field);
  if (!v.is_string())
    throw ValidationError(context + ": field '" + field + "' must be a string");
  return v.get<std::string>();
}

inline std::optional<int> optional_binary(const json& j, const char* field,
                                          const std::string& context) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  const auto& v = j.at(field);
  if (!v.is_number_integer())
    throw ValidationError(context + ": field '" + field + "' must be 0 or 1");
  int value = v.get<int>();
  if (value != 0 && value != 1)
    throw ValidationError(context + ": field '" + field + "' must be 0 or 1, got " +
                          std::to_string(value));
  return value;
}

inline constexpr const char* kInstanceFields[] = {
    "instance_id",      "question_id",      "generator_id", "question",
    "reference_answer", "candidate_answer", "expert_label"};

}  // namespace detail

inline ordered_json instance_to_json(const EvalInstance& inst) {
  ordered_json line;
  line["instance_id"] = inst.instance_id;
  line["question_id"] = inst.question_id;
  line["generator_id"] = inst.generator_id;
  line["question"] = inst.question;
  line["reference_answer"] = inst.reference_answer;
  line["candidate_answer"] = inst.candidate_answer;
  if (inst.expert_label) line["expert_label"] = *inst.expert_label;
  // json objects iterate in sorted key order.
  for (auto it = inst.extra.begin(); it != inst.extra.end(); ++it)
    line[it.key()] = it.value();
  return line;
}

inline std::string canonical_instance_line(const EvalInstance& inst) {
  return instance_to_json(inst).dump();
}

inline EvalInstance instance_from_json(const json& j, const std::string& context) {
  if (!j.is_object()) throw ValidationError(context + ": record is not a JSON object");
  EvalInstance inst;
  inst.instance_id = detail::require_string(j, "instance_id", context);
  const std::string ctx = context + " (instance_id=" + inst.instance_id + ")";
  inst.question_id = detail::require_string(j, "question_id", ctx);
  inst.generator_id = detail::require_string(j, "generator_id", ctx);
  inst.question = nfc(detail::require_string(j, "question", ctx));
  inst.reference_answer = nfc(detail::require_string(j, "reference_answer", ctx));
  inst.candidate_answer = nfc(detail::require_string(j, "candidate_answer", ctx));
  inst.expert_label = detail::optional_binary(j, "expert_label", ctx);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* f : detail::kInstanceFields)
      if (it.key() == f) known = true;
    if (!known) inst.extra[it.key()] = it.value();
  }
  if (trim(inst.question).empty())
    throw ValidationError(ctx + ": question is empty");
  if (trim(inst.reference_answer).empty())
    throw ValidationError(ctx + ": reference_answer is empty");
  if (trim(inst.candidate_answer).empty())
    throw ValidationError(ctx + ": candidate_answer is empty");
  return inst;
}

// Set-level invariants: unique instance_id; instances sharing a question_id
// carry identical question and reference texts.
inline void validate_instances(std::span<const EvalInstance> instances) {
  std::unordered_set<std::string> seen_ids;
  std::unordered_map<std::string, const EvalInstance*> first_of_question;
  for (const auto& inst : instances) {
    if (!seen_ids.insert(inst.instance_id).second)
      throw ValidationError("duplicate instance_id: " + inst.instance_id);
    auto [it, inserted] = first_of_question.emplace(inst.question_id, &inst);
    if (!inserted) {
      if (it->second->question != inst.question)
        throw ValidationError("question_id " + inst.question_id +
                              ": question text differs at instance_id " +
                              inst.instance_id);
      if (it->second->reference_answer != inst.reference_answer)
        throw ValidationError("question_id " + inst.question_id +
                              ": reference_answer differs at instance_id " +
                              inst.instance_id);
    }
  }
}

inline std::string canonical_serialization(std::span<const EvalInstance> instances) {
  std::string out;
  for (const auto& inst : instances) {
    out += canonical_instance_line(inst);
    out.push_back('\n');
  }
  return out;
}

inline std::string corpus_fingerprint(std::span<const EvalInstance> instances) {
  return sha256_hex(canonical_serialization(instances));
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::string content = read_file(path);
  Corpus corpus;
  corpus.source_path = path.string();
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
    }
    corpus.instances.push_back(
        instance_from_json(j, path.string() + ":" + std::to_string(line_no)));
  }
  if (corpus.instances.empty())
    throw ValidationError(path.string() + ": empty corpus");
  validate_instances(corpus.instances);
  corpus.fingerprint = corpus_fingerprint(corpus.instances);
  return corpus;
}

inline void save_corpus(std::span<const EvalInstance> instances,
                        const std::filesystem::path& path) {
  validate_instances(instances);
  write_file_atomic(path, canonical_serialization(instances));
}

inline ordered_json verdict_to_json(const JudgeVerdict& v) {
  ordered_json line;
  line["instance_id"] = v.instance_id;
  line["judge_id"] = v.judge_id;
  line["raw_output"] = v.raw_output;
  if (v.parsed_label)
    line["parsed_label"] = *v.parsed_label;
  else
    line["parsed_label"] = nullptr;
  line["parse_status"] = parse_status_name(v.parse_status);
  line["from_cache"] = v.from_cache;
  return line;
}

inline void validate_verdict(const JudgeVerdict& v) {
  const std::string ctx =
      "verdict (" + v.instance_id + ", " + v.judge_id + ")";
  if (v.parse_status == ParseStatus::failed) {
    if (v.parsed_label)
      throw ValidationError(ctx + ": failed parse must carry no label");
    return;
  }
  if (!v.parsed_label)
    throw ValidationError(ctx + ": parsed verdict must carry a label");
  if (*v.parsed_label != 0 && *v.parsed_label != 1)
    throw ValidationError(ctx + ": label must be 0 or 1");
  if (v.parse_status == ParseStatus::strict) {
    std::string t(trim(v.raw_output));
    if (t != "0" && t != "1")
      throw ValidationError(ctx + ": strict parse requires raw output '0' or '1'");
    if (std::to_string(*v.parsed_label) != t)
      throw ValidationError(ctx + ": strict label disagrees with raw output");
  }
}

inline JudgeVerdict verdict_from_json(const json& j, const std::string& context) {
  JudgeVerdict v;
  v.instance_id = detail::require_string(j, "instance_id", context);
  v.judge_id = detail::require_string(j, "judge_id", context);
  v.raw_output = detail::require_string(j, "raw_output", context);
  v.parsed_label = detail::optional_binary(j, "parsed_label", context);
  v.parse_status = parse_status_from(detail::require_string(j, "parse_status", context));
  if (j.contains("from_cache") && j.at("from_cache").is_boolean())
    v.from_cache = j.at("from_cache").get<bool>();
  validate_verdict(v);
  return v;
}

inline void check_verdict_uniqueness(std::span<const JudgeVerdict> verdicts) {
  std::unordered_set<std::string> seen;
  for (const auto& v : verdicts) {
    std::string key = v.instance_id + "\x1f" + v.judge_id;
    if (!seen.insert(key).second)
      throw ValidationError("duplicate verdict for (" + v.instance_id + ", " +
                            v.judge_id + ")");
  }
}

inline void save_verdicts(std::span<const JudgeVerdict> verdicts,
                          const std::filesystem::path& path) {
  check_verdict_uniqueness(verdicts);
  std::string out;
  for (const auto& v : verdicts) {
    validate_verdict(v);
    out += verdict_to_json(v).dump();
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

inline std::vector<JudgeVerdict> load_verdicts(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<JudgeVerdict> verdicts;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
    }
    verdicts.push_back(
        verdict_from_json(j, path.string() + ":" + std::to_string(line_no)));
  }
  check_verdict_uniqueness(verdicts);
  return verdicts;
}

struct JoinedLabels {
  std::vector<int> human;
  std::vector<int> predicted;
  std::vector<std::string> skipped;  // failed parses or missing verdicts
};

// Aligns expert labels with one judge's parsed verdicts, in corpus order.
inline JoinedLabels join_labels(const Corpus& corpus,
                                std::span<const JudgeVerdict> verdicts,
                                const std::string& judge_id) {
  std::unordered_map<std::string, const JudgeVerdict*> by_instance;
  bool judge_seen = false;
  for (const auto& v : verdicts) {
    if (v.judge_id != judge_id) continue;
    judge_seen = true;
    by_instance.emplace(v.instance_id, &v);
  }
  if (!judge_seen)
    throw ValidationError("judge_id not present in verdict set: " + judge_id);
  std::size_t labeled = 0;
  JoinedLabels joined;
  for (const auto& inst : corpus.instances) {
    if (!inst.expert_label) {
      joined.skipped.push_back(inst.instance_id);
      continue;
    }
    ++labeled;
    auto it = by_instance.find(inst.instance_id);
    if (it == by_instance.end() || !it->second->parsed_label) {
      joined.skipped.push_back(inst.instance_id);
      continue;
    }
    joined.human.push_back(*inst.expert_label);
    joined.predicted.push_back(*it->second->parsed_label);
  }
  if (labeled == 0)
    throw ValidationError("no instances with expert labels");
  return joined;
}

}  // namespace jeval
