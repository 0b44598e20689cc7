#pragma once

// Generator-stratified judge performance: per-(judge, generator) agreement
// cells, per-judge marginals, an F1 matrix export, and per-generator answer
// verbosity. Cells with no retained instances stay empty, which keeps
// "missing" distinguishable from "scored zero".

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jeval/corpus.hpp"
#include "jeval/io.hpp"
#include "jeval/metrics.hpp"
#include "jeval/unicode.hpp"

namespace jeval {

struct StratumCell {
  ConfusionCounts counts;
  AgreementMetrics metrics;
  long long evaluated = 0;  // instances retained in the paired vectors
  long long skipped = 0;    // failed parses / missing verdicts in the stratum
};

struct JudgeStrata {
  StratumCell marginal;
  // One entry per generator present in the corpus; empty optional when the
  // stratum retained no instances.
  std::map<std::string, std::optional<StratumCell>> by_generator;
};

struct StratifiedReport {
  std::vector<std::string> generator_ids;  // lexicographic
  std::map<std::string, JudgeStrata> judges;
};

inline StratifiedReport stratify(
    const Corpus& corpus,
    const std::map<std::string, std::vector<JudgeVerdict>>& verdict_sets) {
  StratifiedReport report;
  {
    std::map<std::string, bool> gens;
    for (const auto& inst : corpus.instances) gens[inst.generator_id] = true;
    for (const auto& [gen, _] : gens) report.generator_ids.push_back(gen);
  }

  for (const auto& [judge_id, verdicts] : verdict_sets) {
    JudgeStrata strata;
    auto joined = join_labels(corpus, verdicts, judge_id);

    // Rebuild the per-generator split in corpus order.
    std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> split;
    std::map<std::string, long long> skipped_per_gen;
    for (const auto& gen : report.generator_ids) {
      split[gen];
      skipped_per_gen[gen] = 0;
    }
    {
      std::unordered_map<std::string, const JudgeVerdict*> by_instance;
      for (const auto& v : verdicts)
        if (v.judge_id == judge_id) by_instance.emplace(v.instance_id, &v);
      for (const auto& inst : corpus.instances) {
        auto it = by_instance.find(inst.instance_id);
        bool retained = inst.expert_label && it != by_instance.end() &&
                        it->second->parsed_label;
        if (!retained) {
          ++skipped_per_gen[inst.generator_id];
          continue;
        }
        auto& [h, p] = split[inst.generator_id];
        h.push_back(*inst.expert_label);
        p.push_back(*it->second->parsed_label);
      }
    }

    strata.marginal.counts = confusion(joined.human, joined.predicted);
    strata.marginal.metrics =
        agreement(strata.marginal.counts, joined.human, joined.predicted);
    strata.marginal.evaluated = static_cast<long long>(joined.human.size());
    strata.marginal.skipped = static_cast<long long>(joined.skipped.size());

    for (const auto& gen : report.generator_ids) {
      const auto& [h, p] = split[gen];
      if (h.empty()) {
        strata.by_generator[gen] = std::nullopt;
        continue;
      }
      StratumCell cell;
      cell.counts = confusion(h, p);
      cell.metrics = agreement(cell.counts, h, p);
      cell.evaluated = static_cast<long long>(h.size());
      cell.skipped = skipped_per_gen[gen];
      strata.by_generator[gen] = cell;
    }
    report.judges.emplace(judge_id, std::move(strata));
  }
  return report;
}

struct F1Matrix {
  std::vector<std::string> judges;      // rows
  std::vector<std::string> generators;  // columns
  std::vector<std::optional<double>> values;  // row-major

  std::optional<double> at(std::size_t row, std::size_t col) const {
    return values[row * generators.size() + col];
  }
};

// Row and column order is lexicographic unless explicit orderings are given.
inline F1Matrix f1_matrix(const StratifiedReport& report,
                          std::span<const std::string> judge_order = {},
                          std::span<const std::string> generator_order = {}) {
  if (report.judges.empty()) throw ValidationError("f1_matrix: empty report");
  F1Matrix m;
  if (judge_order.empty())
    for (const auto& [judge_id, _] : report.judges) m.judges.push_back(judge_id);
  else
    m.judges.assign(judge_order.begin(), judge_order.end());
  if (generator_order.empty())
    m.generators = report.generator_ids;
  else
    m.generators.assign(generator_order.begin(), generator_order.end());

  m.values.assign(m.judges.size() * m.generators.size(), std::nullopt);
  for (std::size_t r = 0; r < m.judges.size(); ++r) {
    auto judge_it = report.judges.find(m.judges[r]);
    if (judge_it == report.judges.end())
      throw ValidationError("f1_matrix: unknown judge " + m.judges[r]);
    for (std::size_t c = 0; c < m.generators.size(); ++c) {
      auto cell_it = judge_it->second.by_generator.find(m.generators[c]);
      if (cell_it == judge_it->second.by_generator.end() || !cell_it->second)
        continue;
      m.values[r * m.generators.size() + c] = cell_it->second->metrics.f1;
    }
  }
  return m;
}

inline std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

// CSV with a header row of generator ids and one row per judge; empty cells
// stay empty fields. Values carry 4 decimal places.
inline std::string f1_matrix_csv(const F1Matrix& m) {
  std::string out = "judge";
  for (const auto& gen : m.generators) out += "," + csv_field(gen);
  out.push_back('\n');
  for (std::size_t r = 0; r < m.judges.size(); ++r) {
    out += csv_field(m.judges[r]);
    for (std::size_t c = 0; c < m.generators.size(); ++c) {
      out.push_back(',');
      if (auto v = m.at(r, c)) out += format_fixed(*v, 4);
    }
    out.push_back('\n');
  }
  return out;
}

struct VerbosityEntry {
  long long count = 0;
  double mean_chars = 0;
  double median_chars = 0;
};

struct VerbosityProfile {
  std::map<std::string, VerbosityEntry> by_generator;
};

// Character counts are Unicode scalar values of the (already NFC) candidate
// text, so accented letters count once.
inline VerbosityProfile verbosity(const Corpus& corpus) {
  if (corpus.instances.empty()) throw ValidationError("verbosity: empty corpus");
  std::map<std::string, std::vector<double>> lengths;
  for (const auto& inst : corpus.instances)
    lengths[inst.generator_id].push_back(
        static_cast<double>(codepoint_count(inst.candidate_answer)));
  VerbosityProfile profile;
  for (auto& [gen, values] : lengths) {
    VerbosityEntry e;
    e.count = static_cast<long long>(values.size());
    double sum = 0;
    for (double v : values) sum += v;
    e.mean_chars = sum / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    std::size_t mid = values.size() / 2;
    e.median_chars = values.size() % 2 == 1
                         ? values[mid]
                         : (values[mid - 1] + values[mid]) / 2.0;
    profile.by_generator.emplace(gen, e);
  }
  return profile;
}

inline std::string verbosity_csv(const VerbosityProfile& profile) {
  std::string out = "generator,count,mean_chars,median_chars\n";
  for (const auto& [gen, e] : profile.by_generator) {
    out += csv_field(gen);
    out += "," + std::to_string(e.count);
    out += "," + format_fixed(e.mean_chars, 2);
    out += "," + format_fixed(e.median_chars, 2);
    out.push_back('\n');
  }
  return out;
}

}  // namespace jeval
