#pragma once

// Training-data construction: contrastive negatives built by swapping
// candidate answers across questions, positives built by paraphrasing
// reference answers, the binary-verdict reward used for policy
// optimization, and export of trainer-ready prompt/target files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "jeval/corpus.hpp"
#include "jeval/error.hpp"
#include "jeval/io.hpp"
#include "jeval/judge_client.hpp"
#include "jeval/rng.hpp"

namespace jeval {

enum class Provenance { original, swap_negative, paraphrase_positive };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::original: return "original";
    case Provenance::swap_negative: return "swap_negative";
    case Provenance::paraphrase_positive: return "paraphrase_positive";
  }
  return "original";
}

struct AugmentedInstance {
  EvalInstance instance;
  Provenance provenance = Provenance::original;
  std::vector<std::string> source_ids;  // empty for originals
};

inline std::vector<AugmentedInstance> as_originals(
    std::span<const EvalInstance> instances) {
  std::vector<AugmentedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances)
    out.push_back({inst, Provenance::original, {}});
  return out;
}

// Pairs one instance's question and reference with a candidate answer from
// a different question_id, labeled non-equivalent. Pairs are drawn without
// replacement from the feasible set; a produced (question, reference,
// candidate) triple never duplicates an original one.
inline std::vector<AugmentedInstance> swap_negatives(const Corpus& corpus,
                                                     std::size_t count,
                                                     std::uint64_t seed) {
  if (count == 0) return {};
  std::set<std::string> question_ids;
  for (const auto& inst : corpus.instances) {
    if (!inst.expert_label)
      throw ValidationError("swap_negatives: corpus must be fully labeled (" +
                            inst.instance_id + " has no expert_label)");
    question_ids.insert(inst.question_id);
  }
  if (question_ids.size() < 2)
    throw ValidationError("swap_negatives: need at least 2 distinct question_ids");

  // Candidate texts already attached to each question, to rule out
  // accidental duplicates of original triples.
  std::unordered_map<std::string, std::unordered_set<std::string>> originals;
  for (const auto& inst : corpus.instances)
    originals[inst.question_id].insert(inst.candidate_answer);

  const auto n = corpus.instances.size();
  std::vector<std::pair<std::size_t, std::size_t>> feasible;  // (target, donor)
  for (std::size_t t = 0; t < n; ++t) {
    const auto& target = corpus.instances[t];
    for (std::size_t d = 0; d < n; ++d) {
      const auto& donor = corpus.instances[d];
      if (donor.question_id == target.question_id) continue;
      if (originals[target.question_id].contains(donor.candidate_answer)) continue;
      feasible.emplace_back(t, d);
    }
  }
  if (count > feasible.size())
    throw ValidationError("swap_negatives: requested " + std::to_string(count) +
                          " but only " + std::to_string(feasible.size()) +
                          " feasible distinct pairings exist");

  SplitMix64 rng(derive_seed(seed, kStreamSwapNegatives));
  auto picks = sample_without_replacement(feasible.size(), count, rng);
  std::vector<AugmentedInstance> out;
  out.reserve(count);
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const auto& [t, d] = feasible[picks[k]];
    const auto& target = corpus.instances[t];
    const auto& donor = corpus.instances[d];
    AugmentedInstance aug;
    aug.instance.instance_id =
        target.instance_id + "-swapneg-" + donor.instance_id;
    aug.instance.question_id = target.question_id;
    aug.instance.generator_id = donor.generator_id;
    aug.instance.question = target.question;
    aug.instance.reference_answer = target.reference_answer;
    aug.instance.candidate_answer = donor.candidate_answer;
    aug.instance.expert_label = 0;
    aug.provenance = Provenance::swap_negative;
    aug.source_ids = {target.instance_id, donor.instance_id};
    out.push_back(std::move(aug));
  }
  return out;
}

// Supplies paraphrases for a batch of instances; the network-backed
// implementation wraps paraphrase_answers, tests can substitute an echo.
using ParaphraseFn =
    std::function<std::vector<ParaphraseResult>(std::span<const EvalInstance>)>;

// Samples `count` positive instances without replacement, paraphrases their
// reference answers, and emits them as new equivalent candidates.
inline std::vector<AugmentedInstance> paraphrase_positives(
    const Corpus& corpus, const ParaphraseFn& paraphrase, std::size_t count,
    std::uint64_t seed) {
  if (count == 0) return {};
  std::vector<const EvalInstance*> positives;
  for (const auto& inst : corpus.instances)
    if (inst.expert_label && *inst.expert_label == 1) positives.push_back(&inst);
  if (positives.size() < count)
    throw ValidationError("paraphrase_positives: requested " +
                          std::to_string(count) + " but corpus has only " +
                          std::to_string(positives.size()) +
                          " positive-labeled instances");

  SplitMix64 rng(derive_seed(seed, kStreamParaphrase));
  auto picks = sample_without_replacement(positives.size(), count, rng);
  std::vector<EvalInstance> selected;
  selected.reserve(count);
  for (auto idx : picks) selected.push_back(*positives[idx]);

  auto paraphrases = paraphrase(selected);
  if (paraphrases.size() != selected.size())
    throw ValidationError("paraphrase_positives: paraphrase count mismatch");

  std::vector<AugmentedInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto& src = selected[i];
    std::string text = nfc(paraphrases[i].paraphrase);
    if (trim(text).empty())
      throw ValidationError("paraphrase_positives: empty paraphrase for instance " +
                            src.instance_id);
    AugmentedInstance aug;
    aug.instance.instance_id = src.instance_id + "-para";
    aug.instance.question_id = src.question_id;
    aug.instance.generator_id = "paraphrase";
    aug.instance.question = src.question;
    aug.instance.reference_answer = src.reference_answer;
    aug.instance.candidate_answer = std::move(text);
    aug.instance.expert_label = 1;
    aug.provenance = Provenance::paraphrase_positive;
    aug.source_ids = {src.instance_id};
    out.push_back(std::move(aug));
  }
  return out;
}

struct RewardScore {
  double correctness = 0;  // +1.0 or -1.0
  double format = 0;       // +0.5 or 0.0
  double total = 0;        // correctness + format
};

// Verdict reward: correctness +1.0 when the parsed label (strict or
// lenient) matches the gold label, else -1.0 (parse failures included);
// format +0.5 only when the trimmed output is exactly "0" or "1".
inline RewardScore grpo_reward(std::string_view raw_output, int gold_label) {
  RewardScore score;
  std::string_view t = trim(raw_output);
  score.format = (t == "0" || t == "1") ? 0.5 : 0.0;
  auto parsed = parse_verdict(raw_output);
  score.correctness = (parsed.label && *parsed.label == gold_label) ? 1.0 : -1.0;
  score.total = score.correctness + score.format;
  return score;
}

inline ordered_json augmented_to_json(const AugmentedInstance& aug) {
  ordered_json line = instance_to_json(aug.instance);
  line["provenance"] = provenance_name(aug.provenance);
  line["source_ids"] = aug.source_ids;
  return line;
}

inline void save_augmented(std::span<const AugmentedInstance> instances,
                           const std::filesystem::path& path) {
  std::vector<EvalInstance> plain;
  plain.reserve(instances.size());
  for (const auto& aug : instances) plain.push_back(aug.instance);
  validate_instances(plain);
  std::string out;
  for (const auto& aug : instances) {
    out += augmented_to_json(aug).dump();
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

struct TrainingExport {
  std::filesystem::path train_path;
  std::filesystem::path valid_path;
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
};

// Writes trainer-ready JSONL: {system_prompt, user_prompt, target,
// provenance} per line, prompts rendered through the evaluation bundle.
// Instances are shuffled with the given seed, then the validation fraction
// (rounded to the nearest count) is taken from the tail of the shuffle.
inline TrainingExport export_training(std::span<const AugmentedInstance> instances,
                                      const std::filesystem::path& out_dir,
                                      double validation_split, std::uint64_t seed,
                                      const PromptBundle& bundle = default_eval_bundle()) {
  if (instances.empty()) throw ValidationError("export_training: empty input");
  if (validation_split < 0 || validation_split >= 1)
    throw ValidationError("export_training: split must be in [0, 1)");

  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(derive_seed(seed, kStreamExportSplit));
  seeded_shuffle(order, rng);

  auto n = instances.size();
  auto n_valid = static_cast<std::size_t>(
      std::lround(static_cast<double>(n) * validation_split));
  if (n_valid >= n) n_valid = n - 1;
  auto n_train = n - n_valid;

  auto render_line = [&](const AugmentedInstance& aug) {
    if (!aug.instance.expert_label)
      throw ValidationError("export_training: instance " +
                            aug.instance.instance_id + " has no label");
    auto rendered = render_prompt(bundle, aug.instance);
    ordered_json line;
    line["system_prompt"] = rendered.system;
    line["user_prompt"] = rendered.user;
    line["target"] = std::to_string(*aug.instance.expert_label);
    line["provenance"] = provenance_name(aug.provenance);
    return line.dump();
  };

  std::string train_out, valid_out;
  for (std::size_t i = 0; i < n_train; ++i) {
    train_out += render_line(instances[order[i]]);
    train_out.push_back('\n');
  }
  for (std::size_t i = n_train; i < n; ++i) {
    valid_out += render_line(instances[order[i]]);
    valid_out.push_back('\n');
  }

  TrainingExport result;
  result.train_path = out_dir / "train.jsonl";
  result.valid_path = out_dir / "valid.jsonl";
  result.n_train = n_train;
  result.n_valid = n_valid;
  write_file_atomic(result.train_path, train_out);
  write_file_atomic(result.valid_path, valid_out);
  return result;
}

}  // namespace jeval
