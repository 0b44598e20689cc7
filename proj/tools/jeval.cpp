// jeval: evaluate LLM judges of semantic equivalence on open-ended QA.
//
// Subcommands: judge, evaluate, compare, stratify, augment. One JSON config
// file describes the run; flags override config values, which override
// built-in defaults. Every emitted file embeds the config and corpus
// fingerprints plus all seeds, so equal fingerprints imply byte-identical
// outputs.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "jeval/jeval.hpp"

namespace {

using jeval::json;
using jeval::ordered_json;

struct RunConfig {
  std::string config_path;
  std::string corpus_path;
  std::string cache_dir = ".jeval-cache";
  std::string out_dir = "jeval-out";
  std::vector<jeval::JudgeConfig> judges;
  std::string prompt_system{jeval::kEvalSystemPrompt};
  std::string prompt_user{jeval::kDefaultUserTemplate};
  std::uint64_t seed_bootstrap = 42;
  std::uint64_t seed_permutation = 43;
  std::uint64_t seed_augment = 44;
  long long bootstrap_iters = 10000;
  long long perm_iters = 10000;
  std::vector<std::string> metrics = {"accuracy", "f1", "pearson"};
  std::size_t swap_count = 42;
  std::size_t paraphrase_count = 42;
  double validation_split = 0.1;
  std::string paraphrase_judge;  // defaults to the first judge
  bool centered_bootstrap = false;

  std::string fingerprint;  // of the effective config, filled after merge
};

jeval::JudgeConfig judge_from_json(const json& j) {
  jeval::JudgeConfig cfg;
  cfg.judge_id = j.value("judge_id", "");
  cfg.endpoint_url = j.value("endpoint_url", "");
  cfg.model_name = j.value("model_name", "");
  cfg.api_key_env = j.value("api_key_env", "");
  cfg.max_retries = j.value("max_retries", cfg.max_retries);
  cfg.request_timeout_s = j.value("request_timeout", cfg.request_timeout_s);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.max_parallel = j.value("max_parallel", cfg.max_parallel);
  cfg.validate();
  return cfg;
}

void apply_config_file(RunConfig& run, const std::string& path) {
  json j;
  try {
    j = json::parse(jeval::read_file(path));
  } catch (const json::parse_error& e) {
    throw jeval::ConfigError(path + ": malformed config JSON: " + e.what());
  }
  if (!j.is_object()) throw jeval::ConfigError(path + ": config must be a JSON object");
  run.corpus_path = j.value("corpus", run.corpus_path);
  run.cache_dir = j.value("cache_dir", run.cache_dir);
  run.out_dir = j.value("out_dir", run.out_dir);
  if (j.contains("judges")) {
    if (!j["judges"].is_array())
      throw jeval::ConfigError(path + ": 'judges' must be an array");
    for (const auto& item : j["judges"]) run.judges.push_back(judge_from_json(item));
  }
  if (j.contains("prompt")) {
    const auto& p = j["prompt"];
    run.prompt_system = p.value("system", run.prompt_system);
    run.prompt_user = p.value("user_template", run.prompt_user);
  }
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    run.seed_bootstrap = s.value("bootstrap", run.seed_bootstrap);
    run.seed_permutation = s.value("permutation", run.seed_permutation);
    run.seed_augment = s.value("augment", run.seed_augment);
  }
  run.bootstrap_iters = j.value("bootstrap_iters", run.bootstrap_iters);
  run.perm_iters = j.value("perm_iters", run.perm_iters);
  if (j.contains("metrics"))
    run.metrics = j["metrics"].get<std::vector<std::string>>();
  if (j.contains("augment")) {
    const auto& a = j["augment"];
    run.swap_count = a.value("swap_count", run.swap_count);
    run.paraphrase_count = a.value("paraphrase_count", run.paraphrase_count);
    run.validation_split = a.value("split", run.validation_split);
    run.paraphrase_judge = a.value("paraphrase_judge", run.paraphrase_judge);
  }
}

// Canonical view of the effective configuration (defaults included); its
// hash is the config fingerprint embedded in every output.
json effective_config_json(const RunConfig& run) {
  json judges = json::array();
  for (const auto& jc : run.judges) {
    judges.push_back({{"judge_id", jc.judge_id},
                      {"endpoint_url", jc.endpoint_url},
                      {"model_name", jc.model_name},
                      {"api_key_env", jc.api_key_env},
                      {"max_retries", jc.max_retries},
                      {"request_timeout", jc.request_timeout_s},
                      {"temperature", jc.temperature},
                      {"max_parallel", jc.max_parallel}});
  }
  return json{
      {"corpus", run.corpus_path},
      {"cache_dir", run.cache_dir},
      {"out_dir", run.out_dir},
      {"judges", judges},
      {"prompt", {{"system", run.prompt_system}, {"user_template", run.prompt_user}}},
      {"seeds",
       {{"bootstrap", run.seed_bootstrap},
        {"permutation", run.seed_permutation},
        {"augment", run.seed_augment}}},
      {"bootstrap_iters", run.bootstrap_iters},
      {"perm_iters", run.perm_iters},
      {"metrics", run.metrics},
      {"augment",
       {{"swap_count", run.swap_count},
        {"paraphrase_count", run.paraphrase_count},
        {"split", run.validation_split},
        {"paraphrase_judge", run.paraphrase_judge}}},
      {"centered_bootstrap", run.centered_bootstrap}};
}

void finalize(RunConfig& run) {
  if (run.corpus_path.empty())
    throw jeval::ConfigError("no corpus given (use --corpus or the config file)");
  if (run.paraphrase_judge.empty() && !run.judges.empty())
    run.paraphrase_judge = run.judges.front().judge_id;
  run.fingerprint = jeval::sha256_hex(effective_config_json(run).dump());
}

const jeval::JudgeConfig& find_judge(const RunConfig& run, const std::string& judge_id) {
  for (const auto& j : run.judges)
    if (j.judge_id == judge_id) return j;
  throw jeval::ConfigError("judge not present in config: " + judge_id);
}

jeval::PromptBundle bundle_for(const RunConfig& run) {
  return jeval::make_prompt_bundle(run.prompt_system, run.prompt_user);
}

std::filesystem::path verdicts_path(const RunConfig& run, const std::string& judge_id) {
  return std::filesystem::path(run.out_dir) / ("verdicts-" + judge_id + ".jsonl");
}

ordered_json provenance(const RunConfig& run, const jeval::Corpus& corpus) {
  ordered_json p;
  p["tool"] = jeval::kToolName;
  p["version"] = jeval::kVersion;
  p["config_fingerprint"] = run.fingerprint;
  p["corpus_fingerprint"] = corpus.fingerprint;
  p["seeds"] = {{"bootstrap", run.seed_bootstrap},
                {"permutation", run.seed_permutation},
                {"augment", run.seed_augment}};
  p["iterations"] = {{"bootstrap", run.bootstrap_iters}, {"permutation", run.perm_iters}};
  p["rng"] = jeval::kRngAlgorithm;
  p["variants"] = {{"tokenizer", jeval::kTokenizerVariant},
                   {"bleu", jeval::kBleuVariant},
                   {"rouge_l", jeval::kRougeLVariant},
                   {"mcnemar", jeval::kMcnemarVariant},
                   {"bootstrap", run.centered_bootstrap
                                     ? jeval::kBootstrapVariantCentered
                                     : jeval::kBootstrapVariantUncentered},
                   {"permutation", jeval::kPermutationVariant}};
  return p;
}

std::string percent(double value) { return jeval::format_fixed(100.0 * value, 2); }

std::string percent_or_empty(const std::optional<double>& value) {
  return value ? percent(*value) : std::string();
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  jeval::write_file_atomic(path, j.dump(2) + "\n");
}

struct ParseCounts {
  long long strict = 0, lenient = 0, failed = 0;
};

ParseCounts count_statuses(std::span<const jeval::JudgeVerdict> verdicts) {
  ParseCounts c;
  for (const auto& v : verdicts) {
    switch (v.parse_status) {
      case jeval::ParseStatus::strict: ++c.strict; break;
      case jeval::ParseStatus::lenient: ++c.lenient; break;
      case jeval::ParseStatus::failed: ++c.failed; break;
    }
  }
  return c;
}

// --- subcommands -----------------------------------------------------------

int cmd_judge(RunConfig& run, const std::string& judge_id) {
  auto corpus = jeval::load_corpus(run.corpus_path);
  const auto& judge = find_judge(run, judge_id);
  auto bundle = bundle_for(run);
  jeval::CacheStore cache{run.cache_dir};
  auto result = jeval::judge_corpus(corpus, judge, bundle, cache);
  jeval::save_verdicts(result.verdicts, verdicts_path(run, judge_id));

  auto counts = count_statuses(result.verdicts);
  ordered_json summary;
  summary["provenance"] = provenance(run, corpus);
  summary["judge_id"] = judge_id;
  summary["model_name"] = judge.model_name;
  summary["prompt_hash"] = bundle.prompt_hash;
  summary["n_instances"] = corpus.instances.size();
  summary["parse_counts"] = {{"strict", counts.strict},
                             {"lenient", counts.lenient},
                             {"failed", counts.failed}};
  summary["network_calls"] = result.stats.network_calls;
  summary["cache_hits"] = result.stats.cache_hits;
  summary["transport_failures"] = result.stats.transport_failures;
  write_json(std::filesystem::path(run.out_dir) / ("judge-" + judge_id + ".json"),
             summary);

  std::cout << "judge " << judge_id << ": " << result.verdicts.size()
            << " verdicts (strict " << counts.strict << ", lenient "
            << counts.lenient << ", failed " << counts.failed << "), "
            << result.stats.network_calls << " network calls, "
            << result.stats.cache_hits << " cache hits\n"
            << "wrote " << verdicts_path(run, judge_id).string() << "\n";
  return 0;
}

int cmd_evaluate(RunConfig& run, const std::string& judge_id, bool lexical) {
  auto corpus = jeval::load_corpus(run.corpus_path);
  auto verdicts = jeval::load_verdicts(verdicts_path(run, judge_id));
  auto joined = jeval::join_labels(corpus, verdicts, judge_id);
  auto counts = jeval::confusion(joined.human, joined.predicted);
  auto metrics = jeval::agreement(counts, joined.human, joined.predicted);
  auto statuses = count_statuses(verdicts);

  ordered_json report;
  report["provenance"] = provenance(run, corpus);
  report["judge_id"] = judge_id;
  report["n_evaluated"] = joined.human.size();
  report["n_skipped"] = joined.skipped.size();
  report["skipped_instance_ids"] = joined.skipped;
  report["parse_counts"] = {{"strict", statuses.strict},
                            {"lenient", statuses.lenient},
                            {"failed", statuses.failed}};
  report["confusion"] = {{"tp", counts.tp}, {"fp", counts.fp},
                         {"tn", counts.tn}, {"fn", counts.fn}};
  ordered_json raw;
  raw["accuracy"] = metrics.accuracy;
  raw["precision"] = metrics.precision;
  raw["recall"] = metrics.recall;
  raw["f1"] = metrics.f1;
  raw["pearson"] = metrics.pearson ? ordered_json(*metrics.pearson) : ordered_json(nullptr);
  raw["spearman"] = metrics.spearman ? ordered_json(*metrics.spearman) : ordered_json(nullptr);
  report["metrics"] = raw;
  ordered_json pct;
  pct["accuracy"] = percent(metrics.accuracy);
  pct["precision"] = percent(metrics.precision);
  pct["recall"] = percent(metrics.recall);
  pct["f1"] = percent(metrics.f1);
  pct["pearson"] = percent_or_empty(metrics.pearson);
  pct["spearman"] = percent_or_empty(metrics.spearman);
  report["percent"] = pct;

  if (lexical) {
    std::vector<double> bleu_scores, rouge_scores;
    std::vector<int> labels;
    for (const auto& inst : corpus.instances) {
      if (!inst.expert_label) continue;
      auto cand = jeval::tokenize(inst.candidate_answer);
      auto ref = jeval::tokenize(inst.reference_answer);
      bleu_scores.push_back(jeval::bleu(cand, ref));
      rouge_scores.push_back(jeval::rouge_l(cand, ref));
      labels.push_back(*inst.expert_label);
    }
    auto bleu_r = jeval::metric_label_correlation(bleu_scores, labels);
    auto rouge_r = jeval::metric_label_correlation(rouge_scores, labels);
    ordered_json lex;
    lex["bleu_pearson"] = bleu_r ? ordered_json(*bleu_r) : ordered_json(nullptr);
    lex["rouge_l_pearson"] = rouge_r ? ordered_json(*rouge_r) : ordered_json(nullptr);
    lex["bleu_pearson_percent"] = percent_or_empty(bleu_r);
    lex["rouge_l_pearson_percent"] = percent_or_empty(rouge_r);
    report["lexical"] = lex;
  }

  auto out_json = std::filesystem::path(run.out_dir) / ("evaluate-" + judge_id + ".json");
  auto out_csv = std::filesystem::path(run.out_dir) / ("evaluate-" + judge_id + ".csv");
  write_json(out_json, report);
  std::string csv = "judge,n,precision,recall,f1,accuracy,pearson,spearman\n";
  csv += jeval::csv_field(judge_id) + "," + std::to_string(joined.human.size()) +
         "," + percent(metrics.precision) + "," + percent(metrics.recall) + "," +
         percent(metrics.f1) + "," + percent(metrics.accuracy) + "," +
         percent_or_empty(metrics.pearson) + "," +
         percent_or_empty(metrics.spearman) + "\n";
  jeval::write_file_atomic(out_csv, csv);

  std::cout << "evaluate " << judge_id << ": n=" << joined.human.size()
            << " P=" << percent(metrics.precision) << " R=" << percent(metrics.recall)
            << " F1=" << percent(metrics.f1) << " Acc=" << percent(metrics.accuracy)
            << " r=" << percent_or_empty(metrics.pearson) << "\n"
            << "wrote " << out_json.string() << "\n";
  return 0;
}

jeval::PairedSample paired_sample_for(const jeval::Corpus& corpus,
                                      std::span<const jeval::JudgeVerdict> va,
                                      std::span<const jeval::JudgeVerdict> vb,
                                      const std::string& judge_a,
                                      const std::string& judge_b,
                                      std::size_t& skipped) {
  std::map<std::string, const jeval::JudgeVerdict*> map_a, map_b;
  for (const auto& v : va)
    if (v.judge_id == judge_a) map_a.emplace(v.instance_id, &v);
  for (const auto& v : vb)
    if (v.judge_id == judge_b) map_b.emplace(v.instance_id, &v);
  if (map_a.empty()) throw jeval::ValidationError("no verdicts for judge " + judge_a);
  if (map_b.empty()) throw jeval::ValidationError("no verdicts for judge " + judge_b);
  for (const auto& [id, _] : map_a)
    if (!map_b.contains(id))
      throw jeval::ValidationError("instance-set mismatch between verdict files: " +
                                   id + " judged by " + judge_a + " only");
  for (const auto& [id, _] : map_b)
    if (!map_a.contains(id))
      throw jeval::ValidationError("instance-set mismatch between verdict files: " +
                                   id + " judged by " + judge_b + " only");
  jeval::PairedSample sample;
  skipped = 0;
  for (const auto& inst : corpus.instances) {
    if (!inst.expert_label) continue;
    auto ita = map_a.find(inst.instance_id);
    auto itb = map_b.find(inst.instance_id);
    if (ita == map_a.end() || itb == map_b.end()) continue;
    if (!ita->second->parsed_label || !itb->second->parsed_label) {
      ++skipped;
      continue;
    }
    sample.human.push_back(*inst.expert_label);
    sample.pred_a.push_back(*ita->second->parsed_label);
    sample.pred_b.push_back(*itb->second->parsed_label);
  }
  sample.validate();
  return sample;
}

int cmd_compare(RunConfig& run, const std::string& judge_a, const std::string& judge_b) {
  auto corpus = jeval::load_corpus(run.corpus_path);
  auto va = jeval::load_verdicts(verdicts_path(run, judge_a));
  auto vb = jeval::load_verdicts(verdicts_path(run, judge_b));
  std::size_t skipped = 0;
  auto sample = paired_sample_for(corpus, va, vb, judge_a, judge_b, skipped);

  std::vector<jeval::NamedMetric> metrics;
  for (const auto& name : run.metrics) {
    if (name == "accuracy") metrics.push_back(jeval::accuracy_metric());
    else if (name == "f1") metrics.push_back(jeval::f1_metric());
    else if (name == "pearson") metrics.push_back(jeval::pearson_metric());
    else throw jeval::ConfigError("unknown comparison metric: " + name);
  }
  jeval::CompareOptions options;
  options.b_samples = run.bootstrap_iters;
  options.k_permutations = run.perm_iters;
  options.seed_bootstrap = run.seed_bootstrap;
  options.seed_permutation = run.seed_permutation;
  options.centered_bootstrap = run.centered_bootstrap;
  auto results = jeval::compare_models(sample, metrics, options);

  ordered_json report;
  report["provenance"] = provenance(run, corpus);
  report["judge_a"] = judge_a;
  report["judge_b"] = judge_b;
  report["n_paired"] = sample.size();
  report["n_skipped"] = skipped;
  report["results"] = ordered_json::array();
  for (const auto& r : results) {
    ordered_json item;
    item["metric"] = r.metric_name;
    item["value_a"] = r.value_a;
    item["value_b"] = r.value_b;
    item["delta_obs"] = r.delta_obs;          // m(H, P_A) - m(H, P_B)
    item["delta_b_minus_a"] = -r.delta_obs;   // table orientation
    if (r.mcnemar_p)
      item["mcnemar_p"] = *r.mcnemar_p;
    else
      item["mcnemar_p"] = nullptr;
    item["bootstrap_p"] = r.bootstrap_p;
    item["permutation_p"] = r.permutation_p;
    item["b_samples"] = r.b_samples;
    item["k_permutations"] = r.k_permutations;
    item["seed_bootstrap"] = r.seed_bootstrap;
    item["seed_permutation"] = r.seed_permutation;
    item["bootstrap_redraws"] = r.bootstrap_redraws;
    item["bootstrap_dropped"] = r.bootstrap_dropped;
    item["permutation_redraws"] = r.permutation_redraws;
    item["permutation_dropped"] = r.permutation_dropped;
    item["centered_bootstrap"] = r.centered_bootstrap;
    report["results"].push_back(item);
  }
  auto out_json = std::filesystem::path(run.out_dir) /
                  ("compare-" + judge_a + "-vs-" + judge_b + ".json");
  write_json(out_json, report);

  std::printf("comparison: %s (A) vs. %s (B), n=%zu\n", judge_a.c_str(),
              judge_b.c_str(), sample.size());
  std::printf("%-10s %10s %10s %12s %12s %12s %14s\n", "metric", "A", "B",
              "delta(B-A)", "McNemar p", "bootstrap p", "permutation p");
  for (const auto& r : results) {
    char mc[32];
    if (r.mcnemar_p)
      std::snprintf(mc, sizeof(mc), "%.3g", *r.mcnemar_p);
    else
      std::snprintf(mc, sizeof(mc), "-");
    std::printf("%-10s %10s %10s %12s %12s %12.4f %14.4f\n", r.metric_name.c_str(),
                percent(r.value_a).c_str(), percent(r.value_b).c_str(),
                percent(-r.delta_obs).c_str(), mc, r.bootstrap_p, r.permutation_p);
  }
  std::cout << "wrote " << out_json.string() << "\n";
  return 0;
}

int cmd_stratify(RunConfig& run, const std::string& judge_filter) {
  auto corpus = jeval::load_corpus(run.corpus_path);
  std::map<std::string, std::vector<jeval::JudgeVerdict>> verdict_sets;
  for (const auto& judge : run.judges) {
    if (!judge_filter.empty() && judge.judge_id != judge_filter) continue;
    auto path = verdicts_path(run, judge.judge_id);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) continue;
    verdict_sets.emplace(judge.judge_id, jeval::load_verdicts(path));
  }
  if (verdict_sets.empty())
    throw jeval::ValidationError("stratify: no verdict files found under " + run.out_dir);

  auto report = jeval::stratify(corpus, verdict_sets);
  auto matrix = jeval::f1_matrix(report);
  auto profile = jeval::verbosity(corpus);

  auto cell_json = [](const jeval::StratumCell& cell) {
    ordered_json c;
    c["n"] = cell.evaluated;
    c["skipped"] = cell.skipped;
    c["confusion"] = {{"tp", cell.counts.tp}, {"fp", cell.counts.fp},
                      {"tn", cell.counts.tn}, {"fn", cell.counts.fn}};
    c["accuracy"] = cell.metrics.accuracy;
    c["precision"] = cell.metrics.precision;
    c["recall"] = cell.metrics.recall;
    c["f1"] = cell.metrics.f1;
    c["pearson"] = cell.metrics.pearson ? ordered_json(*cell.metrics.pearson)
                                        : ordered_json(nullptr);
    c["spearman"] = cell.metrics.spearman ? ordered_json(*cell.metrics.spearman)
                                          : ordered_json(nullptr);
    return c;
  };

  ordered_json out;
  out["provenance"] = provenance(run, corpus);
  out["generators"] = report.generator_ids;
  out["judges"] = ordered_json::object();
  for (const auto& [judge_id, strata] : report.judges) {
    ordered_json j;
    j["marginal"] = cell_json(strata.marginal);
    j["by_generator"] = ordered_json::object();
    for (const auto& [gen, cell] : strata.by_generator)
      j["by_generator"][gen] = cell ? cell_json(*cell) : ordered_json(nullptr);
    out["judges"][judge_id] = j;
  }

  auto json_path = std::filesystem::path(run.out_dir) / "stratified.json";
  auto matrix_path = std::filesystem::path(run.out_dir) / "f1-matrix.csv";
  auto verbosity_path = std::filesystem::path(run.out_dir) / "verbosity.csv";
  write_json(json_path, out);
  jeval::write_file_atomic(matrix_path, jeval::f1_matrix_csv(matrix));
  jeval::write_file_atomic(verbosity_path, jeval::verbosity_csv(profile));

  std::cout << "stratify: " << report.judges.size() << " judge(s) x "
            << report.generator_ids.size() << " generator(s)\n"
            << "wrote " << json_path.string() << ", " << matrix_path.string()
            << ", " << verbosity_path.string() << "\n";
  return 0;
}

int cmd_augment(RunConfig& run) {
  auto corpus = jeval::load_corpus(run.corpus_path);
  auto combined = jeval::as_originals(corpus.instances);

  auto negatives = jeval::swap_negatives(corpus, run.swap_count, run.seed_augment);
  combined.insert(combined.end(), negatives.begin(), negatives.end());

  std::vector<jeval::AugmentedInstance> positives;
  if (run.paraphrase_count > 0) {
    const auto& judge = find_judge(run, run.paraphrase_judge);
    jeval::CacheStore cache{run.cache_dir};
    jeval::ParaphraseFn fn = [&](std::span<const jeval::EvalInstance> batch) {
      return jeval::paraphrase_answers(batch, judge, cache);
    };
    positives = jeval::paraphrase_positives(corpus, fn, run.paraphrase_count,
                                            run.seed_augment);
    combined.insert(combined.end(), positives.begin(), positives.end());
  }

  auto augmented_path = std::filesystem::path(run.out_dir) / "augmented.jsonl";
  jeval::save_augmented(combined, augmented_path);
  auto exported = jeval::export_training(combined, run.out_dir, run.validation_split,
                                         run.seed_augment, bundle_for(run));

  ordered_json summary;
  summary["provenance"] = provenance(run, corpus);
  summary["counts"] = {{"original", corpus.instances.size()},
                       {"swap_negative", negatives.size()},
                       {"paraphrase_positive", positives.size()},
                       {"total", combined.size()}};
  summary["split"] = run.validation_split;
  summary["train"] = exported.n_train;
  summary["valid"] = exported.n_valid;
  summary["train_path"] = exported.train_path.string();
  summary["valid_path"] = exported.valid_path.string();
  write_json(std::filesystem::path(run.out_dir) / "augment.json", summary);

  std::cout << "augment: original=" << corpus.instances.size()
            << " swap_negative=" << negatives.size()
            << " paraphrase_positive=" << positives.size()
            << " total=" << combined.size() << " -> train=" << exported.n_train
            << " valid=" << exported.n_valid << "\n"
            << "wrote " << augmented_path.string() << ", "
            << exported.train_path.string() << ", " << exported.valid_path.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evaluate LLM judges of semantic equivalence on open-ended QA"};
  app.set_version_flag("--version", std::string(jeval::kVersion));
  app.require_subcommand(1);

  RunConfig run;
  std::string config_path, corpus_path, cache_dir, out_dir;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--corpus", corpus_path, "corpus JSONL path (overrides config)");
  app.add_option("--cache-dir", cache_dir, "response cache directory");
  app.add_option("--out-dir", out_dir, "output directory");
  std::optional<std::uint64_t> seed_bootstrap, seed_permutation, seed_augment;
  app.add_option("--seed-bootstrap", seed_bootstrap, "bootstrap RNG seed");
  app.add_option("--seed-permutation", seed_permutation, "permutation RNG seed");
  app.add_option("--seed-augment", seed_augment, "augmentation RNG seed");
  std::optional<long long> bootstrap_iters, perm_iters;
  app.add_option("--bootstrap-iters", bootstrap_iters, "bootstrap replicates");
  app.add_option("--perm-iters", perm_iters, "permutation rounds");

  auto* judge_cmd = app.add_subcommand("judge", "run one judge over the corpus");
  std::string judge_id;
  judge_cmd->add_option("--judge", judge_id, "judge id from config")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "agreement metrics for one judge");
  std::string eval_judge;
  bool lexical = false;
  eval_cmd->add_option("--judge", eval_judge, "judge id from config")->required();
  eval_cmd->add_flag("--lexical", lexical, "include BLEU/ROUGE-L label correlations");

  auto* compare_cmd = app.add_subcommand("compare", "paired significance tests");
  std::string judge_a, judge_b;
  compare_cmd->add_option("--judge-a", judge_a, "first judge id")->required();
  compare_cmd->add_option("--judge-b", judge_b, "second judge id")->required();
  compare_cmd->add_flag("--centered-bootstrap", run.centered_bootstrap,
                        "use the centered bootstrap p-value");

  auto* stratify_cmd = app.add_subcommand("stratify", "per-generator breakdown");
  std::string stratify_judge;
  stratify_cmd->add_option("--judge", stratify_judge,
                           "restrict to one judge (default: all with verdicts)");

  auto* augment_cmd = app.add_subcommand("augment", "build and export training data");
  std::optional<std::size_t> swap_count, paraphrase_count;
  std::optional<double> split;
  augment_cmd->add_option("--swap-count", swap_count, "contrastive negatives to build");
  augment_cmd->add_option("--paraphrase-count", paraphrase_count,
                          "paraphrase positives to build");
  augment_cmd->add_option("--split", split, "validation fraction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      run.config_path = config_path;
      apply_config_file(run, config_path);
    }
    if (!corpus_path.empty()) run.corpus_path = corpus_path;
    if (!cache_dir.empty()) run.cache_dir = cache_dir;
    if (!out_dir.empty()) run.out_dir = out_dir;
    if (seed_bootstrap) run.seed_bootstrap = *seed_bootstrap;
    if (seed_permutation) run.seed_permutation = *seed_permutation;
    if (seed_augment) run.seed_augment = *seed_augment;
    if (bootstrap_iters) run.bootstrap_iters = *bootstrap_iters;
    if (perm_iters) run.perm_iters = *perm_iters;
    if (swap_count) run.swap_count = *swap_count;
    if (paraphrase_count) run.paraphrase_count = *paraphrase_count;
    if (split) run.validation_split = *split;
    finalize(run);

    if (judge_cmd->parsed()) return cmd_judge(run, judge_id);
    if (eval_cmd->parsed()) return cmd_evaluate(run, eval_judge, lexical);
    if (compare_cmd->parsed()) return cmd_compare(run, judge_a, judge_b);
    if (stratify_cmd->parsed()) return cmd_stratify(run, stratify_judge);
    if (augment_cmd->parsed()) return cmd_augment(run);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const jeval::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const jeval::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const jeval::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const jeval::TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
