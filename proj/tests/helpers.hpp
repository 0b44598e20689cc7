#pragma once

// Shared test fixtures: synthetic corpora, a stub chat endpoint, temp dirs,
// subprocess helpers for the CLI, and the independent oracles used to
// derive expected values.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "jeval/corpus.hpp"
#include "jeval/io.hpp"
#include "jeval/metrics.hpp"
#include "jeval/rng.hpp"
#include "jeval/stats.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "jeval-test") {
    static std::atomic<unsigned> counter{0};
    auto base = fs::temp_directory_path();
    path_ = base / (prefix + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path file(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// A question/generator grid. The candidate text embeds an "[EQ]"/"[NE]"
// marker plus the expert label, so stub judges can answer deterministically
// with a chosen confusion profile.
inline std::vector<jeval::EvalInstance> make_grid_instances(
    int n_questions, const std::vector<std::string>& generators,
    const std::function<int(int q, int g)>& label_of) {
  std::vector<jeval::EvalInstance> out;
  for (int q = 0; q < n_questions; ++q) {
    std::string qid = "q" + std::to_string(q);
    std::string question = "Question numero " + std::to_string(q) + " ?";
    std::string reference = "Reponse de reference " + std::to_string(q) + ".";
    for (std::size_t g = 0; g < generators.size(); ++g) {
      int label = label_of(q, static_cast<int>(g));
      jeval::EvalInstance inst;
      inst.instance_id = qid + "-" + generators[g];
      inst.question_id = qid;
      inst.generator_id = generators[g];
      inst.question = question;
      inst.reference_answer = reference;
      inst.candidate_answer = std::string(label == 1 ? "[EQ]" : "[NE]") +
                              " reponse du modele " + generators[g] +
                              " pour la question " + std::to_string(q);
      inst.expert_label = label;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

inline jeval::Corpus make_grid_corpus(
    int n_questions, const std::vector<std::string>& generators,
    const std::function<int(int q, int g)>& label_of) {
  jeval::Corpus corpus;
  corpus.instances = make_grid_instances(n_questions, generators, label_of);
  corpus.fingerprint = jeval::corpus_fingerprint(corpus.instances);
  return corpus;
}

inline fs::path write_corpus_file(const jeval::Corpus& corpus, const fs::path& path) {
  jeval::save_corpus(corpus.instances, path);
  return path;
}

// Builds a verdict vector from a per-instance rule, in corpus order.
inline std::vector<jeval::JudgeVerdict> stub_verdicts(
    const jeval::Corpus& corpus, const std::string& judge_id,
    const std::function<std::optional<int>(const jeval::EvalInstance&)>& rule) {
  std::vector<jeval::JudgeVerdict> out;
  for (const auto& inst : corpus.instances) {
    jeval::JudgeVerdict v;
    v.instance_id = inst.instance_id;
    v.judge_id = judge_id;
    auto label = rule(inst);
    if (label) {
      v.raw_output = std::to_string(*label);
      v.parsed_label = label;
      v.parse_status = jeval::ParseStatus::strict;
    } else {
      v.raw_output = "unparseable";
      v.parse_status = jeval::ParseStatus::failed;
    }
    out.push_back(std::move(v));
  }
  return out;
}

// Builds paired binary vectors realizing exact confusion counts.
inline void vectors_from_counts(const jeval::ConfusionCounts& c,
                                std::vector<int>& human, std::vector<int>& predicted) {
  human.clear();
  predicted.clear();
  for (long long i = 0; i < c.tp; ++i) { human.push_back(1); predicted.push_back(1); }
  for (long long i = 0; i < c.fn; ++i) { human.push_back(1); predicted.push_back(0); }
  for (long long i = 0; i < c.fp; ++i) { human.push_back(0); predicted.push_back(1); }
  for (long long i = 0; i < c.tn; ++i) { human.push_back(0); predicted.push_back(0); }
}

// In-process chat-completion stub. The handler receives (model, system,
// user) and returns the raw content string; HTTP status can be forced per
// request for fault injection.
class StubServer {
 public:
  using Handler = std::function<std::string(const std::string& model,
                                            const std::string& system,
                                            const std::string& user)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   ++requests_;
                   auto body = nlohmann::json::parse(req.body);
                   std::string model = body.value("model", "");
                   std::string system = body["messages"][0]["content"];
                   std::string user = body["messages"][1]["content"];
                   if (fail_when_ && fail_when_(model, system, user)) {
                     res.status = 500;
                     res.set_content("injected failure", "text/plain");
                     return;
                   }
                   nlohmann::json out = {
                       {"choices",
                        {{{"message", {{"content", handler_(model, system, user)}}}}}}};
                   res.set_content(out.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  long long requests() const { return requests_.load(); }

  void set_fail_when(std::function<bool(const std::string&, const std::string&,
                                        const std::string&)> pred) {
    fail_when_ = std::move(pred);
  }

 private:
  Handler handler_;
  std::function<bool(const std::string&, const std::string&, const std::string&)>
      fail_when_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<long long> requests_{0};
};

// Judge behavior keyed on the [EQ]/[NE] marker, optionally with systematic
// error to realize interesting confusion profiles.
inline StubServer::Handler marker_judge() {
  return [](const std::string&, const std::string&, const std::string& user) {
    return user.find("[EQ]") != std::string::npos ? "1" : "0";
  };
}

// --- independent oracles ----------------------------------------------------

// Character-level single-pass substitution over a placeholder map.
inline std::string single_pass_substitute(
    const std::string& tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    bool replaced = false;
    for (const auto& [ph, value] : values) {
      if (tpl.compare(i, ph.size(), ph) == 0) {
        out += value;
        i += ph.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) {
      out.push_back(tpl[i]);
      ++i;
    }
  }
  return out;
}

// Two-pass Pearson correlation (means first, then moments).
inline double pearson_two_pass(const std::vector<double>& x,
                               const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Brute-force LCS by enumerating all subsequences of the shorter side.
inline std::size_t brute_force_lcs(const std::vector<std::string>& a,
                                   const std::vector<std::string>& b) {
  const auto& shorter = a.size() <= b.size() ? a : b;
  const auto& longer = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << shorter.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < shorter.size(); ++i)
      if (mask & (1u << i)) sub.push_back(shorter[i]);
    // subsequence check against the longer side
    std::size_t j = 0;
    for (const auto& tok : longer) {
      if (j < sub.size() && tok == sub[j]) ++j;
    }
    if (j == sub.size() && sub.size() > best) best = sub.size();
  }
  return best;
}

// Slow BLEU recomputation with the same stated definition but an
// independent counting strategy (sorted vectors instead of hash maps).
inline double slow_bleu(const std::vector<std::string>& cand,
                        const std::vector<std::string>& ref) {
  if (cand.empty()) return 0.0;
  auto ngrams = [](const std::vector<std::string>& toks, int n) {
    std::vector<std::string> grams;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string g;
      for (int k = 0; k < n; ++k) g += toks[i + k] + "\x1f";
      grams.push_back(g);
    }
    std::sort(grams.begin(), grams.end());
    return grams;
  };
  double log_sum = 0;
  for (int n = 1; n <= 4; ++n) {
    auto cg = ngrams(cand, n);
    auto rg = ngrams(ref, n);
    long long matched = 0;
    std::size_t i = 0, j = 0;
    while (i < cg.size() && j < rg.size()) {
      if (cg[i] == rg[j]) { ++matched; ++i; ++j; }
      else if (cg[i] < rg[j]) ++i;
      else ++j;
    }
    auto total = static_cast<long long>(cg.size());
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else if (matched == 0) {
      p = 1.0 / static_cast<double>(total + 1);
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
    }
    log_sum += std::log(p);
  }
  double score = std::exp(log_sum / 4.0);
  if (cand.size() < ref.size())
    score *= std::exp(1.0 - static_cast<double>(ref.size()) /
                                static_cast<double>(cand.size()));
  return score;
}

// Exact two-sided McNemar by literally enumerating all 2^n equiprobable
// discordance outcomes (n <= 24): count outcomes with at most min(b01, b10)
// successes; all quantities are exact dyadic rationals.
inline double mcnemar_enumeration(long long b01, long long b10) {
  long long n = b01 + b10;
  if (n == 0) return 1.0;
  long long m = std::min(b01, b10);
  const unsigned long long total = 1ull << n;
  unsigned long long count = 0;
  for (unsigned long long mask = 0; mask < total; ++mask)
    if (std::popcount(mask) <= static_cast<int>(m)) ++count;
  double p = 2.0 * static_cast<double>(count) / static_cast<double>(total);
  return p > 1.0 ? 1.0 : p;
}

// Exact two-sided McNemar from big-integer binomial sums (Pascal's
// triangle in 64-bit; the partial sums stay below 2^64 up to n = 64);
// used where 2^n enumeration is infeasible.
inline double mcnemar_binomial_sum(long long b01, long long b10) {
  long long n = b01 + b10;
  if (n == 0) return 1.0;
  long long m = std::min(b01, b10);
  std::vector<unsigned long long> row(static_cast<std::size_t>(n) + 1, 1);
  for (long long i = 1; i <= n; ++i)
    for (long long j = i - 1; j >= 1; --j)
      row[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j - 1)];
  unsigned long long below = 0;
  for (long long k = 0; k <= m; ++k) below += row[static_cast<std::size_t>(k)];
  double p = 2.0 * std::ldexp(static_cast<double>(below), static_cast<int>(-n));
  return p > 1.0 ? 1.0 : p;
}

// Exhaustive paired bootstrap over all n^n index tuples (accuracy metric).
inline double bootstrap_enumeration_accuracy(const jeval::PairedSample& s) {
  const std::size_t n = s.size();
  double acc_a = 0, acc_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc_a += s.pred_a[i] == s.human[i];
    acc_b += s.pred_b[i] == s.human[i];
  }
  double delta_obs = (acc_a - acc_b) / static_cast<double>(n);
  std::vector<std::size_t> idx(n, 0);
  long long extreme = 0, total = 0;
  for (;;) {
    long long match_a = 0, match_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
      match_a += s.pred_a[idx[i]] == s.human[idx[i]];
      match_b += s.pred_b[idx[i]] == s.human[idx[i]];
    }
    double delta = static_cast<double>(match_a - match_b) / static_cast<double>(n);
    if (std::fabs(delta) >= std::fabs(delta_obs)) ++extreme;
    ++total;
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == n) idx[pos++] = 0;
    if (pos == n) break;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

// Exhaustive paired permutation over all 2^n swap masks (accuracy metric);
// returns the plain fraction of masks at least as extreme as observed.
inline double permutation_enumeration_accuracy(const jeval::PairedSample& s) {
  const std::size_t n = s.size();
  double acc_a = 0, acc_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc_a += s.pred_a[i] == s.human[i];
    acc_b += s.pred_b[i] == s.human[i];
  }
  double delta_obs = (acc_a - acc_b) / static_cast<double>(n);
  long long extreme = 0;
  const unsigned long long masks = 1ull << n;
  for (unsigned long long mask = 0; mask < masks; ++mask) {
    long long match_a = 0, match_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
      int a = (mask >> i) & 1 ? s.pred_b[i] : s.pred_a[i];
      int b = (mask >> i) & 1 ? s.pred_a[i] : s.pred_b[i];
      match_a += a == s.human[i];
      match_b += b == s.human[i];
    }
    double delta = static_cast<double>(match_a - match_b) / static_cast<double>(n);
    if (std::fabs(delta) >= std::fabs(delta_obs)) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(masks);
}

// --- CLI subprocess helpers -------------------------------------------------

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

inline CliResult run_cli(const std::string& cli_path, const std::string& args,
                         const fs::path& capture_dir) {
  static std::atomic<unsigned> counter{0};
  fs::path capture =
      capture_dir / ("cli-out-" + std::to_string(counter.fetch_add(1)) + ".txt");
  std::string cmd = cli_path + " " + args + " > " + capture.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  std::error_code ec;
  if (fs::exists(capture, ec)) result.output = jeval::read_file(capture);
  return result;
}

}  // namespace testutil
