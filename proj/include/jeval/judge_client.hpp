#pragma once

// Chat-completion client for judging and paraphrasing: renders the fixed
// equivalence prompt per instance, POSTs it to an OpenAI-style endpoint
// with bounded concurrency, retries with exponential backoff, and a
// content-addressed response cache. Verdict parsing is total: anything
// that is not a clean binary answer degrades to lenient or failed status.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "jeval/corpus.hpp"
#include "jeval/error.hpp"
#include "jeval/io.hpp"
#include "jeval/sha256.hpp"

namespace jeval {

// Evaluation system prompt sent to every judge.
inline constexpr std::string_view kEvalSystemPrompt =
    "You are a medical evaluator tasked with assessing whether a candidate answer is equivalent to the ground truth.\n"
    "Assign a score strictly according to the criteria below. Do not include any explanations, comments, or extra text in your response.\n"
    "\n"
    "Scoring criteria:\n"
    "Score 0: Not equivalent\n"
    "Score 1: Equivalent\n"
    "\n"
    "Definition of equivalence:\n"
    "Two answers are considered equivalent if the essential expected information is covered. Minor differences in wording, or additional or missing details, are acceptable as long as the candidate answer would be considered an acceptable response to the question.\n"
    "\n"
    "Return only the score (0 or 1), nothing else.";

// System prompt used when paraphrasing reference answers.
inline constexpr std::string_view kParaphraseSystemPrompt =
    "Tu es un assistant médical francophone.\n"
    "Ta tâche est de PARAPHRASER la réponse de référence sans en changer le sens médical.\n"
    "Ne modifie pas les informations clés.\n"
    "Ne réponds qu’avec la version paraphrasée.";

inline constexpr std::string_view kDefaultUserTemplate =
    "Q: {question}\nReference: {reference}\nCandidate: {candidate}";

struct JudgeConfig {
  std::string judge_id;
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;  // empty means no auth header
  int max_retries = 3;
  double request_timeout_s = 60.0;
  double temperature = 0.0;
  int max_parallel = 4;

  void validate() const;
};

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;

  std::string base() const {
    return scheme + "://" + host + ":" + std::to_string(port);
  }
};

inline ParsedUrl parse_url(const std::string& url) {
  ParsedUrl out;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("invalid endpoint URL (missing scheme): " + url);
  out.scheme = url.substr(0, scheme_end);
  if (out.scheme != "http" && out.scheme != "https")
    throw ConfigError("unsupported URL scheme '" + out.scheme + "': " + url);
  std::size_t rest = scheme_end + 3;
  auto path_start = url.find('/', rest);
  std::string authority = url.substr(rest, path_start == std::string::npos
                                               ? std::string::npos
                                               : path_start - rest);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    out.host = authority.substr(0, colon);
    try {
      out.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("invalid port in endpoint URL: " + url);
    }
  } else {
    out.host = authority;
    out.port = out.scheme == "https" ? 443 : 80;
  }
  if (out.host.empty()) throw ConfigError("empty host in endpoint URL: " + url);
  if (out.port <= 0 || out.port > 65535)
    throw ConfigError("port out of range in endpoint URL: " + url);
  return out;
}

inline void JudgeConfig::validate() const {
  if (judge_id.empty()) throw ConfigError("judge_id must not be empty");
  if (model_name.empty())
    throw ConfigError("judge " + judge_id + ": model_name must not be empty");
  parse_url(endpoint_url);
  if (max_retries < 0 || max_retries > 10)
    throw ConfigError("judge " + judge_id + ": max_retries must be in [0, 10]");
  if (temperature < 0)
    throw ConfigError("judge " + judge_id + ": temperature must be >= 0");
  if (max_parallel < 1)
    throw ConfigError("judge " + judge_id + ": max_parallel must be >= 1");
  if (request_timeout_s <= 0)
    throw ConfigError("judge " + judge_id + ": request_timeout must be positive");
}

struct PromptBundle {
  std::string system_prompt;
  std::string user_template;
  std::string prompt_hash;
};

inline constexpr const char* kPlaceholders[] = {"{question}", "{reference}",
                                                "{candidate}"};

inline PromptBundle make_prompt_bundle(std::string system_prompt,
                                       std::string user_template) {
  for (const char* ph : kPlaceholders) {
    auto first = user_template.find(ph);
    if (first == std::string::npos)
      throw ConfigError(std::string("user template missing placeholder ") + ph);
    if (user_template.find(ph, first + 1) != std::string::npos)
      throw ConfigError(std::string("user template repeats placeholder ") + ph);
  }
  PromptBundle bundle;
  bundle.prompt_hash = sha256_hex(system_prompt + "\x1f" + user_template);
  bundle.system_prompt = std::move(system_prompt);
  bundle.user_template = std::move(user_template);
  return bundle;
}

inline const PromptBundle& default_eval_bundle() {
  static const PromptBundle bundle = make_prompt_bundle(
      std::string(kEvalSystemPrompt), std::string(kDefaultUserTemplate));
  return bundle;
}

struct RenderedPrompt {
  std::string system;
  std::string user;
};

// Single-pass substitution: placeholders are replaced with instance fields
// verbatim; placeholder-looking text inside those fields is never rescanned.
inline RenderedPrompt render_prompt(const PromptBundle& bundle,
                                    const EvalInstance& instance) {
  const std::string& tpl = bundle.user_template;
  std::string user;
  user.reserve(tpl.size() + instance.question.size() +
               instance.reference_answer.size() +
               instance.candidate_answer.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      auto matches = [&](std::string_view ph) {
        return tpl.compare(i, ph.size(), ph) == 0;
      };
      if (matches("{question}")) {
        user += instance.question;
        i += 10;
        continue;
      }
      if (matches("{reference}")) {
        user += instance.reference_answer;
        i += 11;
        continue;
      }
      if (matches("{candidate}")) {
        user += instance.candidate_answer;
        i += 11;
        continue;
      }
    }
    user.push_back(tpl[i]);
    ++i;
  }
  return {bundle.system_prompt, std::move(user)};
}

struct VerdictParse {
  std::optional<int> label;
  ParseStatus status = ParseStatus::failed;
};

inline bool is_ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

// strict: the trimmed output is exactly "0" or "1".
// lenient: exactly one standalone "0"/"1" token anywhere in the output.
// failed: anything else (no token, or several).
inline VerdictParse parse_verdict(std::string_view raw) {
  std::string_view t = trim(raw);
  if (t == "0") return {0, ParseStatus::strict};
  if (t == "1") return {1, ParseStatus::strict};
  int found = -1;
  int count = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (c != '0' && c != '1') continue;
    bool left_ok = i == 0 || !is_ascii_alnum(raw[i - 1]);
    bool right_ok = i + 1 == raw.size() || !is_ascii_alnum(raw[i + 1]);
    if (left_ok && right_ok) {
      found = c - '0';
      ++count;
    }
  }
  if (count == 1) return {found, ParseStatus::lenient};
  return {std::nullopt, ParseStatus::failed};
}

// One JSON file per key under <dir>/<first 2 hex>/<key>.json, written via
// temp-file-then-rename so concurrent readers never observe partial files.
class CacheStore {
 public:
  CacheStore() = default;
  explicit CacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  std::optional<json> get(const std::string& key) const {
    auto path = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
      return json::parse(read_file(path));
    } catch (const std::exception&) {
      return std::nullopt;  // unreadable entries behave as misses
    }
  }

  void put(const std::string& key, const json& value) const {
    write_file_atomic(path_for(key), value.dump() + "\n");
  }

 private:
  std::filesystem::path dir_;
};

inline std::string instance_content_hash(const EvalInstance& inst) {
  return sha256_hex(canonical_instance_line(inst));
}

inline std::string cache_key(const std::string& model_name,
                             const std::string& prompt_hash,
                             const std::string& instance_hash) {
  return sha256_hex(model_name + "\x1f" + prompt_hash + "\x1f" + instance_hash);
}

struct RunStats {
  long long network_calls = 0;
  long long cache_hits = 0;
  long long transport_failures = 0;
};

struct JudgeRun {
  std::vector<JudgeVerdict> verdicts;
  RunStats stats;
};

namespace detail {

struct ChatOutcome {
  bool ok = false;
  std::string content;  // response content, or a transport error description
};

inline std::string resolve_api_key(const JudgeConfig& config) {
  if (config.api_key_env.empty()) return {};
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("API key environment variable not set: " + config.api_key_env);
  return key;
}

// POST one chat-completion request; retries transport failures with
// exponential backoff (1 s doubling, capped at 60 s).
inline ChatOutcome chat_once(const JudgeConfig& config, const ParsedUrl& url,
                             const std::string& api_key,
                             const std::string& system_text,
                             const std::string& user_text,
                             std::atomic<long long>& network_calls) {
  ordered_json body;
  body["model"] = config.model_name;
  body["messages"] = ordered_json::array();
  body["messages"].push_back({{"role", "system"}, {"content", system_text}});
  body["messages"].push_back({{"role", "user"}, {"content", user_text}});
  body["temperature"] = config.temperature;
  const std::string payload = body.dump();

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      int delay_s = 1 << (attempt - 1);
      if (delay_s > 60) delay_s = 60;
      std::this_thread::sleep_for(std::chrono::seconds(delay_s));
    }
    httplib::Client client(url.base());
    auto timeout = std::chrono::duration<double>(config.request_timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    ++network_calls;
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      json response = json::parse(res->body);
      return {true, response.at("choices").at(0).at("message").at("content")
                        .get<std::string>()};
    } catch (const std::exception& e) {
      // The endpoint answered but not in chat-completion shape; retrying
      // would send the identical request, so fail immediately.
      return {false, std::string("malformed response body: ") + e.what()};
    }
  }
  return {false, "transport error after " + std::to_string(config.max_retries + 1) +
                     " attempt(s): " + last_error};
}

// Shared worker-pool skeleton: processes indices [0, n) with at most
// max_parallel threads, writing results into caller-owned slots. The first
// exception thrown by a worker aborts the remaining work and is rethrown
// on the calling thread.
template <typename Fn>
void run_pool(std::size_t n, int max_parallel, Fn&& work) {
  std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(max_parallel), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> aborted{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        if (aborted.load(std::memory_order_relaxed)) return;
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          aborted.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Judges every corpus instance. The cache is consulted before any network
// call, keyed by (model, prompt hash, instance content hash); output order
// equals corpus order regardless of completion order. Transport failure on
// an instance yields a failed verdict whose raw_output records the error;
// if no instance at all produces a usable response the run aborts.
inline JudgeRun judge_corpus(const Corpus& corpus, const JudgeConfig& config,
                             const PromptBundle& bundle, const CacheStore& cache) {
  config.validate();
  if (corpus.instances.empty()) throw ValidationError("judge_corpus: empty corpus");
  const std::string api_key = detail::resolve_api_key(config);
  const ParsedUrl url = parse_url(config.endpoint_url);

  const std::size_t n = corpus.instances.size();
  std::vector<JudgeVerdict> verdicts(n);
  std::atomic<long long> network_calls{0};
  std::atomic<long long> cache_hits{0};
  std::atomic<long long> transport_failures{0};

  detail::run_pool(n, config.max_parallel, [&](std::size_t i) {
    const EvalInstance& inst = corpus.instances[i];
    JudgeVerdict v;
    v.instance_id = inst.instance_id;
    v.judge_id = config.judge_id;
    const std::string key =
        cache_key(config.model_name, bundle.prompt_hash, instance_content_hash(inst));
    if (auto cached = cache.get(key)) {
      v.raw_output = cached->value("response", "");
      v.from_cache = true;
      ++cache_hits;
    } else {
      auto rendered = render_prompt(bundle, inst);
      auto outcome = detail::chat_once(config, url, api_key, rendered.system,
                                       rendered.user, network_calls);
      if (!outcome.ok) {
        v.raw_output = outcome.content;
        v.parse_status = ParseStatus::failed;
        verdicts[i] = std::move(v);
        ++transport_failures;
        return;
      }
      v.raw_output = outcome.content;
      cache.put(key, json{{"model", config.model_name},
                          {"prompt_hash", bundle.prompt_hash},
                          {"instance_id", inst.instance_id},
                          {"response", outcome.content}});
    }
    auto parsed = parse_verdict(v.raw_output);
    v.parsed_label = parsed.label;
    v.parse_status = parsed.status;
    verdicts[i] = std::move(v);
  });

  JudgeRun run;
  run.stats.network_calls = network_calls.load();
  run.stats.cache_hits = cache_hits.load();
  run.stats.transport_failures = transport_failures.load();
  if (run.stats.transport_failures == static_cast<long long>(n))
    throw TransportError("judge " + config.judge_id + ": endpoint unreachable for all " +
                         std::to_string(n) + " instances (e.g. " +
                         verdicts.front().raw_output + ")");
  run.verdicts = std::move(verdicts);
  return run;
}

struct ParaphraseResult {
  std::string instance_id;
  std::string paraphrase;
};

// Paraphrases each instance's reference answer with the fixed French
// system prompt; cached under the paraphrase prompt hash. A permanent
// transport failure aborts, since partial augmentation output is useless.
inline std::vector<ParaphraseResult> paraphrase_answers(
    std::span<const EvalInstance> instances, const JudgeConfig& config,
    const CacheStore& cache) {
  config.validate();
  if (instances.empty()) return {};
  const std::string api_key = detail::resolve_api_key(config);
  const ParsedUrl url = parse_url(config.endpoint_url);
  const std::string prompt_hash =
      sha256_hex(std::string(kParaphraseSystemPrompt) + "\x1f" + "{reference}");

  const std::size_t n = instances.size();
  std::vector<ParaphraseResult> results(n);
  std::vector<std::string> errors(n);
  std::atomic<long long> network_calls{0};

  detail::run_pool(n, config.max_parallel, [&](std::size_t i) {
    const EvalInstance& inst = instances[i];
    results[i].instance_id = inst.instance_id;
    const std::string key =
        cache_key(config.model_name, prompt_hash, instance_content_hash(inst));
    if (auto cached = cache.get(key)) {
      results[i].paraphrase = cached->value("response", "");
      return;
    }
    auto outcome =
        detail::chat_once(config, url, api_key, std::string(kParaphraseSystemPrompt),
                          inst.reference_answer, network_calls);
    if (!outcome.ok) {
      errors[i] = outcome.content;
      return;
    }
    results[i].paraphrase = outcome.content;
    cache.put(key, json{{"model", config.model_name},
                        {"prompt_hash", prompt_hash},
                        {"instance_id", inst.instance_id},
                        {"response", outcome.content}});
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty())
      throw TransportError("paraphrase failed for instance " +
                           instances[i].instance_id + ": " + errors[i]);
  }
  return results;
}

}  // namespace jeval
