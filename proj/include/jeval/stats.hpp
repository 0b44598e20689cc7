#pragma once

// Paired significance testing between two prediction vectors scored against
// shared human labels: exact McNemar for accuracy, paired bootstrap and
// paired permutation for arbitrary metrics. All resampling is reproducible
// bit-for-bit from explicit seeds; replicate r draws its stream from
// (seed, stream-tag, r) so results do not depend on evaluation order.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jeval/error.hpp"
#include "jeval/metrics.hpp"
#include "jeval/rng.hpp"

namespace jeval {

inline constexpr const char* kMcnemarVariant =
    "mcnemar:exact-binomial,two-sided,doubled-min-tail-capped";
inline constexpr const char* kBootstrapVariantUncentered =
    "bootstrap:paired,uncentered(|delta_b|>=|delta_obs|)";
inline constexpr const char* kBootstrapVariantCentered =
    "bootstrap:paired,centered(|delta_b-delta_obs|>=|delta_obs|)";
inline constexpr const char* kPermutationVariant =
    "permutation:instance-swap,add-one-smoothed";

struct PairedSample {
  std::vector<int> human;
  std::vector<int> pred_a;
  std::vector<int> pred_b;

  std::size_t size() const { return human.size(); }

  void validate() const {
    if (human.empty()) throw ValidationError("paired sample: empty");
    if (pred_a.size() != human.size() || pred_b.size() != human.size())
      throw ValidationError("paired sample: length mismatch");
  }
};

// b01: A wrong, B right. b10: A right, B wrong.
inline std::pair<long long, long long> discordant_counts(const PairedSample& s) {
  s.validate();
  long long b01 = 0, b10 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool a_ok = s.pred_a[i] == s.human[i];
    bool b_ok = s.pred_b[i] == s.human[i];
    if (!a_ok && b_ok) ++b01;
    if (a_ok && !b_ok) ++b10;
  }
  return {b01, b10};
}

namespace detail {

// P(X <= m) for X ~ Binomial(n, 1/2). Exact integer arithmetic up to
// n = 62 (the partial sums fit in 64 bits); log-space beyond that so
// n up to at least 10,000 stays finite.
inline double binomial_half_cdf(long long m, long long n) {
  if (m < 0) return 0.0;
  if (m >= n) return 1.0;
  if (n <= 62) {
    // Pascal row n.
    std::vector<unsigned long long> row(static_cast<std::size_t>(n) + 1, 1);
    for (long long i = 1; i <= n; ++i)
      for (long long j = i - 1; j >= 1; --j) row[j] += row[j - 1];
    unsigned long long sum = 0;
    for (long long k = 0; k <= m; ++k) sum += row[static_cast<std::size_t>(k)];
    return std::ldexp(static_cast<double>(sum), static_cast<int>(-n));
  }
  const double log2n = static_cast<double>(n) * std::log(2.0);
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(static_cast<std::size_t>(m) + 1);
  for (long long k = 0; k <= m; ++k) {
    double lp = std::lgamma(static_cast<double>(n) + 1.0) -
                std::lgamma(static_cast<double>(k) + 1.0) -
                std::lgamma(static_cast<double>(n - k) + 1.0) - log2n;
    logs[static_cast<std::size_t>(k)] = lp;
    if (lp > max_log) max_log = lp;
  }
  long double acc = 0;
  for (double lp : logs) acc += std::exp(static_cast<long double>(lp - max_log));
  double result = static_cast<double>(std::exp(static_cast<long double>(max_log)) * acc);
  return result > 1.0 ? 1.0 : result;
}

}  // namespace detail

// Two-sided exact McNemar p-value over the discordant pairs:
// min(1, 2 * P(X <= min(b01, b10))) with X ~ Binomial(b01 + b10, 1/2).
inline double mcnemar_exact(long long b01, long long b10) {
  if (b01 < 0 || b10 < 0) throw ValidationError("mcnemar: negative count");
  long long n = b01 + b10;
  if (n == 0) return 1.0;
  double tail = detail::binomial_half_cdf(std::min(b01, b10), n);
  double p = 2.0 * tail;
  return p > 1.0 ? 1.0 : p;
}

// A metric over aligned (human, predicted) vectors; absent when undefined
// on that input (e.g. zero variance for correlations).
using PairedMetric =
    std::function<std::optional<double>(std::span<const int>, std::span<const int>)>;

struct NamedMetric {
  std::string name;
  PairedMetric fn;
};

inline NamedMetric accuracy_metric() {
  return {"accuracy", [](std::span<const int> h, std::span<const int> p) {
            return std::optional<double>(accuracy_of(h, p));
          }};
}

inline NamedMetric f1_metric() {
  return {"f1", [](std::span<const int> h, std::span<const int> p) {
            return std::optional<double>(f1_of_counts(confusion(h, p)));
          }};
}

inline NamedMetric pearson_metric() {
  return {"pearson", [](std::span<const int> h, std::span<const int> p) {
            std::vector<double> x(h.begin(), h.end());
            std::vector<double> y(p.begin(), p.end());
            return pearson_correlation(x, y);
          }};
}

struct ResampleResult {
  double delta_obs = 0;
  double p = 1.0;
  long long extreme_count = 0;   // replicates with |delta| at least |delta_obs|
  long long completed = 0;       // replicates that produced a defined delta
  long long redraws = 0;         // resamples redrawn because a metric was undefined
  long long dropped = 0;         // replicates abandoned after the redraw budget
};

namespace detail {

inline constexpr int kMaxRedrawAttempts = 100;

inline std::pair<double, double> observed_values(const PairedSample& s,
                                                 const PairedMetric& metric) {
  auto va = metric(s.human, s.pred_a);
  auto vb = metric(s.human, s.pred_b);
  if (!va || !vb)
    throw ValidationError("resampling test: metric undefined on the full sample");
  return {*va, *vb};
}

}  // namespace detail

// Paired bootstrap: each replicate draws n indices with replacement and
// applies them simultaneously to all three vectors. The default p-value is
// the uncentered form P(|delta_b| >= |delta_obs|); `centered` switches to
// P(|delta_b - delta_obs| >= |delta_obs|). Resamples on which the metric is
// undefined are redrawn, then the replicate is dropped once the attempt
// budget is exhausted.
inline ResampleResult bootstrap_test(const PairedSample& sample,
                                     const NamedMetric& metric,
                                     long long b_samples, std::uint64_t seed,
                                     bool centered = false) {
  sample.validate();
  if (b_samples <= 0) throw ValidationError("bootstrap: b_samples must be positive");
  auto [va, vb] = detail::observed_values(sample, metric.fn);
  ResampleResult result;
  result.delta_obs = va - vb;
  const std::size_t n = sample.size();
  std::vector<int> h(n), a(n), b(n);
  for (long long rep = 0; rep < b_samples; ++rep) {
    SplitMix64 rng(derive_seed(seed, kStreamBootstrap, static_cast<std::uint64_t>(rep)));
    std::optional<double> delta;
    for (int attempt = 0; attempt < detail::kMaxRedrawAttempts; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        auto j = static_cast<std::size_t>(rng.below(n));
        h[i] = sample.human[j];
        a[i] = sample.pred_a[j];
        b[i] = sample.pred_b[j];
      }
      auto da = metric.fn(h, a);
      auto db = metric.fn(h, b);
      if (da && db) {
        delta = *da - *db;
        break;
      }
      ++result.redraws;
    }
    if (!delta) {
      ++result.dropped;
      continue;
    }
    ++result.completed;
    double stat = centered ? std::fabs(*delta - result.delta_obs) : std::fabs(*delta);
    if (stat >= std::fabs(result.delta_obs)) ++result.extreme_count;
  }
  if (result.completed == 0)
    throw ValidationError("bootstrap: no replicate produced a defined metric");
  result.p = static_cast<double>(result.extreme_count) /
             static_cast<double>(result.completed);
  return result;
}

// Paired permutation: each round swaps pred_a[i] <-> pred_b[i] with
// probability 1/2 per instance and recomputes the delta. Add-one smoothed
// estimator (1 + c) / (K + 1).
inline ResampleResult permutation_test(const PairedSample& sample,
                                       const NamedMetric& metric,
                                       long long k_permutations,
                                       std::uint64_t seed) {
  sample.validate();
  if (k_permutations <= 0)
    throw ValidationError("permutation: k_permutations must be positive");
  auto [va, vb] = detail::observed_values(sample, metric.fn);
  ResampleResult result;
  result.delta_obs = va - vb;
  const std::size_t n = sample.size();
  std::vector<int> a(n), b(n);
  for (long long round = 0; round < k_permutations; ++round) {
    SplitMix64 rng(derive_seed(seed, kStreamPermutation, static_cast<std::uint64_t>(round)));
    std::optional<double> delta;
    for (int attempt = 0; attempt < detail::kMaxRedrawAttempts; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.coin()) {
          a[i] = sample.pred_b[i];
          b[i] = sample.pred_a[i];
        } else {
          a[i] = sample.pred_a[i];
          b[i] = sample.pred_b[i];
        }
      }
      auto da = metric.fn(sample.human, a);
      auto db = metric.fn(sample.human, b);
      if (da && db) {
        delta = *da - *db;
        break;
      }
      ++result.redraws;
    }
    if (!delta) {
      ++result.dropped;
      continue;
    }
    ++result.completed;
    if (std::fabs(*delta) >= std::fabs(result.delta_obs)) ++result.extreme_count;
  }
  result.p = static_cast<double>(1 + result.extreme_count) /
             static_cast<double>(result.completed + 1);
  return result;
}

// One row per compared metric. delta_obs keeps the m(H,P_A) - m(H,P_B)
// orientation; report renderers may additionally show B - A.
struct ComparisonResult {
  std::string metric_name;
  double value_a = 0;
  double value_b = 0;
  double delta_obs = 0;
  std::optional<double> mcnemar_p;  // accuracy comparisons only
  double bootstrap_p = 1.0;
  double permutation_p = 1.0;
  long long b_samples = 0;
  long long k_permutations = 0;
  std::uint64_t seed_bootstrap = 0;
  std::uint64_t seed_permutation = 0;
  long long bootstrap_redraws = 0;
  long long bootstrap_dropped = 0;
  long long permutation_redraws = 0;
  long long permutation_dropped = 0;
  bool centered_bootstrap = false;
};

struct CompareOptions {
  long long b_samples = 10000;
  long long k_permutations = 10000;
  std::uint64_t seed_bootstrap = 0;
  std::uint64_t seed_permutation = 0;
  bool centered_bootstrap = false;
};

inline std::vector<ComparisonResult> compare_models(
    const PairedSample& sample, const std::vector<NamedMetric>& metrics,
    const CompareOptions& options) {
  sample.validate();
  std::vector<ComparisonResult> results;
  results.reserve(metrics.size());
  for (const auto& metric : metrics) {
    auto [va, vb] = detail::observed_values(sample, metric.fn);
    ComparisonResult r;
    r.metric_name = metric.name;
    r.value_a = va;
    r.value_b = vb;
    r.delta_obs = va - vb;
    if (metric.name == "accuracy") {
      auto [b01, b10] = discordant_counts(sample);
      r.mcnemar_p = mcnemar_exact(b01, b10);
    }
    auto boot = bootstrap_test(sample, metric, options.b_samples,
                               options.seed_bootstrap, options.centered_bootstrap);
    auto perm = permutation_test(sample, metric, options.k_permutations,
                                 options.seed_permutation);
    r.bootstrap_p = boot.p;
    r.permutation_p = perm.p;
    r.b_samples = options.b_samples;
    r.k_permutations = options.k_permutations;
    r.seed_bootstrap = options.seed_bootstrap;
    r.seed_permutation = options.seed_permutation;
    r.bootstrap_redraws = boot.redraws;
    r.bootstrap_dropped = boot.dropped;
    r.permutation_redraws = perm.redraws;
    r.permutation_dropped = perm.dropped;
    r.centered_bootstrap = options.centered_bootstrap;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace jeval
