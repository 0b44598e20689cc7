#pragma once

// Agreement metrics over paired binary label vectors (positive class = 1 =
// "equivalent") and lexical similarity baselines over tokenized text.
// Correlations on zero-variance input are reported as absent rather than 0.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jeval/error.hpp"
#include "jeval/unicode.hpp"

namespace jeval {

// Variant identifiers embedded in reports so downstream numbers are
// attributable to one fixed definition.
inline constexpr const char* kBleuVariant =
    "sentence-bleu:n=4,add1-smoothing(orders>1,zero-numerator),brevity-penalty";
inline constexpr const char* kRougeLVariant = "rouge-l:f-measure,beta=1";
inline constexpr const char* kTokenizerVariant = "nfc,unicode-lower,alnum-runs";

struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long total() const { return tp + fp + tn + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }

  bool operator==(const ConfusionCounts&) const = default;
};

struct AgreementMetrics {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::optional<double> pearson;
  std::optional<double> spearman;
};

inline ConfusionCounts confusion(std::span<const int> human,
                                 std::span<const int> predicted) {
  if (human.empty()) throw ValidationError("confusion: empty input");
  if (human.size() != predicted.size())
    throw ValidationError("confusion: length mismatch (" +
                          std::to_string(human.size()) + " vs " +
                          std::to_string(predicted.size()) + ")");
  ConfusionCounts c;
  for (std::size_t i = 0; i < human.size(); ++i) {
    if (human[i] == 1)
      predicted[i] == 1 ? ++c.tp : ++c.fn;
    else
      predicted[i] == 1 ? ++c.fp : ++c.tn;
  }
  return c;
}

// Pearson correlation specialized to a 2x2 table.
inline std::optional<double> phi_coefficient(const ConfusionCounts& c) {
  double denom = static_cast<double>(c.tp + c.fp) * static_cast<double>(c.tp + c.fn) *
                 static_cast<double>(c.tn + c.fp) * static_cast<double>(c.tn + c.fn);
  if (denom <= 0) return std::nullopt;
  double num = static_cast<double>(c.tp) * static_cast<double>(c.tn) -
               static_cast<double>(c.fp) * static_cast<double>(c.fn);
  return num / std::sqrt(denom);
}

inline std::optional<double> pearson_correlation(std::span<const double> x,
                                                 std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("pearson: length mismatch");
  if (x.empty()) throw ValidationError("pearson: empty input");
  std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks (ties get the mean of the tied positions), 1-based.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> spearman_correlation(std::span<const double> x,
                                                  std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("spearman: length mismatch");
  if (x.empty()) throw ValidationError("spearman: empty input");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson_correlation(rx, ry);
}

inline double accuracy_of(std::span<const int> human, std::span<const int> predicted) {
  auto c = confusion(human, predicted);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline double f1_of_counts(const ConfusionCounts& c) {
  double precision = (c.tp + c.fp) > 0
                         ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp)
                         : 0.0;
  double recall = (c.tp + c.fn) > 0
                      ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)
                      : 0.0;
  if (precision <= 0 || recall <= 0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

inline AgreementMetrics agreement(const ConfusionCounts& counts,
                                  std::span<const int> human,
                                  std::span<const int> predicted) {
  if (confusion(human, predicted) != counts)
    throw ValidationError("agreement: counts inconsistent with vectors");
  AgreementMetrics m;
  m.accuracy = static_cast<double>(counts.tp + counts.tn) /
               static_cast<double>(counts.total());
  m.precision = (counts.tp + counts.fp) > 0
                    ? static_cast<double>(counts.tp) /
                          static_cast<double>(counts.tp + counts.fp)
                    : 0.0;
  m.recall = (counts.tp + counts.fn) > 0
                 ? static_cast<double>(counts.tp) /
                       static_cast<double>(counts.tp + counts.fn)
                 : 0.0;
  m.f1 = (m.precision > 0 && m.recall > 0)
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  std::vector<double> h(human.begin(), human.end());
  std::vector<double> p(predicted.begin(), predicted.end());
  m.pearson = pearson_correlation(h, p);
  m.spearman = spearman_correlation(h, p);
  return m;
}

inline AgreementMetrics agreement(std::span<const int> human,
                                  std::span<const int> predicted) {
  return agreement(confusion(human, predicted), human, predicted);
}

struct TokenSequence {
  std::vector<std::string> tokens;

  bool operator==(const TokenSequence&) const = default;

  std::string joined() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out.push_back(' ');
      out += tokens[i];
    }
    return out;
  }
};

// NFC-normalize, lowercase, then split into maximal runs of letters/digits.
// Punctuation and whitespace are discarded.
inline TokenSequence tokenize(std::string_view text) {
  std::string normalized = nfc(text);
  TokenSequence seq;
  std::string current;
  std::size_t i = 0;
  while (i < normalized.size()) {
    char32_t cp = utf8_decode(normalized, i);
    if (is_word_cp(cp)) {
      utf8_encode(to_lower_cp(cp), current);
    } else if (!current.empty()) {
      seq.tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) seq.tokens.push_back(std::move(current));
  return seq;
}

namespace detail {

inline std::map<std::string, int> ngram_counts(const TokenSequence& seq, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(seq.tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= seq.tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += seq.tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace detail

// Sentence-level BLEU with n-grams 1..4. Modified precisions are clipped
// against the reference; orders above 1 with zero matches fall back to
// (0+1)/(d+1). Order 1 is never smoothed, so fully disjoint vocabularies
// score 0. Brevity penalty exp(1 - |ref|/|cand|) applies when the candidate
// is shorter than the reference.
inline double bleu(const TokenSequence& candidate, const TokenSequence& reference) {
  const std::size_t clen = candidate.tokens.size();
  const std::size_t rlen = reference.tokens.size();
  if (clen == 0) return 0.0;
  double log_precision_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    auto cand_counts = detail::ngram_counts(candidate, n);
    auto ref_counts = detail::ngram_counts(reference, n);
    long long matched = 0;
    long long total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else if (matched == 0) {
      p = 1.0 / static_cast<double>(total + 1);
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
    }
    log_precision_sum += std::log(p);
  }
  double score = std::exp(log_precision_sum / 4.0);
  if (clen < rlen)
    score *= std::exp(1.0 - static_cast<double>(rlen) / static_cast<double>(clen));
  return score;
}

inline std::size_t lcs_length(std::span<const std::string> a,
                              std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// ROUGE-L F-measure with beta = 1 over the token-level LCS.
inline double rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  if (candidate.tokens.empty() || reference.tokens.empty()) return 0.0;
  auto lcs = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  double p = lcs / static_cast<double>(candidate.tokens.size());
  double r = lcs / static_cast<double>(reference.tokens.size());
  if (p + r <= 0) return 0.0;
  return 2.0 * p * r / (p + r);
}

inline std::optional<double> metric_label_correlation(std::span<const double> scores,
                                                      std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ValidationError("metric_label_correlation: length mismatch");
  if (scores.size() < 2)
    throw ValidationError("metric_label_correlation: need at least 2 pairs");
  std::vector<double> l(labels.begin(), labels.end());
  return pearson_correlation(scores, l);
}

}  // namespace jeval
