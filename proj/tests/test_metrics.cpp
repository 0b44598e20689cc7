#include "doctest.h"

#include <cmath>

#include "jeval/metrics.hpp"
#include "jeval/rng.hpp"

#include "helpers.hpp"

using jeval::ConfusionCounts;
using jeval::TokenSequence;

TEST_CASE("confusion counts the standard 2x2 contingency") {
  // Reference profile of an over-accepting judge: 147/262/88/3 on n=500.
  std::vector<int> human, predicted;
  testutil::vectors_from_counts({147, 262, 88, 3}, human, predicted);
  auto c = jeval::confusion(human, predicted);
  CHECK(c.tp == 147);
  CHECK(c.fp == 262);
  CHECK(c.tn == 88);
  CHECK(c.fn == 3);
  CHECK(c.total() == 500);

  std::vector<int> ones{1, 1, 1, 1};
  auto all = jeval::confusion(ones, ones);
  CHECK(all.tp == 4);
  CHECK(all.fp + all.tn + all.fn == 0);

  std::vector<int> h{1, 0}, p{0, 1};
  auto x = jeval::confusion(h, p);
  CHECK(x.tp == 0);
  CHECK(x.fp == 1);
  CHECK(x.tn == 0);
  CHECK(x.fn == 1);

  std::vector<int> empty;
  CHECK_THROWS_AS(jeval::confusion(empty, empty), jeval::ValidationError);
  std::vector<int> three{1, 0, 1};
  CHECK_THROWS_AS(jeval::confusion(three, h), jeval::ValidationError);
}

TEST_CASE("agreement on the over-accepting reference profile") {
  std::vector<int> human, predicted;
  testutil::vectors_from_counts({147, 262, 88, 3}, human, predicted);
  auto m = jeval::agreement(jeval::confusion(human, predicted), human, predicted);
  CHECK(std::fabs(m.precision - 0.3594) < 0.0005);
  CHECK(std::fabs(m.recall - 0.9800) < 0.0005);
  CHECK(std::fabs(m.f1 - 0.5259) < 0.0005);
  CHECK(std::fabs(m.accuracy - 0.4700) < 0.0005);
  REQUIRE(m.pearson.has_value());
  CHECK(std::fabs(*m.pearson - 0.2749) < 0.0005);
}

TEST_CASE("agreement on a balanced confusion profile") {
  // 95/88/262/55 gives F1 = 2*95/(2*95 + 88 + 55) = 0.5706.
  std::vector<int> human, predicted;
  testutil::vectors_from_counts({95, 88, 262, 55}, human, predicted);
  auto m = jeval::agreement(human, predicted);
  CHECK(std::fabs(m.f1 - 0.571) < 0.001);
}

TEST_CASE("agreement identity and degenerate cases") {
  std::vector<int> mixed{1, 0, 1, 1, 0, 0, 1};
  auto m = jeval::agreement(mixed, mixed);
  CHECK(m.accuracy == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(*m.pearson == doctest::Approx(1.0));
  CHECK(*m.spearman == doctest::Approx(1.0));

  std::vector<int> flat{1, 1, 1}, pred{1, 0, 1};
  auto z = jeval::agreement(flat, pred);
  CHECK_FALSE(z.pearson.has_value());  // zero-variance human vector
  CHECK_FALSE(z.spearman.has_value());

  // Counts inconsistent with the vectors are rejected.
  ConfusionCounts wrong{1, 1, 0, 1};
  CHECK_THROWS_AS(jeval::agreement(wrong, flat, pred), jeval::ValidationError);
}

TEST_CASE("pearson equals the phi coefficient on binary vectors") {
  jeval::SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.below(40);
    std::vector<int> h(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = static_cast<int>(rng.below(2));
      p[i] = static_cast<int>(rng.below(2));
    }
    auto counts = jeval::confusion(h, p);
    auto m = jeval::agreement(counts, h, p);
    auto phi = jeval::phi_coefficient(counts);
    REQUIRE(m.pearson.has_value() == phi.has_value());
    if (phi) {
      CHECK(std::fabs(*m.pearson - *phi) < 1e-12);
      // On binary data ranks are affine in the values, so Spearman matches.
      CHECK(std::fabs(*m.spearman - *phi) < 1e-12);
    }
  }
}

TEST_CASE("f1 is bounded by max(precision, recall); accuracy invariant under label flip") {
  jeval::SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.below(30);
    std::vector<int> h(n), p(n), hf(n), pf(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = static_cast<int>(rng.below(2));
      p[i] = static_cast<int>(rng.below(2));
      hf[i] = 1 - h[i];
      pf[i] = 1 - p[i];
    }
    auto m = jeval::agreement(h, p);
    CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-12);
    auto flipped = jeval::agreement(hf, pf);
    CHECK(flipped.accuracy == doctest::Approx(m.accuracy));
  }
}

TEST_CASE("tokenize lowercases, keeps accents, discards punctuation") {
  auto t1 = jeval::tokenize("Au miroir (miroir laryngé)");
  CHECK(t1.tokens == std::vector<std::string>{"au", "miroir", "miroir", "laryngé"});

  CHECK(jeval::tokenize("").tokens.empty());

  auto t2 = jeval::tokenize("1. Préparation...");
  CHECK(t2.tokens == std::vector<std::string>{"1", "préparation"});

  // Decomposed input composes to the same tokens.
  auto t3 = jeval::tokenize("laryngé");
  CHECK(t3.tokens == std::vector<std::string>{"laryngé"});
}

TEST_CASE("tokenize is idempotent on its own joined output and trim-stable") {
  const char* samples[] = {
      "Au miroir (miroir laryngé)",
      "1. Préparation...  2. Technique",
      "  L'irrigation de la langue, du pharynx et du larynx \t\n",
      "Réponse: OUI/NON -- peut-être 3,5 mg",
  };
  for (const char* s : samples) {
    auto once = jeval::tokenize(s);
    auto twice = jeval::tokenize(once.joined());
    CHECK(once == twice);
    auto padded = jeval::tokenize(std::string(s) + "   \n\t");
    CHECK(once == padded);
  }
}

TEST_CASE("bleu identity, disjoint and empty cases") {
  auto ref = jeval::tokenize("la laryngoscopie indirecte au miroir");
  CHECK(jeval::bleu(ref, ref) == doctest::Approx(1.0));

  // Disjoint vocabularies: unigram precision is 0, so the score is exactly
  // the stated formula's value, 0.
  auto a = jeval::tokenize("un deux trois quatre cinq");
  auto b = jeval::tokenize("six sept huit neuf dix");
  double disjoint = jeval::bleu(a, b);
  CHECK(disjoint == testutil::slow_bleu(a.tokens, b.tokens));
  CHECK(disjoint < 0.05);

  CHECK(jeval::bleu(TokenSequence{}, ref) == 0.0);
}

TEST_CASE("bleu brevity penalty and smoothing match an independent recomputation") {
  // Candidate is a strict prefix of the reference: every n-gram matches, so
  // the score is exactly the brevity penalty.
  auto ref = jeval::tokenize("a b c d e f g h");
  auto cand = jeval::tokenize("a b c d e f");
  double expected_bp = std::exp(1.0 - 8.0 / 6.0);
  CHECK(jeval::bleu(cand, ref) == doctest::Approx(expected_bp).epsilon(1e-12));

  // Sparse overlap exercises the add-one smoothing at orders > 1.
  auto c2 = jeval::tokenize("a x c y e");
  double got = jeval::bleu(c2, ref);
  double slow = testutil::slow_bleu(c2.tokens, ref.tokens);
  CHECK(got == doctest::Approx(slow).epsilon(1e-12));
  // By hand: p1 = 3/5, higher orders have zero matches over denominators
  // 4, 3, 2, smoothed to 1/5, 1/4, 1/3; BP = 1 is replaced by exp(1 - 8/5).
  double hand = std::exp((std::log(3.0 / 5.0) + std::log(1.0 / 5.0) +
                          std::log(1.0 / 4.0) + std::log(1.0 / 3.0)) /
                         4.0) *
                std::exp(1.0 - 8.0 / 5.0);
  CHECK(got == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("bleu agrees with the slow oracle on random token pairs") {
  jeval::SplitMix64 rng(23);
  const char* vocab[] = {"un", "deux", "trois", "quatre", "cinq", "six"};
  for (int trial = 0; trial < 300; ++trial) {
    auto draw = [&](std::size_t len) {
      TokenSequence seq;
      for (std::size_t i = 0; i < len; ++i)
        seq.tokens.push_back(vocab[rng.below(6)]);
      return seq;
    };
    auto cand = draw(1 + rng.below(10));
    auto ref = draw(1 + rng.below(10));
    CHECK(jeval::bleu(cand, ref) ==
          doctest::Approx(testutil::slow_bleu(cand.tokens, ref.tokens)).epsilon(1e-12));
  }
}

TEST_CASE("rouge_l basics and brute-force LCS equivalence") {
  auto ref = jeval::tokenize("au miroir et au nasofibroscope");
  CHECK(jeval::rouge_l(ref, ref) == doctest::Approx(1.0));

  TokenSequence cand{{"a", "b", "c"}};
  TokenSequence ref2{{"a", "x", "c"}};
  CHECK(jeval::rouge_l(cand, ref2) == doctest::Approx(2.0 / 3.0));

  CHECK(jeval::rouge_l(TokenSequence{}, ref) == 0.0);
  CHECK(jeval::rouge_l(ref, TokenSequence{}) == 0.0);

  jeval::SplitMix64 rng(31);
  const char* vocab[] = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> a, b;
    std::size_t la = rng.below(9), lb = rng.below(9);
    for (std::size_t i = 0; i < la; ++i) a.push_back(vocab[rng.below(4)]);
    for (std::size_t i = 0; i < lb; ++i) b.push_back(vocab[rng.below(4)]);
    CHECK(jeval::lcs_length(a, b) == testutil::brute_force_lcs(a, b));
  }
}

TEST_CASE("average_ranks assigns mean ranks to ties") {
  std::vector<double> values{3, 1, 2, 3};
  auto ranks = jeval::average_ranks(values);
  CHECK(ranks == std::vector<double>{3.5, 1.0, 2.0, 3.5});

  std::vector<double> constant{5, 5, 5};
  auto flat = jeval::average_ranks(constant);
  CHECK(flat == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("bleu and rouge_l ignore trailing whitespace in source text") {
  std::string text = "la laryngoscopie indirecte au miroir";
  auto clean = jeval::tokenize(text);
  auto padded = jeval::tokenize(text + "  \t\n");
  CHECK(jeval::bleu(padded, clean) == 1.0);
  CHECK(jeval::rouge_l(padded, clean) == 1.0);
}

TEST_CASE("metric_label_correlation against a two-pass oracle") {
  std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  std::vector<int> labels{0, 0, 1, 1};
  auto r = jeval::metric_label_correlation(scores, labels);
  REQUIRE(r.has_value());
  std::vector<double> label_d{0, 0, 1, 1};
  CHECK(*r == doctest::Approx(testutil::pearson_two_pass(scores, label_d)).epsilon(1e-12));

  std::vector<double> exact{0, 0, 1, 1};
  CHECK(*jeval::metric_label_correlation(exact, labels) == doctest::Approx(1.0));
  std::vector<double> inverted{1, 1, 0, 0};
  CHECK(*jeval::metric_label_correlation(inverted, labels) == doctest::Approx(-1.0));

  std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  CHECK_FALSE(jeval::metric_label_correlation(flat, labels).has_value());

  std::vector<double> one{0.5};
  std::vector<int> one_label{1};
  CHECK_THROWS_AS(jeval::metric_label_correlation(one, one_label),
                  jeval::ValidationError);
  std::vector<double> two{0.5, 0.6};
  CHECK_THROWS_AS(jeval::metric_label_correlation(two, labels),
                  jeval::ValidationError);
}
