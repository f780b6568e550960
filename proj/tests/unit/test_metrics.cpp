#include "tf4ctr/metrics.hpp"

#include "tf4ctr/rng.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <thread>

using namespace tf4ctr;

TEST_CASE("auc on the worked examples") {
  CHECK(auc({{0.9, 0.8, 0.1}, {1, 1, 0}, {}}) == 1.0);
  CHECK(auc({{0.5, 0.5}, {1, 0}, {}}) == 0.5);
  // 3 wins out of 4 positive-negative pairs
  CHECK(auc({{0.9, 0.6, 0.5, 0.4}, {1, 0, 1, 0}, {}}) == 0.75);
  CHECK_THROWS_AS(auc({{0.1, 0.2}, {1, 1}, {}}), MetricError);
}

TEST_CASE("rank-based auc equals brute-force pairwise counting exactly") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + int(rng.below(198));
    ScoredSet s;
    bool pos = false, neg = false;
    for (int i = 0; i < n; ++i) {
      // quantized scores inject plenty of ties
      s.scores.push_back(double(rng.below(7)) / 7.0);
      s.labels.push_back(std::int8_t(rng.below(2)));
      (s.labels.back() ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    CHECK(auc(s) == oracles::auc_bruteforce(s.scores, s.labels));
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(55);
  ScoredSet s;
  for (int i = 0; i < 400; ++i) {
    s.scores.push_back(rng.uniform(0.01, 0.99));
    s.labels.push_back(std::int8_t(rng.below(2)));
  }
  const double base = auc(s);
  ScoredSet cubed = s;
  for (auto& v : cubed.scores) v = v * v * v;
  CHECK(auc(cubed) == base);
  ScoredSet squashed = s;
  for (auto& v : squashed.scores) v = 1.0 / (1.0 + std::exp(-(5.0 * v - 2.0)));
  CHECK(auc(squashed) == base);
}

TEST_CASE("auc complement identity for tie-free scores") {
  Rng rng(77);
  ScoredSet s;
  for (int i = 0; i < 200; ++i) {
    s.scores.push_back(rng.uniform());  // ties have probability ~0
    s.labels.push_back(std::int8_t(rng.below(2)));
  }
  ScoredSet flipped = s;
  for (auto& y : flipped.labels) y = std::int8_t(1 - y);
  CHECK(auc(s) + auc(flipped) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gauc weights per-user auc by impression count") {
  // two users with per-user AUCs 1.0 and 0.5, two impressions each -> 0.75
  ScoredSet s;
  s.scores = {0.9, 0.1, 0.6, 0.6};
  s.labels = {1, 0, 1, 0};
  s.user_ids = {1, 1, 2, 2};
  auto g = gauc(s);
  REQUIRE(g.has_value());
  CHECK(*g == doctest::Approx(0.75).epsilon(1e-12));

  // single qualifying user: gauc equals that user's auc
  ScoredSet one;
  one.scores = {0.9, 0.2, 0.4};
  one.labels = {1, 0, 1};
  one.user_ids = {5, 5, 6};
  auto g1 = gauc(one);
  REQUIRE(g1.has_value());
  CHECK(*g1 == 1.0);

  // all users single-class: absent, not zero
  ScoredSet none;
  none.scores = {0.9, 0.2};
  none.labels = {1, 0};
  none.user_ids = {1, 2};
  CHECK_FALSE(gauc(none).has_value());

  // no user ids at all: absent
  CHECK_FALSE(gauc({{0.5, 0.4}, {1, 0}, {}}).has_value());
}

TEST_CASE("gauc equals the hand-computed weighted average on random instances") {
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    ScoredSet s;
    const int users = 2 + int(rng.below(6));
    for (int u = 0; u < users; ++u) {
      const int impressions = 1 + int(rng.below(12));
      for (int i = 0; i < impressions; ++i) {
        s.scores.push_back(double(rng.below(5)) / 5.0);
        s.labels.push_back(std::int8_t(rng.below(2)));
        s.user_ids.push_back(u);
      }
    }
    auto mine = gauc(s);
    auto ref = oracles::gauc_bruteforce(s);
    CHECK(mine.has_value() == ref.has_value());
    if (mine && ref) CHECK(*mine == doctest::Approx(*ref).epsilon(1e-12));
  }
}

TEST_CASE("categorization thresholds, mirrored for negatives") {
  CHECK(categorize_one(0.7, 1, 0.3, 0.6) == Category::Well);
  CHECK(categorize_one(0.25, 1, 0.3, 0.6) == Category::Misclassified);
  CHECK(categorize_one(0.45, 1, 0.3, 0.6) == Category::Poorly);
  // negative at 0.25: 1 - 0.25 = 0.75 >= 0.6 -> well classified
  CHECK(categorize_one(0.25, 0, 0.3, 0.6) == Category::Well);
  CHECK(categorize_one(0.55, 0, 0.3, 0.6) == Category::Poorly);
  CHECK(categorize_one(0.8, 0, 0.3, 0.6) == Category::Misclassified);
  // boundaries are closed at t_high for "well" and at t_low for "poorly"
  CHECK(categorize_one(0.6, 1, 0.3, 0.6) == Category::Well);
  CHECK(categorize_one(0.3, 1, 0.3, 0.6) == Category::Poorly);

  CHECK_THROWS_AS(categorize({{0.5}, {1}, {}}, 0.6, 0.3), ConfigError);
}

TEST_CASE("histogram counts partition the dataset") {
  Rng rng(9);
  ScoredSet s;
  for (int i = 0; i < 500; ++i) {
    s.scores.push_back(rng.uniform());
    s.labels.push_back(std::int8_t(rng.below(2)));
  }
  auto h = categorize(s, 0.3, 0.6);
  CHECK(h.total() == 500);
  auto h2 = categorize(s, 0.2, 0.6);
  CHECK(h2.total() == 500);
}

TEST_CASE("log loss matches a direct computation") {
  ScoredSet s;
  s.scores = {0.9, 0.2};
  s.labels = {1, 0};
  const double expected = -(std::log(0.9) + std::log(0.8)) / 2.0;
  CHECK(log_loss(s) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("timeit runs the warmup untimed and measures the timed pass") {
  int calls = 0;
  const double secs = timeit(
      [&] {
        ++calls;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      },
      2);
  CHECK(calls == 3);  // two warmups plus the timed run
  CHECK(secs >= 0.015);
  CHECK(secs < 1.0);
}
