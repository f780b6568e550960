#pragma once

#include "tf4ctr/types.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

namespace tf4ctr {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<std::int8_t> labels;
  std::vector<std::int64_t> user_ids;  // empty when absent

  std::size_t size() const { return scores.size(); }
};

// Mann-Whitney AUC via average ranks; ties contribute 1/2. Throws MetricError
// unless both classes are present.
double auc(const ScoredSet& s);

// Impression-weighted mean of per-user AUC over users with both classes.
// Users with a single class are excluded from numerator and denominator;
// absent when no user qualifies or there are no user ids.
std::optional<double> gauc(const ScoredSet& s);

double log_loss(const ScoredSet& s);

enum class Category { Misclassified = 0, Poorly = 1, Well = 2 };

constexpr const char* category_name(Category c) {
  switch (c) {
    case Category::Misclassified: return "misclassified";
    case Category::Poorly: return "poorly";
    default: return "well";
  }
}

// Positive rule on yhat: >= t_high well, [t_low, t_high) poorly, < t_low
// misclassified. Negatives use the mirrored rule on 1 - yhat.
Category categorize_one(double score, int label, double t_low, double t_high);

struct CategoryHistogram {
  double t_low = 0.3;
  double t_high = 0.6;
  // counts[label][category], label in {0 = negative, 1 = positive}
  long counts[2][3] = {{0, 0, 0}, {0, 0, 0}};

  long total() const {
    long s = 0;
    for (const auto& row : counts)
      for (long c : row) s += c;
    return s;
  }
  long by_category(Category c) const {
    return counts[0][int(c)] + counts[1][int(c)];
  }
};

CategoryHistogram categorize(const ScoredSet& s, double t_low, double t_high);

// Wall-clock measurement of one phase. The callable runs `warmup` times
// untimed, then once timed; returns seconds.
template <class F>
double timeit(F&& run, int warmup = 1) {
  for (int i = 0; i < warmup; ++i) run();
  const auto t0 = std::chrono::steady_clock::now();
  run();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace tf4ctr
