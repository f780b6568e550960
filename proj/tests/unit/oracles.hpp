// Test-only reference implementations, kept independent of the library code
// paths they are used to check.
#pragma once

#include "tf4ctr/data.hpp"
#include "tf4ctr/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace oracles {

// O(n^2) pairwise AUC: wins count 1, ties 1/2.
inline double auc_bruteforce(const std::vector<double>& scores,
                             const std::vector<std::int8_t>& labels) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / double(pairs);
}

// Weighted average of per-user brute-force AUC; users with one class excluded.
inline std::optional<double> gauc_bruteforce(const tf4ctr::ScoredSet& s) {
  std::map<std::int64_t, std::pair<std::vector<double>, std::vector<std::int8_t>>> groups;
  for (std::size_t i = 0; i < s.size(); ++i) {
    groups[s.user_ids[i]].first.push_back(s.scores[i]);
    groups[s.user_ids[i]].second.push_back(s.labels[i]);
  }
  double num = 0.0, den = 0.0;
  for (const auto& [u, g] : groups) {
    (void)u;
    bool pos = false, neg = false;
    for (auto y : g.second) (y ? pos : neg) = true;
    if (!pos || !neg) continue;
    num += double(g.first.size()) * auc_bruteforce(g.first, g.second);
    den += double(g.first.size());
  }
  if (den == 0.0) return std::nullopt;
  return num / den;
}

// Plain logistic regression on one-hot fields, trained with mini-batch SGD.
// Capacity-adequate for the planted generator by construction.
struct LogisticReference {
  std::vector<std::vector<double>> weights;  // per field, per token
  double bias = 0.0;

  void fit(const tf4ctr::Dataset& data, int epochs = 30, double lr = 0.5) {
    weights.assign(std::size_t(data.fields()), {});
    for (Eigen::Index f = 0; f < data.fields(); ++f)
      weights[std::size_t(f)].assign(std::size_t(data.vocabs[std::size_t(f)].size()), 0.0);
    for (int e = 0; e < epochs; ++e) {
      for (Eigen::Index r = 0; r < data.rows(); ++r) {
        double z = bias;
        for (Eigen::Index f = 0; f < data.fields(); ++f)
          z += weights[std::size_t(f)][std::size_t(data.ids(r, f))];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double g = double(data.labels[std::size_t(r)]) - p;
        bias += lr * g;
        for (Eigen::Index f = 0; f < data.fields(); ++f)
          weights[std::size_t(f)][std::size_t(data.ids(r, f))] += lr * g;
      }
    }
  }

  std::vector<double> predict(const tf4ctr::Dataset& data) const {
    std::vector<double> out;
    out.reserve(std::size_t(data.rows()));
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      double z = bias;
      for (Eigen::Index f = 0; f < data.fields(); ++f)
        z += weights[std::size_t(f)][std::size_t(data.ids(r, f))];
      out.push_back(1.0 / (1.0 + std::exp(-z)));
    }
    return out;
  }
};

}  // namespace oracles
