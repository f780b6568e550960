#include "tf4ctr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace tf4ctr {

double auc(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size()) throw MetricError("auc: size mismatch");
  std::size_t n_pos = 0;
  for (auto y : s.labels) n_pos += std::size_t(y);
  const std::size_t n_neg = s.labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("auc: needs both classes");

  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });

  // Average ranks within tie groups; ranks are 1-based.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (double(i + 1) + double(j));
    for (std::size_t k = i; k < j; ++k)
      if (s.labels[order[k]]) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = double(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * double(n_neg));
}

std::optional<double> gauc(const ScoredSet& s) {
  if (s.user_ids.empty()) return std::nullopt;
  if (s.user_ids.size() != s.scores.size()) throw MetricError("gauc: size mismatch");

  // Ordered map keeps the accumulation order independent of hash layout.
  std::map<std::int64_t, ScoredSet> groups;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& g = groups[s.user_ids[i]];
    g.scores.push_back(s.scores[i]);
    g.labels.push_back(s.labels[i]);
  }
  double weighted = 0.0;
  double weight = 0.0;
  for (const auto& [user, g] : groups) {
    (void)user;
    bool has_pos = false, has_neg = false;
    for (auto y : g.labels) (y ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) continue;
    const double w = double(g.size());
    weighted += w * auc(g);
    weight += w;
  }
  if (weight == 0.0) return std::nullopt;
  return weighted / weight;
}

double log_loss(const ScoredSet& s) {
  if (s.scores.empty()) throw MetricError("log_loss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = std::clamp(s.scores[i], 1e-7, 1.0 - 1e-7);
    sum -= s.labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return sum / double(s.size());
}

Category categorize_one(double score, int label, double t_low, double t_high) {
  const double p = label ? score : 1.0 - score;
  if (p >= t_high) return Category::Well;
  if (p >= t_low) return Category::Poorly;
  return Category::Misclassified;
}

CategoryHistogram categorize(const ScoredSet& s, double t_low, double t_high) {
  if (!(0.0 <= t_low && t_low < t_high && t_high <= 1.0))
    throw ConfigError("categorize: need 0 <= t_low < t_high <= 1");
  CategoryHistogram h;
  h.t_low = t_low;
  h.t_high = t_high;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int label = s.labels[i] ? 1 : 0;
    ++h.counts[label][int(categorize_one(s.scores[i], label, t_low, t_high))];
  }
  return h;
}

}  // namespace tf4ctr
