#pragma once

// Reference computations that deliberately avoid the library's code paths.

#include <cstddef>
#include <functional>
#include <vector>

namespace anssel::oracle {

// Rank of candidate i without sorting: one plus the candidates that beat it
// (strictly higher score, or equal score and earlier position).
inline std::vector<std::size_t> ranks_by_counting(const std::vector<double>& scores) {
  std::vector<std::size_t> rank(scores.size(), 1);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++rank[i];
    }
  }
  return rank;
}

inline double reciprocal_rank(const std::vector<bool>& labels, const std::vector<double>& scores) {
  const auto rank = ranks_by_counting(scores);
  std::size_t best = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] && (best == 0 || rank[i] < best)) best = rank[i];
  }
  return best == 0 ? 0.0 : 1.0 / static_cast<double>(best);
}

// Mean over relevant candidates d_k of |relevant within top rank(d_k)| / rank(d_k).
inline double average_precision(const std::vector<bool>& labels,
                                const std::vector<double>& scores) {
  const auto rank = ranks_by_counting(scores);
  std::size_t m = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!labels[k]) continue;
    ++m;
    std::size_t relevant_in_prefix = 0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] && rank[j] <= rank[k]) ++relevant_in_prefix;
    }
    sum += static_cast<double>(relevant_in_prefix) / static_cast<double>(rank[k]);
  }
  return m == 0 ? 0.0 : sum / static_cast<double>(m);
}

inline double central_difference(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

}  // namespace anssel::oracle
