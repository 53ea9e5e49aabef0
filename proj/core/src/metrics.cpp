#include "tg/metrics.hpp"

#include <stdexcept>

namespace tg {

double rank_of(double pos_score, const std::vector<double>& neg_scores,
               TieRule rule) {
  int above = 0;
  int tied = 0;
  for (double s : neg_scores) {
    if (s > pos_score) {
      ++above;
    } else if (s == pos_score) {
      ++tied;
    }
  }
  double r = 1.0 + above;
  switch (rule) {
    case TieRule::Optimistic:
      break;
    case TieRule::Pessimistic:
      r += tied;
      break;
    case TieRule::Average:
      r += 0.5 * tied;
      break;
  }
  return r;
}

double mrr(const std::vector<double>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("mrr of empty rank list");
  double acc = 0.0;
  for (double r : ranks) {
    if (r < 1.0) throw std::invalid_argument("rank below 1");
    acc += 1.0 / r;
  }
  return acc / static_cast<double>(ranks.size());
}

}  // namespace tg
