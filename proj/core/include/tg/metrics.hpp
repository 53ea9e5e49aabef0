#pragma once

#include <vector>

namespace tg {

enum class TieRule { Average, Optimistic, Pessimistic };

// 1 + count(neg > pos), ties resolved by rule (Average adds half the
// tie count, Pessimistic all of it).
double rank_of(double pos_score, const std::vector<double>& neg_scores,
               TieRule rule = TieRule::Average);

// Mean reciprocal rank. Throws on empty input.
double mrr(const std::vector<double>& ranks);

}  // namespace tg
