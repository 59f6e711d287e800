#ifndef GAPFM_METRICS_HPP_
#define GAPFM_METRICS_HPP_

#include <optional>
#include <vector>

#include "gapfm/core.hpp"

namespace gapfm {

/// A ranked candidate list with judgments. Position is the vector index + 1.
/// grade == 0 marks an unjudged (assumed irrelevant) entry.
struct RankedEntry {
  ItemIndex item;
  Grade grade;
};

using RankedJudgedList = std::vector<RankedEntry>;

constexpr std::int32_t kFullList = -1;

// All list metrics return std::nullopt when the list cannot support the
// metric (e.g. no judged entries); aggregation counts those users as skipped.

/// Exact graded average precision of the list, truncated at rank k
/// (kFullList = no truncation). The normalizer always covers the whole
/// judged set, so the ideal full ranking scores exactly 1.
std::optional<double> GapExact(const RankedJudgedList& list,
                               const ThresholdVector& thresholds,
                               std::int32_t k = kFullList);

/// NDCG@k with 2^grade - 1 gains and 1/log2(pos + 1) discounts; the ideal
/// ordering is taken over the judged entries of the same pool.
std::optional<double> NdcgAtK(const RankedJudgedList& list, std::int32_t k);

/// Fraction of the top k whose grade reaches the relevance threshold.
double PrecisionAtK(const RankedJudgedList& list, std::int32_t k,
                    Grade relevance_threshold);

/// Graded precision at n. Needs at least n judged items to define the
/// reference grade c_n (the user's n-th best judged grade).
std::optional<double> GpAtN(const RankedJudgedList& list,
                            const ThresholdVector& thresholds, std::int32_t n);

/// Graded recall at n: cumulative credit of judged items in the top n over
/// the user's normalizer.
std::optional<double> GrAtN(const RankedJudgedList& list,
                            const ThresholdVector& thresholds, std::int32_t n);

struct AggregateResult {
  double mean = 0.0;
  std::int64_t used = 0;
  std::int64_t skipped = 0;
};

/// Mean over measurable users; throws if no user is measurable.
AggregateResult Aggregate(const std::vector<std::optional<double>>& per_user);

}  // namespace gapfm

#endif  // GAPFM_METRICS_HPP_
