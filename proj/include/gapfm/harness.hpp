#ifndef GAPFM_HARNESS_HPP_
#define GAPFM_HARNESS_HPP_

#include <functional>
#include <string>
#include <vector>

#include "gapfm/core.hpp"

namespace gapfm {

/// Knobs of the Given-n experimental protocol.
struct ProtocolConfig {
  std::int32_t given_n = 10;
  std::int32_t min_train_ratings = 50;
  std::int32_t min_probe_ratings = 5;
  std::int32_t negatives_per_user = 1000;
  std::vector<std::int32_t> eval_cutoffs = {1, 3, 5};
  Grade precision_threshold = 0;  // 0 = use the dataset's y_max
  double validation_fraction = 0.015;
  std::uint64_t seed = 1;

  void Validate() const;
};

/// Disjoint train / validation / probe datasets plus the fixed per-user
/// candidate pools for top-N evaluation. Pools are only built for
/// probe-eligible users and stay empty otherwise.
struct SplitBundle {
  GradedDataset train;
  GradedDataset validation;
  GradedDataset probe;
  std::vector<std::vector<ItemIndex>> negative_pools;
  std::vector<bool> shrunk_pool;  // user had fewer unrated items than asked
};

struct MetricRow {
  std::string metric;
  std::int32_t cutoff = 0;
  double mean = 0.0;
  std::int64_t users = 0;
  std::int64_t skipped = 0;
};

struct EvalReport {
  std::string protocol;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;
  std::int64_t flagged_users = 0;  // pool shorter than asked / than max cutoff

  std::string ToText() const;
  std::string ToJson() const;

  // First row matching (metric, cutoff); throws if absent.
  const MetricRow& Row(const std::string& metric, std::int32_t cutoff) const;
};

/// Splits a dataset per the Given-n protocol: users below min_train_ratings
/// are dropped, exactly given_n entries per eligible user go to train, the
/// remainder forms the holdout probe, and validation_fraction of the train
/// entries are carved off as a validation set. Deterministic per seed.
SplitBundle CarveGivenN(const GradedDataset& dataset,
                        const ProtocolConfig& config);

/// n distinct items the user has rated nowhere (train, validation or probe),
/// sampled uniformly. Shrinks to all available when fewer exist.
std::vector<ItemIndex> SampleNegatives(UserIndex user,
                                       const GradedDataset& dataset,
                                       std::int32_t n, std::uint64_t seed,
                                       bool* shrunk = nullptr);

/// Any user x item scoring function; evaluation never sees probe grades
/// through this interface.
using Scorer = std::function<double(UserIndex, ItemIndex)>;

/// Top-N protocol: per probe-eligible user, rank the fixed negatives plus
/// the probe ground truth by score and measure GAP@k, NDCG@k and P@k.
EvalReport EvaluateTopN(const Scorer& scorer, const SplitBundle& bundle,
                        const ProtocolConfig& config);
EvalReport EvaluateTopN(const ModelFactors& model, const SplitBundle& bundle,
                        const ProtocolConfig& config);

/// Rated-ranking protocol: rank only each user's probe-rated items and
/// measure NDCG at the configured cutoffs.
EvalReport EvaluateRatedRanking(const Scorer& scorer, const SplitBundle& bundle,
                                const ProtocolConfig& config);
EvalReport EvaluateRatedRanking(const ModelFactors& model,
                                const SplitBundle& bundle,
                                const ProtocolConfig& config);

/// Non-personalized popularity baseline: an item scores its training rating
/// count, identically for every user.
Scorer PopRecBaseline(const GradedDataset& train);

}  // namespace gapfm

#endif  // GAPFM_HARNESS_HPP_
