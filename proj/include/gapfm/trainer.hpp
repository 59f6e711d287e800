#ifndef GAPFM_TRAINER_HPP_
#define GAPFM_TRAINER_HPP_

#include <optional>
#include <random>
#include <vector>

#include "gapfm/core.hpp"

namespace gapfm {

/// Per-epoch telemetry record.
struct EpochStats {
  std::int32_t iteration = 0;
  double objective = 0.0;
  double u_phase_ms = 0.0;
  double v_phase_ms = 0.0;
  std::int64_t item_grad_evals = 0;
  std::optional<double> validation_gap;
};

struct TrainState {
  std::int32_t iteration = 0;
  ModelFactors model;
  std::mt19937_64 rng;
  std::vector<EpochStats> telemetry;
};

/// Items picked for a user's V update this epoch.
struct SelectionResult {
  UserIndex user = 0;
  std::vector<ItemIndex> items;        // subset of the user's rated items
  std::vector<std::int32_t> distances; // |rank_by_grade - rank_by_score|;
                                       // empty when the whole profile fits
};

/// Factors drawn i.i.d. uniform from [-0.01, 0.01]; deterministic per seed.
ModelFactors InitFactors(UserIndex num_users, ItemIndex num_items,
                         std::int32_t dim, std::uint64_t seed);

/// Picks the K most misranked rated items of user m: rank the profile by
/// descending grade and by descending predicted score, and take the largest
/// absolute rank disagreements. Returns the whole profile when S_m <= K.
SelectionResult AdaptiveSelect(UserIndex m, const ModelFactors& model,
                               const GradedDataset& dataset, std::int32_t k);

/// Mean exact GAP@cutoff over each validation user's own held-out items,
/// ranked by model score. nullopt when no user is measurable.
std::optional<double> ValidationGap(const ModelFactors& model,
                                    const GradedDataset& validation,
                                    const ThresholdVector& thresholds,
                                    std::int32_t cutoff = 5);

/// One full pass: parallel U update against the frozen model, then the
/// per-user item selection and sequential V updates. With a finite K the
/// per-user gradient work is confined to the selected items in both phases.
void TrainEpoch(TrainState& state, const GradedDataset& dataset,
                const ThresholdVector& thresholds, const HyperParams& hyper,
                const GradedDataset* validation = nullptr);

/// Runs TrainEpoch up to hyper.itermax times, with optional early stopping
/// on validation GAP.
TrainState Train(const GradedDataset& dataset,
                 const ThresholdVector& thresholds, const HyperParams& hyper,
                 const GradedDataset* validation = nullptr);

}  // namespace gapfm

#endif  // GAPFM_TRAINER_HPP_
