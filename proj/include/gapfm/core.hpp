#ifndef GAPFM_CORE_HPP_
#define GAPFM_CORE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace gapfm {

using UserIndex = std::int32_t;
using ItemIndex = std::int32_t;
using Grade = std::int32_t;

/// One (item, grade) pair inside a user's profile.
struct RatedItem {
  ItemIndex item;
  Grade grade;
};

/// Sparse user-by-item grade matrix with per-user adjacency.
/// Grades are integers in [1, y_max]; absence means "unknown".
class GradedDataset {
 public:
  GradedDataset() = default;

  // Builds from raw triples. Validates index ranges, grade range and
  // duplicate (user, item) pairs; per-user lists end up sorted by item.
  static GradedDataset FromTriples(UserIndex num_users, ItemIndex num_items,
                                   Grade y_max,
                                   const std::vector<UserIndex>& users,
                                   const std::vector<ItemIndex>& items,
                                   const std::vector<Grade>& grades);

  UserIndex num_users() const { return num_users_; }
  ItemIndex num_items() const { return num_items_; }
  Grade y_max() const { return y_max_; }

  const std::vector<RatedItem>& user_items(UserIndex m) const;
  std::int32_t user_size(UserIndex m) const;  // S_m
  std::int64_t total_entries() const { return total_entries_; }  // |Y|

  bool empty() const { return total_entries_ == 0; }

 private:
  UserIndex num_users_ = 0;
  ItemIndex num_items_ = 0;
  Grade y_max_ = 1;
  std::int64_t total_entries_ = 0;
  std::vector<std::vector<RatedItem>> entries_;
};

/// Per-grade thresholding probabilities delta_1..delta_ymax and their
/// cumulative sums. cumulative(l) = sum_{k<=l} delta_k, 1-based grades.
class ThresholdVector {
 public:
  // Caller-supplied deltas; each must lie in (0, 1].
  explicit ThresholdVector(std::vector<double> deltas);

  Grade y_max() const { return static_cast<Grade>(deltas_.size()); }
  double delta(Grade l) const { return deltas_.at(static_cast<size_t>(l - 1)); }
  double cumulative(Grade l) const {
    return cumulative_.at(static_cast<size_t>(l - 1));
  }

  const std::vector<double>& deltas() const { return deltas_; }
  const std::vector<double>& cumulatives() const { return cumulative_; }

 private:
  std::vector<double> deltas_;
  std::vector<double> cumulative_;
};

/// Default exponential grade-to-probability mapping:
/// delta_l = (2^l - 1) / 2^ymax for ymax > 1, delta_1 = 1 for ymax = 1.
ThresholdVector MakeThresholds(Grade y_max);

/// Pairwise credit of a grade pair: the cumulative threshold probability of
/// the smaller grade.
double Beta(const ThresholdVector& thresholds, Grade y_i, Grade y_j);

/// Per-user normalizer: sum over the user's grades of cumulative(grade).
/// The ideal ranking of the user's items then scores exactly 1.
double ZNorm(const ThresholdVector& thresholds,
             const std::vector<Grade>& user_grades);

/// D-dimensional user and item factors, column per user / item.
class ModelFactors {
 public:
  ModelFactors() = default;
  ModelFactors(std::int32_t dim, UserIndex num_users, ItemIndex num_items)
      : dim_(dim),
        num_users_(num_users),
        num_items_(num_items),
        user_factors_(static_cast<size_t>(dim) * num_users, 0.0),
        item_factors_(static_cast<size_t>(dim) * num_items, 0.0) {}

  std::int32_t dim() const { return dim_; }
  UserIndex num_users() const { return num_users_; }
  ItemIndex num_items() const { return num_items_; }

  double* user_col(UserIndex m) {
    return user_factors_.data() + static_cast<size_t>(m) * dim_;
  }
  const double* user_col(UserIndex m) const {
    return user_factors_.data() + static_cast<size_t>(m) * dim_;
  }
  double* item_col(ItemIndex i) {
    return item_factors_.data() + static_cast<size_t>(i) * dim_;
  }
  const double* item_col(ItemIndex i) const {
    return item_factors_.data() + static_cast<size_t>(i) * dim_;
  }

  std::vector<double>& user_factors() { return user_factors_; }
  const std::vector<double>& user_factors() const { return user_factors_; }
  std::vector<double>& item_factors() { return item_factors_; }
  const std::vector<double>& item_factors() const { return item_factors_; }

  bool all_finite() const;

 private:
  std::int32_t dim_ = 0;
  UserIndex num_users_ = 0;
  ItemIndex num_items_ = 0;
  std::vector<double> user_factors_;  // column-major, D x M
  std::vector<double> item_factors_;  // column-major, D x N
};

/// Predicted relevance of item i for user m: <U_m, V_i>.
double Score(const ModelFactors& model, UserIndex m, ItemIndex i);

/// Rank positions (1-based) of a score array under descending score.
/// Ties break by ascending index so runs are reproducible.
std::vector<std::int32_t> RankItems(const std::vector<double>& scores);

/// How items are picked for the V update when K is smaller than S_m.
enum class SelectionMode { kAdaptive, kRandom };

constexpr std::int32_t kSelectAll = -1;

struct HyperParams {
  std::int32_t dim = 10;
  double reg = 0.001;
  double learn_rate = 1e-5;
  std::int32_t select_k = kSelectAll;  // kSelectAll updates every rated item
  SelectionMode selection_mode = SelectionMode::kAdaptive;
  std::int32_t itermax = 100;
  std::uint64_t seed = 1;
  std::int32_t workers = 1;  // 0 = hardware concurrency
  bool early_stopping = false;
  std::int32_t patience = 5;
  bool track_objective = true;  // off for timing runs; objective is O(S^2)

  void Validate() const;
};

}  // namespace gapfm

#endif  // GAPFM_CORE_HPP_
