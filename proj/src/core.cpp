#include "gapfm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>

namespace gapfm {

GradedDataset GradedDataset::FromTriples(UserIndex num_users,
                                         ItemIndex num_items, Grade y_max,
                                         const std::vector<UserIndex>& users,
                                         const std::vector<ItemIndex>& items,
                                         const std::vector<Grade>& grades) {
  if (num_users < 0 || num_items < 0) {
    throw std::invalid_argument("dataset dimensions must be nonnegative");
  }
  if (y_max < 1) {
    throw std::invalid_argument("y_max must be >= 1");
  }
  if (users.size() != items.size() || users.size() != grades.size()) {
    throw std::invalid_argument("triple arrays must have equal length");
  }
  GradedDataset ds;
  ds.num_users_ = num_users;
  ds.num_items_ = num_items;
  ds.y_max_ = y_max;
  ds.entries_.assign(static_cast<size_t>(num_users), {});
  for (size_t k = 0; k < users.size(); ++k) {
    const UserIndex m = users[k];
    const ItemIndex i = items[k];
    const Grade y = grades[k];
    if (m < 0 || m >= num_users) {
      throw std::out_of_range("user index out of range");
    }
    if (i < 0 || i >= num_items) {
      throw std::out_of_range("item index out of range");
    }
    if (y < 1 || y > y_max) {
      throw std::invalid_argument("grade out of [1, y_max]");
    }
    ds.entries_[static_cast<size_t>(m)].push_back({i, y});
  }
  for (auto& list : ds.entries_) {
    std::sort(list.begin(), list.end(),
              [](const RatedItem& a, const RatedItem& b) {
                return a.item < b.item;
              });
    for (size_t k = 1; k < list.size(); ++k) {
      if (list[k].item == list[k - 1].item) {
        throw std::invalid_argument("duplicate (user, item) pair");
      }
    }
    ds.total_entries_ += static_cast<std::int64_t>(list.size());
  }
  return ds;
}

const std::vector<RatedItem>& GradedDataset::user_items(UserIndex m) const {
  return entries_.at(static_cast<size_t>(m));
}

std::int32_t GradedDataset::user_size(UserIndex m) const {
  return static_cast<std::int32_t>(user_items(m).size());
}

ThresholdVector::ThresholdVector(std::vector<double> deltas)
    : deltas_(std::move(deltas)) {
  if (deltas_.empty()) {
    throw std::invalid_argument("threshold vector needs >= 1 grade");
  }
  cumulative_.resize(deltas_.size());
  double acc = 0.0;
  for (size_t l = 0; l < deltas_.size(); ++l) {
    if (!(deltas_[l] > 0.0) || deltas_[l] > 1.0) {
      throw std::invalid_argument("each delta must lie in (0, 1]");
    }
    acc += deltas_[l];
    cumulative_[l] = acc;
  }
}

ThresholdVector MakeThresholds(Grade y_max) {
  if (y_max < 1) {
    throw std::invalid_argument("y_max must be >= 1");
  }
  if (y_max == 1) {
    return ThresholdVector({1.0});
  }
  std::vector<double> deltas(static_cast<size_t>(y_max));
  const double denom = std::ldexp(1.0, y_max);  // 2^y_max
  for (Grade l = 1; l <= y_max; ++l) {
    deltas[static_cast<size_t>(l - 1)] = (std::ldexp(1.0, l) - 1.0) / denom;
  }
  return ThresholdVector(std::move(deltas));
}

double Beta(const ThresholdVector& thresholds, Grade y_i, Grade y_j) {
  if (y_i < 1 || y_i > thresholds.y_max() || y_j < 1 ||
      y_j > thresholds.y_max()) {
    throw std::invalid_argument("grade out of [1, y_max]");
  }
  return thresholds.cumulative(std::min(y_i, y_j));
}

double ZNorm(const ThresholdVector& thresholds,
             const std::vector<Grade>& user_grades) {
  if (user_grades.empty()) {
    throw std::invalid_argument("empty user profile");
  }
  double z = 0.0;
  for (Grade y : user_grades) {
    if (y < 1 || y > thresholds.y_max()) {
      throw std::invalid_argument("grade out of [1, y_max]");
    }
    z += thresholds.cumulative(y);
  }
  return z;
}

bool ModelFactors::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  return finite(user_factors_) && finite(item_factors_);
}

double Score(const ModelFactors& model, UserIndex m, ItemIndex i) {
  if (m < 0 || m >= model.num_users()) {
    throw std::out_of_range("user index out of range");
  }
  if (i < 0 || i >= model.num_items()) {
    throw std::out_of_range("item index out of range");
  }
  const double* u = model.user_col(m);
  const double* v = model.item_col(i);
  double s = 0.0;
  for (std::int32_t d = 0; d < model.dim(); ++d) {
    s += u[d] * v[d];
  }
  return s;
}

std::vector<std::int32_t> RankItems(const std::vector<double>& scores) {
  for (double s : scores) {
    if (std::isnan(s)) {
      throw std::invalid_argument("NaN score cannot be ranked");
    }
  }
  const size_t n = scores.size();
  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::int32_t a, std::int32_t b) {
                     return scores[static_cast<size_t>(a)] >
                            scores[static_cast<size_t>(b)];
                   });
  std::vector<std::int32_t> ranks(n);
  for (size_t pos = 0; pos < n; ++pos) {
    ranks[static_cast<size_t>(order[pos])] = static_cast<std::int32_t>(pos + 1);
  }
  return ranks;
}

void HyperParams::Validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (reg < 0.0) throw std::invalid_argument("reg must be >= 0");
  if (!(learn_rate > 0.0)) {
    throw std::invalid_argument("learn_rate must be > 0");
  }
  if (itermax < 1) throw std::invalid_argument("itermax must be >= 1");
  if (select_k != kSelectAll && select_k < 1) {
    throw std::invalid_argument("select_k must be >= 1 or kSelectAll");
  }
}

}  // namespace gapfm
