#ifndef GAPFM_TESTS_SYNTHETIC_HPP_
#define GAPFM_TESTS_SYNTHETIC_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gapfm/core.hpp"

namespace gapfm::testing {

// Synthetic graded data with a planted low-rank structure: grades are
// quantiles of a hidden factor model's scores, so a trained model has
// something real to recover.
inline GradedDataset MakeLearnableDataset(UserIndex num_users,
                                          ItemIndex num_items,
                                          std::int32_t per_user, Grade y_max,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::int32_t hidden_dim = 4;
  std::vector<double> hu(static_cast<size_t>(num_users) * hidden_dim);
  std::vector<double> hv(static_cast<size_t>(num_items) * hidden_dim);
  for (double& x : hu) x = normal(rng);
  for (double& x : hv) x = normal(rng);

  std::vector<UserIndex> users;
  std::vector<ItemIndex> items;
  std::vector<Grade> grades;
  std::vector<ItemIndex> pool(static_cast<size_t>(num_items));
  std::iota(pool.begin(), pool.end(), 0);
  for (UserIndex m = 0; m < num_users; ++m) {
    const std::int32_t s = std::min<std::int32_t>(per_user, num_items);
    for (std::int32_t i = 0; i < s; ++i) {
      std::uniform_int_distribution<std::int32_t> pick(i, num_items - 1);
      std::swap(pool[static_cast<size_t>(i)],
                pool[static_cast<size_t>(pick(rng))]);
    }
    std::vector<std::pair<double, ItemIndex>> scored;
    for (std::int32_t i = 0; i < s; ++i) {
      const ItemIndex item = pool[static_cast<size_t>(i)];
      double score = 0.0;
      for (std::int32_t d = 0; d < hidden_dim; ++d) {
        score += hu[static_cast<size_t>(m) * hidden_dim + d] *
                 hv[static_cast<size_t>(item) * hidden_dim + d];
      }
      scored.push_back({score, item});
    }
    std::sort(scored.begin(), scored.end());
    for (std::int32_t r = 0; r < s; ++r) {
      const Grade g = 1 + static_cast<Grade>((static_cast<std::int64_t>(r) *
                                              y_max) /
                                             s);
      users.push_back(m);
      items.push_back(scored[static_cast<size_t>(r)].second);
      grades.push_back(std::min(g, y_max));
    }
  }
  return GradedDataset::FromTriples(num_users, num_items, y_max, users, items,
                                    grades);
}

// Popularity-skewed data: low-index items are rated far more often and
// carry higher grades on average, so a popularity baseline has an edge
// over random scores.
inline GradedDataset MakePopularityDataset(UserIndex num_users,
                                           ItemIndex num_items,
                                           std::int32_t per_user, Grade y_max,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> weights(static_cast<size_t>(num_items));
  for (ItemIndex i = 0; i < num_items; ++i) {
    weights[static_cast<size_t>(i)] = 1.0 / static_cast<double>(i + 1);
  }
  std::discrete_distribution<ItemIndex> item_dist(weights.begin(),
                                                  weights.end());
  std::vector<UserIndex> users;
  std::vector<ItemIndex> items;
  std::vector<Grade> grades;
  std::vector<bool> taken(static_cast<size_t>(num_items));
  for (UserIndex m = 0; m < num_users; ++m) {
    std::fill(taken.begin(), taken.end(), false);
    std::int32_t added = 0;
    while (added < per_user) {
      const ItemIndex i = item_dist(rng);
      if (taken[static_cast<size_t>(i)]) continue;
      taken[static_cast<size_t>(i)] = true;
      // popular (low-index) items skew toward the top grade
      const double pop = 1.0 - static_cast<double>(i) /
                                   static_cast<double>(num_items);
      std::binomial_distribution<Grade> grade_dist(y_max - 1, 0.3 + 0.6 * pop);
      users.push_back(m);
      items.push_back(i);
      grades.push_back(1 + grade_dist(rng));
      ++added;
    }
  }
  return GradedDataset::FromTriples(num_users, num_items, y_max, users, items,
                                    grades);
}

}  // namespace gapfm::testing

#endif  // GAPFM_TESTS_SYNTHETIC_HPP_
