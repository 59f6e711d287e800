#include "gapfm/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "gapfm/metrics.hpp"
#include "gapfm/objective.hpp"

namespace gapfm {

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::uint64_t Mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Local indices (into the user's rated list) of the K most misranked items,
// sorted ascending. Assumes S_m > K.
std::vector<std::int32_t> MisrankedLocals(UserIndex m,
                                          const ModelFactors& model,
                                          const GradedDataset& dataset,
                                          std::int32_t k,
                                          std::vector<std::int32_t>* dists_out) {
  const auto& rated = dataset.user_items(m);
  const std::int32_t s = static_cast<std::int32_t>(rated.size());
  // Rank by descending grade, ties by ascending item position: grades are
  // small integers, so a counting pass beats a comparison sort.
  const Grade y_max = dataset.y_max();
  std::vector<std::int32_t> grade_offset(static_cast<size_t>(y_max) + 2, 0);
  for (const auto& e : rated) ++grade_offset[static_cast<size_t>(e.grade)];
  std::int32_t running = 0;
  for (Grade g = y_max; g >= 1; --g) {
    const std::int32_t count = grade_offset[static_cast<size_t>(g)];
    grade_offset[static_cast<size_t>(g)] = running;
    running += count;
  }
  std::vector<std::int32_t> grade_rank(static_cast<size_t>(s));
  for (std::int32_t i = 0; i < s; ++i) {
    grade_rank[static_cast<size_t>(i)] =
        ++grade_offset[static_cast<size_t>(rated[static_cast<size_t>(i)].grade)];
  }
  std::vector<double> scores(static_cast<size_t>(s));
  for (std::int32_t i = 0; i < s; ++i) {
    scores[static_cast<size_t>(i)] =
        Score(model, m, rated[static_cast<size_t>(i)].item);
  }
  const auto score_rank = RankItems(scores);
  std::vector<std::int32_t> dist(static_cast<size_t>(s));
  for (std::int32_t i = 0; i < s; ++i) {
    dist[static_cast<size_t>(i)] =
        std::abs(grade_rank[static_cast<size_t>(i)] -
                 score_rank[static_cast<size_t>(i)]);
  }
  std::vector<std::int32_t> order(static_cast<size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  // Only the K largest distances matter; break ties toward lower positions
  // so the pick is deterministic.
  const auto worse = [&dist](std::int32_t a, std::int32_t b) {
    if (dist[static_cast<size_t>(a)] != dist[static_cast<size_t>(b)]) {
      return dist[static_cast<size_t>(a)] > dist[static_cast<size_t>(b)];
    }
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), worse);
  order.resize(static_cast<size_t>(k));
  std::sort(order.begin(), order.end());
  if (dists_out != nullptr) {
    dists_out->clear();
    for (std::int32_t local : order) {
      dists_out->push_back(dist[static_cast<size_t>(local)]);
    }
  }
  return order;
}

std::vector<std::int32_t> RandomLocals(std::int32_t s, std::int32_t k,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::int32_t> pool(static_cast<size_t>(s));
  std::iota(pool.begin(), pool.end(), 0);
  for (std::int32_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::int32_t> pick(i, s - 1);
    std::swap(pool[static_cast<size_t>(i)],
              pool[static_cast<size_t>(pick(rng))]);
  }
  pool.resize(static_cast<size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Rated subset a user's gradient work is confined to this epoch.
std::vector<RatedItem> SelectSubset(UserIndex m, const ModelFactors& model,
                                    const GradedDataset& dataset,
                                    const HyperParams& hyper,
                                    std::uint64_t epoch_seed,
                                    std::uint64_t phase_tag) {
  const auto& rated = dataset.user_items(m);
  const std::int32_t s = static_cast<std::int32_t>(rated.size());
  const std::int32_t k = hyper.select_k;
  if (k == kSelectAll || s <= k) return rated;
  std::vector<std::int32_t> locals;
  if (hyper.selection_mode == SelectionMode::kAdaptive) {
    locals = MisrankedLocals(m, model, dataset, k, nullptr);
  } else {
    locals = RandomLocals(
        s, k, Mix(epoch_seed ^ Mix(static_cast<std::uint64_t>(m))) ^ phase_tag);
  }
  std::vector<RatedItem> subset;
  subset.reserve(locals.size());
  for (std::int32_t local : locals) {
    subset.push_back(rated[static_cast<size_t>(local)]);
  }
  return subset;
}

}  // namespace

ModelFactors InitFactors(UserIndex num_users, ItemIndex num_items,
                         std::int32_t dim, std::uint64_t seed) {
  if (num_users < 1 || num_items < 1 || dim < 1) {
    throw std::invalid_argument("factor dimensions must be positive");
  }
  ModelFactors model(dim, num_users, num_items);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  for (double& x : model.user_factors()) x = dist(rng);
  for (double& x : model.item_factors()) x = dist(rng);
  return model;
}

SelectionResult AdaptiveSelect(UserIndex m, const ModelFactors& model,
                               const GradedDataset& dataset, std::int32_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const auto& rated = dataset.user_items(m);
  if (rated.empty()) throw std::invalid_argument("user has no rated items");
  SelectionResult result;
  result.user = m;
  if (static_cast<std::int32_t>(rated.size()) <= k) {
    for (const auto& e : rated) result.items.push_back(e.item);
    return result;
  }
  const auto locals = MisrankedLocals(m, model, dataset, k, &result.distances);
  for (std::int32_t local : locals) {
    result.items.push_back(rated[static_cast<size_t>(local)].item);
  }
  return result;
}

std::optional<double> ValidationGap(const ModelFactors& model,
                                    const GradedDataset& validation,
                                    const ThresholdVector& thresholds,
                                    std::int32_t cutoff) {
  std::vector<std::optional<double>> per_user;
  for (UserIndex m = 0; m < validation.num_users(); ++m) {
    const auto& rated = validation.user_items(m);
    if (rated.empty()) continue;
    std::vector<double> scores;
    scores.reserve(rated.size());
    for (const auto& e : rated) scores.push_back(Score(model, m, e.item));
    const auto ranks = RankItems(scores);
    RankedJudgedList list(rated.size());
    for (size_t i = 0; i < rated.size(); ++i) {
      list[static_cast<size_t>(ranks[i] - 1)] = {rated[i].item, rated[i].grade};
    }
    per_user.push_back(GapExact(list, thresholds, cutoff));
  }
  if (per_user.empty()) return std::nullopt;
  return Aggregate(per_user).mean;
}

void TrainEpoch(TrainState& state, const GradedDataset& dataset,
                const ThresholdVector& thresholds, const HyperParams& hyper,
                const GradedDataset* validation) {
  if (state.model.num_users() != dataset.num_users() ||
      state.model.num_items() != dataset.num_items()) {
    throw std::invalid_argument("model/dataset dimension mismatch");
  }
  const double gamma = hyper.learn_rate;
  const double lambda = hyper.reg;
  const std::int32_t dim = state.model.dim();
  const UserIndex num_users = dataset.num_users();
  const std::uint64_t epoch_seed = state.rng();

  // Phase 1: every user column is advanced against the frozen model, so the
  // updates commute and can run on any number of workers without changing
  // the result.
  const ModelFactors frozen = state.model;
  const auto u_start = Clock::now();
  auto update_user = [&](UserIndex m) {
    if (dataset.user_size(m) == 0) return;
    const auto subset =
        SelectSubset(m, frozen, dataset, hyper, epoch_seed, 0x11);
    const auto ctx = MakeUserContextSubset(frozen, thresholds, m, subset);
    const auto grad = GradUser(ctx, frozen, lambda);
    double* u = state.model.user_col(m);
    const double* uf = frozen.user_col(m);
    for (std::int32_t d = 0; d < dim; ++d) {
      u[d] = uf[d] + gamma * grad[static_cast<size_t>(d)];
    }
  };
  std::int32_t workers = hyper.workers;
  if (workers == 0) {
    workers = static_cast<std::int32_t>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }
  if (workers <= 1) {
    for (UserIndex m = 0; m < num_users; ++m) update_user(m);
  } else {
    std::atomic<UserIndex> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (std::int32_t w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          const UserIndex m = next.fetch_add(1);
          if (m >= num_users) break;
          update_user(m);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  const double u_ms = ElapsedMs(u_start);

  // Phase 2: selection sees the fresh user factors; V updates apply
  // immediately, users visited in a seeded random order.
  const auto v_start = Clock::now();
  std::vector<UserIndex> perm(static_cast<size_t>(num_users));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), state.rng);
  std::int64_t evals = 0;
  for (UserIndex m : perm) {
    if (dataset.user_size(m) == 0) continue;
    const auto subset =
        SelectSubset(m, state.model, dataset, hyper, epoch_seed, 0x22);
    const auto ctx = MakeUserContextSubset(state.model, thresholds, m, subset);
    for (std::int32_t local = 0; local < ctx.size(); ++local) {
      const auto grad = GradItem(ctx, local, state.model, lambda);
      double* v = state.model.item_col(ctx.items[static_cast<size_t>(local)]);
      for (std::int32_t d = 0; d < dim; ++d) {
        v[d] += gamma * grad[static_cast<size_t>(d)];
      }
      ++evals;
    }
  }
  const double v_ms = ElapsedMs(v_start);

  if (!state.model.all_finite()) {
    throw std::runtime_error(
        "training diverged (non-finite factor); try a smaller learning rate "
        "than " +
        std::to_string(gamma));
  }

  ++state.iteration;
  EpochStats stats;
  stats.iteration = state.iteration;
  stats.u_phase_ms = u_ms;
  stats.v_phase_ms = v_ms;
  stats.item_grad_evals = evals;
  if (hyper.track_objective) {
    stats.objective = ObjectiveValue(state.model, dataset, thresholds, lambda);
  }
  if (validation != nullptr) {
    stats.validation_gap = ValidationGap(state.model, *validation, thresholds);
  }
  state.telemetry.push_back(stats);
}

TrainState Train(const GradedDataset& dataset, const ThresholdVector& thresholds,
                 const HyperParams& hyper, const GradedDataset* validation) {
  hyper.Validate();
  TrainState state;
  state.model = InitFactors(dataset.num_users(), dataset.num_items(),
                            hyper.dim, hyper.seed);
  state.rng.seed(hyper.seed);
  double best = -1.0;
  std::int32_t since_best = 0;
  for (std::int32_t t = 0; t < hyper.itermax; ++t) {
    TrainEpoch(state, dataset, thresholds, hyper, validation);
    if (hyper.early_stopping && validation != nullptr) {
      const auto& gap = state.telemetry.back().validation_gap;
      if (gap.has_value() && *gap > best) {
        best = *gap;
        since_best = 0;
      } else if (++since_best >= hyper.patience) {
        break;
      }
    }
  }
  return state;
}

}  // namespace gapfm
