#include <doctest.h>

#include <cmath>
#include <limits>

#include "gapfm/metrics.hpp"
#include "gapfm/objective.hpp"
#include "gapfm/trainer.hpp"
#include "synthetic.hpp"

using namespace gapfm;

namespace {

GradedDataset DeskDataset() {
  // M=3, N=5, y_max=5
  return GradedDataset::FromTriples(
      3, 5, 5, {0, 0, 0, 1, 1, 2, 2, 2, 2}, {0, 2, 4, 1, 3, 0, 1, 2, 3},
      {5, 3, 1, 4, 2, 2, 5, 1, 3});
}

double TrainingGap(const ModelFactors& model, const GradedDataset& dataset,
                   const ThresholdVector& thresholds) {
  std::vector<std::optional<double>> per_user;
  for (UserIndex m = 0; m < dataset.num_users(); ++m) {
    const auto& rated = dataset.user_items(m);
    if (rated.empty()) continue;
    std::vector<double> scores;
    for (const auto& e : rated) scores.push_back(Score(model, m, e.item));
    const auto ranks = RankItems(scores);
    RankedJudgedList list(rated.size());
    for (size_t i = 0; i < rated.size(); ++i) {
      list[static_cast<size_t>(ranks[i] - 1)] = {rated[i].item,
                                                 rated[i].grade};
    }
    per_user.push_back(GapExact(list, thresholds));
  }
  return Aggregate(per_user).mean;
}

}  // namespace

TEST_CASE("init_factors is seeded, bounded and seed-sensitive") {
  const auto a = InitFactors(7, 9, 4, 123);
  const auto b = InitFactors(7, 9, 4, 123);
  CHECK(a.user_factors() == b.user_factors());
  CHECK(a.item_factors() == b.item_factors());
  for (double x : a.user_factors()) {
    CHECK(x >= -0.01);
    CHECK(x <= 0.01);
  }
  for (double x : a.item_factors()) {
    CHECK(x >= -0.01);
    CHECK(x <= 0.01);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = InitFactors(7, 9, 4, seed);
    const auto d = InitFactors(7, 9, 4, seed + 1000);
    CHECK(c.user_factors() != d.user_factors());
  }
}

TEST_CASE("adaptive_select picks the most misranked items") {
  auto ds = GradedDataset::FromTriples(1, 3, 5, {0, 0, 0}, {0, 1, 2},
                                       {2, 4, 5});
  ModelFactors model(1, 1, 3);
  model.user_col(0)[0] = 1.0;
  model.item_col(0)[0] = 0.3;
  model.item_col(1)[0] = 0.5;
  model.item_col(2)[0] = 0.1;
  const auto sel = AdaptiveSelect(0, model, ds, 1);
  REQUIRE(sel.items.size() == 1);
  CHECK(sel.items[0] == 2);  // the grade-5 item is the worst offender
  CHECK(sel.distances == std::vector<std::int32_t>{2});
}

TEST_CASE("adaptive_select early-exits when the profile fits") {
  auto ds = GradedDataset::FromTriples(1, 3, 5, {0, 0, 0}, {0, 1, 2},
                                       {2, 4, 5});
  ModelFactors model(1, 1, 3);
  const auto sel = AdaptiveSelect(0, model, ds, 5);
  CHECK(sel.items == std::vector<ItemIndex>{0, 1, 2});
  CHECK(sel.distances.empty());
}

TEST_CASE("adaptive_select degenerates to first-K when ranking is perfect") {
  auto ds = GradedDataset::FromTriples(1, 4, 4, {0, 0, 0, 0}, {0, 1, 2, 3},
                                       {4, 3, 2, 1});
  ModelFactors model(1, 1, 4);
  model.user_col(0)[0] = 1.0;
  model.item_col(0)[0] = 4.0;
  model.item_col(1)[0] = 3.0;
  model.item_col(2)[0] = 2.0;
  model.item_col(3)[0] = 1.0;
  const auto sel = AdaptiveSelect(0, model, ds, 2);
  CHECK(sel.items == std::vector<ItemIndex>{0, 1});
  CHECK(sel.distances == std::vector<std::int32_t>{0, 0});
}

TEST_CASE("adaptive_select rejects empty profiles and bad K") {
  auto ds = GradedDataset::FromTriples(2, 2, 1, {0}, {0}, {1});
  ModelFactors model(1, 2, 2);
  CHECK_THROWS_AS(AdaptiveSelect(1, model, ds, 1), std::invalid_argument);
  CHECK_THROWS_AS(AdaptiveSelect(0, model, ds, 0), std::invalid_argument);
}

TEST_CASE("zero learning rate leaves the model unchanged but advances t") {
  const auto ds = DeskDataset();
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 4;
  hyper.learn_rate = 0.0;
  hyper.reg = 0.0;
  TrainState state;
  state.model = InitFactors(3, 5, 4, 9);
  state.rng.seed(9);
  const auto before = state.model;
  TrainEpoch(state, ds, t, hyper);
  CHECK(state.iteration == 1);
  CHECK(state.model.user_factors() == before.user_factors());
  CHECK(state.model.item_factors() == before.item_factors());
  CHECK(state.telemetry.size() == 1);
}

TEST_CASE("one epoch on the desk instance does not decrease the objective") {
  const auto ds = DeskDataset();
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 4;
  hyper.learn_rate = 1e-3;
  hyper.reg = 0.0;
  TrainState state;
  state.model = InitFactors(3, 5, 4, 21);
  state.rng.seed(21);
  const double before = ObjectiveValue(state.model, ds, t, 0.0);
  TrainEpoch(state, ds, t, hyper);
  const double after = ObjectiveValue(state.model, ds, t, 0.0);
  CHECK(after >= before);
}

TEST_CASE("K = all and K >= max profile size produce identical models") {
  const auto ds = DeskDataset();
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 3;
  hyper.learn_rate = 1e-3;
  hyper.itermax = 4;
  hyper.seed = 5;
  hyper.select_k = kSelectAll;
  const auto all = Train(ds, t, hyper);
  hyper.select_k = ds.num_items();
  const auto capped = Train(ds, t, hyper);
  CHECK(all.model.user_factors() == capped.model.user_factors());
  CHECK(all.model.item_factors() == capped.model.item_factors());
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const auto ds =
      testing::MakeLearnableDataset(40, 30, 10, 5, 31337);
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 4;
  hyper.learn_rate = 0.01;
  hyper.itermax = 3;
  hyper.seed = 77;
  hyper.select_k = 5;
  const auto a = Train(ds, t, hyper);
  const auto b = Train(ds, t, hyper);
  CHECK(a.model.user_factors() == b.model.user_factors());
  CHECK(a.model.item_factors() == b.model.item_factors());
  CHECK(a.telemetry.size() == 3);
  CHECK(a.telemetry.back().objective == b.telemetry.back().objective);
}

TEST_CASE("itermax = 1 equals a single epoch call") {
  const auto ds = DeskDataset();
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 3;
  hyper.learn_rate = 1e-3;
  hyper.itermax = 1;
  hyper.seed = 2;
  const auto trained = Train(ds, t, hyper);

  TrainState manual;
  manual.model = InitFactors(3, 5, 3, 2);
  manual.rng.seed(2);
  TrainEpoch(manual, ds, t, hyper);
  CHECK(trained.model.user_factors() == manual.model.user_factors());
  CHECK(trained.model.item_factors() == manual.model.item_factors());
}

TEST_CASE("worker count does not change the U phase result") {
  const auto ds = testing::MakeLearnableDataset(60, 40, 12, 5, 4242);
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 5;
  hyper.learn_rate = 0.01;
  hyper.itermax = 3;
  hyper.seed = 123;
  hyper.workers = 1;
  const auto one = Train(ds, t, hyper);
  hyper.workers = 4;
  const auto four = Train(ds, t, hyper);
  CHECK(one.model.user_factors() == four.model.user_factors());
  CHECK(one.model.item_factors() == four.model.item_factors());
}

TEST_CASE("fixed K bounds the per-epoch item gradient evaluations exactly") {
  const auto ds = testing::MakeLearnableDataset(30, 50, 20, 5, 7);
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 3;
  hyper.learn_rate = 1e-3;
  hyper.select_k = 8;
  TrainState state;
  state.model = InitFactors(30, 50, 3, 1);
  state.rng.seed(1);
  TrainEpoch(state, ds, t, hyper);
  std::int64_t expected = 0;
  for (UserIndex m = 0; m < ds.num_users(); ++m) {
    expected += std::min<std::int64_t>(8, ds.user_size(m));
  }
  CHECK(state.telemetry.back().item_grad_evals == expected);

  // with K = all, every rated item gets an update
  hyper.select_k = kSelectAll;
  TrainEpoch(state, ds, t, hyper);
  CHECK(state.telemetry.back().item_grad_evals == ds.total_entries());
}

TEST_CASE("non-finite factors abort with a divergence diagnostic") {
  const auto ds = DeskDataset();
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 2;
  hyper.learn_rate = 1e-3;
  hyper.reg = 0.01;
  TrainState state;
  state.model = InitFactors(3, 5, 2, 3);
  state.rng.seed(3);
  state.model.user_col(0)[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(TrainEpoch(state, ds, t, hyper),
                       doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("validation GAP improves over a short synthetic run") {
  const auto train = testing::MakeLearnableDataset(80, 60, 15, 5, 99);
  const auto validation = testing::MakeLearnableDataset(80, 60, 6, 5, 100);
  const auto t = MakeThresholds(5);
  HyperParams hyper;
  hyper.dim = 8;
  hyper.learn_rate = 0.05;
  hyper.reg = 0.001;
  hyper.itermax = 25;
  hyper.seed = 17;
  hyper.track_objective = false;
  const auto init = InitFactors(80, 60, 8, 17);
  const double before = *ValidationGap(init, validation, t);
  const auto state = Train(train, t, hyper, &validation);
  REQUIRE(state.telemetry.back().validation_gap.has_value());
  // the validation items share the planted structure of the train items
  CHECK(*state.telemetry.back().validation_gap > before);
}

TEST_CASE("early stopping respects the patience window") {
  const auto train = testing::MakeLearnableDataset(30, 30, 8, 3, 5);
  const auto validation = testing::MakeLearnableDataset(30, 30, 4, 3, 6);
  const auto t = MakeThresholds(3);
  HyperParams hyper;
  hyper.dim = 3;
  hyper.learn_rate = 1e-9;  // no measurable progress
  hyper.itermax = 50;
  hyper.seed = 8;
  hyper.early_stopping = true;
  hyper.patience = 4;
  hyper.track_objective = false;
  const auto state = Train(train, t, hyper, &validation);
  CHECK(state.iteration < 50);
}

TEST_CASE("updating the most misranked item helps at least as much as the "
          "least misranked one") {
  const auto t = MakeThresholds(5);
  double most_total = 0.0;
  double least_total = 0.0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const auto ds = testing::MakeLearnableDataset(20, 40, 10, 5, 500 + seed);
    auto base = InitFactors(20, 40, 4, 900 + seed);
    // exaggerate the scores so misrankings are meaningful
    for (double& x : base.user_factors()) x *= 100.0;
    for (double& x : base.item_factors()) x *= 100.0;
    const double gamma = 0.5;
    for (const bool most : {true, false}) {
      auto model = base;
      const double before = TrainingGap(model, ds, t);
      for (UserIndex m = 0; m < ds.num_users(); ++m) {
        const auto& rated = ds.user_items(m);
        const auto sel = AdaptiveSelect(
            m, model, ds, static_cast<std::int32_t>(rated.size()) - 1);
        // sel holds all but the least offending item in misranking order;
        // recompute distances for the full profile to find both extremes
        const auto full =
            AdaptiveSelect(m, model, ds,
                           static_cast<std::int32_t>(rated.size()) - 1);
        std::int32_t best_local = 0;
        std::int32_t worst_dist = -1;
        std::int32_t least_local = 0;
        std::int32_t least_dist = std::numeric_limits<std::int32_t>::max();
        const auto ctx = MakeUserContext(model, ds, t, m);
        for (size_t s = 0; s < full.items.size(); ++s) {
          const auto it = std::find(ctx.items.begin(), ctx.items.end(),
                                    full.items[s]);
          const auto local =
              static_cast<std::int32_t>(it - ctx.items.begin());
          const std::int32_t d = full.distances[s];
          if (d > worst_dist) {
            worst_dist = d;
            best_local = local;
          }
          if (d < least_dist) {
            least_dist = d;
            least_local = local;
          }
        }
        const std::int32_t target = most ? best_local : least_local;
        const auto grad = GradItem(ctx, target, model, 0.0);
        double* v = model.item_col(ctx.items[static_cast<size_t>(target)]);
        for (std::int32_t d = 0; d < 4; ++d) {
          v[d] += gamma * grad[static_cast<size_t>(d)];
        }
      }
      const double delta = TrainingGap(model, ds, t) - before;
      if (most) {
        most_total += delta;
      } else {
        least_total += delta;
      }
    }
  }
  CHECK(most_total >= least_total);
}
