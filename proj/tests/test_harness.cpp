#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "gapfm/harness.hpp"
#include "gapfm/metrics.hpp"
#include "synthetic.hpp"

using namespace gapfm;

namespace {

ProtocolConfig SmallConfig() {
  ProtocolConfig config;
  config.given_n = 10;
  config.min_train_ratings = 15;
  config.min_probe_ratings = 3;
  config.negatives_per_user = 25;
  config.eval_cutoffs = {1, 3, 5};
  config.validation_fraction = 0.05;
  config.seed = 11;
  return config;
}

std::set<std::pair<UserIndex, ItemIndex>> Pairs(const GradedDataset& ds) {
  std::set<std::pair<UserIndex, ItemIndex>> out;
  for (UserIndex m = 0; m < ds.num_users(); ++m) {
    for (const auto& e : ds.user_items(m)) out.insert({m, e.item});
  }
  return out;
}

}  // namespace

TEST_CASE("carve_given_n partitions each eligible profile") {
  const auto ds = testing::MakeLearnableDataset(40, 80, 20, 5, 3);
  const auto config = SmallConfig();
  const auto bundle = CarveGivenN(ds, config);

  const auto train = Pairs(bundle.train);
  const auto validation = Pairs(bundle.validation);
  const auto probe = Pairs(bundle.probe);
  const auto full = Pairs(ds);

  // pairwise disjoint, union contained in the source data
  for (const auto& p : train) {
    CHECK(validation.count(p) == 0);
    CHECK(probe.count(p) == 0);
    CHECK(full.count(p) == 1);
  }
  for (const auto& p : validation) {
    CHECK(probe.count(p) == 0);
    CHECK(full.count(p) == 1);
  }
  for (const auto& p : probe) CHECK(full.count(p) == 1);

  for (UserIndex m = 0; m < ds.num_users(); ++m) {
    const std::int32_t in_model =
        bundle.train.user_size(m) + bundle.validation.user_size(m);
    CHECK(in_model == config.given_n);
    CHECK(bundle.probe.user_size(m) == ds.user_size(m) - config.given_n);
  }
  const std::int64_t expected_val = static_cast<std::int64_t>(
      config.validation_fraction * 40.0 * config.given_n);
  CHECK(bundle.validation.total_entries() == expected_val);
}

TEST_CASE("carve_given_n drops users below the rating floor") {
  // 6 users x 20 ratings plus 2 thin users with 4 each
  auto rich = testing::MakeLearnableDataset(6, 50, 20, 5, 9);
  std::vector<UserIndex> users;
  std::vector<ItemIndex> items;
  std::vector<Grade> grades;
  for (UserIndex m = 0; m < 6; ++m) {
    for (const auto& e : rich.user_items(m)) {
      users.push_back(m);
      items.push_back(e.item);
      grades.push_back(e.grade);
    }
  }
  for (UserIndex m = 6; m < 8; ++m) {
    for (ItemIndex i = 0; i < 4; ++i) {
      users.push_back(m);
      items.push_back(i);
      grades.push_back(3);
    }
  }
  const auto ds = GradedDataset::FromTriples(8, 50, 5, users, items, grades);
  const auto bundle = CarveGivenN(ds, SmallConfig());
  for (UserIndex m = 6; m < 8; ++m) {
    CHECK(bundle.train.user_size(m) == 0);
    CHECK(bundle.validation.user_size(m) == 0);
    CHECK(bundle.probe.user_size(m) == 0);
    CHECK(bundle.negative_pools[static_cast<size_t>(m)].empty());
  }
}

TEST_CASE("carve_given_n is deterministic per seed and varies across seeds") {
  const auto ds = testing::MakeLearnableDataset(25, 60, 20, 5, 13);
  auto config = SmallConfig();
  const auto a = CarveGivenN(ds, config);
  const auto b = CarveGivenN(ds, config);
  CHECK(Pairs(a.train) == Pairs(b.train));
  CHECK(Pairs(a.validation) == Pairs(b.validation));
  CHECK(Pairs(a.probe) == Pairs(b.probe));
  CHECK(a.negative_pools == b.negative_pools);

  config.seed = 12;
  const auto c = CarveGivenN(ds, config);
  CHECK(Pairs(a.train) != Pairs(c.train));
}

TEST_CASE("carve_given_n rejects bad configs and hopeless data") {
  const auto ds = testing::MakeLearnableDataset(5, 20, 5, 3, 1);
  auto config = SmallConfig();
  CHECK_THROWS_AS(CarveGivenN(ds, config), std::runtime_error);  // all thin
  config.validation_fraction = 0.0;
  CHECK_THROWS_AS(CarveGivenN(ds, config), std::invalid_argument);
  config.validation_fraction = 0.05;
  config.given_n = 0;
  CHECK_THROWS_AS(CarveGivenN(ds, config), std::invalid_argument);
}

TEST_CASE("negative pools avoid every rated item and are fixed per seed") {
  const auto ds = testing::MakeLearnableDataset(20, 60, 20, 5, 4);
  const auto config = SmallConfig();
  const auto bundle = CarveGivenN(ds, config);
  for (UserIndex m = 0; m < ds.num_users(); ++m) {
    const auto& pool = bundle.negative_pools[static_cast<size_t>(m)];
    if (bundle.probe.user_size(m) < config.min_probe_ratings) {
      CHECK(pool.empty());
      continue;
    }
    CHECK(static_cast<std::int32_t>(pool.size()) ==
          std::min<std::int32_t>(config.negatives_per_user,
                                 ds.num_items() - ds.user_size(m)));
    CHECK(std::is_sorted(pool.begin(), pool.end()));
    CHECK(std::adjacent_find(pool.begin(), pool.end()) == pool.end());
    std::set<ItemIndex> rated;
    for (const auto& e : ds.user_items(m)) rated.insert(e.item);
    for (ItemIndex i : pool) CHECK(rated.count(i) == 0);
  }
}

TEST_CASE("sample_negatives shrinks when the complement is short") {
  const auto ds = GradedDataset::FromTriples(1, 5, 3, {0, 0, 0}, {0, 2, 4},
                                             {1, 2, 3});
  bool shrunk = false;
  const auto few = SampleNegatives(0, ds, 10, 7, &shrunk);
  CHECK(shrunk);
  CHECK(few == std::vector<ItemIndex>{1, 3});
  const auto exact = SampleNegatives(0, ds, 2, 7, &shrunk);
  CHECK_FALSE(shrunk);
  CHECK(exact.size() == 2);
  CHECK(SampleNegatives(0, ds, 2, 7) == SampleNegatives(0, ds, 2, 7));
}

TEST_CASE("evaluate_topn scores a grade oracle at the ceiling") {
  const auto ds = testing::MakeLearnableDataset(20, 80, 25, 5, 21);
  const auto config = SmallConfig();
  const auto bundle = CarveGivenN(ds, config);
  // the oracle sees the true probe grades; negatives score below everything
  std::vector<std::vector<Grade>> truth(
      static_cast<size_t>(ds.num_users()),
      std::vector<Grade>(static_cast<size_t>(ds.num_items()), 0));
  for (UserIndex m = 0; m < ds.num_users(); ++m) {
    for (const auto& e : bundle.probe.user_items(m)) {
      truth[static_cast<size_t>(m)][static_cast<size_t>(e.item)] = e.grade;
    }
  }
  const Scorer oracle = [&truth](UserIndex m, ItemIndex i) {
    return static_cast<double>(
        truth[static_cast<size_t>(m)][static_cast<size_t>(i)]);
  };
  const auto report = EvaluateTopN(oracle, bundle, config);
  for (std::int32_t k : config.eval_cutoffs) {
    // graded AP at a cutoff keeps the full-profile normalizer, so even the
    // ideal ranking scores below 1 when the profile is longer than k
    CHECK(report.Row("gap", k).mean > 0.0);
    CHECK(report.Row("gap", k).mean <= 1.0 + 1e-12);
    CHECK(report.Row("ndcg", k).mean == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(report.Row("gap", 1).mean < report.Row("gap", 5).mean);
  // a reversed oracle must do strictly worse
  const Scorer reversed = [&oracle](UserIndex m, ItemIndex i) {
    return -oracle(m, i);
  };
  const auto bad = EvaluateTopN(reversed, bundle, config);
  CHECK(bad.Row("gap", 5).mean < report.Row("gap", 5).mean);
  CHECK(bad.Row("ndcg", 5).mean < report.Row("ndcg", 5).mean);
}

TEST_CASE("evaluate_topn reports are byte-identical across runs") {
  const auto ds = testing::MakeLearnableDataset(15, 60, 22, 5, 33);
  const auto config = SmallConfig();
  const auto bundle = CarveGivenN(ds, config);
  ModelFactors model = ModelFactors(4, 15, 60);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& x : model.user_factors()) x = dist(rng);
  for (double& x : model.item_factors()) x = dist(rng);
  const auto a = EvaluateTopN(model, bundle, config);
  const auto b = EvaluateTopN(model, bundle, config);
  CHECK(a.ToText() == b.ToText());
  CHECK(a.ToJson() == b.ToJson());
  CHECK(a.ToText().find("gap\t5\t") != std::string::npos);
  CHECK(a.ToJson().find("\"protocol\"") != std::string::npos);
}

TEST_CASE("popularity baseline beats random scores on popularity-skewed "
          "data") {
  const auto ds = testing::MakePopularityDataset(60, 120, 25, 5, 77);
  auto config = SmallConfig();
  config.negatives_per_user = 60;
  const auto bundle = CarveGivenN(ds, config);
  const auto pop = EvaluateTopN(PopRecBaseline(bundle.train), bundle, config);

  std::mt19937_64 rng(5);
  std::vector<double> noise(static_cast<size_t>(ds.num_items()));
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (double& x : noise) x = dist(rng);
  const Scorer random = [&noise](UserIndex, ItemIndex i) {
    return noise[static_cast<size_t>(i)];
  };
  const auto rnd = EvaluateTopN(random, bundle, config);
  CHECK(pop.Row("gap", 5).mean > rnd.Row("gap", 5).mean);
  CHECK(pop.Row("ndcg", 5).mean > rnd.Row("ndcg", 5).mean);
}

TEST_CASE("rated ranking rewards a grade-consistent ordering") {
  const auto ds = testing::MakeLearnableDataset(12, 50, 20, 5, 41);
  const auto config = SmallConfig();
  const auto bundle = CarveGivenN(ds, config);
  std::vector<std::vector<Grade>> truth(
      static_cast<size_t>(ds.num_users()),
      std::vector<Grade>(static_cast<size_t>(ds.num_items()), 0));
  for (UserIndex m = 0; m < ds.num_users(); ++m) {
    for (const auto& e : bundle.probe.user_items(m)) {
      truth[static_cast<size_t>(m)][static_cast<size_t>(e.item)] = e.grade;
    }
  }
  const Scorer oracle = [&truth](UserIndex m, ItemIndex i) {
    return static_cast<double>(
        truth[static_cast<size_t>(m)][static_cast<size_t>(i)]);
  };
  const auto best = EvaluateRatedRanking(oracle, bundle, config);
  for (std::int32_t k : config.eval_cutoffs) {
    CHECK(best.Row("ndcg", k).mean == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Scorer reversed = [&oracle](UserIndex m, ItemIndex i) {
    return -oracle(m, i);
  };
  const auto worst = EvaluateRatedRanking(reversed, bundle, config);
  CHECK(worst.Row("ndcg", 5).mean < 1.0);
  CHECK(worst.protocol == "rated-ranking");
}

TEST_CASE("report row lookup throws for unknown rows") {
  EvalReport report;
  report.rows.push_back({"gap", 5, 0.5, 10, 0});
  CHECK(report.Row("gap", 5).mean == doctest::Approx(0.5));
  CHECK_THROWS_AS(report.Row("gap", 7), std::out_of_range);
  CHECK_THROWS_AS(report.Row("mrr", 5), std::out_of_range);
}

TEST_CASE("precision threshold defaults to the top grade") {
  const auto ds = testing::MakeLearnableDataset(20, 80, 25, 5, 55);
  auto config = SmallConfig();
  const auto bundle = CarveGivenN(ds, config);
  std::vector<std::vector<Grade>> truth(
      static_cast<size_t>(ds.num_users()),
      std::vector<Grade>(static_cast<size_t>(ds.num_items()), 0));
  for (UserIndex m = 0; m < ds.num_users(); ++m) {
    for (const auto& e : bundle.probe.user_items(m)) {
      truth[static_cast<size_t>(m)][static_cast<size_t>(e.item)] = e.grade;
    }
  }
  const Scorer oracle = [&truth](UserIndex m, ItemIndex i) {
    return static_cast<double>(
        truth[static_cast<size_t>(m)][static_cast<size_t>(i)]);
  };
  const auto strict = EvaluateTopN(oracle, bundle, config);
  config.precision_threshold = 1;
  const auto lax = EvaluateTopN(oracle, bundle, config);
  // lowering the relevance bar can only raise precision
  for (std::int32_t k : config.eval_cutoffs) {
    CHECK(lax.Row("precision", k).mean >=
          strict.Row("precision", k).mean - 1e-12);
  }
}
