#include "gapfm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "gapfm/metrics.hpp"

namespace gapfm {

namespace {

std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Triples {
  std::vector<UserIndex> users;
  std::vector<ItemIndex> items;
  std::vector<Grade> grades;

  void Add(UserIndex m, ItemIndex i, Grade y) {
    users.push_back(m);
    items.push_back(i);
    grades.push_back(y);
  }

  GradedDataset Build(UserIndex num_users, ItemIndex num_items,
                      Grade y_max) const {
    return GradedDataset::FromTriples(num_users, num_items, y_max, users,
                                      items, grades);
  }
};

Grade EffectiveThreshold(const ProtocolConfig& config, Grade y_max) {
  return config.precision_threshold == 0 ? y_max : config.precision_threshold;
}

// Candidate entries sorted by item index so score ties break the same way
// everywhere.
RankedJudgedList RankCandidates(const Scorer& scorer, UserIndex m,
                                std::vector<RankedEntry> candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const RankedEntry& a, const RankedEntry& b) {
              return a.item < b.item;
            });
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(scorer(m, c.item));
  const auto ranks = RankItems(scores);
  RankedJudgedList list(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    list[static_cast<size_t>(ranks[i] - 1)] = candidates[i];
  }
  return list;
}

Scorer ModelScorer(const ModelFactors& model) {
  return [&model](UserIndex m, ItemIndex i) { return Score(model, m, i); };
}

}  // namespace

void ProtocolConfig::Validate() const {
  if (given_n < 1) throw std::invalid_argument("given_n must be >= 1");
  if (min_train_ratings < 1 || min_probe_ratings < 1) {
    throw std::invalid_argument("eligibility minima must be >= 1");
  }
  if (negatives_per_user < 0) {
    throw std::invalid_argument("negatives_per_user must be >= 0");
  }
  if (!(validation_fraction > 0.0) || !(validation_fraction < 1.0)) {
    throw std::invalid_argument("validation_fraction must lie in (0, 1)");
  }
  if (eval_cutoffs.empty()) {
    throw std::invalid_argument("at least one evaluation cutoff required");
  }
  for (std::int32_t k : eval_cutoffs) {
    if (k < 1) throw std::invalid_argument("cutoffs must be positive");
  }
}

std::vector<ItemIndex> SampleNegatives(UserIndex user,
                                       const GradedDataset& dataset,
                                       std::int32_t n, std::uint64_t seed,
                                       bool* shrunk) {
  const auto& rated = dataset.user_items(user);  // sorted by item
  std::vector<ItemIndex> unrated;
  unrated.reserve(static_cast<size_t>(dataset.num_items()) - rated.size());
  size_t r = 0;
  for (ItemIndex i = 0; i < dataset.num_items(); ++i) {
    if (r < rated.size() && rated[r].item == i) {
      ++r;
      continue;
    }
    unrated.push_back(i);
  }
  if (shrunk != nullptr) {
    *shrunk = static_cast<std::int32_t>(unrated.size()) < n;
  }
  if (static_cast<std::int32_t>(unrated.size()) <= n) return unrated;
  std::mt19937_64 rng(seed);
  for (std::int32_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::int32_t> pick(
        i, static_cast<std::int32_t>(unrated.size()) - 1);
    std::swap(unrated[static_cast<size_t>(i)],
              unrated[static_cast<size_t>(pick(rng))]);
  }
  unrated.resize(static_cast<size_t>(n));
  std::sort(unrated.begin(), unrated.end());
  return unrated;
}

SplitBundle CarveGivenN(const GradedDataset& dataset,
                        const ProtocolConfig& config) {
  config.Validate();
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  const UserIndex num_users = dataset.num_users();
  const ItemIndex num_items = dataset.num_items();
  const Grade y_max = dataset.y_max();

  std::mt19937_64 rng(config.seed);
  std::vector<RatedItem> train_flat;       // paired with train_users
  std::vector<UserIndex> train_users;
  Triples probe;
  std::int64_t eligible = 0;
  for (UserIndex m = 0; m < num_users; ++m) {
    const auto& rated = dataset.user_items(m);
    const std::int32_t s = static_cast<std::int32_t>(rated.size());
    if (s < config.min_train_ratings) continue;
    ++eligible;
    const std::int32_t take = std::min(config.given_n, s);
    std::vector<std::int32_t> idx(static_cast<size_t>(s));
    for (std::int32_t i = 0; i < s; ++i) idx[static_cast<size_t>(i)] = i;
    for (std::int32_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::int32_t> pick(i, s - 1);
      std::swap(idx[static_cast<size_t>(i)],
                idx[static_cast<size_t>(pick(rng))]);
    }
    std::sort(idx.begin(), idx.begin() + take);
    std::vector<bool> in_train(static_cast<size_t>(s), false);
    for (std::int32_t i = 0; i < take; ++i) {
      in_train[static_cast<size_t>(idx[static_cast<size_t>(i)])] = true;
    }
    for (std::int32_t i = 0; i < s; ++i) {
      const auto& e = rated[static_cast<size_t>(i)];
      if (in_train[static_cast<size_t>(i)]) {
        train_users.push_back(m);
        train_flat.push_back(e);
      } else {
        probe.Add(m, e.item, e.grade);
      }
    }
  }
  if (eligible == 0) {
    throw std::runtime_error("no users left after the min-ratings filter");
  }

  // Move a global fraction of the train entries into the validation set.
  const auto total = static_cast<std::int64_t>(train_flat.size());
  const auto val_count = static_cast<std::int64_t>(
      std::floor(config.validation_fraction * static_cast<double>(total)));
  std::vector<std::int64_t> order(static_cast<size_t>(total));
  for (std::int64_t i = 0; i < total; ++i) order[static_cast<size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> to_validation(static_cast<size_t>(total), false);
  for (std::int64_t i = 0; i < val_count; ++i) {
    to_validation[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;
  }
  Triples train;
  Triples validation;
  for (std::int64_t i = 0; i < total; ++i) {
    const auto& e = train_flat[static_cast<size_t>(i)];
    const UserIndex m = train_users[static_cast<size_t>(i)];
    if (to_validation[static_cast<size_t>(i)]) {
      validation.Add(m, e.item, e.grade);
    } else {
      train.Add(m, e.item, e.grade);
    }
  }

  SplitBundle bundle;
  bundle.train = train.Build(num_users, num_items, y_max);
  bundle.validation = validation.Build(num_users, num_items, y_max);
  bundle.probe = probe.Build(num_users, num_items, y_max);
  bundle.negative_pools.assign(static_cast<size_t>(num_users), {});
  bundle.shrunk_pool.assign(static_cast<size_t>(num_users), false);
  for (UserIndex m = 0; m < num_users; ++m) {
    if (bundle.probe.user_size(m) < config.min_probe_ratings) continue;
    bool shrunk = false;
    bundle.negative_pools[static_cast<size_t>(m)] = SampleNegatives(
        m, dataset, config.negatives_per_user,
        Mix(config.seed ^ Mix(static_cast<std::uint64_t>(m))), &shrunk);
    bundle.shrunk_pool[static_cast<size_t>(m)] = shrunk;
  }
  return bundle;
}

EvalReport EvaluateTopN(const Scorer& scorer, const SplitBundle& bundle,
                        const ProtocolConfig& config) {
  config.Validate();
  const Grade y_max = bundle.probe.y_max();
  const auto thresholds = MakeThresholds(y_max);
  const Grade rel_threshold = EffectiveThreshold(config, y_max);
  const std::int32_t max_cutoff =
      *std::max_element(config.eval_cutoffs.begin(), config.eval_cutoffs.end());

  EvalReport report;
  report.protocol = "topn";
  report.seed = config.seed;
  const size_t n_cut = config.eval_cutoffs.size();
  std::vector<std::vector<std::optional<double>>> gap(n_cut), ndcg(n_cut),
      prec(n_cut);
  std::int64_t measured = 0;
  for (UserIndex m = 0; m < bundle.probe.num_users(); ++m) {
    const auto& probe_items = bundle.probe.user_items(m);
    if (static_cast<std::int32_t>(probe_items.size()) <
        config.min_probe_ratings) {
      continue;
    }
    std::vector<RankedEntry> candidates;
    if (static_cast<size_t>(m) < bundle.negative_pools.size()) {
      for (ItemIndex i : bundle.negative_pools[static_cast<size_t>(m)]) {
        candidates.push_back({i, 0});
      }
    }
    for (const auto& e : probe_items) candidates.push_back({e.item, e.grade});
    const auto list = RankCandidates(scorer, m, std::move(candidates));
    if ((static_cast<size_t>(m) < bundle.shrunk_pool.size() &&
         bundle.shrunk_pool[static_cast<size_t>(m)]) ||
        static_cast<std::int32_t>(list.size()) < max_cutoff) {
      ++report.flagged_users;
    }
    for (size_t c = 0; c < n_cut; ++c) {
      const std::int32_t k = config.eval_cutoffs[c];
      gap[c].push_back(GapExact(list, thresholds, k));
      ndcg[c].push_back(NdcgAtK(list, k));
      prec[c].push_back(PrecisionAtK(list, k, rel_threshold));
    }
    ++measured;
  }
  if (measured == 0) {
    throw std::runtime_error("no probe-eligible users to evaluate");
  }
  auto add_rows = [&](const std::string& name,
                      const std::vector<std::vector<std::optional<double>>>&
                          per_cutoff) {
    for (size_t c = 0; c < n_cut; ++c) {
      const auto agg = Aggregate(per_cutoff[c]);
      report.rows.push_back(
          {name, config.eval_cutoffs[c], agg.mean, agg.used, agg.skipped});
    }
  };
  add_rows("gap", gap);
  add_rows("ndcg", ndcg);
  add_rows("precision", prec);
  return report;
}

EvalReport EvaluateTopN(const ModelFactors& model, const SplitBundle& bundle,
                        const ProtocolConfig& config) {
  return EvaluateTopN(ModelScorer(model), bundle, config);
}

EvalReport EvaluateRatedRanking(const Scorer& scorer, const SplitBundle& bundle,
                                const ProtocolConfig& config) {
  config.Validate();
  EvalReport report;
  report.protocol = "rated-ranking";
  report.seed = config.seed;
  const size_t n_cut = config.eval_cutoffs.size();
  std::vector<std::vector<std::optional<double>>> ndcg(n_cut);
  std::int64_t measured = 0;
  for (UserIndex m = 0; m < bundle.probe.num_users(); ++m) {
    const auto& probe_items = bundle.probe.user_items(m);
    if (static_cast<std::int32_t>(probe_items.size()) <
        config.min_probe_ratings) {
      continue;
    }
    std::vector<RankedEntry> candidates;
    for (const auto& e : probe_items) candidates.push_back({e.item, e.grade});
    const auto list = RankCandidates(scorer, m, std::move(candidates));
    for (size_t c = 0; c < n_cut; ++c) {
      ndcg[c].push_back(NdcgAtK(list, config.eval_cutoffs[c]));
    }
    ++measured;
  }
  if (measured == 0) {
    throw std::runtime_error("no probe-eligible users to evaluate");
  }
  for (size_t c = 0; c < n_cut; ++c) {
    const auto agg = Aggregate(ndcg[c]);
    report.rows.push_back(
        {"ndcg", config.eval_cutoffs[c], agg.mean, agg.used, agg.skipped});
  }
  return report;
}

EvalReport EvaluateRatedRanking(const ModelFactors& model,
                                const SplitBundle& bundle,
                                const ProtocolConfig& config) {
  return EvaluateRatedRanking(ModelScorer(model), bundle, config);
}

Scorer PopRecBaseline(const GradedDataset& train) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  std::vector<double> counts(static_cast<size_t>(train.num_items()), 0.0);
  for (UserIndex m = 0; m < train.num_users(); ++m) {
    for (const auto& e : train.user_items(m)) {
      counts[static_cast<size_t>(e.item)] += 1.0;
    }
  }
  return [counts = std::move(counts)](UserIndex, ItemIndex i) {
    return counts.at(static_cast<size_t>(i));
  };
}

const MetricRow& EvalReport::Row(const std::string& metric,
                                 std::int32_t cutoff) const {
  for (const auto& row : rows) {
    if (row.metric == metric && row.cutoff == cutoff) return row;
  }
  throw std::out_of_range("no such metric row: " + metric + "@" +
                          std::to_string(cutoff));
}

std::string EvalReport::ToText() const {
  std::string out;
  out += "protocol\t" + protocol + "\n";
  out += "seed\t" + std::to_string(seed) + "\n";
  out += "flagged_users\t" + std::to_string(flagged_users) + "\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%d\t%.12g\t%lld\t%lld\n",
                  row.metric.c_str(), row.cutoff, row.mean,
                  static_cast<long long>(row.users),
                  static_cast<long long>(row.skipped));
    out += buf;
  }
  return out;
}

std::string EvalReport::ToJson() const {
  nlohmann::json j;
  j["protocol"] = protocol;
  j["seed"] = seed;
  j["flagged_users"] = flagged_users;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    j["rows"].push_back({{"metric", row.metric},
                         {"cutoff", row.cutoff},
                         {"mean", row.mean},
                         {"users", row.users},
                         {"skipped", row.skipped}});
  }
  return j.dump(2);
}

}  // namespace gapfm
