// Command-line surface: train / evaluate / recommend / metrics / export.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gapfm/harness.hpp"
#include "gapfm/io.hpp"
#include "gapfm/metrics.hpp"
#include "gapfm/objective.hpp"
#include "gapfm/trainer.hpp"

using namespace gapfm;

namespace {

IngestResult LoadData(const std::string& path, const std::string& format) {
  if (format == "ml100k") return LoadMovieLens100K(path);
  if (format == "csv") return LoadCsvTriples(path, ',', false);
  if (format == "csv-header") return LoadCsvTriples(path, ',', true);
  if (format == "tsv") return LoadCsvTriples(path, '\t', false);
  throw std::runtime_error("unknown data format '" + format + "'");
}

struct SplitOptions {
  std::int32_t given_n = 10;
  std::int32_t min_train = 50;
  std::int32_t min_probe = 5;
  std::int32_t negatives = 1000;
  double validation_fraction = 0.015;
  std::uint64_t seed = 1;
  std::vector<std::int32_t> cutoffs = {1, 3, 5};
  Grade threshold = 0;
};

void AddSplitFlags(CLI::App* cmd, SplitOptions* opt) {
  cmd->add_option("--given", opt->given_n,
                  "ratings kept per user for training (given-n split)");
  cmd->add_option("--min-train", opt->min_train,
                  "minimum profile size for a user to be kept");
  cmd->add_option("--min-probe", opt->min_probe,
                  "minimum held-out ratings for a user to be evaluated");
  cmd->add_option("--negatives", opt->negatives,
                  "unrated candidates sampled per user for top-N evaluation");
  cmd->add_option("--validation-fraction", opt->validation_fraction,
                  "fraction of training entries held out for validation");
  cmd->add_option("--split-seed", opt->seed, "split / sampling seed");
  cmd->add_option("--cutoffs", opt->cutoffs, "evaluation list cutoffs")
      ->delimiter(',');
  cmd->add_option("--threshold", opt->threshold,
                  "relevance grade threshold for precision (0 = top grade)");
}

ProtocolConfig ToConfig(const SplitOptions& opt) {
  ProtocolConfig config;
  config.given_n = opt.given_n;
  config.min_train_ratings = opt.min_train;
  config.min_probe_ratings = opt.min_probe;
  config.negatives_per_user = opt.negatives;
  config.validation_fraction = opt.validation_fraction;
  config.seed = opt.seed;
  config.eval_cutoffs = opt.cutoffs;
  config.precision_threshold = opt.threshold;
  return config;
}

void WriteTelemetry(const std::vector<EpochStats>& telemetry,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (const auto& e : telemetry) {
    nlohmann::json j;
    j["iteration"] = e.iteration;
    j["objective"] = e.objective;
    j["u_phase_ms"] = e.u_phase_ms;
    j["v_phase_ms"] = e.v_phase_ms;
    j["item_grad_evals"] = e.item_grad_evals;
    if (e.validation_gap.has_value()) j["validation_gap"] = *e.validation_gap;
    out << j.dump() << "\n";
  }
}

int RunTrain(const std::string& data_path, const std::string& format,
             const SplitOptions& split_opt, HyperParams hyper,
             const std::string& selection, const std::string& model_path,
             const std::string& telemetry_path, bool no_split) {
  if (selection == "random") {
    hyper.selection_mode = SelectionMode::kRandom;
  } else if (selection != "adaptive") {
    throw std::runtime_error("selection must be 'adaptive' or 'random'");
  }
  const auto ingest = LoadData(data_path, format);
  const auto thresholds = MakeThresholds(ingest.dataset.y_max());

  TrainState state;
  if (no_split) {
    state = Train(ingest.dataset, thresholds, hyper);
  } else {
    const auto bundle = CarveGivenN(ingest.dataset, ToConfig(split_opt));
    state = Train(bundle.train, thresholds, hyper, &bundle.validation);
  }

  ModelArchive archive;
  archive.y_max = ingest.dataset.y_max();
  archive.hyper = hyper;
  archive.iterations = state.iteration;
  archive.final_objective = state.telemetry.back().objective;
  archive.user_ids = ingest.user_ids;
  archive.item_ids = ingest.item_ids;
  archive.model = state.model;
  SaveModel(archive, model_path);

  if (!telemetry_path.empty()) WriteTelemetry(state.telemetry, telemetry_path);
  std::cout << "trained " << state.iteration << " iterations, model written to "
            << model_path << "\n";
  return 0;
}

int RunEvaluate(const std::string& data_path, const std::string& format,
                const SplitOptions& split_opt, const std::string& model_path,
                const std::string& protocol, const std::string& baseline,
                bool as_json) {
  const auto ingest = LoadData(data_path, format);
  const auto config = ToConfig(split_opt);
  const auto bundle = CarveGivenN(ingest.dataset, config);

  Scorer scorer;
  if (baseline == "poprec") {
    scorer = PopRecBaseline(bundle.train);
  } else if (!baseline.empty()) {
    throw std::runtime_error("unknown baseline '" + baseline + "'");
  } else {
    const auto archive = LoadModel(model_path);
    if (archive.model.num_users() != ingest.dataset.num_users() ||
        archive.model.num_items() != ingest.dataset.num_items()) {
      throw std::runtime_error("model was trained on a different dataset (" +
                               std::to_string(archive.model.num_users()) + "x" +
                               std::to_string(archive.model.num_items()) +
                               " factors vs " +
                               std::to_string(ingest.dataset.num_users()) +
                               " users x " +
                               std::to_string(ingest.dataset.num_items()) +
                               " items)");
    }
    auto model = std::make_shared<ModelFactors>(archive.model);
    scorer = [model](UserIndex m, ItemIndex i) { return Score(*model, m, i); };
  }

  EvalReport report;
  if (protocol == "topn") {
    report = EvaluateTopN(scorer, bundle, config);
  } else if (protocol == "rated-ranking") {
    report = EvaluateRatedRanking(scorer, bundle, config);
  } else {
    throw std::runtime_error("protocol must be 'topn' or 'rated-ranking'");
  }
  std::cout << (as_json ? report.ToJson() + "\n" : report.ToText());
  return 0;
}

int RunRecommend(const std::string& model_path, const std::string& user_id,
                 std::int32_t top_n) {
  const auto archive = LoadModel(model_path);
  const auto it =
      std::find(archive.user_ids.begin(), archive.user_ids.end(), user_id);
  if (it == archive.user_ids.end()) {
    throw std::runtime_error("unknown user id '" + user_id + "'");
  }
  const auto m = static_cast<UserIndex>(it - archive.user_ids.begin());
  std::vector<double> scores(
      static_cast<size_t>(archive.model.num_items()));
  for (ItemIndex i = 0; i < archive.model.num_items(); ++i) {
    scores[static_cast<size_t>(i)] = Score(archive.model, m, i);
  }
  const auto ranks = RankItems(scores);
  std::vector<ItemIndex> by_rank(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    by_rank[static_cast<size_t>(ranks[i] - 1)] = static_cast<ItemIndex>(i);
  }
  const auto limit = std::min<size_t>(static_cast<size_t>(top_n),
                                      by_rank.size());
  char buf[64];
  for (size_t r = 0; r < limit; ++r) {
    const ItemIndex i = by_rank[r];
    std::snprintf(buf, sizeof(buf), "%.12g", scores[static_cast<size_t>(i)]);
    std::cout << (r + 1) << "\t"
              << archive.item_ids[static_cast<size_t>(i)] << "\t" << buf
              << "\n";
  }
  return 0;
}

// One grade per line, top of the ranking first; 0 marks an unjudged item.
int RunMetrics(const std::string& path, std::int32_t cutoff, Grade y_max) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  RankedJudgedList list;
  std::string line;
  std::int64_t line_no = 0;
  Grade max_seen = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::int64_t grade = 0;
    try {
      size_t pos = 0;
      grade = std::stoll(line, &pos);
      if (pos != line.size()) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": non-integer grade '" + line + "'");
    }
    if (grade < 0) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": grades must be >= 0");
    }
    list.push_back({static_cast<ItemIndex>(list.size()),
                    static_cast<Grade>(grade)});
    max_seen = std::max(max_seen, static_cast<Grade>(grade));
  }
  if (list.empty()) throw std::runtime_error(path + ": empty input");
  if (y_max == 0) y_max = max_seen;
  if (max_seen > y_max) {
    throw std::runtime_error("grade " + std::to_string(max_seen) +
                             " exceeds --ymax " + std::to_string(y_max));
  }
  const auto thresholds = MakeThresholds(y_max);
  char buf[64];
  auto print = [&buf](const std::string& name,
                      const std::optional<double>& value) {
    if (value.has_value()) {
      std::snprintf(buf, sizeof(buf), "%.12g", *value);
      std::cout << name << "\t" << buf << "\n";
    } else {
      std::cout << name << "\tundefined\n";
    }
  };
  print("gap", GapExact(list, thresholds, cutoff));
  print("ndcg", NdcgAtK(list, cutoff < 0
                                  ? static_cast<std::int32_t>(list.size())
                                  : cutoff));
  print("precision",
        PrecisionAtK(list,
                     cutoff < 0 ? static_cast<std::int32_t>(list.size())
                                : cutoff,
                     y_max));
  const std::int32_t n =
      cutoff < 0 ? static_cast<std::int32_t>(list.size()) : cutoff;
  print("gp", GpAtN(list, thresholds, n));
  print("gr", GrAtN(list, thresholds, n));
  return 0;
}

int RunExport(const std::string& model_path) {
  std::cout << ExportModelText(LoadModel(model_path));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent factor training and graded top-N evaluation"};
  app.require_subcommand(1);

  // train
  std::string data_path, format = "ml100k", model_path = "model.bin";
  std::string telemetry_path, selection = "adaptive";
  bool no_split = false;
  SplitOptions split_opt;
  HyperParams hyper;
  auto* train = app.add_subcommand("train", "fit a model on a given-n split");
  train->add_option("--data", data_path, "ratings file")->required();
  train->add_option("--format", format, "ml100k | csv | csv-header | tsv");
  train->add_option("-o,--output", model_path, "model archive output path");
  train->add_option("--telemetry", telemetry_path,
                    "write per-epoch stats as JSON lines to this path");
  train->add_option("--dim", hyper.dim, "latent dimensionality");
  train->add_option("--reg", hyper.reg, "L2 regularization weight");
  train->add_option("--rate", hyper.learn_rate, "learning rate");
  train->add_option("-k,--select-k", hyper.select_k,
                    "items updated per user per epoch (-1 = all)");
  train->add_option("--selection", selection, "adaptive | random");
  train->add_option("--itermax", hyper.itermax, "maximum epochs");
  train->add_option("--seed", hyper.seed, "training seed");
  train->add_option("--workers", hyper.workers,
                    "user-phase threads (0 = hardware)");
  train->add_flag("--early-stopping", hyper.early_stopping,
                  "stop when validation stalls");
  train->add_option("--patience", hyper.patience,
                    "epochs without improvement before stopping");
  train->add_flag("--no-split", no_split,
                  "train on the whole file without carving a split");
  AddSplitFlags(train, &split_opt);

  // evaluate
  std::string protocol = "topn", baseline;
  bool as_json = false;
  auto* evaluate = app.add_subcommand("evaluate", "score a model on a split");
  evaluate->add_option("--data", data_path, "ratings file")->required();
  evaluate->add_option("--format", format, "ml100k | csv | csv-header | tsv");
  evaluate->add_option("--model", model_path, "model archive path");
  evaluate->add_option("--protocol", protocol, "topn | rated-ranking");
  evaluate->add_option("--baseline", baseline,
                       "evaluate a baseline instead of a model (poprec)");
  evaluate->add_flag("--json", as_json, "emit the report as JSON");
  AddSplitFlags(evaluate, &split_opt);

  // recommend
  std::string user_id;
  std::int32_t top_n = 10;
  auto* recommend =
      app.add_subcommand("recommend", "top-N items for one user");
  recommend->add_option("--model", model_path, "model archive path");
  recommend->add_option("--user", user_id, "external user id")->required();
  recommend->add_option("-n,--top", top_n, "list length");

  // metrics
  std::string judged_path;
  std::int32_t cutoff = -1;
  Grade y_max = 0;
  auto* metrics = app.add_subcommand(
      "metrics", "score a ranked judgments file (one grade per line)");
  metrics->add_option("file", judged_path, "judgments file")->required();
  metrics->add_option("--cutoff", cutoff, "list cutoff (-1 = full list)");
  metrics->add_option("--ymax", y_max, "grade scale (0 = infer from file)");

  // export
  auto* export_cmd =
      app.add_subcommand("export", "dump a model archive as text");
  export_cmd->add_option("--model", model_path, "model archive path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) {
      return RunTrain(data_path, format, split_opt, hyper, selection,
                      model_path, telemetry_path, no_split);
    }
    if (evaluate->parsed()) {
      return RunEvaluate(data_path, format, split_opt, model_path, protocol,
                         baseline, as_json);
    }
    if (recommend->parsed()) return RunRecommend(model_path, user_id, top_n);
    if (metrics->parsed()) return RunMetrics(judged_path, cutoff, y_max);
    if (export_cmd->parsed()) return RunExport(model_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
