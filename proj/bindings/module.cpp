// Python bindings for the training and evaluation core.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "gapfm/harness.hpp"
#include "gapfm/io.hpp"
#include "gapfm/metrics.hpp"
#include "gapfm/objective.hpp"
#include "gapfm/trainer.hpp"

namespace py = pybind11;
using namespace gapfm;

namespace {

RankedJudgedList ListFromGrades(const std::vector<Grade>& grades) {
  RankedJudgedList list;
  list.reserve(grades.size());
  for (size_t i = 0; i < grades.size(); ++i) {
    list.push_back({static_cast<ItemIndex>(i), grades[i]});
  }
  return list;
}

Grade InferYMax(const std::vector<Grade>& grades, Grade y_max) {
  if (y_max > 0) return y_max;
  Grade seen = 1;
  for (Grade g : grades) seen = std::max(seen, g);
  return seen;
}

HyperParams MakeHyper(std::int32_t dim, double reg, double rate,
                      std::int32_t select_k, const std::string& selection,
                      std::int32_t itermax, std::uint64_t seed,
                      std::int32_t workers, bool early_stopping,
                      std::int32_t patience, bool track_objective) {
  HyperParams hyper;
  hyper.dim = dim;
  hyper.reg = reg;
  hyper.learn_rate = rate;
  hyper.select_k = select_k;
  if (selection == "random") {
    hyper.selection_mode = SelectionMode::kRandom;
  } else if (selection != "adaptive") {
    throw std::invalid_argument("selection must be 'adaptive' or 'random'");
  }
  hyper.itermax = itermax;
  hyper.seed = seed;
  hyper.workers = workers;
  hyper.early_stopping = early_stopping;
  hyper.patience = patience;
  hyper.track_objective = track_objective;
  return hyper;
}

py::dict ReportToDict(const EvalReport& report) {
  py::dict out;
  out["protocol"] = report.protocol;
  out["seed"] = report.seed;
  out["flagged_users"] = report.flagged_users;
  py::list rows;
  for (const auto& row : report.rows) {
    py::dict r;
    r["metric"] = row.metric;
    r["cutoff"] = row.cutoff;
    r["mean"] = row.mean;
    r["users"] = row.users;
    r["skipped"] = row.skipped;
    rows.append(r);
  }
  out["rows"] = rows;
  return out;
}

ProtocolConfig ConfigFromArgs(std::int32_t given_n, std::int32_t min_train,
                              std::int32_t min_probe, std::int32_t negatives,
                              const std::vector<std::int32_t>& cutoffs,
                              Grade threshold, double validation_fraction,
                              std::uint64_t seed) {
  ProtocolConfig config;
  config.given_n = given_n;
  config.min_train_ratings = min_train;
  config.min_probe_ratings = min_probe;
  config.negatives_per_user = negatives;
  config.eval_cutoffs = cutoffs;
  config.precision_threshold = threshold;
  config.validation_fraction = validation_fraction;
  config.seed = seed;
  return config;
}

}  // namespace

PYBIND11_MODULE(_gapfm, m) {
  m.doc() = "latent factor training and graded ranking evaluation";

  py::class_<GradedDataset>(m, "Dataset")
      .def_static(
          "from_triples",
          [](UserIndex num_users, ItemIndex num_items, Grade y_max,
             const std::vector<UserIndex>& users,
             const std::vector<ItemIndex>& items,
             const std::vector<Grade>& grades) {
            return GradedDataset::FromTriples(num_users, num_items, y_max,
                                              users, items, grades);
          },
          py::arg("num_users"), py::arg("num_items"), py::arg("y_max"),
          py::arg("users"), py::arg("items"), py::arg("grades"))
      .def_property_readonly("num_users", &GradedDataset::num_users)
      .def_property_readonly("num_items", &GradedDataset::num_items)
      .def_property_readonly("y_max", &GradedDataset::y_max)
      .def("__len__", &GradedDataset::total_entries)
      .def("user_size", &GradedDataset::user_size, py::arg("user"))
      .def(
          "user_items",
          [](const GradedDataset& ds, UserIndex m) {
            py::list out;
            for (const auto& e : ds.user_items(m)) {
              out.append(py::make_tuple(e.item, e.grade));
            }
            return out;
          },
          py::arg("user"));

  py::class_<ModelFactors>(m, "Model")
      .def_property_readonly("dim", &ModelFactors::dim)
      .def_property_readonly("num_users", &ModelFactors::num_users)
      .def_property_readonly("num_items", &ModelFactors::num_items)
      .def("score", &Score, py::arg("user"), py::arg("item"))
      .def("user_vector",
           [](const ModelFactors& model, UserIndex m) {
             if (m < 0 || m >= model.num_users()) {
               throw std::out_of_range("user index out of range");
             }
             return std::vector<double>(model.user_col(m),
                                        model.user_col(m) + model.dim());
           })
      .def("item_vector", [](const ModelFactors& model, ItemIndex i) {
        if (i < 0 || i >= model.num_items()) {
          throw std::out_of_range("item index out of range");
        }
        return std::vector<double>(model.item_col(i),
                                   model.item_col(i) + model.dim());
      });

  py::class_<SplitBundle>(m, "Split")
      .def_readonly("train", &SplitBundle::train)
      .def_readonly("validation", &SplitBundle::validation)
      .def_readonly("probe", &SplitBundle::probe);

  m.def(
      "gap",
      [](const std::vector<Grade>& grades, Grade y_max, std::int32_t cutoff) {
        const auto t = MakeThresholds(InferYMax(grades, y_max));
        return GapExact(ListFromGrades(grades), t, cutoff);
      },
      py::arg("grades"), py::arg("y_max") = 0, py::arg("cutoff") = kFullList,
      "exact graded average precision of a ranked grade list (None when "
      "no item is judged)");
  m.def(
      "ndcg",
      [](const std::vector<Grade>& grades, std::int32_t k) {
        return NdcgAtK(ListFromGrades(grades), k);
      },
      py::arg("grades"), py::arg("k"));
  m.def(
      "precision",
      [](const std::vector<Grade>& grades, std::int32_t k, Grade threshold) {
        return PrecisionAtK(ListFromGrades(grades), k, threshold);
      },
      py::arg("grades"), py::arg("k"), py::arg("threshold"));

  m.def(
      "objective",
      [](const ModelFactors& model, const GradedDataset& dataset,
         double reg) {
        return ObjectiveValue(model, dataset, MakeThresholds(dataset.y_max()),
                              reg);
      },
      py::arg("model"), py::arg("dataset"), py::arg("reg") = 0.001,
      "regularized smoothed-metric training objective");

  m.def(
      "train",
      [](const GradedDataset& dataset, std::int32_t dim, double reg,
         double rate, std::int32_t select_k, const std::string& selection,
         std::int32_t itermax, std::uint64_t seed, std::int32_t workers,
         bool early_stopping, std::int32_t patience,
         const GradedDataset* validation) {
        const auto hyper =
            MakeHyper(dim, reg, rate, select_k, selection, itermax, seed,
                      workers, early_stopping, patience, false);
        const auto state =
            Train(dataset, MakeThresholds(dataset.y_max()), hyper, validation);
        return state.model;
      },
      py::arg("dataset"), py::arg("dim") = 10, py::arg("reg") = 0.001,
      py::arg("rate") = 1e-5, py::arg("select_k") = kSelectAll,
      py::arg("selection") = "adaptive", py::arg("itermax") = 100,
      py::arg("seed") = 1, py::arg("workers") = 1,
      py::arg("early_stopping") = false, py::arg("patience") = 5,
      py::arg("validation") = nullptr);

  m.def(
      "split_given_n",
      [](const GradedDataset& dataset, std::int32_t given_n,
         std::int32_t min_train, std::int32_t min_probe,
         std::int32_t negatives, double validation_fraction,
         std::uint64_t seed) {
        return CarveGivenN(
            dataset, ConfigFromArgs(given_n, min_train, min_probe, negatives,
                                    {1, 3, 5}, 0, validation_fraction, seed));
      },
      py::arg("dataset"), py::arg("given_n") = 10, py::arg("min_train") = 50,
      py::arg("min_probe") = 5, py::arg("negatives") = 1000,
      py::arg("validation_fraction") = 0.015, py::arg("seed") = 1);

  m.def(
      "evaluate_topn",
      [](const ModelFactors& model, const SplitBundle& bundle,
         std::int32_t given_n, std::int32_t min_train, std::int32_t min_probe,
         std::int32_t negatives, const std::vector<std::int32_t>& cutoffs,
         Grade threshold, double validation_fraction, std::uint64_t seed) {
        return ReportToDict(EvaluateTopN(
            model, bundle,
            ConfigFromArgs(given_n, min_train, min_probe, negatives, cutoffs,
                           threshold, validation_fraction, seed)));
      },
      py::arg("model"), py::arg("split"), py::arg("given_n") = 10,
      py::arg("min_train") = 50, py::arg("min_probe") = 5,
      py::arg("negatives") = 1000,
      py::arg("cutoffs") = std::vector<std::int32_t>{1, 3, 5},
      py::arg("threshold") = 0, py::arg("validation_fraction") = 0.015,
      py::arg("seed") = 1);

  m.def(
      "evaluate_rated_ranking",
      [](const ModelFactors& model, const SplitBundle& bundle,
         std::int32_t given_n, std::int32_t min_train, std::int32_t min_probe,
         const std::vector<std::int32_t>& cutoffs,
         double validation_fraction, std::uint64_t seed) {
        return ReportToDict(EvaluateRatedRanking(
            model, bundle,
            ConfigFromArgs(given_n, min_train, min_probe, 0, cutoffs, 0,
                           validation_fraction, seed)));
      },
      py::arg("model"), py::arg("split"), py::arg("given_n") = 10,
      py::arg("min_train") = 50, py::arg("min_probe") = 5,
      py::arg("cutoffs") = std::vector<std::int32_t>{1, 3, 5},
      py::arg("validation_fraction") = 0.015, py::arg("seed") = 1);

  m.def(
      "load_movielens",
      [](const std::string& path) {
        auto result = LoadMovieLens100K(path);
        return py::make_tuple(result.dataset, result.user_ids,
                              result.item_ids);
      },
      py::arg("path"),
      "returns (dataset, user_ids, item_ids) from a tab-separated "
      "user/item/rating/timestamp file");
  m.def(
      "load_csv",
      [](const std::string& path, char delimiter, bool has_header) {
        auto result = LoadCsvTriples(path, delimiter, has_header);
        return py::make_tuple(result.dataset, result.user_ids,
                              result.item_ids);
      },
      py::arg("path"), py::arg("delimiter") = ',',
      py::arg("has_header") = false);
}
