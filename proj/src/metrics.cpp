#include "gapfm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gapfm {

namespace {

std::vector<Grade> JudgedGrades(const RankedJudgedList& list) {
  std::vector<Grade> grades;
  for (const auto& e : list) {
    if (e.grade >= 1) grades.push_back(e.grade);
  }
  return grades;
}

}  // namespace

std::optional<double> GapExact(const RankedJudgedList& list,
                               const ThresholdVector& thresholds,
                               std::int32_t k) {
  const auto judged = JudgedGrades(list);
  if (judged.empty()) return std::nullopt;
  const double z = ZNorm(thresholds, judged);

  const std::int32_t limit =
      (k == kFullList) ? static_cast<std::int32_t>(list.size())
                       : std::min<std::int32_t>(
                             k, static_cast<std::int32_t>(list.size()));
  double total = 0.0;
  for (std::int32_t pos = 0; pos < limit; ++pos) {
    const auto& e = list[static_cast<size_t>(pos)];
    if (e.grade < 1) continue;
    double inner = 0.0;
    for (std::int32_t q = 0; q <= pos; ++q) {
      const auto& above = list[static_cast<size_t>(q)];
      if (above.grade < 1) continue;
      inner += Beta(thresholds, e.grade, above.grade);
    }
    total += inner / static_cast<double>(pos + 1);
  }
  return total / z;
}

std::optional<double> NdcgAtK(const RankedJudgedList& list, std::int32_t k) {
  auto judged = JudgedGrades(list);
  if (judged.empty()) return std::nullopt;
  auto gain = [](Grade y) { return std::ldexp(1.0, y) - 1.0; };
  auto discount = [](std::int32_t pos) {
    return 1.0 / std::log2(static_cast<double>(pos) + 1.0);
  };
  const std::int32_t limit =
      std::min<std::int32_t>(k, static_cast<std::int32_t>(list.size()));
  double dcg = 0.0;
  for (std::int32_t pos = 0; pos < limit; ++pos) {
    const auto& e = list[static_cast<size_t>(pos)];
    if (e.grade >= 1) dcg += gain(e.grade) * discount(pos + 1);
  }
  std::sort(judged.begin(), judged.end(), std::greater<Grade>());
  const std::int32_t ideal_limit =
      std::min<std::int32_t>(k, static_cast<std::int32_t>(judged.size()));
  double idcg = 0.0;
  for (std::int32_t pos = 0; pos < ideal_limit; ++pos) {
    idcg += gain(judged[static_cast<size_t>(pos)]) * discount(pos + 1);
  }
  return dcg / idcg;
}

double PrecisionAtK(const RankedJudgedList& list, std::int32_t k,
                    Grade relevance_threshold) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const std::int32_t limit =
      std::min<std::int32_t>(k, static_cast<std::int32_t>(list.size()));
  std::int32_t hits = 0;
  for (std::int32_t pos = 0; pos < limit; ++pos) {
    if (list[static_cast<size_t>(pos)].grade >= relevance_threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::optional<double> GpAtN(const RankedJudgedList& list,
                            const ThresholdVector& thresholds,
                            std::int32_t n) {
  if (n < 1) return 0.0;
  auto judged = JudgedGrades(list);
  if (static_cast<std::int32_t>(judged.size()) < n) return std::nullopt;
  std::sort(judged.begin(), judged.end(), std::greater<Grade>());
  const Grade c_n = judged[static_cast<size_t>(n - 1)];
  const double denom = thresholds.cumulative(c_n);
  const std::int32_t limit =
      std::min<std::int32_t>(n, static_cast<std::int32_t>(list.size()));
  double total = 0.0;
  for (std::int32_t pos = 0; pos < limit; ++pos) {
    const auto& e = list[static_cast<size_t>(pos)];
    if (e.grade < 1) continue;
    total += thresholds.cumulative(std::min(e.grade, c_n)) / denom;
  }
  return total / static_cast<double>(n);
}

std::optional<double> GrAtN(const RankedJudgedList& list,
                            const ThresholdVector& thresholds,
                            std::int32_t n) {
  const auto judged = JudgedGrades(list);
  if (judged.empty()) return std::nullopt;
  const double z = ZNorm(thresholds, judged);
  const std::int32_t limit =
      std::min<std::int32_t>(std::max(n, 0),
                             static_cast<std::int32_t>(list.size()));
  double total = 0.0;
  for (std::int32_t pos = 0; pos < limit; ++pos) {
    const auto& e = list[static_cast<size_t>(pos)];
    if (e.grade >= 1) total += thresholds.cumulative(e.grade);
  }
  return total / z;
}

AggregateResult Aggregate(const std::vector<std::optional<double>>& per_user) {
  AggregateResult r;
  double sum = 0.0;
  for (const auto& v : per_user) {
    if (v.has_value()) {
      sum += *v;
      ++r.used;
    } else {
      ++r.skipped;
    }
  }
  if (r.used == 0) {
    throw std::runtime_error("no measurable users to aggregate");
  }
  r.mean = sum / static_cast<double>(r.used);
  return r;
}

}  // namespace gapfm
