#include "gapfm/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace gapfm {

double Logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double LogisticDeriv(double x) {
  const double g = Logistic(x);
  return g * (1.0 - g);
}

namespace {

UserLossContext BuildContext(const ModelFactors& model,
                             const ThresholdVector& thresholds, UserIndex m,
                             const std::vector<RatedItem>& rated) {
  if (rated.empty()) {
    throw std::invalid_argument("user has no rated items");
  }
  UserLossContext ctx;
  ctx.user = m;
  const size_t s = rated.size();
  ctx.items.reserve(s);
  ctx.grades.reserve(s);
  ctx.scores.reserve(s);
  for (const auto& e : rated) {
    ctx.items.push_back(e.item);
    ctx.grades.push_back(e.grade);
    ctx.scores.push_back(Score(model, m, e.item));
  }
  ctx.beta_table.resize(s * s);
  for (size_t a = 0; a < s; ++a) {
    for (size_t b = 0; b <= a; ++b) {
      const double beta = Beta(thresholds, ctx.grades[a], ctx.grades[b]);
      ctx.beta_table[a * s + b] = beta;
      ctx.beta_table[b * s + a] = beta;
    }
  }
  return ctx;
}

}  // namespace

UserLossContext MakeUserContext(const ModelFactors& model,
                                const GradedDataset& dataset,
                                const ThresholdVector& thresholds,
                                UserIndex m) {
  return BuildContext(model, thresholds, m, dataset.user_items(m));
}

UserLossContext MakeUserContextSubset(const ModelFactors& model,
                                      const ThresholdVector& thresholds,
                                      UserIndex m,
                                      const std::vector<RatedItem>& subset) {
  return BuildContext(model, thresholds, m, subset);
}

double SmoothedGapUser(const UserLossContext& ctx) {
  const std::int32_t s = ctx.size();
  if (s == 0) {
    throw std::invalid_argument("empty user context");
  }
  double total = 0.0;
  for (std::int32_t i = 0; i < s; ++i) {
    const double gi = Logistic(ctx.scores[static_cast<size_t>(i)]);
    double inner = 0.0;
    for (std::int32_t j = 0; j < s; ++j) {
      inner += ctx.beta_at(i, j) *
               Logistic(ctx.scores[static_cast<size_t>(j)] -
                        ctx.scores[static_cast<size_t>(i)]);
    }
    total += gi * inner;
  }
  return total;
}

double ObjectiveValue(const ModelFactors& model, const GradedDataset& dataset,
                      const ThresholdVector& thresholds, double lambda) {
  if (model.num_users() != dataset.num_users() ||
      model.num_items() != dataset.num_items()) {
    throw std::invalid_argument("model/dataset dimension mismatch");
  }
  double total = 0.0;
  for (UserIndex m = 0; m < dataset.num_users(); ++m) {
    if (dataset.user_size(m) == 0) continue;
    total += SmoothedGapUser(MakeUserContext(model, dataset, thresholds, m));
  }
  double sq = 0.0;
  for (double x : model.user_factors()) sq += x * x;
  for (double x : model.item_factors()) sq += x * x;
  return total - 0.5 * lambda * sq;
}

std::vector<double> GradUser(const UserLossContext& ctx,
                             const ModelFactors& model, double lambda) {
  const std::int32_t s = ctx.size();
  const std::int32_t dim = model.dim();
  // One fused pass over item pairs accumulates a scalar coefficient per
  // rated item; the D-vector result is then a single weighted column sum.
  std::vector<double> coef(static_cast<size_t>(s), 0.0);
  for (std::int32_t i = 0; i < s; ++i) {
    const double fi = ctx.scores[static_cast<size_t>(i)];
    const double gi = Logistic(fi);
    const double gpi = LogisticDeriv(fi);
    double inner = 0.0;
    for (std::int32_t j = 0; j < s; ++j) {
      const double diff = ctx.scores[static_cast<size_t>(j)] - fi;
      const double beta = ctx.beta_at(i, j);
      inner += beta * Logistic(diff);
      const double c = gi * beta * LogisticDeriv(diff);
      coef[static_cast<size_t>(j)] += c;
      coef[static_cast<size_t>(i)] -= c;
    }
    coef[static_cast<size_t>(i)] += gpi * inner;
  }
  std::vector<double> grad(static_cast<size_t>(dim), 0.0);
  for (std::int32_t i = 0; i < s; ++i) {
    const double* v = model.item_col(ctx.items[static_cast<size_t>(i)]);
    const double c = coef[static_cast<size_t>(i)];
    for (std::int32_t d = 0; d < dim; ++d) {
      grad[static_cast<size_t>(d)] += c * v[d];
    }
  }
  const double* u = model.user_col(ctx.user);
  for (std::int32_t d = 0; d < dim; ++d) {
    grad[static_cast<size_t>(d)] -= lambda * u[d];
  }
  return grad;
}

std::vector<double> GradItem(const UserLossContext& ctx, std::int32_t local,
                             const ModelFactors& model, double lambda) {
  const std::int32_t s = ctx.size();
  if (local < 0 || local >= s) {
    throw std::invalid_argument("item is not part of the user context");
  }
  const double fi = ctx.scores[static_cast<size_t>(local)];
  const double gi = Logistic(fi);
  double scalar = 0.0;
  double pairwise = 0.0;
  for (std::int32_t j = 0; j < s; ++j) {
    const double fj = ctx.scores[static_cast<size_t>(j)];
    const double diff = fj - fi;
    scalar += ctx.beta_at(local, j) * Logistic(diff);
    // The j == local term vanishes: beta is symmetric and the scores match.
    pairwise += (ctx.beta_at(j, local) * Logistic(fj) -
                 ctx.beta_at(local, j) * gi) *
                LogisticDeriv(diff);
  }
  const double weight = LogisticDeriv(fi) * scalar + pairwise;
  const std::int32_t dim = model.dim();
  const double* u = model.user_col(ctx.user);
  const double* v = model.item_col(ctx.items[static_cast<size_t>(local)]);
  std::vector<double> grad(static_cast<size_t>(dim));
  for (std::int32_t d = 0; d < dim; ++d) {
    grad[static_cast<size_t>(d)] = weight * u[d] - lambda * v[d];
  }
  return grad;
}

}  // namespace gapfm
