#ifndef GAPFM_OBJECTIVE_HPP_
#define GAPFM_OBJECTIVE_HPP_

#include <vector>

#include "gapfm/core.hpp"

namespace gapfm {

/// Numerically stable logistic g(x) = 1/(1 + e^-x).
double Logistic(double x);

/// g'(x) = g(x)(1 - g(x)); even in x.
double LogisticDeriv(double x);

/// Everything the smoothed loss and its gradients need for one user:
/// the rated items, a cached pairwise-credit table over their grades, and
/// the scores under a fixed model snapshot.
struct UserLossContext {
  UserIndex user = 0;
  std::vector<ItemIndex> items;
  std::vector<Grade> grades;
  std::vector<double> scores;      // f_mi per rated item
  std::vector<double> beta_table;  // S x S row-major, beta(grade_a, grade_b)

  std::int32_t size() const { return static_cast<std::int32_t>(items.size()); }
  double beta_at(std::int32_t a, std::int32_t b) const {
    return beta_table[static_cast<size_t>(a) * items.size() +
                      static_cast<size_t>(b)];
  }
};

/// Context over all of user m's rated items.
UserLossContext MakeUserContext(const ModelFactors& model,
                                const GradedDataset& dataset,
                                const ThresholdVector& thresholds, UserIndex m);

/// Context over an explicit subset of the user's rated items (the fast
/// fixed-K learning path restricts per-user work to the selected set).
UserLossContext MakeUserContextSubset(const ModelFactors& model,
                                      const ThresholdVector& thresholds,
                                      UserIndex m,
                                      const std::vector<RatedItem>& subset);

/// Smoothed per-user GAP surrogate: sum_i g(f_i) sum_j beta_ij g(f_j - f_i),
/// diagonal included. The 1/Z_m coefficient is dropped.
double SmoothedGapUser(const UserLossContext& ctx);

/// Full training objective: sum over users of the smoothed surrogate minus
/// (lambda/2)(|U|^2 + |V|^2).
double ObjectiveValue(const ModelFactors& model, const GradedDataset& dataset,
                      const ThresholdVector& thresholds, double lambda);

/// Gradient of the objective w.r.t. the user column U_m.
std::vector<double> GradUser(const UserLossContext& ctx,
                             const ModelFactors& model, double lambda);

/// Gradient w.r.t. the item column of ctx.items[local]; throws if `local`
/// does not name a rated item of the context.
std::vector<double> GradItem(const UserLossContext& ctx, std::int32_t local,
                             const ModelFactors& model, double lambda);

}  // namespace gapfm

#endif  // GAPFM_OBJECTIVE_HPP_
