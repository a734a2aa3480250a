#include "mencode/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "mencode/error.hpp"

namespace mencode::estimators {

Predictor fit_stats(Method method, const model::SufficientStats& stats, const model::NetworkStructure& structure,
                    double ess, std::size_t class_index) {
  if (!(ess > 0.0)) fail(ErrorCode::PreconditionViolation, "ess must be positive");
  if (class_index >= structure.size()) fail(ErrorCode::PreconditionViolation, "class index out of range");
  Predictor p{method, structure, {}, ess, class_index};
  const auto hyper = model::effective_hyperparameters({method, ess}, structure);
  if (method == Method::mdl) {
    p.params = model::mean_parameters(stats, hyper);
    return p;
  }
  try {
    p.params = model::map_parameters(stats, hyper);
  } catch (const NoInteriorMode& e) {
    throw e.with_hint(model::ess_ladder_value(model::feasibility_threshold(method, structure, stats)));
  }
  return p;
}

Predictor fit(Method method, const data::Dataset& dataset, const model::NetworkStructure& structure, double ess) {
  if (dataset.empty()) fail(ErrorCode::PreconditionViolation, "cannot fit on an empty dataset");
  return fit_stats(method, model::count_stats(dataset, structure), structure, ess, dataset.schema().class_index());
}

std::vector<double> predict_class(const Predictor& predictor, std::span<const int> row) {
  const auto& structure = predictor.structure;
  const auto cls = predictor.class_index;
  if (row.size() != structure.size())
    fail(ErrorCode::OutOfRangeValue, "row has " + std::to_string(row.size()) + " values, expected " +
                                         std::to_string(structure.size()));
  std::vector<int> probe(row.begin(), row.end());
  probe[cls] = 0;
  for (std::size_t i = 0; i < probe.size(); ++i)
    if (probe[i] < 0 || static_cast<std::size_t>(probe[i]) >= structure.cardinality(i))
      fail(ErrorCode::OutOfRangeValue, "value " + std::to_string(probe[i]) + " out of range for variable " +
                                           std::to_string(i));

  const std::size_t classes = structure.cardinality(cls);
  std::vector<double> log_scores(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    probe[cls] = static_cast<int>(k);
    log_scores[k] = model::log_joint_probability(predictor.params, structure, probe);
  }
  const double top = *std::max_element(log_scores.begin(), log_scores.end());
  double total = 0.0;
  for (auto& s : log_scores) {
    s = std::exp(s - top);
    total += s;
  }
  for (auto& s : log_scores) s /= total;
  return log_scores;
}

double predict_joint(const Predictor& predictor, std::span<const int> row) {
  return model::joint_probability(predictor.params, predictor.structure, row);
}

}  // namespace mencode::estimators
