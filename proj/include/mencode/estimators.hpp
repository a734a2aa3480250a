#pragma once

#include <span>
#include <vector>

#include "mencode/data.hpp"
#include "mencode/model.hpp"

namespace mencode::estimators {

using model::Method;

/// A fitted predictive distribution: single-model prediction with the
/// method's parameter table.
struct Predictor {
  Method method = Method::mmlp;
  model::NetworkStructure structure;
  model::ParameterSet params;
  double ess = 1.0;
  std::size_t class_index = 0;
};

/// MMLWF, MMLP and MMLV use the posterior mode under their effective
/// prior; MDL uses the Jeffreys posterior mean, which is the Bayes
/// marginal predictive for Dirichlet priors. A NoInteriorMode failure is
/// rethrown with the smallest feasible ess.
Predictor fit(Method method, const data::Dataset& dataset, const model::NetworkStructure& structure, double ess);

Predictor fit_stats(Method method, const model::SufficientStats& stats, const model::NetworkStructure& structure,
                    double ess, std::size_t class_index);

/// P(class = k | the other entries of row). The class entry of `row` is
/// ignored.
std::vector<double> predict_class(const Predictor& predictor, std::span<const int> row);

double predict_joint(const Predictor& predictor, std::span<const int> row);

}  // namespace mencode::estimators
