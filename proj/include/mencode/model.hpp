#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mencode/data.hpp"

namespace mencode::model {

/// Dense rows x cols table, row-major. Rows index parent configurations,
/// columns index the variable's values.
template <typename T>
class Table {
 public:
  Table() = default;
  Table(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<T> row(std::size_t r) { return std::span<T>(data_).subspan(r * cols_, cols_); }
  std::span<const T> row(std::size_t r) const { return std::span<const T>(data_).subspan(r * cols_, cols_); }
  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }

  bool operator==(const Table&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using CountTable = Table<std::int64_t>;
using RealTable = Table<double>;

class NetworkStructure {
 public:
  NetworkStructure() = default;
  /// Validates indices and acyclicity. cardinalities[i] >= 2.
  NetworkStructure(std::vector<std::vector<std::size_t>> parents, std::vector<std::size_t> cardinalities);

  std::size_t size() const noexcept { return parents_.size(); }
  std::span<const std::size_t> parents(std::size_t i) const { return parents_.at(i); }
  std::size_t cardinality(std::size_t i) const { return cardinalities_.at(i); }
  std::span<const std::size_t> cardinalities() const noexcept { return cardinalities_; }
  /// c_i: number of parent configurations (1 for a root).
  std::size_t configs(std::size_t i) const { return configs_.at(i); }

  /// Mixed-radix index of the parents' values in `row`, first parent most significant.
  std::size_t parent_config(std::size_t i, std::span<const int> row) const;
  /// Inverse of parent_config: the parent values of configuration q.
  std::vector<int> parent_values(std::size_t i, std::size_t q) const;

  /// The class (root) index if this is a Naive Bayes structure: exactly one
  /// root, every other variable has that root as its only parent.
  std::optional<std::size_t> naive_bayes_class() const;

  bool operator==(const NetworkStructure&) const = default;

 private:
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::size_t> cardinalities_;
  std::vector<std::size_t> configs_;
};

struct SufficientStats {
  std::vector<CountTable> counts;
  std::int64_t n = 0;
};

struct HyperParameters {
  std::vector<RealTable> pseudo;
};

struct ParameterSet {
  std::vector<RealTable> tables;
};

enum class Method { mmlwf, mmlp, mmlv, mdl };

inline constexpr Method all_methods[] = {Method::mmlwf, Method::mmlp, Method::mmlv, Method::mdl};

std::string_view to_string(Method m) noexcept;
/// Case-insensitive; throws PreconditionViolation on an unknown name.
Method parse_method(std::string_view name);

struct PriorSpec {
  Method method = Method::mmlp;
  double ess = 1.0;
};

NetworkStructure naive_bayes_structure(const data::Schema& schema);

SufficientStats count_stats(const data::Dataset& dataset, const NetworkStructure& structure);
/// Counts only the listed rows.
SufficientStats count_stats(const data::Dataset& dataset, const NetworkStructure& structure,
                            std::span<const std::size_t> rows);

/// Symmetric ESS prior: every table gets total pseudo-mass ess.
HyperParameters ess_hyperparameters(const NetworkStructure& structure, double ess);

/// Dirichlet pseudo-counts of the Jeffreys prior for a Naive Bayes network.
HyperParameters jeffreys_hyperparameters(const NetworkStructure& structure);

/// Pseudo-counts whose Dirichlet density is the method's prior:
/// MMLP h, MMLV h*pi, MMLWF h/pi, MDL pi.
HyperParameters effective_hyperparameters(const PriorSpec& spec, const NetworkStructure& structure);

/// Posterior mode (f + mu - 1) / (sum(f + mu) - n_i). Throws NoInteriorMode.
ParameterSet map_parameters(const SufficientStats& stats, const HyperParameters& hyper);

/// Posterior mean (f + mu) / sum(f + mu). Throws NonPositiveHyper.
ParameterSet mean_parameters(const SufficientStats& stats, const HyperParameters& hyper);

/// Probability of each parent configuration of variable i under params,
/// by enumeration over i's ancestors.
std::vector<double> parent_marginals(const ParameterSet& params, const NetworkStructure& structure, std::size_t i);

/// Unnormalized log of the Jeffreys density at params, with P(pa_i = q)
/// read as the marginal probability of the parent configuration.
double eval_jeffreys_log_density(const ParameterSet& params, const NetworkStructure& structure);

double joint_probability(const ParameterSet& params, const NetworkStructure& structure, std::span<const int> row);
double log_joint_probability(const ParameterSet& params, const NetworkStructure& structure,
                             std::span<const int> row);

/// Smallest t such that every ess > t gives an interior MAP fit for this
/// method on these counts. -infinity when any ess works (and for MDL).
double feasibility_threshold(Method method, const NetworkStructure& structure, const SufficientStats& stats);

/// Smallest value of {0.5, 1, 2, 4, ...} strictly above threshold.
double ess_ladder_value(double threshold);

/// Smallest ladder ess for which none of the count tables triggers
/// NoInteriorMode for any of the methods.
double preflight_ess(const NetworkStructure& structure, std::span<const Method> methods,
                     std::span<const SufficientStats> stats);

/// Tables keyed by variable name and parent configuration.
nlohmann::ordered_json parameters_to_json(const ParameterSet& params, const NetworkStructure& structure,
                                          const data::Schema& schema);

}  // namespace mencode::model
