#include "mencode/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "mencode/error.hpp"

namespace mencode::model {

// ---------------------------------------------------------------- structure

NetworkStructure::NetworkStructure(std::vector<std::vector<std::size_t>> parents,
                                   std::vector<std::size_t> cardinalities)
    : parents_(std::move(parents)), cardinalities_(std::move(cardinalities)) {
  const std::size_t m = parents_.size();
  if (m == 0 || cardinalities_.size() != m)
    fail(ErrorCode::PreconditionViolation, "structure needs one parent list and one cardinality per variable");
  for (std::size_t i = 0; i < m; ++i) {
    if (cardinalities_[i] < 2) fail(ErrorCode::PreconditionViolation, "cardinality below 2 for variable " + std::to_string(i));
    for (auto p : parents_[i])
      if (p >= m || p == i) fail(ErrorCode::PreconditionViolation, "bad parent index for variable " + std::to_string(i));
    auto sorted = parents_[i];
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail(ErrorCode::PreconditionViolation, "repeated parent for variable " + std::to_string(i));
  }
  // Kahn's algorithm.
  std::vector<std::size_t> indegree(m, 0);
  std::vector<std::vector<std::size_t>> children(m);
  for (std::size_t i = 0; i < m; ++i) {
    indegree[i] = parents_[i].size();
    for (auto p : parents_[i]) children[p].push_back(i);
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < m; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++visited;
    for (auto c : children[v])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (visited != m) fail(ErrorCode::PreconditionViolation, "parent graph has a cycle");

  configs_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t c = 1;
    for (auto p : parents_[i]) c *= cardinalities_[p];
    configs_[i] = c;
  }
}

std::size_t NetworkStructure::parent_config(std::size_t i, std::span<const int> row) const {
  std::size_t q = 0;
  for (auto p : parents_[i]) q = q * cardinalities_[p] + static_cast<std::size_t>(row[p]);
  return q;
}

std::vector<int> NetworkStructure::parent_values(std::size_t i, std::size_t q) const {
  const auto& pa = parents_.at(i);
  std::vector<int> values(pa.size());
  for (std::size_t j = pa.size(); j-- > 0;) {
    values[j] = static_cast<int>(q % cardinalities_[pa[j]]);
    q /= cardinalities_[pa[j]];
  }
  return values;
}

std::optional<std::size_t> NetworkStructure::naive_bayes_class() const {
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < size(); ++i) {
    if (parents_[i].empty()) {
      if (root) return std::nullopt;
      root = i;
    }
  }
  if (!root) return std::nullopt;
  for (std::size_t i = 0; i < size(); ++i)
    if (i != *root && (parents_[i].size() != 1 || parents_[i][0] != *root)) return std::nullopt;
  return root;
}

NetworkStructure naive_bayes_structure(const data::Schema& schema) {
  if (schema.size() < 2) fail(ErrorCode::PreconditionViolation, "Naive Bayes needs a class and at least one attribute");
  const auto cls = schema.class_index();
  std::vector<std::vector<std::size_t>> parents(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (i != cls) parents[i] = {cls};
  return NetworkStructure(std::move(parents), schema.cardinalities());
}

// ---------------------------------------------------------------- methods

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::mmlwf: return "MMLWF";
    case Method::mmlp: return "MMLP";
    case Method::mmlv: return "MMLV";
    case Method::mdl: return "MDL";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto m : all_methods)
    if (upper == to_string(m)) return m;
  fail(ErrorCode::PreconditionViolation, "unknown method '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- counts

namespace {

void check_schema(const data::Dataset& dataset, const NetworkStructure& structure) {
  if (dataset.width() != structure.size())
    fail(ErrorCode::SchemaMismatch, "dataset has " + std::to_string(dataset.width()) + " variables, structure has " +
                                        std::to_string(structure.size()));
  for (std::size_t i = 0; i < structure.size(); ++i)
    if (dataset.schema().cardinality(i) != structure.cardinality(i))
      fail(ErrorCode::SchemaMismatch, "cardinality mismatch at variable " + std::to_string(i));
}

SufficientStats empty_stats(const NetworkStructure& structure) {
  SufficientStats stats;
  for (std::size_t i = 0; i < structure.size(); ++i)
    stats.counts.emplace_back(structure.configs(i), structure.cardinality(i), 0);
  return stats;
}

void tally(SufficientStats& stats, const NetworkStructure& structure, std::span<const int> row) {
  for (std::size_t i = 0; i < structure.size(); ++i)
    ++stats.counts[i](structure.parent_config(i, row), static_cast<std::size_t>(row[i]));
  ++stats.n;
}

}  // namespace

SufficientStats count_stats(const data::Dataset& dataset, const NetworkStructure& structure) {
  check_schema(dataset, structure);
  auto stats = empty_stats(structure);
  for (std::size_t r = 0; r < dataset.rows(); ++r) tally(stats, structure, dataset.row(r));
  return stats;
}

SufficientStats count_stats(const data::Dataset& dataset, const NetworkStructure& structure,
                            std::span<const std::size_t> rows) {
  check_schema(dataset, structure);
  auto stats = empty_stats(structure);
  for (auto r : rows) {
    if (r >= dataset.rows()) fail(ErrorCode::OutOfRangeValue, "row index " + std::to_string(r) + " out of range");
    tally(stats, structure, dataset.row(r));
  }
  return stats;
}

// ---------------------------------------------------------------- priors

HyperParameters ess_hyperparameters(const NetworkStructure& structure, double ess) {
  if (!(ess > 0.0)) fail(ErrorCode::PreconditionViolation, "ess must be positive");
  HyperParameters hyper;
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const auto c = structure.configs(i);
    const auto n = structure.cardinality(i);
    hyper.pseudo.emplace_back(c, n, ess / static_cast<double>(c * n));
  }
  return hyper;
}

HyperParameters jeffreys_hyperparameters(const NetworkStructure& structure) {
  const auto cls = structure.naive_bayes_class();
  if (!cls) fail(ErrorCode::NotNaiveBayes, "closed-form Jeffreys pseudo-counts need a Naive Bayes structure");
  // Each leaf contributes theta_class^{(n_i - 1)/2}; every theta also
  // carries exponent -1/2, so the class pseudo-count is 1/2 + sum (n_i - 1)/2.
  double class_mu = 0.5;
  for (std::size_t i = 0; i < structure.size(); ++i)
    if (i != *cls) class_mu += 0.5 * static_cast<double>(structure.cardinality(i) - 1);
  HyperParameters hyper;
  for (std::size_t i = 0; i < structure.size(); ++i)
    hyper.pseudo.emplace_back(structure.configs(i), structure.cardinality(i), i == *cls ? class_mu : 0.5);
  return hyper;
}

HyperParameters effective_hyperparameters(const PriorSpec& spec, const NetworkStructure& structure) {
  if (spec.method == Method::mdl) return jeffreys_hyperparameters(structure);
  auto hyper = ess_hyperparameters(structure, spec.ess);
  if (spec.method == Method::mmlp) return hyper;
  const auto jeffreys = jeffreys_hyperparameters(structure);
  const double sign = spec.method == Method::mmlv ? 1.0 : -1.0;
  for (std::size_t i = 0; i < hyper.pseudo.size(); ++i) {
    auto dst = hyper.pseudo[i].values();
    const auto src = jeffreys.pseudo[i].values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += sign * (src[j] - 1.0);
  }
  return hyper;
}

// ---------------------------------------------------------------- fitting

namespace {

void check_shapes(const SufficientStats& stats, const HyperParameters& hyper) {
  if (stats.counts.size() != hyper.pseudo.size())
    fail(ErrorCode::SchemaMismatch, "counts and hyperparameters cover different variable counts");
  for (std::size_t i = 0; i < stats.counts.size(); ++i)
    if (stats.counts[i].rows() != hyper.pseudo[i].rows() || stats.counts[i].cols() != hyper.pseudo[i].cols())
      fail(ErrorCode::SchemaMismatch, "table shape mismatch at variable " + std::to_string(i));
}

}  // namespace

ParameterSet map_parameters(const SufficientStats& stats, const HyperParameters& hyper) {
  check_shapes(stats, hyper);
  ParameterSet params;
  for (std::size_t i = 0; i < stats.counts.size(); ++i) {
    const auto& f = stats.counts[i];
    const auto& mu = hyper.pseudo[i];
    RealTable theta(f.rows(), f.cols());
    for (std::size_t q = 0; q < f.rows(); ++q) {
      double denominator = 0.0;
      for (std::size_t x = 0; x < f.cols(); ++x) {
        const double numerator = static_cast<double>(f(q, x)) + mu(q, x) - 1.0;
        if (!(numerator > 0.0)) throw NoInteriorMode(i, q, x);
        theta(q, x) = numerator;
        denominator += numerator;
      }
      for (auto& t : theta.row(q)) t /= denominator;
    }
    params.tables.push_back(std::move(theta));
  }
  return params;
}

ParameterSet mean_parameters(const SufficientStats& stats, const HyperParameters& hyper) {
  check_shapes(stats, hyper);
  ParameterSet params;
  for (std::size_t i = 0; i < stats.counts.size(); ++i) {
    const auto& f = stats.counts[i];
    const auto& mu = hyper.pseudo[i];
    RealTable theta(f.rows(), f.cols());
    for (std::size_t q = 0; q < f.rows(); ++q) {
      double total = 0.0;
      for (std::size_t x = 0; x < f.cols(); ++x) {
        if (!(mu(q, x) > 0.0))
          fail(ErrorCode::NonPositiveHyper, "hyperparameter " + std::to_string(mu(q, x)) + " at variable " +
                                                std::to_string(i) + ", configuration " + std::to_string(q));
        theta(q, x) = static_cast<double>(f(q, x)) + mu(q, x);
        total += theta(q, x);
      }
      for (auto& t : theta.row(q)) t /= total;
    }
    params.tables.push_back(std::move(theta));
  }
  return params;
}

// ---------------------------------------------------------------- densities

namespace {

void check_params(const ParameterSet& params, const NetworkStructure& structure) {
  if (params.tables.size() != structure.size())
    fail(ErrorCode::SchemaMismatch, "parameter set does not match structure");
  for (std::size_t i = 0; i < structure.size(); ++i)
    if (params.tables[i].rows() != structure.configs(i) || params.tables[i].cols() != structure.cardinality(i))
      fail(ErrorCode::SchemaMismatch, "parameter table shape mismatch at variable " + std::to_string(i));
}

constexpr std::size_t max_enumeration = std::size_t{1} << 22;

}  // namespace

std::vector<double> parent_marginals(const ParameterSet& params, const NetworkStructure& structure, std::size_t i) {
  check_params(params, structure);
  if (structure.parents(i).empty()) return {1.0};

  // Ancestral closure of i, excluding i itself.
  std::vector<bool> in_set(structure.size(), false);
  std::vector<std::size_t> stack(structure.parents(i).begin(), structure.parents(i).end());
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (in_set[v]) continue;
    in_set[v] = true;
    for (auto p : structure.parents(v)) stack.push_back(p);
  }
  std::vector<std::size_t> ancestors;
  std::size_t space = 1;
  for (std::size_t v = 0; v < structure.size(); ++v) {
    if (!in_set[v]) continue;
    ancestors.push_back(v);
    space *= structure.cardinality(v);
    if (space > max_enumeration)
      fail(ErrorCode::PreconditionViolation, "ancestor configuration space too large to enumerate");
  }

  std::vector<double> marginal(structure.configs(i), 0.0);
  std::vector<int> row(structure.size(), 0);
  for (std::size_t code = 0; code < space; ++code) {
    std::size_t rest = code;
    for (auto v : ancestors) {
      row[v] = static_cast<int>(rest % structure.cardinality(v));
      rest /= structure.cardinality(v);
    }
    double p = 1.0;
    for (auto v : ancestors) p *= params.tables[v](structure.parent_config(v, row), static_cast<std::size_t>(row[v]));
    marginal[structure.parent_config(i, row)] += p;
  }
  return marginal;
}

double eval_jeffreys_log_density(const ParameterSet& params, const NetworkStructure& structure) {
  check_params(params, structure);
  for (std::size_t i = 0; i < params.tables.size(); ++i)
    for (double t : params.tables[i].values())
      if (!(t > 0.0 && t < 1.0))
        fail(ErrorCode::BoundaryParameter, "parameter " + std::to_string(t) + " of variable " + std::to_string(i) +
                                               " is on the simplex boundary");
  double log_density = 0.0;
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const auto marginal = parent_marginals(params, structure, i);
    const double exponent = 0.5 * static_cast<double>(structure.cardinality(i) - 1);
    for (std::size_t q = 0; q < structure.configs(i); ++q) {
      if (!structure.parents(i).empty()) log_density += exponent * std::log(marginal[q]);
      for (double t : params.tables[i].row(q)) log_density -= 0.5 * std::log(t);
    }
  }
  return log_density;
}

double log_joint_probability(const ParameterSet& params, const NetworkStructure& structure,
                             std::span<const int> row) {
  if (row.size() != structure.size())
    fail(ErrorCode::OutOfRangeValue, "row has " + std::to_string(row.size()) + " values, expected " +
                                         std::to_string(structure.size()));
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] < 0 || static_cast<std::size_t>(row[i]) >= structure.cardinality(i))
      fail(ErrorCode::OutOfRangeValue, "value " + std::to_string(row[i]) + " out of range for variable " +
                                           std::to_string(i));
  double lp = 0.0;
  for (std::size_t i = 0; i < structure.size(); ++i)
    lp += std::log(params.tables[i](structure.parent_config(i, row), static_cast<std::size_t>(row[i])));
  return lp;
}

double joint_probability(const ParameterSet& params, const NetworkStructure& structure, std::span<const int> row) {
  return std::exp(log_joint_probability(params, structure, row));
}

// ---------------------------------------------------------------- ess scan

double feasibility_threshold(Method method, const NetworkStructure& structure, const SufficientStats& stats) {
  double threshold = -std::numeric_limits<double>::infinity();
  if (method == Method::mdl) return threshold;
  std::optional<HyperParameters> jeffreys;
  if (method != Method::mmlp) jeffreys = jeffreys_hyperparameters(structure);
  const double sign = method == Method::mmlv ? 1.0 : -1.0;
  for (std::size_t i = 0; i < structure.size(); ++i) {
    // mu_eff = slope * ess + offset; need f + mu_eff - 1 > 0.
    const double slope = 1.0 / static_cast<double>(structure.configs(i) * structure.cardinality(i));
    const auto& f = stats.counts.at(i);
    for (std::size_t q = 0; q < f.rows(); ++q) {
      for (std::size_t x = 0; x < f.cols(); ++x) {
        const double offset = jeffreys ? sign * (jeffreys->pseudo[i](q, x) - 1.0) : 0.0;
        threshold = std::max(threshold, (1.0 - offset - static_cast<double>(f(q, x))) / slope);
      }
    }
  }
  return threshold;
}

double ess_ladder_value(double threshold) {
  double ess = 0.5;
  while (!(ess > threshold)) ess *= 2.0;
  return ess;
}

double preflight_ess(const NetworkStructure& structure, std::span<const Method> methods,
                     std::span<const SufficientStats> stats) {
  double threshold = -std::numeric_limits<double>::infinity();
  for (auto m : methods)
    for (const auto& s : stats) threshold = std::max(threshold, feasibility_threshold(m, structure, s));
  return ess_ladder_value(threshold);
}

// ---------------------------------------------------------------- json

nlohmann::ordered_json parameters_to_json(const ParameterSet& params, const NetworkStructure& structure,
                                          const data::Schema& schema) {
  check_params(params, structure);
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const auto& var = schema.variable(i);
    nlohmann::ordered_json entry;
    nlohmann::ordered_json parent_names = nlohmann::ordered_json::array();
    for (auto p : structure.parents(i)) parent_names.push_back(schema.variable(p).name);
    entry["parents"] = std::move(parent_names);
    nlohmann::ordered_json tables = nlohmann::ordered_json::object();
    for (std::size_t q = 0; q < structure.configs(i); ++q) {
      std::string key;
      const auto values = structure.parent_values(i, q);
      for (std::size_t j = 0; j < values.size(); ++j) {
        const auto p = structure.parents(i)[j];
        if (!key.empty()) key += ",";
        key += schema.variable(p).name + "=" + schema.decode(p, values[j]);
      }
      if (key.empty()) key = "(root)";
      nlohmann::ordered_json row = nlohmann::ordered_json::object();
      for (std::size_t x = 0; x < structure.cardinality(i); ++x) row[var.labels[x]] = params.tables[i](q, x);
      tables[key] = std::move(row);
    }
    entry["tables"] = std::move(tables);
    doc[var.name] = std::move(entry);
  }
  return doc;
}

}  // namespace mencode::model
