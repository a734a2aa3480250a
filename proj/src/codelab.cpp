#include "mencode/codelab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>

#include "mencode/error.hpp"

namespace mencode::codelab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_interior(double theta) {
  if (!(theta > 0.0 && theta < 1.0))
    fail(ErrorCode::BoundaryTheta, "theta = " + std::to_string(theta) + " is not in (0,1)");
}

void require_sample(const Sample& x) {
  if (x.n < 1 || x.k < 0 || x.k > x.n)
    fail(ErrorCode::PreconditionViolation,
         "need n >= 1 and 0 <= k <= n, got n=" + std::to_string(x.n) + ", k=" + std::to_string(x.k));
}

// k ln(theta) + m ln(1 - theta), with 0 ln 0 = 0.
double bernoulli_log(int k, int m, double theta) {
  double v = 0.0;
  if (k > 0) v += k * std::log(theta);
  if (m > 0) v += m * std::log1p(-theta);
  return v;
}

double integrate_unit(const std::function<double(double)>& f) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, 0.0, 1.0);
}

}  // namespace

// ---------------------------------------------------------------- model

OneParamModel::OneParamModel(int n, OutcomeSpace space) : n_(n), space_(space) {
  if (n < 1) fail(ErrorCode::PreconditionViolation, "model needs n >= 1");
  if (space == OutcomeSpace::sufficient) {
    for (int k = 0; k <= n; ++k) {
      const double log_mult = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      outcomes_.push_back({k, log_mult, "k=" + std::to_string(k)});
    }
  } else {
    if (n > 20) fail(ErrorCode::InstanceTooLarge, "sequence space limited to n <= 20");
    const std::uint32_t count = std::uint32_t{1} << n;
    for (std::uint32_t code = 0; code < count; ++code) {
      std::string label(static_cast<std::size_t>(n), '0');
      for (int j = 0; j < n; ++j)
        if (code & (std::uint32_t{1} << (n - 1 - j))) label[static_cast<std::size_t>(j)] = '1';
      outcomes_.push_back({std::popcount(code), 0.0, std::move(label)});
    }
  }
}

double OneParamModel::log_likelihood(const Outcome& x, double theta) const {
  return x.log_multiplicity + bernoulli_log(x.successes, n_ - x.successes, theta);
}

double OneParamModel::likelihood(const Outcome& x, double theta) const { return std::exp(log_likelihood(x, theta)); }

// ---------------------------------------------------------------- priors

PriorDensity PriorDensity::uniform() {
  return PriorDensity([](double theta) { return (theta >= 0.0 && theta <= 1.0) ? 1.0 : 0.0; }, true, "uniform");
}

PriorDensity PriorDensity::beta(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) fail(ErrorCode::PreconditionViolation, "beta prior needs positive shape parameters");
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  auto density = [a, b, log_norm](double theta) {
    if (!(theta > 0.0 && theta < 1.0)) return 0.0;
    return std::exp(log_norm + (a - 1.0) * std::log(theta) + (b - 1.0) * std::log1p(-theta));
  };
  return PriorDensity(density, a == 1.0 && b == 1.0, "beta(" + std::to_string(a) + "," + std::to_string(b) + ")");
}

PriorDensity PriorDensity::custom(std::function<double(double)> density, std::string name) {
  return PriorDensity(std::move(density), false, std::move(name));
}

double prior_mass(const PriorDensity& prior) {
  return integrate_unit([&](double t) { return prior(t); });
}

// ---------------------------------------------------------------- lengths

double kraft_slack(std::span<const double> lengths_bits) {
  double total = 0.0;
  for (double l : lengths_bits) total += std::exp2(-l);
  return 1.0 - total;
}

double log_likelihood(const Sample& x, double theta) { return bernoulli_log(x.k, x.n - x.k, theta); }

double observed_information(const Sample& x, double theta) {
  require_interior(theta);
  return x.k / (theta * theta) + (x.n - x.k) / ((1.0 - theta) * (1.0 - theta));
}

double fisher_information(const OneParamModel& model, double theta) {
  require_interior(theta);
  return model.n() / (theta * (1.0 - theta));
}

double optimal_precision(const OneParamModel& model, double theta) {
  return std::sqrt(12.0 / fisher_information(model, theta));
}

double wf_two_part_length(double theta, double d, const PriorDensity& prior, const Sample& x) {
  require_interior(theta);
  if (!(d > 0.0)) fail(ErrorCode::NonpositivePrecision, "precision quantum must be positive");
  const double h = prior(theta);
  if (!(h > 0.0)) fail(ErrorCode::ZeroPriorDensity, "prior density vanishes at theta");
  return -std::log(d * h) - log_likelihood(x, theta) + d * d / 24.0 * observed_information(x, theta);
}

double wf_expected_length(double theta, const PriorDensity& prior, const Sample& x) {
  require_interior(theta);
  const double h = prior(theta);
  if (!(h > 0.0)) fail(ErrorCode::ZeroPriorDensity, "prior density vanishes at theta");
  const double info = fisher_information(OneParamModel(x.n), theta);
  return -std::log(h) + 0.5 * std::log(info / 12.0) - log_likelihood(x, theta) + 0.5;
}

double uni_h_length(double theta, int codebook_size, const PriorDensity& prior) {
  if (codebook_size < 1) fail(ErrorCode::PreconditionViolation, "codebook size must be at least 1");
  const double h = prior(theta);
  if (!(h > 0.0)) fail(ErrorCode::ZeroPriorDensity, "prior density vanishes at theta");
  return std::log(static_cast<double>(codebook_size)) - std::log(h);
}

double uni_h_total_length(double theta, int codebook_size, double d, const PriorDensity& prior, const Sample& x) {
  require_interior(theta);
  if (!(d > 0.0)) fail(ErrorCode::NonpositivePrecision, "precision quantum must be positive");
  return uni_h_length(theta, codebook_size, prior) - log_likelihood(x, theta) +
         d * d / 24.0 * fisher_information(OneParamModel(x.n), theta);
}

// ---------------------------------------------------------------- estimators

double estimator_log_objective(Estimator which, const Sample& x, const PriorDensity& prior, double theta) {
  const double h = prior(theta);
  if (!(h > 0.0)) return -inf;
  double v = log_likelihood(x, theta) + std::log(h);
  // ln I_n = ln n - ln theta - ln(1 - theta)
  const double log_info = std::log(static_cast<double>(x.n)) - std::log(theta) - std::log1p(-theta);
  if (which == Estimator::wallace_freeman) v -= 0.5 * log_info;
  if (which == Estimator::volumewise) v += 0.5 * log_info;
  return v;
}

double estimate_numeric(Estimator which, const Sample& x, const PriorDensity& prior) {
  require_sample(x);
  // Coarse scan in logit coordinates reaches within ~1e-16 of either end,
  // so a supremum approached at the boundary shows up as an edge argmax.
  constexpr int steps = 1440;
  constexpr double span = 36.0;
  auto theta_at = [](int i) {
    const double u = -span + 2.0 * span * i / steps;
    return 1.0 / (1.0 + std::exp(-u));
  };
  int best = 0;
  double best_value = -inf;
  for (int i = 0; i <= steps; ++i) {
    const double v = estimator_log_objective(which, x, prior, theta_at(i));
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  if (best == 0 || best == steps || !std::isfinite(best_value))
    fail(ErrorCode::NoInteriorMaximum, "objective has no interior maximum for n=" + std::to_string(x.n) +
                                           ", k=" + std::to_string(x.k));
  auto negated = [&](double t) { return -estimator_log_objective(which, x, prior, t); };
  const auto [theta, value] = boost::math::tools::brent_find_minima(negated, theta_at(best - 1), theta_at(best + 1),
                                                                    std::numeric_limits<double>::digits);
  (void)value;
  return theta;
}

double mml_wf_estimate(const Sample& x, const PriorDensity& prior) {
  require_sample(x);
  if (prior.is_uniform()) return (x.k + 0.5) / (x.n + 1.0);
  return estimate_numeric(Estimator::wallace_freeman, x, prior);
}

double mml_p_estimate(const Sample& x, const PriorDensity& prior) {
  require_sample(x);
  if (prior.is_uniform()) {
    if (x.k == 0 || x.k == x.n)
      fail(ErrorCode::NoInteriorMaximum, "posterior mode lies on the boundary (k=" + std::to_string(x.k) + ")");
    return static_cast<double>(x.k) / x.n;
  }
  return estimate_numeric(Estimator::pointwise, x, prior);
}

double mml_v_estimate(const Sample& x, const PriorDensity& prior) {
  require_sample(x);
  if (prior.is_uniform()) {
    if (x.k == 0 || x.k == x.n)
      fail(ErrorCode::NoInteriorMaximum, "posterior times sqrt(I_n) is unbounded at the boundary (k=" +
                                             std::to_string(x.k) + ")");
    return (x.k - 0.5) / (x.n - 1.0);
  }
  return estimate_numeric(Estimator::volumewise, x, prior);
}

// ---------------------------------------------------------------- codebooks

void validate(const QuantizedCodebook& codebook) {
  if (codebook.values.empty()) fail(ErrorCode::PreconditionViolation, "empty codebook");
  if (codebook.lengths.size() != codebook.values.size())
    fail(ErrorCode::PreconditionViolation, "one codelength per codebook value required");
  double kraft = 0.0;
  for (std::size_t j = 0; j < codebook.values.size(); ++j) {
    const double v = codebook.values[j];
    if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::PreconditionViolation, "codebook value outside (0,1)");
    if (j > 0 && !(v > codebook.values[j - 1]))
      fail(ErrorCode::PreconditionViolation, "codebook values must be strictly increasing");
    if (codebook.lengths[j] < 0.0) fail(ErrorCode::PreconditionViolation, "negative codelength");
    kraft += std::exp(-codebook.lengths[j]);
  }
  if (kraft > 1.0 + 1e-12) fail(ErrorCode::PreconditionViolation, "codelengths violate the Kraft inequality");
}

QuantizedCodebook uniform_codebook(std::vector<double> values) {
  QuantizedCodebook book;
  const auto n = values.size();
  book.values = std::move(values);
  book.lengths.assign(n, std::log(static_cast<double>(n)));
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = j == 0 ? 0.0 : 0.5 * (book.values[j - 1] + book.values[j]);
    const double hi = j + 1 == n ? 1.0 : 0.5 * (book.values[j] + book.values[j + 1]);
    book.widths.push_back(hi - lo);
  }
  validate(book);
  return book;
}

QuantizedCodebook build_codebook(const OneParamModel& model, const PriorDensity& prior, int size, Spacing spacing,
                                 ParameterCode code) {
  (void)model;  // Bernoulli: the sqrt(I_n) partition does not depend on n.
  if (size < 2) fail(ErrorCode::PreconditionViolation, "codebook size must be at least 2");
  const auto n = static_cast<std::size_t>(size);
  QuantizedCodebook book;
  if (spacing == Spacing::wf) {
    // Equal shares of integral sqrt(I_n) = 2 sqrt(n) asin(sqrt(theta)).
    constexpr double pi = std::numbers::pi;
    auto edge = [&](double j) { return std::pow(std::sin(pi * j / (2.0 * size)), 2); };
    for (std::size_t j = 1; j <= n; ++j) {
      book.values.push_back(edge(static_cast<double>(j) - 0.5));
      book.widths.push_back(edge(static_cast<double>(j)) - edge(static_cast<double>(j) - 1.0));
    }
  } else {
    for (std::size_t j = 1; j <= n; ++j) book.values.push_back(static_cast<double>(j) / (size + 1.0));
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = j == 0 ? 0.0 : 0.5 * (book.values[j - 1] + book.values[j]);
      const double hi = j + 1 == n ? 1.0 : 0.5 * (book.values[j] + book.values[j + 1]);
      book.widths.push_back(hi - lo);
    }
  }

  std::vector<double> weights(n);
  for (std::size_t j = 0; j < n; ++j) {
    switch (code) {
      case ParameterCode::uniform: weights[j] = 1.0 / size; break;
      case ParameterCode::wf: weights[j] = book.widths[j] * prior(book.values[j]); break;
      case ParameterCode::uniform_h: weights[j] = prior(book.values[j]) / size; break;
    }
    if (!(weights[j] > 0.0)) fail(ErrorCode::ZeroPriorDensity, "prior density vanishes at a codebook value");
  }
  // A peaked prior can push the raw weights past Kraft; renormalize then.
  double total = 0.0;
  for (double w : weights) total += w;
  const double scale = total > 1.0 ? total : 1.0;
  for (double w : weights) book.lengths.push_back(-std::log(w / scale));
  validate(book);
  return book;
}

std::vector<double> marginal_probabilities(const OneParamModel& model, const PriorDensity& prior) {
  std::vector<double> r;
  r.reserve(model.outcomes().size());
  for (const auto& x : model.outcomes())
    r.push_back(integrate_unit([&](double t) { return model.likelihood(x, t) * prior(t); }));
  return r;
}

namespace {

std::vector<std::vector<double>> log_likelihood_table(const OneParamModel& model, std::span<const double> values) {
  std::vector<std::vector<double>> table(values.size());
  for (std::size_t j = 0; j < values.size(); ++j)
    for (const auto& x : model.outcomes()) table[j].push_back(model.log_likelihood(x, values[j]));
  return table;
}

}  // namespace

TwoPartCode two_part_code(const OneParamModel& model, std::span<const double> marginals,
                          const QuantizedCodebook& codebook) {
  validate(codebook);
  const auto& outcomes = model.outcomes();
  if (marginals.size() != outcomes.size()) fail(ErrorCode::PreconditionViolation, "one marginal per outcome required");
  const auto ll = log_likelihood_table(model, codebook.values);
  TwoPartCode code;
  for (std::size_t x = 0; x < outcomes.size(); ++x) {
    std::size_t best = 0;
    double best_len = inf;
    for (std::size_t j = 0; j < codebook.size(); ++j) {
      const double len = codebook.lengths[j] - ll[j][x];
      if (len < best_len) {
        best_len = len;
        best = j;
      }
    }
    if (!std::isfinite(best_len)) fail(ErrorCode::UncoveredOutcome, "outcome " + outcomes[x].label + " has no codeword");
    code.assignment.push_back(best);
    code.lengths.push_back(best_len);
    code.expected_length += marginals[x] * best_len;
  }
  return code;
}

// ---------------------------------------------------------------- SMML

namespace {

struct Candidate {
  std::vector<std::size_t> members;  // indices into the grid
  std::vector<std::size_t> assignment;
  std::vector<double> lengths;
  double expected = inf;
};

// Alternates: assign each outcome to its shortest codeword, then set each
// codelength to -ln of the marginal mass it received. Each half-step is
// optimal given the other, so the objective never increases.
Candidate lloyd(const std::vector<std::size_t>& members, std::vector<double> lengths,
                const std::vector<std::vector<double>>& ll, std::span<const double> r) {
  const std::size_t outcomes = r.size();
  Candidate c;
  c.members = members;
  std::vector<std::size_t> assignment(outcomes, 0);
  double previous = inf;
  for (int iter = 0; iter < 200; ++iter) {
    double total = 0.0;
    for (std::size_t x = 0; x < outcomes; ++x) {
      std::size_t best = 0;
      double best_len = inf;
      for (std::size_t j = 0; j < members.size(); ++j) {
        const double len = lengths[j] - ll[members[j]][x];
        if (len < best_len) {
          best_len = len;
          best = j;
        }
      }
      assignment[x] = best;
      total += r[x] * best_len;
    }
    std::vector<double> mass(members.size(), 0.0);
    for (std::size_t x = 0; x < outcomes; ++x) mass[assignment[x]] += r[x];
    for (std::size_t j = 0; j < members.size(); ++j) lengths[j] = mass[j] > 0.0 ? -std::log(mass[j]) : inf;

    double updated = 0.0;
    for (std::size_t x = 0; x < outcomes; ++x) updated += r[x] * (lengths[assignment[x]] - ll[members[assignment[x]]][x]);
    (void)total;
    c.assignment = assignment;
    c.lengths = lengths;
    c.expected = updated;
    if (!(updated < previous - 1e-15)) break;
    previous = updated;
  }
  return c;
}

void for_each_subset(std::size_t n, std::size_t size, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    std::size_t i = size;
    while (i > 0 && idx[i - 1] == n - size + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

SmmlResult smml_search(const OneParamModel& model, const PriorDensity& prior, std::size_t max_codebook_size,
                       std::span<const double> candidate_grid) {
  const auto& outcomes = model.outcomes();
  if (outcomes.size() > smml_max_outcomes)
    fail(ErrorCode::InstanceTooLarge, std::to_string(outcomes.size()) + " outcomes exceed the exhaustive limit of " +
                                          std::to_string(smml_max_outcomes));
  std::vector<double> grid(candidate_grid.begin(), candidate_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) fail(ErrorCode::PreconditionViolation, "empty candidate grid");
  if (grid.size() > smml_max_grid)
    fail(ErrorCode::InstanceTooLarge, std::to_string(grid.size()) + " candidates exceed the exhaustive limit of " +
                                          std::to_string(smml_max_grid));
  if (max_codebook_size > smml_max_codebook)
    fail(ErrorCode::InstanceTooLarge, "codebooks larger than " + std::to_string(smml_max_codebook) + " are not searched");
  if (max_codebook_size < 1) fail(ErrorCode::PreconditionViolation, "codebook size must be at least 1");
  for (double g : grid)
    if (!(g > 0.0 && g < 1.0)) fail(ErrorCode::PreconditionViolation, "candidate values must lie in (0,1)");

  const auto r = marginal_probabilities(model, prior);
  const auto ll = log_likelihood_table(model, grid);

  Candidate best;
  const std::size_t top = std::min(max_codebook_size, grid.size());
  for (std::size_t size = 1; size <= top; ++size) {
    for_each_subset(grid.size(), size, [&](const std::vector<std::size_t>& members) {
      // Start from the uniform code, and from the partition that sends each
      // outcome to the codeword nearest its maximum-likelihood value.
      auto a = lloyd(members, std::vector<double>(size, std::log(static_cast<double>(size))), ll, r);
      std::vector<double> mass(size, 0.0);
      for (std::size_t x = 0; x < outcomes.size(); ++x) {
        const double mle = static_cast<double>(outcomes[x].successes) / model.n();
        std::size_t nearest = 0;
        for (std::size_t j = 1; j < size; ++j)
          if (std::abs(grid[members[j]] - mle) < std::abs(grid[members[nearest]] - mle)) nearest = j;
        mass[nearest] += r[x];
      }
      std::vector<double> init(size);
      for (std::size_t j = 0; j < size; ++j) init[j] = mass[j] > 0.0 ? -std::log(mass[j]) : inf;
      auto b = lloyd(members, std::move(init), ll, r);
      auto& winner = b.expected < a.expected ? b : a;
      if (winner.expected < best.expected) best = std::move(winner);
    });
  }

  // Drop codewords that received no mass.
  SmmlResult result;
  std::vector<std::size_t> remap(best.members.size(), 0);
  for (std::size_t j = 0; j < best.members.size(); ++j) {
    if (!std::isfinite(best.lengths[j])) continue;
    remap[j] = result.codebook.values.size();
    result.codebook.values.push_back(grid[best.members[j]]);
    result.codebook.lengths.push_back(best.lengths[j]);
  }
  for (auto a : best.assignment) result.assignment.push_back(remap[a]);
  result.codebook.widths.assign(result.codebook.values.size(), 0.0);
  result.expected_length = best.expected;
  return result;
}

// ---------------------------------------------------------------- normalized

NormalizedTwoPart normalized_two_part(const OneParamModel& model, const QuantizedCodebook& codebook) {
  validate(codebook);
  const auto& outcomes = model.outcomes();
  const auto ll = log_likelihood_table(model, codebook.values);
  NormalizedTwoPart out;
  out.normalizers.assign(codebook.size(), 0.0);
  for (std::size_t x = 0; x < outcomes.size(); ++x) {
    std::size_t best = 0;
    double best_len = inf;
    for (std::size_t j = 0; j < codebook.size(); ++j) {
      const double len = codebook.lengths[j] - ll[j][x];
      if (len < best_len) {
        best_len = len;
        best = j;
      }
    }
    if (!std::isfinite(best_len)) fail(ErrorCode::UncoveredOutcome, "outcome " + outcomes[x].label + " has no codeword");
    out.region.push_back(best);
    out.plain_lengths.push_back(best_len);
    out.normalizers[best] += std::exp(ll[best][x]);
  }
  for (std::size_t x = 0; x < outcomes.size(); ++x)
    out.normalized_lengths.push_back(out.plain_lengths[x] + std::log(out.normalizers[out.region[x]]));
  return out;
}

}  // namespace mencode::codelab
