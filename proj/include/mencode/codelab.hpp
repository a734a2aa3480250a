#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

// One-parameter (Bernoulli) codelength laboratory. All lengths are in nats
// and Fisher information uses natural logs; divide by ln 2 for bits.

namespace mencode::codelab {

/// k successes in n Bernoulli trials; the likelihood of the particular
/// sequence is theta^k (1 - theta)^(n - k).
struct Sample {
  int n = 0;
  int k = 0;
};

enum class OutcomeSpace { sufficient, sequence };

struct Outcome {
  int successes = 0;
  /// ln C(n, k) in the sufficient space, 0 for individual sequences.
  double log_multiplicity = 0.0;
  std::string label;
};

class OneParamModel {
 public:
  explicit OneParamModel(int n, OutcomeSpace space = OutcomeSpace::sufficient);

  int n() const noexcept { return n_; }
  OutcomeSpace space() const noexcept { return space_; }
  const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }

  double log_likelihood(const Outcome& x, double theta) const;
  double likelihood(const Outcome& x, double theta) const;

 private:
  int n_;
  OutcomeSpace space_;
  std::vector<Outcome> outcomes_;
};

class PriorDensity {
 public:
  static PriorDensity uniform();
  static PriorDensity beta(double a, double b);
  /// An arbitrary density on (0,1); never takes closed-form shortcuts.
  static PriorDensity custom(std::function<double(double)> density, std::string name = "custom");

  double operator()(double theta) const { return density_(theta); }
  bool is_uniform() const noexcept { return uniform_; }
  const std::string& name() const noexcept { return name_; }

 private:
  PriorDensity(std::function<double(double)> density, bool uniform, std::string name)
      : density_(std::move(density)), uniform_(uniform), name_(std::move(name)) {}

  std::function<double(double)> density_;
  bool uniform_;
  std::string name_;
};

/// Integral of the density over (0,1).
double prior_mass(const PriorDensity& prior);

/// 1 - sum 2^-L over code lengths in bits.
double kraft_slack(std::span<const double> lengths_bits);

double log_likelihood(const Sample& x, double theta);
/// -d2/dtheta2 ln f(x|theta).
double observed_information(const Sample& x, double theta);
/// Expected information for n observations, n / (theta (1 - theta)).
double fisher_information(const OneParamModel& model, double theta);
double optimal_precision(const OneParamModel& model, double theta);

/// -ln(d h(theta)) - ln f(x|theta) + d^2/24 * observed information.
double wf_two_part_length(double theta, double d, const PriorDensity& prior, const Sample& x);
/// -ln h + 1/2 ln(I_n / 12) - ln f + 1/2.
double wf_expected_length(double theta, const PriorDensity& prior, const Sample& x);
/// ln N - ln h(theta).
double uni_h_length(double theta, int codebook_size, const PriorDensity& prior);
/// uni_h_length - ln f + d^2/24 * I_n.
double uni_h_total_length(double theta, int codebook_size, double d, const PriorDensity& prior, const Sample& x);

enum class Estimator { wallace_freeman, pointwise, volumewise };

/// ln f(x|theta) + ln h(theta) + s/2 ln I_n(theta) with s = -1, 0, +1.
double estimator_log_objective(Estimator which, const Sample& x, const PriorDensity& prior, double theta);

/// Numeric argmax of the objective over (0,1). Throws NoInteriorMaximum
/// when the supremum is approached at the boundary.
double estimate_numeric(Estimator which, const Sample& x, const PriorDensity& prior);

/// Closed forms for uniform priors, numeric otherwise.
double mml_wf_estimate(const Sample& x, const PriorDensity& prior);
double mml_p_estimate(const Sample& x, const PriorDensity& prior);
double mml_v_estimate(const Sample& x, const PriorDensity& prior);

enum class Spacing { wf, uniform_grid };
enum class ParameterCode { wf, uniform, uniform_h };

struct QuantizedCodebook {
  std::vector<double> values;
  /// Codelength of each value, nats.
  std::vector<double> lengths;
  /// Width of the parameter cell each value stands for.
  std::vector<double> widths;

  std::size_t size() const noexcept { return values.size(); }
};

/// Throws PreconditionViolation unless values are strictly increasing in
/// (0,1) and the lengths satisfy Kraft.
void validate(const QuantizedCodebook& codebook);

QuantizedCodebook build_codebook(const OneParamModel& model, const PriorDensity& prior, int size, Spacing spacing,
                                 ParameterCode code);

/// Codebook with the given values and the uniform code ln N.
QuantizedCodebook uniform_codebook(std::vector<double> values);

/// r(x) = integral f(x|theta) h(theta) dtheta for every outcome.
std::vector<double> marginal_probabilities(const OneParamModel& model, const PriorDensity& prior);

struct TwoPartCode {
  /// Index into the codebook per outcome.
  std::vector<std::size_t> assignment;
  /// L(theta_j) - ln f(x|theta_j) per outcome, nats.
  std::vector<double> lengths;
  double expected_length = 0.0;
};

/// Encodes every outcome with its shortest two-part codeword (ties to the
/// lower index) and averages against the marginal r.
TwoPartCode two_part_code(const OneParamModel& model, std::span<const double> marginals,
                          const QuantizedCodebook& codebook);

struct SmmlResult {
  QuantizedCodebook codebook;
  std::vector<std::size_t> assignment;
  double expected_length = 0.0;
};

inline constexpr std::size_t smml_max_outcomes = 64;
inline constexpr std::size_t smml_max_grid = 32;
inline constexpr std::size_t smml_max_codebook = 6;

/// Exhaustive search over codebooks drawn from the candidate grid, with
/// alternating assignment / codelength optimization inside each codebook.
SmmlResult smml_search(const OneParamModel& model, const PriorDensity& prior, std::size_t max_codebook_size,
                       std::span<const double> candidate_grid);

struct NormalizedTwoPart {
  std::vector<std::size_t> region;
  std::vector<double> normalizers;
  std::vector<double> plain_lengths;
  std::vector<double> normalized_lengths;
};

/// Two-part code whose second part is renormalized over the outcomes
/// each codeword actually wins.
NormalizedTwoPart normalized_two_part(const OneParamModel& model, const QuantizedCodebook& codebook);

}  // namespace mencode::codelab
