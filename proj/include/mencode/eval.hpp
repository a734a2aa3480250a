#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mencode/data.hpp"
#include "mencode/model.hpp"

namespace mencode::eval {

using model::Method;

struct ScoreReport {
  std::string dataset;
  Method method = Method::mmlp;
  std::string protocol;
  int k = 0;
  int repeats = 0;
  std::size_t s = 0;
  double ess = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> per_repeat;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

/// Fills min/mean/max from per_repeat.
void summarize(ScoreReport& report);

/// 1 when the most probable class (lowest index on ties) is the true one.
int zero_one_score(std::span<const double> class_dist, std::size_t true_class);

/// -log2(prob). Throws ZeroProbability for prob <= 0.
double log_score(double prob);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. If any call
/// throws, the exception from the lowest index is rethrown.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct CvOptions {
  int k = 5;
  int repeats = 100;
  double ess = 1.0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string dataset_id;
};

/// Repeated k-fold cross-validation of the 0/1 score, in percent. Each
/// repeat pools the held-out predictions of all k folds.
ScoreReport crossvalidate(const data::Dataset& dataset, const model::NetworkStructure& structure, Method method,
                          const CvOptions& options);

/// Fold plan used by repeat r of a cross-validation run.
data::FoldPlan repeat_folds(std::size_t n, int k, std::uint64_t seed, int repeat);

/// Rows used to predict row j with s training rows, drawn from the other n - 1.
std::vector<std::size_t> loo_training_rows(std::size_t n, std::size_t j, std::size_t s, std::uint64_t seed);

/// floor(fraction * (n - 1)), at least 1.
std::size_t training_size(std::size_t n, double fraction);

/// Mean joint log-score (bits) of leave-one-out prediction where each
/// left-out row is predicted from s rows sampled from the remaining n - 1.
double leave_one_out(const data::Dataset& dataset, const model::NetworkStructure& structure, Method method,
                     std::size_t s, double ess, std::uint64_t seed, unsigned jobs = 1);

/// Per-row log-scores behind leave_one_out.
std::vector<double> leave_one_out_scores(const data::Dataset& dataset, const model::NetworkStructure& structure,
                                         Method method, std::size_t s, double ess, std::uint64_t seed,
                                         unsigned jobs = 1);

struct CurvePoint {
  std::size_t s = 0;
  Method method = Method::mmlwf;
  double mean_log_score = 0.0;
  /// score(MMLWF) - score(method); positive means better than MMLWF.
  double relative = 0.0;
};

std::vector<CurvePoint> learning_curve(const data::Dataset& dataset, const model::NetworkStructure& structure,
                                       std::span<const Method> methods, std::span<const std::size_t> s_grid,
                                       double ess, std::uint64_t seed, unsigned jobs = 1);

/// Smallest ladder ess that keeps every method's MAP fit interior on every
/// training set a cross-validation run will use.
double auto_ess_cv(const data::Dataset& dataset, const model::NetworkStructure& structure,
                   std::span<const Method> methods, int k, int repeats, std::uint64_t seed);

/// Same for leave-one-out runs over each training size in s_values.
double auto_ess_loo(const data::Dataset& dataset, const model::NetworkStructure& structure,
                    std::span<const Method> methods, std::span<const std::size_t> s_values, std::uint64_t seed);

/// Locale-independent fixed-point formatting.
std::string format_fixed(double value, int precision);

void write_reports_csv(std::ostream& out, std::span<const ScoreReport> reports);
nlohmann::ordered_json reports_to_json(std::span<const ScoreReport> reports);

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points, const std::string& dataset_id);
/// (s, method, relative) rows under a "#" header line, readable by gnuplot
/// with `set datafile separator ","`.
void write_curve_plot(std::ostream& out, std::span<const CurvePoint> points);
nlohmann::ordered_json curve_to_json(std::span<const CurvePoint> points, const std::string& dataset_id);

}  // namespace mencode::eval
