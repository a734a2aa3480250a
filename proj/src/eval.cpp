#include "mencode/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "mencode/error.hpp"
#include "mencode/estimators.hpp"
#include "mencode/rng.hpp"

namespace mencode::eval {

void summarize(ScoreReport& report) {
  if (report.per_repeat.empty()) {
    report.min = report.mean = report.max = 0.0;
    return;
  }
  const auto [lo, hi] = std::minmax_element(report.per_repeat.begin(), report.per_repeat.end());
  double total = 0.0;
  for (double v : report.per_repeat) total += v;
  report.min = *lo;
  report.max = *hi;
  // Clamp guards the summary ordering against rounding in the mean.
  report.mean = std::clamp(total / static_cast<double>(report.per_repeat.size()), report.min, report.max);
}

int zero_one_score(std::span<const double> class_dist, std::size_t true_class) {
  if (class_dist.empty()) fail(ErrorCode::PreconditionViolation, "empty class distribution");
  const auto best = static_cast<std::size_t>(std::max_element(class_dist.begin(), class_dist.end()) - class_dist.begin());
  return best == true_class ? 1 : 0;
}

double log_score(double prob) {
  if (!(prob > 0.0)) fail(ErrorCode::ZeroProbability, "log-score of a zero-probability event");
  return prob >= 1.0 ? 0.0 : -std::log2(prob);
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::min<std::size_t>(count, 1024))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- protocols

data::FoldPlan repeat_folds(std::size_t n, int k, std::uint64_t seed, int repeat) {
  return data::make_folds(n, k, rng::derive_seed(seed, "cv", static_cast<std::uint64_t>(repeat)));
}

namespace {

std::size_t class_index_of(const data::Dataset& dataset) { return dataset.schema().class_index(); }

// Re-raises a fit failure with the ess that would make the whole run feasible.
template <typename Body, typename Hint>
auto with_run_hint(Body&& body, Hint&& hint) {
  try {
    return body();
  } catch (const NoInteriorMode& e) {
    throw e.with_hint(hint());
  }
}

}  // namespace

ScoreReport crossvalidate(const data::Dataset& dataset, const model::NetworkStructure& structure, Method method,
                          const CvOptions& options) {
  if (options.k < 2) fail(ErrorCode::PreconditionViolation, "cross-validation needs k >= 2");
  if (options.repeats < 1) fail(ErrorCode::PreconditionViolation, "cross-validation needs at least one repeat");
  const std::size_t n = dataset.rows();
  if (static_cast<std::size_t>(options.k) > n)
    fail(ErrorCode::TooFewRows, std::to_string(options.k) + " folds requested for " + std::to_string(n) + " rows");

  ScoreReport report;
  report.dataset = options.dataset_id;
  report.method = method;
  report.protocol = "cv";
  report.k = options.k;
  report.repeats = options.repeats;
  report.ess = options.ess;
  report.seed = options.seed;
  report.per_repeat.assign(static_cast<std::size_t>(options.repeats), 0.0);

  const auto cls = class_index_of(dataset);
  auto body = [&] {
    parallel_for(report.per_repeat.size(), options.jobs, [&](std::size_t r) {
      const auto plan = repeat_folds(n, options.k, options.seed, static_cast<int>(r));
      std::size_t correct = 0;
      for (int f = 0; f < options.k; ++f) {
        const auto train = plan.train_rows(f);
        const auto stats = model::count_stats(dataset, structure, train);
        const auto predictor = estimators::fit_stats(method, stats, structure, options.ess, cls);
        for (auto row : plan.test_rows(f)) {
          const auto x = dataset.row(row);
          correct += static_cast<std::size_t>(
              zero_one_score(estimators::predict_class(predictor, x), static_cast<std::size_t>(x[cls])));
        }
      }
      report.per_repeat[r] = 100.0 * static_cast<double>(correct) / static_cast<double>(n);
    });
    return 0;
  };
  with_run_hint(body, [&] {
    const Method one[] = {method};
    return auto_ess_cv(dataset, structure, one, options.k, options.repeats, options.seed);
  });
  summarize(report);
  return report;
}

std::size_t training_size(std::size_t n, double fraction) {
  if (n < 2) fail(ErrorCode::TooFewRows, "leave-one-out needs at least two rows");
  if (!(fraction > 0.0 && fraction <= 1.0))
    fail(ErrorCode::PreconditionViolation, "training fraction must be in (0, 1]");
  const auto s = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n - 1) + 1e-9));
  return std::clamp<std::size_t>(s, 1, n - 1);
}

std::vector<std::size_t> loo_training_rows(std::size_t n, std::size_t j, std::size_t s, std::uint64_t seed) {
  if (j >= n) fail(ErrorCode::OutOfRangeValue, "left-out row out of range");
  if (s < 1 || s > n - 1)
    fail(ErrorCode::SampleTooLarge, "training size " + std::to_string(s) + " not in [1, " + std::to_string(n - 1) + "]");
  std::vector<std::size_t> rows;
  if (s == n - 1) {
    for (std::size_t r = 0; r < n; ++r)
      if (r != j) rows.push_back(r);
    return rows;
  }
  for (auto r : data::sample_indices(n - 1, s, rng::derive_seed(seed, "loo", j))) rows.push_back(r < j ? r : r + 1);
  return rows;
}

std::vector<double> leave_one_out_scores(const data::Dataset& dataset, const model::NetworkStructure& structure,
                                         Method method, std::size_t s, double ess, std::uint64_t seed,
                                         unsigned jobs) {
  const std::size_t n = dataset.rows();
  if (n < 2) fail(ErrorCode::TooFewRows, "leave-one-out needs at least two rows");
  if (s < 1 || s > n - 1)
    fail(ErrorCode::SampleTooLarge, "training size " + std::to_string(s) + " not in [1, " + std::to_string(n - 1) + "]");
  const auto cls = class_index_of(dataset);
  std::vector<double> scores(n, 0.0);
  auto body = [&] {
    parallel_for(n, jobs, [&](std::size_t j) {
      const auto train = loo_training_rows(n, j, s, seed);
      const auto stats = model::count_stats(dataset, structure, train);
      const auto predictor = estimators::fit_stats(method, stats, structure, ess, cls);
      scores[j] = log_score(estimators::predict_joint(predictor, dataset.row(j)));
    });
    return 0;
  };
  with_run_hint(body, [&] {
    const Method one[] = {method};
    const std::size_t sizes[] = {s};
    return auto_ess_loo(dataset, structure, one, sizes, seed);
  });
  return scores;
}

double leave_one_out(const data::Dataset& dataset, const model::NetworkStructure& structure, Method method,
                     std::size_t s, double ess, std::uint64_t seed, unsigned jobs) {
  const auto scores = leave_one_out_scores(dataset, structure, method, s, ess, seed, jobs);
  double total = 0.0;
  for (double v : scores) total += v;
  return total / static_cast<double>(scores.size());
}

std::vector<CurvePoint> learning_curve(const data::Dataset& dataset, const model::NetworkStructure& structure,
                                       std::span<const Method> methods, std::span<const std::size_t> s_grid,
                                       double ess, std::uint64_t seed, unsigned jobs) {
  std::vector<CurvePoint> points;
  for (auto s : s_grid) {
    // Every method sees the same training subsets (same seed), so the
    // relative score isolates the method.
    const double baseline = leave_one_out(dataset, structure, Method::mmlwf, s, ess, seed, jobs);
    for (auto m : methods) {
      const double score = m == Method::mmlwf ? baseline : leave_one_out(dataset, structure, m, s, ess, seed, jobs);
      points.push_back({s, m, score, baseline - score});
    }
  }
  return points;
}

// ---------------------------------------------------------------- preflight

double auto_ess_cv(const data::Dataset& dataset, const model::NetworkStructure& structure,
                   std::span<const Method> methods, int k, int repeats, std::uint64_t seed) {
  double threshold = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto plan = repeat_folds(dataset.rows(), k, seed, r);
    for (int f = 0; f < k; ++f) {
      const auto stats = model::count_stats(dataset, structure, plan.train_rows(f));
      for (auto m : methods) threshold = std::max(threshold, model::feasibility_threshold(m, structure, stats));
    }
  }
  return model::ess_ladder_value(threshold);
}

double auto_ess_loo(const data::Dataset& dataset, const model::NetworkStructure& structure,
                    std::span<const Method> methods, std::span<const std::size_t> s_values, std::uint64_t seed) {
  double threshold = -std::numeric_limits<double>::infinity();
  const std::size_t n = dataset.rows();
  for (auto s : s_values) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto stats = model::count_stats(dataset, structure, loo_training_rows(n, j, s, seed));
      for (auto m : methods) threshold = std::max(threshold, model::feasibility_threshold(m, structure, stats));
    }
  }
  return model::ess_ladder_value(threshold);
}

// ---------------------------------------------------------------- output

std::string format_fixed(double value, int precision) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, precision);
  if (ec != std::errc()) return "nan";
  std::string s(buf, ptr);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);  // no "-0.000"
  return s;
}

void write_reports_csv(std::ostream& out, std::span<const ScoreReport> reports) {
  out << "dataset,method,protocol,k,repeats,s,ess,seed,min,mean,max\n";
  for (const auto& r : reports) {
    out << r.dataset << ',' << model::to_string(r.method) << ',' << r.protocol << ',';
    if (r.k > 0) out << r.k;
    out << ',' << r.repeats << ',';
    if (r.s > 0) out << r.s;
    out << ',' << format_fixed(r.ess, 6) << ',' << r.seed << ',' << format_fixed(r.min, 6) << ','
        << format_fixed(r.mean, 6) << ',' << format_fixed(r.max, 6) << '\n';
  }
}

nlohmann::ordered_json reports_to_json(std::span<const ScoreReport> reports) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["dataset"] = r.dataset;
    j["method"] = model::to_string(r.method);
    j["protocol"] = r.protocol;
    j["k"] = r.k;
    j["repeats"] = r.repeats;
    j["s"] = r.s;
    j["ess"] = r.ess;
    j["seed"] = r.seed;
    j["min"] = r.min;
    j["mean"] = r.mean;
    j["max"] = r.max;
    j["per_repeat"] = r.per_repeat;
    doc.push_back(std::move(j));
  }
  return doc;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points, const std::string& dataset_id) {
  out << "dataset,s,method,mean_log_score,relative_to_mmlwf\n";
  for (const auto& p : points)
    out << dataset_id << ',' << p.s << ',' << model::to_string(p.method) << ',' << format_fixed(p.mean_log_score, 6)
        << ',' << format_fixed(p.relative, 6) << '\n';
}

void write_curve_plot(std::ostream& out, std::span<const CurvePoint> points) {
  out << "# s,method,relative\n";
  for (const auto& p : points)
    out << p.s << ',' << model::to_string(p.method) << ',' << format_fixed(p.relative, 6) << '\n';
}

nlohmann::ordered_json curve_to_json(std::span<const CurvePoint> points, const std::string& dataset_id) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    nlohmann::ordered_json j;
    j["s"] = p.s;
    j["method"] = model::to_string(p.method);
    j["mean_log_score"] = p.mean_log_score;
    j["relative_to_mmlwf"] = p.relative;
    rows.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["dataset"] = dataset_id;
  doc["points"] = std::move(rows);
  return doc;
}

}  // namespace mencode::eval
