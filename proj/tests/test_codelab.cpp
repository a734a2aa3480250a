#include <doctest.h>

#include <cmath>
#include <bit>
#include <numbers>

#include "mencode/codelab.hpp"
#include "mencode/error.hpp"
#include "test_support.hpp"

using namespace mencode;
using namespace mencode::codelab;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mencode::Error");
  return ErrorCode::PreconditionViolation;
}

const auto uniform = PriorDensity::uniform();

std::vector<oracle::OutcomeMass> sufficient_masses(int n) {
  std::vector<oracle::OutcomeMass> out;
  for (int k = 0; k <= n; ++k) {
    const double lm = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    out.push_back({k, lm, 1.0 / (n + 1.0)});
  }
  return out;
}

std::vector<oracle::OutcomeMass> sequence_masses(int n) {
  std::vector<oracle::OutcomeMass> out;
  for (unsigned code = 0; code < (1u << n); ++code) {
    const int k = std::popcount(code);
    out.push_back({k, 0.0, oracle::sequence_marginal(n, k)});
  }
  return out;
}

}  // namespace

TEST_CASE("kraft slack") {
  const std::vector<double> full{1, 2, 2};
  CHECK(kraft_slack(full) == doctest::Approx(0.0));
  const std::vector<double> over{1, 1, 1};
  CHECK(kraft_slack(over) == doctest::Approx(-0.5));
  CHECK(kraft_slack({}) == 1.0);
}

TEST_CASE("fisher information and optimal precision") {
  CHECK(fisher_information(OneParamModel(12), 0.5) == doctest::Approx(48.0));
  CHECK(fisher_information(OneParamModel(1), 0.5) == doctest::Approx(4.0));
  CHECK(optimal_precision(OneParamModel(12), 0.5) == doctest::Approx(0.5));
  CHECK(optimal_precision(OneParamModel(48), 0.5) == doctest::Approx(0.25));
  CHECK(code_of([] { fisher_information(OneParamModel(3), 0.0); }) == ErrorCode::BoundaryTheta);

  // Expected negative second derivative, by finite differences.
  const int n = 7;
  for (double t : {0.2, 0.5, 0.83}) {
    const double h = 1e-5;
    double expected = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                k * std::log(t) + (n - k) * std::log(1 - t));
      auto ll = [&](double u) { return k * std::log(u) + (n - k) * std::log(1 - u); };
      expected -= w * (ll(t + h) - 2 * ll(t) + ll(t - h)) / (h * h);
    }
    CHECK(fisher_information(OneParamModel(n), t) == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("Wallace-Freeman lengths") {
  const Sample x{12, 6};
  CHECK(wf_two_part_length(0.5, 0.5, uniform, x) == doctest::Approx(9.511).epsilon(1e-4));
  CHECK(wf_expected_length(0.5, uniform, x) == doctest::Approx(9.511).epsilon(1e-4));
  for (auto [n, k] : {std::pair{10, 3}, {20, 15}, {5, 1}}) {
    const Sample s{n, k};
    const double mle = static_cast<double>(k) / n;
    const double d = optimal_precision(OneParamModel(n), mle);
    CHECK(wf_two_part_length(mle, d, uniform, s) == doctest::Approx(wf_expected_length(mle, uniform, s)).epsilon(1e-9));
  }
  CHECK(code_of([&] { wf_two_part_length(0.5, 0.0, uniform, x); }) == ErrorCode::NonpositivePrecision);
}

TEST_CASE("uniform-h parameter length") {
  CHECK(uni_h_length(0.3, 8, uniform) == doctest::Approx(std::log(8.0)));
  const auto two = PriorDensity::custom([](double) { return 2.0; });
  CHECK(uni_h_length(0.3, 8, two) == doctest::Approx(std::log(4.0)));
  CHECK(uni_h_length(0.3, 1, uniform) == 0.0);
}

TEST_CASE("closed-form estimators") {
  CHECK(mml_wf_estimate({5, 3}, uniform) == doctest::Approx(3.5 / 6));
  CHECK(mml_wf_estimate({2, 1}, uniform) == doctest::Approx(0.5));
  CHECK(mml_wf_estimate({3, 0}, uniform) == doctest::Approx(0.125));
  CHECK(mml_p_estimate({5, 3}, uniform) == doctest::Approx(0.6));
  CHECK(mml_p_estimate({4, 2}, PriorDensity::beta(3, 3)) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(code_of([] { mml_p_estimate({3, 0}, uniform); }) == ErrorCode::NoInteriorMaximum);
  CHECK(mml_v_estimate({5, 3}, uniform) == doctest::Approx(0.625));
  CHECK(mml_v_estimate({2, 1}, uniform) == doctest::Approx(0.5));
  CHECK(code_of([] { mml_v_estimate({5, 0}, uniform); }) == ErrorCode::NoInteriorMaximum);
  CHECK(code_of([] { mml_wf_estimate({3, 4}, uniform); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("numeric estimators agree with golden-section search") {
  for (int n = 2; n <= 20; ++n)
    for (int k = 1; k < n; ++k) {
      const Sample x{n, k};
      CHECK(estimate_numeric(Estimator::wallace_freeman, x, uniform) ==
            doctest::Approx(oracle::bernoulli_argmax(n, k, -1)).epsilon(1e-7));
      CHECK(estimate_numeric(Estimator::pointwise, x, uniform) ==
            doctest::Approx(oracle::bernoulli_argmax(n, k, 0)).epsilon(1e-7));
      CHECK(estimate_numeric(Estimator::volumewise, x, uniform) ==
            doctest::Approx(oracle::bernoulli_argmax(n, k, 1)).epsilon(1e-7));
    }
  // Non-uniform prior goes through the numeric path; Beta(a,b) gives closed forms too.
  const auto prior = PriorDensity::beta(2.0, 3.0);
  const Sample x{10, 4};
  CHECK(mml_p_estimate(x, prior) == doctest::Approx(5.0 / 13.0).epsilon(1e-7));
  CHECK(mml_wf_estimate(x, prior) == doctest::Approx(5.5 / 14.0).epsilon(1e-7));
  CHECK(mml_v_estimate(x, prior) == doctest::Approx(4.5 / 12.0).epsilon(1e-7));
}

TEST_CASE("codebooks") {
  const OneParamModel m(10);
  const auto wf = build_codebook(m, uniform, 3, Spacing::wf, ParameterCode::wf);
  REQUIRE(wf.size() == 3);
  CHECK(wf.values[0] == doctest::Approx(0.0670).epsilon(1e-3));
  CHECK(wf.values[1] == doctest::Approx(0.5));
  CHECK(wf.values[2] == doctest::Approx(0.9330).epsilon(1e-3));
  // Cell widths times sqrt(I) are constant for the arcsine partition.
  const auto big = build_codebook(m, uniform, 12, Spacing::wf, ParameterCode::wf);
  const double ref = (big.values[1] - big.values[0]) * std::sqrt(fisher_information(m, 0.5 * (big.values[0] + big.values[1])));
  for (std::size_t j = 1; j + 1 < big.size(); ++j) {
    const double mid = 0.5 * (big.values[j] + big.values[j + 1]);
    CHECK((big.values[j + 1] - big.values[j]) * std::sqrt(fisher_information(m, mid)) == doctest::Approx(ref).epsilon(0.05));
  }
  const auto grid = build_codebook(m, uniform, 3, Spacing::uniform_grid, ParameterCode::uniform);
  CHECK(grid.values == std::vector<double>{0.25, 0.5, 0.75});
  for (double l : grid.lengths) CHECK(l == doctest::Approx(std::log(3.0)));
  CHECK(code_of([] { uniform_codebook({0.5, 0.5}); }) == ErrorCode::PreconditionViolation);
  CHECK(code_of([&] { build_codebook(m, uniform, 1, Spacing::wf, ParameterCode::wf); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("marginal probabilities") {
  const auto seq = marginal_probabilities(OneParamModel(3, OutcomeSpace::sequence), uniform);
  double total = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i] == doctest::Approx(oracle::sequence_marginal(3, std::popcount(static_cast<unsigned>(i)))));
    total += seq[i];
  }
  CHECK(total == doctest::Approx(1.0));
  for (double r : marginal_probabilities(OneParamModel(5), uniform)) CHECK(r == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("SMML with one codeword costs only the data") {
  const OneParamModel m(1);
  const std::vector<double> grid{0.5};
  const auto r = smml_search(m, uniform, 1, grid);
  CHECK(r.expected_length / oracle::ln2 == doctest::Approx(1.0));
  CHECK(r.codebook.lengths[0] == doctest::Approx(0.0));
}

TEST_CASE("SMML search finds the brute-force optimum") {
  std::vector<double> grid;
  for (int j = 1; j <= 9; ++j) grid.push_back(j / 10.0);
  for (int n = 1; n <= 6; ++n)
    for (std::size_t size = 1; size <= 3; ++size) {
      const auto r = smml_search(OneParamModel(n), uniform, size, grid);
      CHECK(r.expected_length == doctest::Approx(oracle::smml_bruteforce(n, sufficient_masses(n), grid, size)).epsilon(1e-9));
      std::vector<double> bits;
      for (double l : r.codebook.lengths) bits.push_back(l / oracle::ln2);
      CHECK(kraft_slack(bits) > -1e-12);
    }
  for (int n = 1; n <= 3; ++n) {
    const auto r = smml_search(OneParamModel(n, OutcomeSpace::sequence), uniform, 3, grid);
    CHECK(r.expected_length == doctest::Approx(oracle::smml_bruteforce(n, sequence_masses(n), grid, 3)).epsilon(1e-9));
  }
}

TEST_CASE("SMML size limits") {
  std::vector<double> grid(40);
  for (std::size_t j = 0; j < grid.size(); ++j) grid[j] = (j + 1.0) / 41.0;
  CHECK(code_of([&] { smml_search(OneParamModel(4), uniform, 2, grid); }) == ErrorCode::InstanceTooLarge);
  const std::vector<double> small{0.3, 0.7};
  CHECK(code_of([&] { smml_search(OneParamModel(7, OutcomeSpace::sequence), uniform, 2, small); }) ==
        ErrorCode::InstanceTooLarge);
  CHECK(code_of([&] { smml_search(OneParamModel(4), uniform, 7, small); }) == ErrorCode::InstanceTooLarge);
}

TEST_CASE("normalized two-part code") {
  const OneParamModel m(2, OutcomeSpace::sequence);
  const auto book = uniform_codebook({0.25, 0.75});
  const auto code = normalized_two_part(m, book);
  REQUIRE(code.normalizers.size() == 2);
  CHECK(code.normalizers[0] == doctest::Approx(0.9375));
  CHECK(code.normalizers[1] == doctest::Approx(0.5625));
  CHECK(code.plain_lengths[0] / oracle::ln2 == doctest::Approx(1.830).epsilon(1e-3));
  CHECK(code.normalized_lengths[0] / oracle::ln2 == doctest::Approx(1.737).epsilon(1e-3));
  for (std::size_t x = 0; x < 4; ++x) CHECK(code.normalized_lengths[x] <= code.plain_lengths[x]);

  const auto single = normalized_two_part(OneParamModel(1, OutcomeSpace::sequence), uniform_codebook({0.5}));
  CHECK(single.normalizers[0] == doctest::Approx(1.0));
  for (std::size_t x = 0; x < 2; ++x) CHECK(single.normalized_lengths[x] == doctest::Approx(single.plain_lengths[x]));
}

TEST_CASE("sequence outcomes") {
  const OneParamModel m(2, OutcomeSpace::sequence);
  REQUIRE(m.outcomes().size() == 4);
  CHECK(m.outcomes()[1].label == "01");
  CHECK(m.outcomes()[3].successes == 2);
  CHECK(code_of([] { OneParamModel(21, OutcomeSpace::sequence); }) == ErrorCode::InstanceTooLarge);
}
