#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "plfm/evaluation.hpp"
#include "plfm/model.hpp"

using namespace plfm;

namespace {

ChainTrace toy_trace(std::vector<std::vector<double>> imputed,
                     std::vector<std::pair<int, int>> cells) {
  ChainTrace trace;
  trace.masked_cells = std::move(cells);
  trace.imputed = std::move(imputed);
  for (std::size_t i = 0; i < trace.imputed.size(); ++i) {
    trace.iteration.push_back(static_cast<int>(i + 1));
    trace.log_joint.push_back(0.0);
    trace.k_active.push_back(1);
    trace.alpha.push_back(1.0);
    trace.sigma2_x.push_back(1.0);
    trace.sigma2_a.push_back(1.0);
    trace.avg_persistence.push_back(1.0);
  }
  return trace;
}

}  // namespace

TEST_CASE("heldout_mse") {
  Matrix x(2, 2);
  x << 1.0, 2.0, 3.0, 4.0;
  const Dataset truth(x);

  SUBCASE("imputations equal to truth give zero") {
    const ChainTrace trace =
        toy_trace({{1.0, 4.0}, {1.0, 4.0}}, {{0, 0}, {1, 1}});
    CHECK(heldout_mse(trace, truth) == doctest::Approx(0.0));
  }
  SUBCASE("single cell, posterior mean 0.5 against truth 1.0") {
    const ChainTrace trace = toy_trace({{0.0}, {1.0}}, {{0, 0}});
    CHECK(heldout_mse(trace, truth) == doctest::Approx(0.25));
  }
  SUBCASE("invariant to iteration order") {
    std::vector<std::vector<double>> draws;
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) draws.push_back({u(gen), u(gen)});
    const ChainTrace fwd = toy_trace(draws, {{0, 1}, {1, 0}});
    std::shuffle(draws.begin(), draws.end(), gen);
    const ChainTrace shuffled = toy_trace(draws, {{0, 1}, {1, 0}});
    CHECK(heldout_mse(fwd, truth) ==
          doctest::Approx(heldout_mse(shuffled, truth)).epsilon(1e-12));
  }
  SUBCASE("empty mask is an error") {
    const ChainTrace trace = toy_trace({}, {});
    CHECK_THROWS_AS(heldout_mse(trace, truth), std::invalid_argument);
  }
  SUBCASE("truth must cover the masked cells") {
    BoolMask mask = BoolMask::Constant(2, 2, true);
    mask(0, 0) = false;
    const Dataset holey(x, mask);
    const ChainTrace trace = toy_trace({{0.0}}, {{0, 0}});
    CHECK_THROWS_AS(heldout_mse(trace, holey), std::invalid_argument);
  }
}

TEST_CASE("persistence_stats") {
  ModelState st;
  st.alloc = FeatureAllocation::zeros(4, 2);
  st.dict = Matrix::Zero(2, 1);
  st.weights = InstanceWeights::ones(4, 2);
  st.rho = Vector::Ones(2);

  SUBCASE("all lifetimes one") {
    st.alloc.set(0, 0, 1);
    st.alloc.set(2, 1, 1);
    CHECK(persistence_stats(st) == doctest::Approx(1.0));
  }
  SUBCASE("lifetimes 1,2,3 average 2") {
    st.alloc.set(0, 0, 1);
    st.alloc.set(1, 0, 2);
    st.alloc.set(0, 1, 3);
    CHECK(persistence_stats(st) == doctest::Approx(2.0));
  }
  SUBCASE("no instances is an error") {
    CHECK_THROWS_AS(persistence_stats(st), std::invalid_argument);
  }
  SUBCASE("trace version averages finite entries") {
    ChainTrace trace = toy_trace({{0.0}}, {{0, 0}});
    trace.avg_persistence = {2.0, std::numeric_limits<double>::quiet_NaN(),
                             4.0};
    CHECK(persistence_stats(trace) == doctest::Approx(3.0));
    trace.avg_persistence = {std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(persistence_stats(trace), std::invalid_argument);
  }
}

TEST_CASE("feature_usage") {
  FeatureAllocation alloc = FeatureAllocation::zeros(5, 3);

  SUBCASE("a single instance contributes its lifetime") {
    alloc.set(1, 2, 3);
    const auto usage = feature_usage(alloc);
    CHECK(usage[0] == std::pair<int, long long>{2, 3});
    CHECK(usage[1].second == 0);
  }
  SUBCASE("overlapping instances of one feature add up") {
    alloc.set(0, 0, 2);
    alloc.set(1, 0, 1);  // row 1 sees two copies of feature 0
    const auto usage = feature_usage(alloc);
    CHECK(usage[0] == std::pair<int, long long>{0, 3});
    const Matrix counts = instance_count_matrix(alloc);
    CHECK(counts(1, 0) == doctest::Approx(2.0));
  }
  SUBCASE("lifetimes truncate at the horizon") {
    alloc.set(4, 1, 10);
    CHECK(feature_usage(alloc)[0] == std::pair<int, long long>{1, 1});
  }
  SUBCASE("empty allocation gives zeros") {
    for (const auto& [k, count] : feature_usage(alloc)) CHECK(count == 0);
  }
  SUBCASE("totals partition the per-row instance counts") {
    Rng rng(7);
    IntMatrix m(6, 3);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = rng.uniform_int(0, 3);
    const FeatureAllocation random_alloc(m);
    long long by_rows = 0;
    for (int r = 0; r < 6; ++r)
      by_rows += static_cast<long long>(active_instances(random_alloc, r).size());
    long long by_features = 0;
    for (const auto& [k, count] : feature_usage(random_alloc))
      by_features += count;
    CHECK(by_rows == by_features);
  }
}

TEST_CASE("trace_summary") {
  ChainTrace trace = toy_trace({{0.0}, {0.0}}, {{0, 0}});
  trace.log_joint = {-5.0, -5.0};
  trace.alpha = {1.0, 3.0};
  const auto summaries = trace_summary(trace);
  REQUIRE(summaries.size() == 5);
  CHECK(summaries[0].name == "log_joint");
  CHECK(summaries[0].sd == doctest::Approx(0.0));
  CHECK(summaries[2].name == "alpha");
  CHECK(summaries[2].mean == doctest::Approx(2.0));
  CHECK(summaries[2].series == std::vector<double>{1.0, 3.0});
}

TEST_CASE("aggregate_trials builds value-plus-bound rows") {
  const std::vector<double> mse = {0.2, 0.3, 0.25, 0.28, 0.22};
  const std::vector<double> feats = {15.0, 16.0, 15.5, 16.5, 15.0};
  const std::vector<double> pers = {2.0, 2.2, 2.1, 2.05, 2.15};
  const EvalReport report = aggregate_trials(mse, feats, pers);
  CHECK(report.n_trials == 5);
  CHECK(report.mse_mean == doctest::Approx(0.25));
  CHECK(report.mse_bound > 0.0);
  CHECK(report.n_features_mean == doctest::Approx(15.6));
  CHECK(report.avg_persistence_mean == doctest::Approx(2.1));
  CHECK_THROWS_AS(aggregate_trials({}, {}, {}), std::invalid_argument);
}
