#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "plfm/generative.hpp"
#include "plfm/model.hpp"
#include "test_util.hpp"

using namespace plfm;
namespace tu = plfm::testutil;

TEST_CASE("sample_geometric pmf and moments") {
  Rng rng(31);
  SUBCASE("rho = 1 is the constant 1") {
    for (int i = 0; i < 100; ++i) CHECK(sample_geometric(1.0, rng) == 1);
  }
  SUBCASE("mean 1/rho at rho = 0.5") {
    std::vector<double> draws;
    for (int i = 0; i < 100000; ++i)
      draws.push_back(static_cast<double>(sample_geometric(0.5, rng)));
    CHECK(std::abs(tu::mean(draws) - 2.0) < 3.0 * tu::mc_se(draws));
  }
  SUBCASE("pmf value at rho = 0.25") {
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i)
      if (sample_geometric(0.25, rng) == 3) ++hits;
    const double p = 0.25 * 0.75 * 0.75;  // 0.140625
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(static_cast<double>(hits) / n - p) < 3.0 * se);
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(sample_geometric(0.0, rng), std::domain_error);
    CHECK_THROWS_AS(sample_geometric(-0.1, rng), std::domain_error);
    CHECK_THROWS_AS(sample_geometric(1.5, rng), std::domain_error);
  }
}

TEST_CASE("sample_ibp column-count and row-sum moments") {
  Rng rng(17);
  SUBCASE("vanishing alpha gives an empty matrix") {
    for (int i = 0; i < 200; ++i)
      CHECK(sample_ibp(3, 1e-9, rng).active_cols() == 0);
  }
  SUBCASE("single customer takes Poisson(alpha) dishes") {
    std::vector<double> ks;
    for (int i = 0; i < 10000; ++i)
      ks.push_back(static_cast<double>(sample_ibp(1, 2.0, rng).cols()));
    CHECK(std::abs(tu::mean(ks) - 2.0) < 3.0 * tu::mc_se(ks));
  }
  SUBCASE("expected number of dishes is alpha H_N") {
    std::vector<double> ks;
    for (int i = 0; i < 10000; ++i)
      ks.push_back(static_cast<double>(sample_ibp(50, 1.0, rng).cols()));
    CHECK(std::abs(tu::mean(ks) - harmonic_number(50)) <
          3.0 * tu::mc_se(ks));
  }
  SUBCASE("row sums are marginally Poisson(alpha)") {
    std::vector<double> first_row, per_draw_mean;
    const int n = 5000;
    for (int i = 0; i < n; ++i) {
      const FeatureAllocation z = sample_ibp(10, 1.5, rng);
      double total = 0.0;
      double first = 0.0;
      for (int k = 0; k < z.cols(); ++k) {
        first += z(0, k) > 0 ? 1.0 : 0.0;
        for (int r = 0; r < 10; ++r) total += z(r, k) > 0 ? 1.0 : 0.0;
      }
      first_row.push_back(first);
      per_draw_mean.push_back(total / 10.0);
    }
    CHECK(std::abs(tu::mean(per_draw_mean) - 1.5) <
          3.0 * tu::mc_se(per_draw_mean));
    CHECK(std::abs(tu::variance(first_row) - 1.5) <
          3.0 * tu::variance_se(first_row));
  }
}

TEST_CASE("sample_dynamic_process reduces to the static IBP as rho -> 1") {
  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    const FeatureAllocation alloc =
        sample_dynamic_process(6, 1.0, 1e8, 1.0, rng);
    for (int r = 0; r < alloc.rows(); ++r)
      for (int k = 0; k < alloc.cols(); ++k)
        CHECK((alloc(r, k) == 0 || alloc(r, k) == 1));
  }
}

TEST_CASE("sample_dynamic_process steady-state instance count") {
  // Shared rho via a concentrated Beta prior; alpha / rho = 2 / 0.5 = 4.
  // Row counts within a run are strongly correlated, so this needs many runs.
  Rng rng(43);
  const int n = 150;
  double total = 0.0;
  int cells = 0;
  for (int run = 0; run < 1000; ++run) {
    const FeatureAllocation alloc =
        sample_dynamic_process(n, 2.0, 5e7, 5e7, rng);
    const Matrix counts = instance_count_matrix(alloc);
    for (int r = 100; r < n; ++r) {
      total += counts.row(r).sum();
      ++cells;
    }
  }
  CHECK(total / cells == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("buffet lof-class frequencies match exp(ibp_log_prob) at N=2") {
  Rng rng(101);
  const int draws = 100000;
  const double alpha = 1.0;
  std::map<std::string, int> freq;
  for (int i = 0; i < draws; ++i)
    ++freq[tu::lof_class_key(lof_histogram(sample_ibp(2, alpha, rng)))];

  // Enumerate classes by (a,b,c) = multiplicities of patterns 11, 10, 01.
  int checked = 0;
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; b <= 6; ++b)
      for (int c = 0; c <= 6; ++c) {
        IntMatrix m = IntMatrix::Zero(2, a + b + c);
        for (int j = 0; j < a; ++j) m(0, j) = m(1, j) = 1;
        for (int j = a; j < a + b; ++j) m(0, j) = 1;
        for (int j = a + b; j < a + b + c; ++j) m(1, j) = 1;
        const FeatureAllocation alloc(m);
        const double p = std::exp(ibp_log_prob(alloc, alpha));
        if (p * draws < 25.0) continue;
        const auto it = freq.find(tu::lof_class_key(lof_histogram(alloc)));
        const double observed =
            it == freq.end() ? 0.0 : static_cast<double>(it->second) / draws;
        const double se = std::sqrt(p * (1.0 - p) / draws);
        CHECK(std::abs(observed - p) < 3.0 * se);
        ++checked;
      }
  CHECK(checked >= 5);
}

TEST_CASE("generate_cambridge_bars") {
  SUBCASE("noiseless single feature with p=1 and lifetime 1") {
    SyntheticSpec spec;
    spec.n_obs = 20;
    Vector img(4);
    img << 1.0, 0.0, 2.0, 0.0;
    spec.feature_images = {img};
    spec.new_instance_prob = 1.0;
    spec.lifetime_param = 1.0;
    spec.noise_sd = 0.0;
    spec.heldout_fraction = 0.1;
    spec.heldout_dims_per_obs = 1;
    Rng rng(3);
    const SyntheticDataset synth = generate_cambridge_bars(spec, rng);
    for (int r = 0; r < 20; ++r)
      CHECK((synth.truth.x.row(r).transpose() - img).norm() ==
            doctest::Approx(0.0));
  }

  SUBCASE("paper configuration steady state and mask shape") {
    SyntheticSpec spec = cambridge_bars_spec();
    Rng rng(7);
    const SyntheticDataset synth = generate_cambridge_bars(spec, rng);
    CHECK(synth.data.n() == 500);
    CHECK(synth.data.d() == 36);

    // Steady-state mean active instances: 4 features * p / rho = 1.6.
    const Matrix counts = instance_count_matrix(synth.true_alloc);
    double total = 0.0;
    for (int r = 100; r < 500; ++r) total += counts.row(r).sum();
    CHECK(total / 400.0 == doctest::Approx(1.6).epsilon(0.25));

    // Exactly ceil(0.1*500) test rows, each masking exactly 30 of 36 pixels.
    int test_rows = 0;
    for (int r = 0; r < 500; ++r) {
      const int masked =
          36 - static_cast<int>(synth.data.observed.row(r).count());
      if (masked > 0) {
        CHECK(masked == 30);
        ++test_rows;
      }
    }
    CHECK(test_rows == 50);

    // Truth agrees with data on observed cells.
    for (int r = 0; r < 500; ++r)
      for (int c = 0; c < 36; ++c)
        if (synth.data.observed(r, c))
          CHECK(synth.data.x(r, c) == synth.truth.x(r, c));
  }

  SUBCASE("identical seeds give identical datasets") {
    SyntheticSpec spec = cambridge_bars_spec();
    spec.n_obs = 60;
    Rng rng_a(99), rng_b(99);
    const SyntheticDataset a = generate_cambridge_bars(spec, rng_a);
    const SyntheticDataset b = generate_cambridge_bars(spec, rng_b);
    CHECK((a.truth.x - b.truth.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.data.observed == b.data.observed).all());
    CHECK(a.true_alloc.lambda() == b.true_alloc.lambda());
  }
}

TEST_CASE("default bar images are four distinct unit-intensity 6x6 bars") {
  const auto images = default_bar_images();
  REQUIRE(images.size() == 4);
  for (const auto& img : images) {
    CHECK(img.size() == 36);
    CHECK(img.sum() == doctest::Approx(6.0));
    CHECK(img.maxCoeff() == 1.0);
  }
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = i + 1; j < images.size(); ++j)
      CHECK((images[i] - images[j]).norm() > 0.0);
}
