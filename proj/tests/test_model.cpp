#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "plfm/model.hpp"
#include "plfm/rng.hpp"
#include "test_util.hpp"

using namespace plfm;

namespace {

FeatureAllocation from_rows(std::initializer_list<std::vector<long long>> rows) {
  const int n = static_cast<int>(rows.size());
  const int k = static_cast<int>(rows.begin()->size());
  IntMatrix m(n, k);
  int r = 0;
  for (const auto& row : rows) {
    for (int c = 0; c < k; ++c) m(r, c) = row[c];
    ++r;
  }
  return FeatureAllocation(std::move(m));
}

FeatureAllocation random_alloc(int n, int k, Rng& rng) {
  IntMatrix m(n, k);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < k; ++c)
      m(r, c) = rng.uniform_int(0, 3);
  return FeatureAllocation(std::move(m));
}

// Probability that a two-customer buffet produces the class with `a` columns
// of pattern 11, `b` of pattern 10 (first row only), and `c` of pattern 01.
// Customer one takes Poisson(alpha) dishes, each kept by customer two with
// probability 1/2; customer two adds Poisson(alpha/2) fresh dishes.
double two_customer_class_prob(int a, int b, int c, double alpha) {
  auto pois = [](int k, double mu) {
    return std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
  };
  const int k1 = a + b;
  double binom = std::exp(std::lgamma(k1 + 1.0) - std::lgamma(a + 1.0) -
                          std::lgamma(b + 1.0)) *
                 std::pow(0.5, k1);
  return pois(k1, alpha) * binom * pois(c, alpha / 2.0);
}

}  // namespace

TEST_CASE("harmonic_number basics") {
  CHECK(harmonic_number(0) == 0.0);
  CHECK(harmonic_number(3) == doctest::Approx(1.0 + 0.5 + 1.0 / 3.0));
  // Direct-summation value, also quoted to five decimals.
  double direct = 0.0;
  for (int i = 1; i <= 500; ++i) direct += 1.0 / i;
  CHECK(harmonic_number(500) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(harmonic_number(500) == doctest::Approx(6.79282).epsilon(1e-5));
  CHECK_THROWS_AS(harmonic_number(-1), std::invalid_argument);
}

TEST_CASE("lof_histogram groups columns by binary pattern") {
  const auto hist1 = lof_histogram(from_rows({{1, 2}, {3, 1}}));
  REQUIRE(hist1.size() == 1);
  CHECK(hist1.begin()->second == 2);

  const auto hist2 = lof_histogram(from_rows({{1, 0}, {0, 2}}));
  REQUIRE(hist2.size() == 2);
  for (const auto& [pattern, count] : hist2) CHECK(count == 1);

  const auto hist3 = lof_histogram(FeatureAllocation::zeros(3, 0));
  CHECK(hist3.empty());
  // All-zero columns do not count.
  const auto hist4 = lof_histogram(FeatureAllocation::zeros(3, 2));
  CHECK(hist4.empty());
}

TEST_CASE("ibp_log_prob closed-form examples") {
  CHECK(ibp_log_prob(FeatureAllocation::zeros(3, 0), 1.0) ==
        doctest::Approx(-harmonic_number(3)));
  CHECK(ibp_log_prob(from_rows({{1}}), 2.0) ==
        doctest::Approx(std::log(2.0) - 2.0));
  // One column active in both of two rows: exp(-1.5)/2.
  CHECK(ibp_log_prob(from_rows({{1}, {1}}), 1.0) ==
        doctest::Approx(-1.5 - std::log(2.0)));
  CHECK_THROWS_AS(ibp_log_prob(from_rows({{1}}), 0.0), std::domain_error);
  CHECK_THROWS_AS(ibp_log_prob(from_rows({{1}}), -1.0), std::domain_error);
}

TEST_CASE("ibp_log_prob matches two-customer buffet enumeration") {
  for (double alpha : {0.5, 1.0, 2.0}) {
    // empty class
    CHECK(std::exp(ibp_log_prob(FeatureAllocation::zeros(2, 0), alpha)) ==
          doctest::Approx(two_customer_class_prob(0, 0, 0, alpha)));
    // single 11 column
    CHECK(std::exp(ibp_log_prob(from_rows({{1}, {1}}), alpha)) ==
          doctest::Approx(two_customer_class_prob(1, 0, 0, alpha)));
    // single 10 column
    CHECK(std::exp(ibp_log_prob(from_rows({{1}, {0}}), alpha)) ==
          doctest::Approx(two_customer_class_prob(0, 1, 0, alpha)));
    // single 01 column
    CHECK(std::exp(ibp_log_prob(from_rows({{0}, {1}}), alpha)) ==
          doctest::Approx(two_customer_class_prob(0, 0, 1, alpha)));
    // composite class: 11, 10, 10, 01
    CHECK(std::exp(ibp_log_prob(
              from_rows({{1, 1, 1, 0}, {1, 0, 0, 1}}), alpha)) ==
          doctest::Approx(two_customer_class_prob(1, 2, 1, alpha)));
  }
}

TEST_CASE("ibp_log_prob is invariant to row and column permutations") {
  Rng rng(11);
  std::mt19937 shuffler(7);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureAllocation alloc = random_alloc(6, 4, rng);
    const double base = ibp_log_prob(alloc, 1.3);

    std::vector<int> rows(6), cols(4);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(rows.begin(), rows.end(), shuffler);
    std::shuffle(cols.begin(), cols.end(), shuffler);
    IntMatrix permuted(6, 4);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 4; ++c)
        permuted(r, c) = alloc(rows[r], cols[c]);
    CHECK(ibp_log_prob(FeatureAllocation(permuted), 1.3) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("active_instances windows") {
  FeatureAllocation alloc = FeatureAllocation::zeros(5, 2);
  alloc.set(0, 0, 3);  // active at rows 0,1,2
  for (int row : {0, 1, 2}) {
    const auto act = active_instances(alloc, row);
    REQUIRE(act.size() == 1);
    CHECK(act[0] == Instance{0, 0});
  }
  CHECK(active_instances(alloc, 3).empty());
  CHECK(active_instances(alloc, 4).empty());
  CHECK_THROWS_AS(active_instances(alloc, 5), std::out_of_range);
  CHECK_THROWS_AS(active_instances(alloc, -1), std::out_of_range);
}

TEST_CASE("a row can exhibit several instances of one feature") {
  // Instances (n,1), (n,3), (n-1,1) in 1-based labels: the row sees feature 1
  // twice and feature 3 once.
  const int n = 3;  // 0-based target row
  FeatureAllocation alloc = FeatureAllocation::zeros(6, 3);
  alloc.set(n, 0, 1);
  alloc.set(n, 2, 1);
  alloc.set(n - 1, 0, 2);
  const auto act = active_instances(alloc, n);
  REQUIRE(act.size() == 3);
  int feature0 = 0, feature2 = 0;
  for (const auto& inst : act) {
    if (inst.feature == 0) ++feature0;
    if (inst.feature == 2) ++feature2;
  }
  CHECK(feature0 == 2);
  CHECK(feature2 == 1);
}

TEST_CASE("active_instances equals an incremental carry-forward construction") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    FeatureAllocation alloc = random_alloc(8, 3, rng);
    // Carry instances forward, decrementing remaining lifetimes.
    std::vector<std::pair<Instance, long long>> live;
    for (int row = 0; row < 8; ++row) {
      for (auto& [inst, remaining] : live) --remaining;
      std::erase_if(live, [](const auto& p) { return p.second <= 0; });
      for (int k = 0; k < 3; ++k)
        if (alloc(row, k) >= 1) live.push_back({{row, k}, alloc(row, k)});
      auto direct = active_instances(alloc, row);
      std::vector<Instance> carried;
      for (const auto& [inst, remaining] : live) carried.push_back(inst);
      auto key = [](const Instance& i) {
        return i.start * 64 + i.feature;
      };
      std::sort(direct.begin(), direct.end(),
                [&](auto a, auto b) { return key(a) < key(b); });
      std::sort(carried.begin(), carried.end(),
                [&](auto a, auto b) { return key(a) < key(b); });
      CHECK(direct == carried);
    }
  }
}

TEST_CASE("weighted_totals sums instance weights") {
  FeatureAllocation alloc = FeatureAllocation::zeros(4, 2);
  InstanceWeights w = InstanceWeights::ones(4, 2);

  SUBCASE("constant weights count instances") {
    alloc.set(1, 0, 3);
    alloc.set(2, 0, 1);
    const Vector y = weighted_totals(alloc, w, 2);
    CHECK(y(0) == doctest::Approx(2.0));
    CHECK(y(1) == 0.0);
  }
  SUBCASE("weights attach to the instance start row") {
    alloc.set(0, 0, 3);
    alloc.set(1, 0, 2);
    w.b(0, 0) = 0.5;
    w.b(1, 0) = 2.0;
    const Vector y = weighted_totals(alloc, w, 1);
    CHECK(y(0) == doctest::Approx(2.5));
  }
  SUBCASE("no active instances give the zero vector") {
    CHECK(weighted_totals(alloc, w, 3).isZero());
  }
}

TEST_CASE("compute_mean superposes feature copies") {
  FeatureAllocation alloc = FeatureAllocation::zeros(4, 2);
  InstanceWeights w = InstanceWeights::ones(4, 2);
  Matrix dict(2, 3);
  dict << 1.0, 2.0, -1.0, 0.5, 0.0, 4.0;

  alloc.set(0, 1, 2);
  CHECK((compute_mean(alloc, w, dict, 1) - dict.row(1).transpose()).norm() ==
        doctest::Approx(0.0));

  alloc.set(1, 1, 1);  // second copy of feature 1 active at row 1
  CHECK((compute_mean(alloc, w, dict, 1) - 2.0 * dict.row(1).transpose())
            .norm() == doctest::Approx(0.0));

  // Linear in A.
  CHECK((compute_mean(alloc, w, 3.0 * dict, 1) -
         3.0 * compute_mean(alloc, w, dict, 1))
            .norm() == doctest::Approx(0.0));
  // Linear in the weights; zero weights give a zero mean.
  InstanceWeights w2 = w;
  w2.b.setZero();
  CHECK(compute_mean(alloc, w2, dict, 1).isZero());
}

TEST_CASE("log_likelihood sums scalar Gaussian terms over observed cells") {
  SUBCASE("exact fit, one observed cell") {
    Matrix x(1, 1);
    x << 0.0;
    Dataset data(x);
    CHECK(log_likelihood(data, FeatureAllocation::zeros(1, 0),
                         InstanceWeights::ones(1, 0), Matrix(0, 1), 1.0) ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI)));
  }
  SUBCASE("fully masked dataset contributes nothing") {
    Matrix x = Matrix::Zero(3, 2);
    BoolMask mask = BoolMask::Constant(3, 2, false);
    Dataset data(x, mask);
    CHECK(log_likelihood(data, FeatureAllocation::zeros(3, 0),
                         InstanceWeights::ones(3, 0), Matrix(0, 2), 2.0) ==
          0.0);
  }
  SUBCASE("2x2 toy matches the elementwise oracle") {
    FeatureAllocation alloc = FeatureAllocation::zeros(2, 1);
    alloc.set(0, 0, 2);
    InstanceWeights w = InstanceWeights::ones(2, 1);
    Matrix dict(1, 2);
    dict << 0.7, -0.2;
    Matrix x(2, 2);
    x << 1.0, 0.3, -0.5, 0.1;
    Dataset data(x);
    const double sigma2 = 0.8;
    double oracle = 0.0;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        const double mu = dict(0, c);  // one active instance in both rows
        oracle += -0.5 * std::log(2.0 * M_PI * sigma2) -
                  (x(r, c) - mu) * (x(r, c) - mu) / (2.0 * sigma2);
      }
    CHECK(log_likelihood(data, alloc, w, dict, sigma2) ==
          doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("masking one entry removes exactly its scalar density") {
    Rng rng(5);
    FeatureAllocation alloc = random_alloc(4, 2, rng);
    InstanceWeights w = InstanceWeights::ones(4, 2);
    Matrix dict(2, 3);
    dict << 0.3, 1.0, -0.4, 0.9, 0.2, 0.0;
    Matrix x = Matrix::Random(4, 3);
    Dataset full(x);
    const double base = log_likelihood(full, alloc, w, dict, 1.3);

    BoolMask mask = BoolMask::Constant(4, 3, true);
    mask(2, 1) = false;
    Dataset masked(x, mask);
    const double mu = compute_mean(alloc, w, dict, 2)(1);
    const double cell = log_normal_pdf(x(2, 1), mu, 1.3);
    CHECK(log_likelihood(masked, alloc, w, dict, 1.3) ==
          doctest::Approx(base - cell).epsilon(1e-12));
  }
}
