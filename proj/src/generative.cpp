#include "plfm/generative.hpp"

#include "plfm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace plfm {

void SyntheticSpec::validate() const {
  if (n_obs < 1) throw std::invalid_argument("SyntheticSpec: n_obs < 1");
  if (feature_images.empty())
    throw std::invalid_argument("SyntheticSpec: no feature images");
  const auto dim = feature_images.front().size();
  for (const auto& img : feature_images)
    if (img.size() != dim)
      throw std::invalid_argument("SyntheticSpec: image dimensions differ");
  // The degenerate endpoints (always spawn, lifetime always 1) are allowed so
  // the noiseless single-feature configuration is expressible.
  if (!(new_instance_prob > 0.0) || new_instance_prob > 1.0 ||
      !(lifetime_param > 0.0) || lifetime_param > 1.0 ||
      !(heldout_fraction > 0.0) || heldout_fraction >= 1.0)
    throw std::invalid_argument("SyntheticSpec: probabilities out of range");
  if (!(noise_sd >= 0.0))
    throw std::invalid_argument("SyntheticSpec: negative noise_sd");
  if (heldout_dims_per_obs < 0 || heldout_dims_per_obs >= dim)
    throw std::invalid_argument("SyntheticSpec: heldout_dims_per_obs >= D");
}

long long sample_geometric(double rho, Rng& rng) { return rng.geometric(rho); }

FeatureAllocation sample_ibp(int n, double alpha, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_ibp: n < 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("sample_ibp: alpha <= 0");
  std::vector<std::vector<long long>> cols;  // column-major binary entries
  std::vector<int> m;                        // dish popularity counts
  for (int j = 0; j < n; ++j) {
    const double customer = static_cast<double>(j + 1);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (rng.bernoulli(m[k] / customer)) {
        cols[k][j] = 1;
        ++m[k];
      }
    }
    const int fresh = rng.poisson(alpha / customer);
    for (int t = 0; t < fresh; ++t) {
      cols.emplace_back(n, 0);
      cols.back()[j] = 1;
      m.push_back(1);
    }
  }
  IntMatrix lambda = IntMatrix::Zero(n, static_cast<int>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    for (int j = 0; j < n; ++j) lambda(j, static_cast<int>(k)) = cols[k][j];
  return FeatureAllocation(std::move(lambda));
}

FeatureAllocation sample_dynamic_process(int n, double alpha, double a_rho,
                                         double b_rho, Rng& rng) {
  FeatureAllocation alloc = sample_ibp(n, alpha, rng);
  IntMatrix lambda = alloc.lambda();
  for (int k = 0; k < alloc.cols(); ++k) {
    const double rho_k = rng.beta(a_rho, b_rho);
    for (int j = 0; j < n; ++j)
      if (lambda(j, k) == 1) lambda(j, k) = rng.geometric(rho_k);
  }
  return FeatureAllocation(std::move(lambda));
}

std::vector<Vector> default_bar_images() {
  const int side = 6;
  const int bar_rows[] = {1, 4};
  const int bar_cols[] = {1, 4};
  std::vector<Vector> images;
  for (int r : bar_rows) {
    Vector img = Vector::Zero(side * side);
    for (int c = 0; c < side; ++c) img(r * side + c) = 1.0;
    images.push_back(img);
  }
  for (int c : bar_cols) {
    Vector img = Vector::Zero(side * side);
    for (int r = 0; r < side; ++r) img(r * side + c) = 1.0;
    images.push_back(img);
  }
  return images;
}

SyntheticSpec cambridge_bars_spec() {
  SyntheticSpec spec;
  spec.feature_images = default_bar_images();
  return spec;
}

namespace {

// First `take` entries of a seeded partial Fisher-Yates shuffle of 0..n-1.
std::vector<int> sample_without_replacement(int n, int take, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < take; ++i) {
    const int j = static_cast<int>(rng.uniform_int(i, n - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  return idx;
}

}  // namespace

SyntheticDataset generate_cambridge_bars(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  const int n = spec.n_obs;
  const int n_feat = static_cast<int>(spec.feature_images.size());
  const int dim = static_cast<int>(spec.feature_images.front().size());

  IntMatrix lambda = IntMatrix::Zero(n, n_feat);
  for (int t = 0; t < n; ++t)
    for (int k = 0; k < n_feat; ++k)
      if (rng.bernoulli(spec.new_instance_prob))
        lambda(t, k) = rng.geometric(spec.lifetime_param);
  FeatureAllocation alloc(std::move(lambda));

  Matrix dict(n_feat, dim);
  for (int k = 0; k < n_feat; ++k) dict.row(k) = spec.feature_images[k];

  // Truncation at the horizon happens here, when rendering observations.
  Matrix truth_x = instance_count_matrix(alloc) * dict;
  if (spec.noise_sd > 0.0)
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < dim; ++c)
        truth_x(r, c) += rng.normal(0.0, spec.noise_sd);

  BoolMask observed = BoolMask::Constant(n, dim, true);
  const int n_test = static_cast<int>(
      std::ceil(spec.heldout_fraction * static_cast<double>(n)));
  std::vector<int> test_rows = sample_without_replacement(n, n_test, rng);
  std::sort(test_rows.begin(), test_rows.end());
  for (int row : test_rows) {
    std::vector<int> masked =
        sample_without_replacement(dim, spec.heldout_dims_per_obs, rng);
    for (int c : masked) observed(row, c) = false;
  }

  SyntheticDataset out;
  out.truth = Dataset(truth_x);
  out.data = Dataset(truth_x, std::move(observed));
  out.true_alloc = std::move(alloc);
  out.true_dict = std::move(dict);
  return out;
}

}  // namespace plfm
