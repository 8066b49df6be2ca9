#pragma once

#include <vector>

#include "plfm/rng.hpp"
#include "plfm/types.hpp"

namespace plfm {

// Configuration of the synthetic bars experiment.
struct SyntheticSpec {
  int n_obs = 500;
  std::vector<Vector> feature_images;  // ground-truth features, one D-vector each
  double new_instance_prob = 0.2;     // per step, per feature
  double lifetime_param = 0.5;        // geometric parameter of instance lifetimes
  double noise_sd = 0.35;
  double heldout_fraction = 0.1;      // fraction of rows designated as test rows
  int heldout_dims_per_obs = 30;      // masked dimensions per test row
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  Dataset data;    // test cells masked
  Dataset truth;   // complete
  FeatureAllocation true_alloc;
  Matrix true_dict;
};

// Geometric lifetime draw on {1,2,...}; throws std::domain_error outside (0,1].
long long sample_geometric(double rho, Rng& rng);

// Buffet-process draw: row j takes existing dish k with probability m_k/(j+1)
// and Poisson(alpha/(j+1)) new dishes (0-based j). Lifetimes are set to 1, so
// the result carries the binary pattern only.
FeatureAllocation sample_ibp(int n, double alpha, Rng& rng);

// Z ~ IBP(alpha), rho_k ~ Beta(a_rho, b_rho) per feature, then a geometric
// lifetime for every activation. Lifetimes are not capped at the horizon.
FeatureAllocation sample_dynamic_process(int n, double alpha, double a_rho,
                                         double b_rho, Rng& rng);

// Four 6x6 unit-intensity bar images (two horizontal, two vertical),
// flattened row-major to 36-vectors.
std::vector<Vector> default_bar_images();

// Fills feature_images with default_bar_images() and leaves the documented
// experiment constants in place.
SyntheticSpec cambridge_bars_spec();

// Per time step each feature starts a new instance with probability
// new_instance_prob and lives Geometric(lifetime_param) steps. Observations
// superimpose all active images plus N(0, noise_sd^2) noise. A random
// heldout_fraction of rows becomes the test set with heldout_dims_per_obs
// masked dimensions each.
SyntheticDataset generate_cambridge_bars(const SyntheticSpec& spec, Rng& rng);

}  // namespace plfm
