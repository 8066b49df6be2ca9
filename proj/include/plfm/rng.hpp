#pragma once

#include <cstdint>
#include <random>

namespace plfm {

// Seedable random source with deterministic substreams, so parallel chains
// (or parallel data generators) can draw independently from one root seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent substream; stream(i) != stream(j) for i != j.
  Rng stream(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }

  // Uniform on the open interval (0,1); never returns an endpoint.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform over the integers {lo, ..., hi}, both ends inclusive.
  long long uniform_int(long long lo, long long hi);
  double normal(double mean, double sd);
  // Shape-scale parameterisation: mean = shape * scale.
  double gamma(double shape, double scale);
  double beta(double a, double b);
  double inverse_gamma(double shape, double scale);
  int poisson(double mean);
  bool bernoulli(double p);
  // Geometric on {1,2,...} with pmf rho*(1-rho)^(l-1); mean 1/rho.
  long long geometric(double rho);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace plfm
