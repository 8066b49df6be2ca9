#include "plfm/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace plfm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x243F6A88u,
                    0x85A308D3u};
  gen_.seed(seq);
}

Rng Rng::stream(std::uint64_t stream_id) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream_id)));
}

double Rng::uniform() {
  // 53 random bits mapped strictly inside (0,1).
  return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

long long Rng::uniform_int(long long lo, long long hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
  std::uniform_int_distribution<long long> d(lo, hi);
  return d(gen_);
}

double Rng::normal(double mean, double sd) {
  std::normal_distribution<double> d(mean, sd);
  return d(gen_);
}

double Rng::gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0)
    throw std::invalid_argument("gamma: shape and scale must be positive");
  std::gamma_distribution<double> d(shape, scale);
  return d(gen_);
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

double Rng::inverse_gamma(double shape, double scale) {
  // If Y ~ Gamma(shape, rate = scale) then 1/Y ~ InverseGamma(shape, scale).
  return 1.0 / gamma(shape, 1.0 / scale);
}

int Rng::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
  if (mean == 0.0) return 0;
  std::poisson_distribution<int> d(mean);
  return d(gen_);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

long long Rng::geometric(double rho) {
  if (!(rho > 0.0) || rho > 1.0)
    throw std::domain_error("geometric: rho must lie in (0,1]");
  if (rho == 1.0) return 1;
  // Inversion: l = 1 + floor(log u / log(1-rho)).
  const double u = uniform();
  const double v = std::floor(std::log(u) / std::log1p(-rho));
  constexpr double kMax = 1e15;
  return 1 + static_cast<long long>(std::min(v, kMax));
}

}  // namespace plfm
