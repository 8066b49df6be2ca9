#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "plfm/types.hpp"

namespace plfm::testutil {

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

inline double variance(const std::vector<double>& v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return ss / (v.size() - 1);
}

// Standard error of the sample mean for independent draws.
inline double mc_se(const std::vector<double>& v) {
  return std::sqrt(variance(v) / v.size());
}

// Standard error of the sample variance (via the fourth central moment).
inline double variance_se(const std::vector<double>& v) {
  const double mu = mean(v);
  const double var = variance(v);
  double m4 = 0.0;
  for (double x : v) m4 += std::pow(x - mu, 4);
  m4 /= v.size();
  return std::sqrt(std::max(0.0, m4 - var * var) / v.size());
}

// Batch-means standard error for an autocorrelated series.
inline double batch_means_se(const std::vector<double>& v, int n_batches) {
  const std::size_t batch = v.size() / n_batches;
  std::vector<double> means;
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < batch; ++i) s += v[b * batch + i];
    means.push_back(s / batch);
  }
  return std::sqrt(variance(means) / n_batches);
}

// As above but skipping NaN entries (series that are undefined on some draws).
inline std::vector<double> drop_nan(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

// Total variation distance between two unnormalised densities tabulated on a
// shared grid.
inline double grid_tv_distance(const std::vector<double>& p,
                               const std::vector<double>& q) {
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    tv += std::abs(p[i] / sp - q[i] / sq);
  return 0.5 * tv;
}

// Direct O(n^2) DFT, independent of the library implementation.
inline std::vector<std::complex<double>> dft_oracle(
    const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = -2.0 * M_PI * static_cast<double>(k * i) / n;
      acc += x[i] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

// Canonical key of a left-ordered-form class: sorted "pattern x multiplicity"
// fragments.
inline std::string lof_class_key(
    const std::map<std::vector<bool>, int>& hist) {
  std::vector<std::string> parts;
  for (const auto& [pattern, count] : hist) {
    std::string p;
    for (bool b : pattern) p.push_back(b ? '1' : '0');
    parts.push_back(p + "x" + std::to_string(count));
  }
  std::sort(parts.begin(), parts.end());
  std::string key;
  for (const auto& p : parts) key += p + "|";
  return key.empty() ? "empty" : key;
}

}  // namespace plfm::testutil
