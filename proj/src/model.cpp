#include "plfm/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace plfm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;
}  // namespace

double harmonic_number(long long n) {
  if (n < 0) throw std::invalid_argument("harmonic_number: negative n");
  double h = 0.0;
  for (long long i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

std::map<std::vector<bool>, int> lof_histogram(const FeatureAllocation& alloc) {
  std::map<std::vector<bool>, int> hist;
  for (int k = 0; k < alloc.cols(); ++k) {
    if (alloc.col_support(k) == 0) continue;
    std::vector<bool> pattern(alloc.rows());
    for (int n = 0; n < alloc.rows(); ++n) pattern[n] = alloc(n, k) > 0;
    ++hist[pattern];
  }
  return hist;
}

double ibp_log_prob(const FeatureAllocation& alloc, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("ibp_log_prob: alpha <= 0");
  const double n = static_cast<double>(alloc.rows());
  const auto hist = lof_histogram(alloc);
  int k_total = 0;
  double lp = -alpha * harmonic_number(alloc.rows());
  for (const auto& [pattern, mult] : hist) {
    k_total += mult;
    lp -= std::lgamma(static_cast<double>(mult) + 1.0);
    int m_k = 0;
    for (bool z : pattern) m_k += z ? 1 : 0;
    // Same m_k for every column in the class.
    lp += static_cast<double>(mult) *
          (std::lgamma(n - m_k + 1.0) + std::lgamma(static_cast<double>(m_k)) -
           std::lgamma(n + 1.0));
  }
  lp += k_total * std::log(alpha);
  return lp;
}

std::vector<Instance> active_instances(const FeatureAllocation& alloc, int n) {
  if (n < 0 || n >= alloc.rows())
    throw std::out_of_range("active_instances: row index out of range");
  std::vector<Instance> out;
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k < alloc.cols(); ++k)
      if (alloc(i, k) >= 1 && i + alloc(i, k) > n) out.push_back({i, k});
  return out;
}

Vector weighted_totals(const FeatureAllocation& alloc,
                       const InstanceWeights& weights, int n) {
  if (weights.b.rows() != alloc.rows() || weights.b.cols() != alloc.cols())
    throw std::invalid_argument("weighted_totals: shape mismatch");
  Vector y = Vector::Zero(alloc.cols());
  for (const Instance& inst : active_instances(alloc, n))
    y(inst.feature) += weights.b(inst.start, inst.feature);
  return y;
}

Matrix weighted_totals_matrix(const FeatureAllocation& alloc,
                              const InstanceWeights& weights) {
  if (weights.b.rows() != alloc.rows() || weights.b.cols() != alloc.cols())
    throw std::invalid_argument("weighted_totals_matrix: shape mismatch");
  const int n_rows = alloc.rows();
  Matrix y = Matrix::Zero(n_rows, alloc.cols());
  for (int i = 0; i < n_rows; ++i)
    for (int k = 0; k < alloc.cols(); ++k) {
      const long long lam = alloc(i, k);
      if (lam < 1) continue;
      const int last = static_cast<int>(
          std::min<long long>(n_rows - 1, i + lam - 1));
      for (int r = i; r <= last; ++r) y(r, k) += weights.b(i, k);
    }
  return y;
}

Matrix instance_count_matrix(const FeatureAllocation& alloc) {
  return weighted_totals_matrix(
      alloc, InstanceWeights::ones(alloc.rows(), alloc.cols()));
}

Vector compute_mean(const FeatureAllocation& alloc,
                    const InstanceWeights& weights, const Matrix& dict,
                    int n) {
  if (dict.rows() != alloc.cols())
    throw std::invalid_argument("compute_mean: dictionary shape mismatch");
  return dict.transpose() * weighted_totals(alloc, weights, n);
}

Matrix mean_matrix(const FeatureAllocation& alloc,
                   const InstanceWeights& weights, const Matrix& dict) {
  if (dict.rows() != alloc.cols())
    throw std::invalid_argument("mean_matrix: dictionary shape mismatch");
  if (alloc.cols() == 0)
    return Matrix::Zero(alloc.rows(), dict.cols());
  return weighted_totals_matrix(alloc, weights) * dict;
}

double log_likelihood(const Dataset& data, const FeatureAllocation& alloc,
                      const InstanceWeights& weights, const Matrix& dict,
                      double sigma2_x) {
  if (!(sigma2_x > 0.0))
    throw std::invalid_argument("log_likelihood: sigma2_x <= 0");
  if (data.n() != alloc.rows() || data.d() != dict.cols())
    throw std::invalid_argument("log_likelihood: shape mismatch");
  const Matrix mu = mean_matrix(alloc, weights, dict);
  double ll = 0.0;
  for (int r = 0; r < data.n(); ++r)
    for (int c = 0; c < data.d(); ++c)
      if (data.observed(r, c))
        ll += log_normal_pdf(data.x(r, c), mu(r, c), sigma2_x);
  return ll;
}

double log_normal_pdf(double x, double mean, double sigma2) {
  const double z = x - mean;
  return -0.5 * (kLog2Pi + std::log(sigma2)) - z * z / (2.0 * sigma2);
}

double log_gamma_pdf(double x, double shape, double scale) {
  if (x <= 0.0) return kNegInf;
  return -std::lgamma(shape) - shape * std::log(scale) +
         (shape - 1.0) * std::log(x) - x / scale;
}

double log_inverse_gamma_pdf(double x, double shape, double scale) {
  if (x <= 0.0) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

double log_beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return kNegInf;
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta;
}

double log_geometric_pmf(long long lifetime, double rho) {
  if (lifetime < 1 || !(rho > 0.0) || rho > 1.0) return kNegInf;
  double lp = std::log(rho);
  if (lifetime > 1) lp += static_cast<double>(lifetime - 1) * std::log1p(-rho);
  return lp;
}

}  // namespace plfm
