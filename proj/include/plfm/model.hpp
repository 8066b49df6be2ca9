#pragma once

#include <map>
#include <vector>

#include "plfm/types.hpp"

namespace plfm {

// H_n = sum_{i=1..n} 1/i; H_0 = 0.
double harmonic_number(long long n);

// Active columns grouped by their binary pattern (lambda thresholded at > 0).
// Values are the pattern multiplicities K_h; they sum to the number of
// non-empty columns.
std::map<std::vector<bool>, int> lof_histogram(const FeatureAllocation& alloc);

// Log of the IBP density over left-ordered-form equivalence classes,
//   K log(alpha) - sum_h log(K_h!) - alpha H_N
//     + sum_k log[(N - m_k)! (m_k - 1)! / N!],
// evaluated on the binary pattern of `alloc`. Invariant to row and column
// permutations. Factorials go through lgamma.
double ibp_log_prob(const FeatureAllocation& alloc, double alpha);

// All instances (i,k) contributing to row n: i <= n < i + lambda(i,k).
std::vector<Instance> active_instances(const FeatureAllocation& alloc, int n);

// y_n with y(n,k) = sum of b(i,k) over instances of k active at row n.
Vector weighted_totals(const FeatureAllocation& alloc,
                       const InstanceWeights& weights, int n);

// Full N x K matrix of weighted totals.
Matrix weighted_totals_matrix(const FeatureAllocation& alloc,
                              const InstanceWeights& weights);

// N x K matrix of active-instance counts (weighted totals with unit weights).
Matrix instance_count_matrix(const FeatureAllocation& alloc);

// mu_n = y_n . A
Vector compute_mean(const FeatureAllocation& alloc,
                    const InstanceWeights& weights, const Matrix& dict, int n);

// All row means stacked: Y A.
Matrix mean_matrix(const FeatureAllocation& alloc,
                   const InstanceWeights& weights, const Matrix& dict);

// Sum of Gaussian log densities over observed cells; masked cells contribute
// nothing.
double log_likelihood(const Dataset& data, const FeatureAllocation& alloc,
                      const InstanceWeights& weights, const Matrix& dict,
                      double sigma2_x);

// Scalar building blocks shared across modules.
double log_normal_pdf(double x, double mean, double sigma2);
double log_gamma_pdf(double x, double shape, double scale);
double log_inverse_gamma_pdf(double x, double shape, double scale);
double log_beta_pdf(double x, double a, double b);
// log pmf of the {1,2,...}-supported geometric; -inf outside the support.
double log_geometric_pmf(long long lifetime, double rho);

}  // namespace plfm
