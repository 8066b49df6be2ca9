#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace plfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Combined activation/lifetime matrix. lambda(n,k) = 0 means feature k has no
// instance starting at row n; lambda(n,k) = l >= 1 means an instance starts at
// row n and contributes to rows n .. n+l-1. Rows are 0-based throughout, so
// the horizon cap used during inference is lambda(n,k) <= rows() - n.
class FeatureAllocation {
 public:
  FeatureAllocation() = default;
  explicit FeatureAllocation(IntMatrix lambda);
  static FeatureAllocation zeros(int n_rows, int n_cols);

  int rows() const { return static_cast<int>(lambda_.rows()); }
  int cols() const { return static_cast<int>(lambda_.cols()); }

  long long operator()(int n, int k) const { return lambda_(n, k); }
  void set(int n, int k, long long value);

  const IntMatrix& lambda() const { return lambda_; }

  // Number of rows with an instance of feature k (the binary column sum m_k).
  int col_support(int k) const;
  // m_k excluding row n.
  int col_support_excluding(int k, int n) const;
  // Number of columns with at least one instance.
  int active_cols() const;
  // Total instances and total lifetime mass of column k.
  long long col_lifetime_sum(int k) const;

  std::vector<int> empty_columns() const;
  void remove_column(int k);
  void append_column(const Eigen::Matrix<long long, Eigen::Dynamic, 1>& col);

 private:
  IntMatrix lambda_;
};

// One activation of a feature: starts at row `start`, instance of `feature`.
struct Instance {
  int start = 0;
  int feature = 0;
  friend bool operator==(const Instance&, const Instance&) = default;
};

enum class WeightKind { kConstantOne, kGammaDistributed };

// Per-instance positive weights b(n,k), indexed by the instance's start row.
// Entries where lambda(n,k) = 0 are ignored.
struct InstanceWeights {
  Matrix b;
  WeightKind kind = WeightKind::kConstantOne;

  static InstanceWeights ones(int n_rows, int n_cols,
                              WeightKind kind = WeightKind::kConstantOne);
};

// Prior settings plus initial values for the sampled hyperparameters.
struct Hyperparameters {
  double alpha = 1.0;     // IBP mass (initial value when sampled)
  double sigma2_x = 1.0;  // observation noise variance (initial)
  double sigma2_a = 1.0;  // feature prior variance (initial)
  double a_rho = 1.0, b_rho = 1.0;      // Beta prior on each rho_k
  double a_alpha = 1.0, b_alpha = 1.0;  // Gamma(shape, scale) prior on alpha
  double a_sigma = 1.0, b_sigma = 1.0;  // InverseGamma prior on both variances
  double alpha_b = 1.0, beta_b = 1.0;   // Gamma(shape, scale) weight prior

  void validate() const;
};

// N x D observations with a boolean observedness mask.
struct Dataset {
  Matrix x;
  BoolMask observed;
  std::vector<std::string> column_names;  // empty when unnamed

  Dataset() = default;
  Dataset(Matrix values, BoolMask mask);
  // Fully observed dataset.
  explicit Dataset(Matrix values);

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
  long long observed_count() const;
  long long missing_count() const;
  bool fully_observed() const;
  // Masked cells in row-major order; the canonical imputation ordering.
  std::vector<std::pair<int, int>> masked_cells() const;

  void validate() const;
};

// One point of the Markov chain.
struct ModelState {
  FeatureAllocation alloc;  // N x K
  Matrix dict;              // K x D feature matrix A
  InstanceWeights weights;  // N x K
  Vector rho;               // K lifetime parameters in (0,1]
  double alpha = 1.0;
  double sigma2_x = 1.0;
  double sigma2_a = 1.0;

  int n() const { return alloc.rows(); }
  int k() const { return alloc.cols(); }
  int d() const { return static_cast<int>(dict.cols()); }

  void remove_feature(int k);
  void append_feature(const Eigen::Matrix<long long, Eigen::Dynamic, 1>& col,
                      const RowVector& dict_row, const Vector& weight_col,
                      double rho_k);

  // Throws std::logic_error on violation. `capped` additionally enforces the
  // inference-side horizon cap; `prune_required` the no-empty-column rule of
  // the fully nonparametric regime.
  void check_invariants(bool capped, bool prune_required) const;
};

}  // namespace plfm
