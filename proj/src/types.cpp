#include "plfm/types.hpp"

#include <cmath>
#include <stdexcept>

namespace plfm {

FeatureAllocation::FeatureAllocation(IntMatrix lambda)
    : lambda_(std::move(lambda)) {
  if ((lambda_.array() < 0).any())
    throw std::invalid_argument("FeatureAllocation: negative lifetime");
}

FeatureAllocation FeatureAllocation::zeros(int n_rows, int n_cols) {
  return FeatureAllocation(IntMatrix::Zero(n_rows, n_cols));
}

void FeatureAllocation::set(int n, int k, long long value) {
  if (value < 0)
    throw std::invalid_argument("FeatureAllocation: negative lifetime");
  lambda_(n, k) = value;
}

int FeatureAllocation::col_support(int k) const {
  return static_cast<int>((lambda_.col(k).array() > 0).count());
}

int FeatureAllocation::col_support_excluding(int k, int n) const {
  return col_support(k) - (lambda_(n, k) > 0 ? 1 : 0);
}

int FeatureAllocation::active_cols() const {
  int count = 0;
  for (int k = 0; k < cols(); ++k)
    if (col_support(k) > 0) ++count;
  return count;
}

long long FeatureAllocation::col_lifetime_sum(int k) const {
  return lambda_.col(k).sum();
}

std::vector<int> FeatureAllocation::empty_columns() const {
  std::vector<int> out;
  for (int k = 0; k < cols(); ++k)
    if (col_support(k) == 0) out.push_back(k);
  return out;
}

void FeatureAllocation::remove_column(int k) {
  const int n_cols = cols();
  if (k < 0 || k >= n_cols)
    throw std::out_of_range("FeatureAllocation::remove_column");
  if (k < n_cols - 1)
    lambda_.block(0, k, rows(), n_cols - 1 - k) =
        lambda_.rightCols(n_cols - 1 - k).eval();
  lambda_.conservativeResize(Eigen::NoChange, n_cols - 1);
}

void FeatureAllocation::append_column(
    const Eigen::Matrix<long long, Eigen::Dynamic, 1>& col) {
  if (cols() == 0 && rows() == 0) {
    lambda_.resize(col.size(), 1);
    lambda_.col(0) = col;
    return;
  }
  if (col.size() != rows())
    throw std::invalid_argument("FeatureAllocation::append_column: bad size");
  lambda_.conservativeResize(Eigen::NoChange, cols() + 1);
  lambda_.col(cols() - 1) = col;
}

InstanceWeights InstanceWeights::ones(int n_rows, int n_cols,
                                      WeightKind kind) {
  return InstanceWeights{Matrix::Ones(n_rows, n_cols), kind};
}

void Hyperparameters::validate() const {
  const double vals[] = {alpha,   sigma2_x, sigma2_a, a_rho,   b_rho,
                         a_alpha, b_alpha,  a_sigma,  b_sigma, alpha_b,
                         beta_b};
  for (double v : vals)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(
          "Hyperparameters: all entries must be positive and finite");
}

Dataset::Dataset(Matrix values, BoolMask mask)
    : x(std::move(values)), observed(std::move(mask)) {
  validate();
}

Dataset::Dataset(Matrix values) : x(std::move(values)) {
  observed = BoolMask::Constant(x.rows(), x.cols(), true);
  validate();
}

long long Dataset::observed_count() const {
  return static_cast<long long>(observed.count());
}

long long Dataset::missing_count() const {
  return static_cast<long long>(x.size()) - observed_count();
}

bool Dataset::fully_observed() const { return missing_count() == 0; }

std::vector<std::pair<int, int>> Dataset::masked_cells() const {
  std::vector<std::pair<int, int>> cells;
  for (int r = 0; r < n(); ++r)
    for (int c = 0; c < d(); ++c)
      if (!observed(r, c)) cells.emplace_back(r, c);
  return cells;
}

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1)
    throw std::invalid_argument("Dataset: need at least one row and column");
  if (observed.rows() != x.rows() || observed.cols() != x.cols())
    throw std::invalid_argument("Dataset: mask shape mismatch");
  for (int r = 0; r < n(); ++r)
    for (int c = 0; c < d(); ++c)
      if (observed(r, c) && !std::isfinite(x(r, c)))
        throw std::invalid_argument("Dataset: non-finite observed value");
  if (!column_names.empty() &&
      static_cast<int>(column_names.size()) != d())
    throw std::invalid_argument("Dataset: column name count mismatch");
}

void ModelState::remove_feature(int idx) {
  const int n_rows = n();
  const int n_cols = k();
  if (idx < 0 || idx >= n_cols)
    throw std::out_of_range("ModelState::remove_feature");
  alloc.remove_column(idx);
  if (idx < n_cols - 1) {
    dict.block(idx, 0, n_cols - 1 - idx, d()) =
        dict.bottomRows(n_cols - 1 - idx).eval();
    weights.b.block(0, idx, n_rows, n_cols - 1 - idx) =
        weights.b.rightCols(n_cols - 1 - idx).eval();
    rho.segment(idx, n_cols - 1 - idx) = rho.tail(n_cols - 1 - idx).eval();
  }
  dict.conservativeResize(n_cols - 1, Eigen::NoChange);
  weights.b.conservativeResize(Eigen::NoChange, n_cols - 1);
  rho.conservativeResize(n_cols - 1);
}

void ModelState::append_feature(
    const Eigen::Matrix<long long, Eigen::Dynamic, 1>& col,
    const RowVector& dict_row, const Vector& weight_col, double rho_k) {
  const int n_rows = n();
  const int old_k = k();
  alloc.append_column(col);
  dict.conservativeResize(old_k + 1, dict_row.size());
  dict.row(old_k) = dict_row;
  weights.b.conservativeResize(n_rows, old_k + 1);
  weights.b.col(old_k) = weight_col;
  rho.conservativeResize(old_k + 1);
  rho(old_k) = rho_k;
}

void ModelState::check_invariants(bool capped, bool prune_required) const {
  const int n_rows = n();
  const int n_cols = k();
  if (dict.rows() != n_cols || weights.b.cols() != n_cols ||
      weights.b.rows() != n_rows || rho.size() != n_cols)
    throw std::logic_error("ModelState: shape mismatch");
  if (!(alpha > 0.0) || !(sigma2_x > 0.0) || !(sigma2_a > 0.0))
    throw std::logic_error("ModelState: non-positive hyperparameter");
  if (!dict.allFinite())
    throw std::logic_error("ModelState: non-finite feature entry");
  for (int kk = 0; kk < n_cols; ++kk) {
    if (!(rho(kk) > 0.0) || rho(kk) > 1.0)
      throw std::logic_error("ModelState: rho outside (0,1]");
    int support = 0;
    for (int r = 0; r < n_rows; ++r) {
      const long long lam = alloc(r, kk);
      if (lam < 0) throw std::logic_error("ModelState: negative lifetime");
      if (capped && lam > n_rows - r)
        throw std::logic_error("ModelState: lifetime exceeds horizon cap");
      if (lam >= 1) {
        ++support;
        if (!(weights.b(r, kk) > 0.0))
          throw std::logic_error("ModelState: non-positive active weight");
      }
    }
    if (prune_required && support == 0)
      throw std::logic_error("ModelState: unpruned empty column");
  }
  if (weights.kind == WeightKind::kConstantOne &&
      !(weights.b.array() == 1.0).all())
    throw std::logic_error("ModelState: constant-one weights must all be 1");
}

}  // namespace plfm
