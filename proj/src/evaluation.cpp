#include "plfm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plfm {

std::vector<double> posterior_mean_imputations(const ChainTrace& trace) {
  if (trace.masked_cells.empty())
    throw std::invalid_argument("no masked cells in trace");
  if (trace.imputed.empty())
    throw std::invalid_argument("trace has no recorded imputations");
  std::vector<double> mean(trace.masked_cells.size(), 0.0);
  for (const auto& draw : trace.imputed) {
    if (draw.size() != mean.size())
      throw std::invalid_argument("imputation width mismatch");
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += draw[j];
  }
  const double scale = 1.0 / static_cast<double>(trace.imputed.size());
  for (double& v : mean) v *= scale;
  return mean;
}

double heldout_mse(const ChainTrace& trace, const Dataset& truth) {
  const std::vector<double> mean = posterior_mean_imputations(trace);
  double sse = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const auto& [r, c] = trace.masked_cells[j];
    if (r >= truth.n() || c >= truth.d() || !truth.observed(r, c))
      throw std::invalid_argument("truth is incomplete on a masked cell");
    const double diff = mean[j] - truth.x(r, c);
    sse += diff * diff;
  }
  return sse / static_cast<double>(mean.size());
}

double persistence_stats(const ModelState& state) {
  long long total = 0;
  long long count = 0;
  for (int k = 0; k < state.k(); ++k)
    for (int n = 0; n < state.n(); ++n)
      if (state.alloc(n, k) >= 1) {
        total += state.alloc(n, k);
        ++count;
      }
  if (count == 0)
    throw std::invalid_argument("persistence_stats: no active instances");
  return static_cast<double>(total) / static_cast<double>(count);
}

double persistence_stats(const ChainTrace& trace) {
  double total = 0.0;
  int count = 0;
  for (double v : trace.avg_persistence)
    if (std::isfinite(v)) {
      total += v;
      ++count;
    }
  if (count == 0)
    throw std::invalid_argument("persistence_stats: empty trace");
  return total / count;
}

std::vector<std::pair<int, long long>> feature_usage(
    const FeatureAllocation& alloc) {
  std::vector<std::pair<int, long long>> usage(alloc.cols());
  for (int k = 0; k < alloc.cols(); ++k) {
    long long total = 0;
    for (int n = 0; n < alloc.rows(); ++n) {
      const long long lam = alloc(n, k);
      if (lam >= 1) total += std::min<long long>(lam, alloc.rows() - n);
    }
    usage[k] = {k, total};
  }
  std::stable_sort(usage.begin(), usage.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return usage;
}

std::vector<std::pair<int, long long>> feature_usage(const ChainTrace& trace) {
  if (trace.size() == 0) throw std::invalid_argument("feature_usage: empty trace");
  return feature_usage(trace.final_state.alloc);
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_of: empty");
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double sample_sd(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<SeriesSummary> trace_summary(const ChainTrace& trace) {
  if (trace.size() == 0)
    throw std::invalid_argument("trace_summary: empty trace");
  std::vector<SeriesSummary> out;
  const auto add = [&out](const std::string& name,
                          std::vector<double> series) {
    SeriesSummary s;
    s.name = name;
    // NaN entries (e.g. persistence with no instances) are skipped in the
    // moments but kept in the raw series.
    std::vector<double> finite;
    for (double v : series)
      if (std::isfinite(v)) finite.push_back(v);
    s.mean = finite.empty() ? 0.0 : mean_of(finite);
    s.sd = finite.empty() ? 0.0 : sample_sd(finite);
    s.series = std::move(series);
    out.push_back(std::move(s));
  };
  add("log_joint", trace.log_joint);
  std::vector<double> k_series(trace.k_active.begin(), trace.k_active.end());
  add("k_active", std::move(k_series));
  add("alpha", trace.alpha);
  add("sigma2_x", trace.sigma2_x);
  add("avg_persistence", trace.avg_persistence);
  return out;
}

EvalReport aggregate_trials(const std::vector<double>& mse,
                            const std::vector<double>& n_features,
                            const std::vector<double>& persistence) {
  if (mse.empty()) throw std::invalid_argument("aggregate_trials: no trials");
  EvalReport report;
  report.n_trials = static_cast<int>(mse.size());
  report.per_trial_mse = mse;
  report.per_trial_n_features = n_features;
  report.per_trial_persistence = persistence;
  report.mse_mean = mean_of(mse);
  report.mse_bound = sample_sd(mse);
  report.n_features_mean = n_features.empty() ? 0.0 : mean_of(n_features);
  report.avg_persistence_mean =
      persistence.empty() ? 0.0 : mean_of(persistence);
  return report;
}

}  // namespace plfm
