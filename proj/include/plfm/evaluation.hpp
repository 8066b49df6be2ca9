#pragma once

#include <string>
#include <vector>

#include "plfm/inference.hpp"
#include "plfm/types.hpp"

namespace plfm {

// Table-style evaluation summary over independent trials.
struct EvalReport {
  double mse_mean = 0.0;
  double mse_bound = 0.0;  // sample s.d. across trials
  double n_features_mean = 0.0;
  double avg_persistence_mean = 0.0;
  int n_trials = 0;
  std::vector<double> per_trial_mse;
  std::vector<double> per_trial_n_features;
  std::vector<double> per_trial_persistence;
};

// Mean squared difference between the per-cell posterior-mean imputation
// (averaged over kept iterations) and the truth, over the trace's masked
// cells. Throws std::invalid_argument when the trace has no masked cells or
// no kept imputations.
double heldout_mse(const ChainTrace& trace, const Dataset& truth);

// Posterior-mean completion per masked cell, in trace.masked_cells order.
std::vector<double> posterior_mean_imputations(const ChainTrace& trace);

// Mean lifetime over active instances of one state; throws when none exist.
double persistence_stats(const ModelState& state);
// Average of the per-iteration mean lifetimes over the trace, skipping
// iterations with no active instance; throws when every iteration is empty.
double persistence_stats(const ChainTrace& trace);

// Total number of contributions of each feature (the sum of its lifetimes,
// truncated at the data horizon), sorted most-used first.
std::vector<std::pair<int, long long>> feature_usage(
    const FeatureAllocation& alloc);
std::vector<std::pair<int, long long>> feature_usage(const ChainTrace& trace);

struct SeriesSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> series;
};

// Posterior mean, spread, and raw series for the recorded scalar quantities.
std::vector<SeriesSummary> trace_summary(const ChainTrace& trace);

// Aggregate per-trial statistics into the Table-style report.
EvalReport aggregate_trials(const std::vector<double>& mse,
                            const std::vector<double>& n_features,
                            const std::vector<double>& persistence);

double mean_of(const std::vector<double>& values);
double sample_sd(const std::vector<double>& values);

}  // namespace plfm
