#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plfm/model.hpp"
#include "plfm/rng.hpp"
#include "plfm/types.hpp"

namespace plfm {

enum class Regime { kFullNonparametric, kWeakLimit };
enum class ModelKind { kStatic, kDynamicConstant, kDynamicWeighted };

std::string to_string(Regime regime);
std::string to_string(ModelKind model);
Regime regime_from_string(const std::string& name);
ModelKind model_from_string(const std::string& name);

struct FixedHypers {
  std::optional<double> alpha;
  std::optional<double> sigma2_x;
  std::optional<double> sigma2_a;
};

struct SamplerConfig {
  ModelKind model = ModelKind::kDynamicConstant;
  Regime regime = Regime::kWeakLimit;
  int k_max = 20;  // weak-limit truncation level
  int n_iters = 2000;
  int burn_in = 1000;
  int thin = 1;
  int initial_bracket_width = 10;
  std::uint64_t seed = 0;
  Hyperparameters hypers;
  FixedHypers fixed;
  bool record_imputations = true;

  void validate() const;
  int n_kept() const;
  WeightKind weight_kind() const {
    return model == ModelKind::kDynamicWeighted ? WeightKind::kGammaDistributed
                                                : WeightKind::kConstantOne;
  }
};

// Kept-iteration summaries plus the per-iteration imputations of every masked
// cell (in Dataset::masked_cells order).
struct ChainTrace {
  std::vector<int> iteration;  // absolute iteration number of each kept sample
  std::vector<double> log_joint;
  std::vector<int> k_active;
  std::vector<double> alpha;
  std::vector<double> sigma2_x;
  std::vector<double> sigma2_a;
  std::vector<double> avg_persistence;  // NaN when no instance is active
  std::vector<std::pair<int, int>> masked_cells;
  std::vector<std::vector<double>> imputed;  // [kept][masked cell]
  ModelState final_state;

  std::size_t size() const { return iteration.size(); }
};

// Conditional prior mass of a single lambda given the other rows' support of
// its column: for lambda = 0 the inactive mass, otherwise the activation mass
// times the geometric lifetime pmf. alpha and k_max only enter in the
// weak-limit regime.
double lambda_prior_term(long long lambda, double rho_k, int m_k_minus,
                         int n_total, Regime regime, double alpha, int k_max);

// Integer slice move: auxiliary level under log_q(current), proposals uniform
// on a width-`initial_width` bracket positioned uniformly at random around the
// current value and clipped to [lo_cap, hi_cap]; rejected proposals shrink
// their end of the bracket toward the current value. Returns the accepted
// point (the current value if the bracket collapses). The random positioning
// is what makes the move reversible; a bracket centered deterministically on
// the current value leaves endpoint states under-visited once clipping cuts
// it short.
template <typename LogQ>
long long slice_integer(long long current, long long lo_cap, long long hi_cap,
                        int initial_width, LogQ&& log_q, Rng& rng) {
  if (current < lo_cap || current > hi_cap)
    throw std::invalid_argument("slice_integer: current outside bounds");
  const double lq_cur = log_q(current);
  if (!std::isfinite(lq_cur))
    throw std::logic_error("slice_integer: zero mass at current value");
  const double log_u = lq_cur + std::log(rng.uniform());
  const long long offset = rng.uniform_int(0, initial_width);
  long long lo = std::max(lo_cap, current - offset);
  long long hi = std::min(hi_cap, current + (initial_width - offset));
  while (true) {
    if (lo == hi) return current;  // bracket contains only the previous value
    const long long prop = rng.uniform_int(lo, hi);
    if (prop == current) return current;  // always under the slice
    if (log_q(prop) > log_u) return prop;
    if (prop > current)
      hi = prop - 1;
    else
      lo = prop + 1;
  }
}

// Conjugate posterior parameter blocks. The samplers draw from exactly these;
// tests compare them against grid-integration oracles.
struct GaussianFeaturePosterior {
  Matrix mean;  // K x D
  Matrix cov;   // K x K, shared by every column of A
};
GaussianFeaturePosterior feature_posterior(const Matrix& y, const Matrix& x,
                                           double sigma2_x, double sigma2_a);

struct InverseGammaPosterior {
  double shape;
  double scale;
};
InverseGammaPosterior variance_posterior(double a_sigma, double b_sigma,
                                         long long n_cells, double sum_sq);

struct BetaPosterior {
  double a;
  double b;
};
BetaPosterior rho_posterior(double a_rho, double b_rho, int m_k,
                            long long lifetime_excess);

struct GammaPosterior {
  double shape;
  double scale;
};
GammaPosterior alpha_posterior(double a_alpha, double b_alpha, int k_active,
                               int n_rows);

// Completed data matrix: observed cells copied, masked cells drawn from
// Normal(mu_n[d], sigma2_x).
Matrix impute_missing(const ModelState& state, const Dataset& data, Rng& rng);

// Joint log density of data (observed cells) and state under the model;
// diagnostic quantity recorded in the trace.
double log_joint(const Dataset& data, const ModelState& state,
                 const Hyperparameters& hypers, Regime regime, ModelKind model,
                 int k_max);

// Single-site operations on an explicit state. These are mask-aware with
// respect to `data` and rebuild what they need per call; run_chain goes
// through GibbsSampler, which maintains incremental caches.
long long slice_sample_lambda(ModelState& state, const Dataset& data, int n,
                              int k, const SamplerConfig& cfg, Rng& rng);
bool mh_singletons(ModelState& state, const Dataset& data, int n,
                   const SamplerConfig& cfg, Rng& rng);
void gibbs_update_a(ModelState& state, const Dataset& completed, Rng& rng);
bool mh_update_b(ModelState& state, const Dataset& data, int n, int k,
                 double alpha_b, double beta_b, Rng& rng);
void sample_variances(ModelState& state, const Dataset& data,
                      const Hyperparameters& hypers, const FixedHypers& fixed,
                      Rng& rng);
void sample_rho(ModelState& state, const Hyperparameters& hypers, Rng& rng);
void sample_alpha(ModelState& state, const Hyperparameters& hypers, Rng& rng);

// Thrown when the chain reaches a non-finite log joint; carries the offending
// state for a diagnostic dump.
class ChainDivergedError : public std::runtime_error {
 public:
  ChainDivergedError(std::string msg, int iteration, ModelState state)
      : std::runtime_error(std::move(msg)),
        iteration(iteration),
        state(std::move(state)) {}
  int iteration;
  ModelState state;
};

// One MCMC chain over a dataset. The iteration order is fixed: impute ->
// slice sweep over lambda -> (full nonparametric only) singleton moves and
// pruning -> A -> B -> variances -> rho -> alpha.
class GibbsSampler {
 public:
  GibbsSampler(Dataset data, SamplerConfig cfg, Rng rng);

  ChainTrace run();

  // Individual steps, exposed for composition and tests.
  void imputation_step();
  void slice_sweep();
  long long slice_cell(int n, int k);
  bool singleton_step(int n);
  void feature_update();
  void weight_sweep();
  bool weight_cell(int n, int k);
  void variance_update();
  void rho_update();
  void alpha_update();
  void run_iteration();

  double current_log_joint() const;
  const ModelState& state() const { return state_; }
  const Matrix& completed() const { return completed_; }
  const SamplerConfig& config() const { return cfg_; }
  void set_state(ModelState state);

 private:
  void init_state();
  void rebuild_caches();
  long long horizon_cap(int n) const;
  void record(ChainTrace& trace, int iteration) const;

  Dataset data_;
  SamplerConfig cfg_;
  Rng rng_;
  ModelState state_;
  std::vector<std::pair<int, int>> masked_cells_;
  Matrix completed_;  // observed cells fixed, masked cells refreshed per iter
  Matrix y_;          // weighted totals, N x K
  Matrix mean_;       // y_ * A
  Matrix resid_;      // completed_ - mean_
};

ChainTrace run_chain(const Dataset& data, const SamplerConfig& cfg, Rng rng);
ChainTrace run_chain(const Dataset& data, const SamplerConfig& cfg);

}  // namespace plfm
