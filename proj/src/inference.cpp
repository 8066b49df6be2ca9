#include "plfm/inference.hpp"

#include "plfm/generative.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace plfm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double geometric_pmf(long long lifetime, double rho) {
  if (lifetime < 1) return 0.0;
  return rho * std::pow(1.0 - rho, static_cast<double>(lifetime - 1));
}

// Lifetimes stored at the horizon cap mean "the instance outlives the data"
// and carry the geometric tail mass, not the pmf. This keeps the capped chain
// exactly consistent with uncapped forward simulation pushed through
// min(l, horizon): the activation mass stays exactly m/N and no lifetime
// probability is lost to truncation.
double lifetime_mass(long long lifetime, double rho, long long horizon) {
  if (lifetime < 1 || lifetime > horizon) return 0.0;
  if (lifetime == horizon)
    return std::pow(1.0 - rho, static_cast<double>(lifetime - 1));
  return geometric_pmf(lifetime, rho);
}

// Conditional prior mass under the censored encoding; defers to
// lambda_prior_term away from the horizon.
double capped_prior_term(long long lambda, double rho_k, int m_k_minus,
                         int n_total, long long horizon, Regime regime,
                         double alpha, int k_max) {
  if (lambda < 1 || lambda != horizon)
    return lambda_prior_term(lambda, rho_k, m_k_minus, n_total, regime, alpha,
                             k_max);
  const double n = static_cast<double>(n_total);
  const double m = static_cast<double>(m_k_minus);
  const double activation =
      regime == Regime::kFullNonparametric
          ? m / n
          : (m + alpha / k_max) / (n + alpha / k_max);
  return activation * lifetime_mass(lambda, rho_k, horizon);
}

double mean_lifetime_or_nan(const FeatureAllocation& alloc) {
  long long total = 0;
  long long count = 0;
  for (int k = 0; k < alloc.cols(); ++k)
    for (int n = 0; n < alloc.rows(); ++n)
      if (alloc(n, k) >= 1) {
        total += alloc(n, k);
        ++count;
      }
  if (count == 0) return kNaN;
  return static_cast<double>(total) / static_cast<double>(count);
}

// Log-likelihood change on observed cells of rows [row_begin, row_end) when
// their means shift by `shift`.
double masked_loglik_shift(const Dataset& data, const Matrix& mu, int row_begin,
                           int row_end, const RowVector& shift,
                           double sigma2_x) {
  double delta = 0.0;
  for (int r = row_begin; r < row_end; ++r)
    for (int c = 0; c < data.d(); ++c)
      if (data.observed(r, c)) {
        const double resid = data.x(r, c) - mu(r, c);
        const double s = shift(c);
        delta += (2.0 * resid * s - s * s) / (2.0 * sigma2_x);
      }
  return delta;
}

// As above but with a per-row shift matrix (rows_begin + i shifts by
// delta.row(i)).
double masked_loglik_shift_rows(const Dataset& data, const Matrix& mu,
                                int row_begin, const Matrix& delta,
                                double sigma2_x) {
  double total = 0.0;
  for (int i = 0; i < delta.rows(); ++i) {
    const int r = row_begin + i;
    for (int c = 0; c < data.d(); ++c)
      if (data.observed(r, c)) {
        const double resid = data.x(r, c) - mu(r, c);
        const double s = delta(i, c);
        total += (2.0 * resid * s - s * s) / (2.0 * sigma2_x);
      }
  }
  return total;
}

struct SingletonProposal {
  double rho = 1.0;
  long long lifetime = 1;
  double weight = 1.0;
  RowVector dict_row;
};

// Shared draw order for the singleton proposal, so the incremental sampler and
// the explicit-state operation consume the generator identically.
std::vector<SingletonProposal> draw_singleton_proposals(
    int count, long long cap, const Hyperparameters& h, WeightKind kind,
    double sigma2_a, int dims, Rng& rng) {
  std::vector<SingletonProposal> out(count);
  for (auto& p : out) {
    p.rho = rng.beta(h.a_rho, h.b_rho);
    p.lifetime = std::min(rng.geometric(p.rho), cap);
    p.weight =
        kind == WeightKind::kGammaDistributed ? rng.gamma(h.alpha_b, h.beta_b)
                                              : 1.0;
    p.dict_row.resize(dims);
    for (int d = 0; d < dims; ++d)
      p.dict_row(d) = rng.normal(0.0, std::sqrt(sigma2_a));
  }
  return out;
}

std::vector<int> singleton_columns(const ModelState& state, int n) {
  std::vector<int> cols;
  for (int k = 0; k < state.k(); ++k)
    if (state.alloc(n, k) >= 1 && state.alloc.col_support_excluding(k, n) == 0)
      cols.push_back(k);
  return cols;
}

}  // namespace

std::string to_string(Regime regime) {
  return regime == Regime::kFullNonparametric ? "full" : "weak-limit";
}

std::string to_string(ModelKind model) {
  switch (model) {
    case ModelKind::kStatic:
      return "static";
    case ModelKind::kDynamicConstant:
      return "dynamic-constant";
    default:
      return "dynamic-weighted";
  }
}

Regime regime_from_string(const std::string& name) {
  if (name == "full" || name == "full-nonparametric")
    return Regime::kFullNonparametric;
  if (name == "weak-limit") return Regime::kWeakLimit;
  throw std::invalid_argument("unknown regime: " + name);
}

ModelKind model_from_string(const std::string& name) {
  if (name == "static") return ModelKind::kStatic;
  if (name == "dynamic-constant") return ModelKind::kDynamicConstant;
  if (name == "dynamic-weighted") return ModelKind::kDynamicWeighted;
  throw std::invalid_argument("unknown model: " + name);
}

void SamplerConfig::validate() const {
  if (n_iters < 0 || burn_in < 0 || burn_in > n_iters)
    throw std::invalid_argument("SamplerConfig: need 0 <= burn_in <= n_iters");
  if (thin < 1) throw std::invalid_argument("SamplerConfig: thin < 1");
  if (initial_bracket_width < 1)
    throw std::invalid_argument("SamplerConfig: bracket width < 1");
  if (regime == Regime::kWeakLimit && k_max < 1)
    throw std::invalid_argument("SamplerConfig: k_max < 1 in weak limit");
  hypers.validate();
  for (const auto& f : {fixed.alpha, fixed.sigma2_x, fixed.sigma2_a})
    if (f && !(*f > 0.0))
      throw std::invalid_argument("SamplerConfig: fixed value must be > 0");
}

int SamplerConfig::n_kept() const { return (n_iters - burn_in) / thin; }

double lambda_prior_term(long long lambda, double rho_k, int m_k_minus,
                         int n_total, Regime regime, double alpha, int k_max) {
  if (m_k_minus < 0 || m_k_minus > n_total - 1)
    throw std::invalid_argument("lambda_prior_term: bad support count");
  if (lambda < 0) return 0.0;
  const double n = static_cast<double>(n_total);
  const double m = static_cast<double>(m_k_minus);
  if (regime == Regime::kFullNonparametric) {
    if (lambda == 0) return (n - m) / n;
    return (m / n) * geometric_pmf(lambda, rho_k);
  }
  const double pseudo = alpha / static_cast<double>(k_max);
  const double denom = n + pseudo;
  if (lambda == 0) return (n - m) / denom;
  return ((m + pseudo) / denom) * geometric_pmf(lambda, rho_k);
}

GaussianFeaturePosterior feature_posterior(const Matrix& y, const Matrix& x,
                                           double sigma2_x, double sigma2_a) {
  if (y.rows() != x.rows())
    throw std::invalid_argument("feature_posterior: row mismatch");
  if (!(sigma2_x > 0.0) || !(sigma2_a > 0.0))
    throw std::invalid_argument("feature_posterior: non-positive variance");
  const int k = static_cast<int>(y.cols());
  Matrix gram = y.transpose() * y;
  gram.diagonal().array() += sigma2_x / sigma2_a;
  Eigen::LLT<Matrix> llt(gram);
  GaussianFeaturePosterior post;
  post.mean = llt.solve(y.transpose() * x);
  post.cov = sigma2_x * llt.solve(Matrix::Identity(k, k));
  return post;
}

InverseGammaPosterior variance_posterior(double a_sigma, double b_sigma,
                                         long long n_cells, double sum_sq) {
  if (n_cells < 0 || sum_sq < 0.0)
    throw std::invalid_argument("variance_posterior: negative inputs");
  return {a_sigma + static_cast<double>(n_cells) / 2.0,
          b_sigma + sum_sq / 2.0};
}

BetaPosterior rho_posterior(double a_rho, double b_rho, int m_k,
                            long long lifetime_excess) {
  if (m_k < 0 || lifetime_excess < 0)
    throw std::invalid_argument("rho_posterior: negative inputs");
  return {a_rho + static_cast<double>(m_k),
          b_rho + static_cast<double>(lifetime_excess)};
}

GammaPosterior alpha_posterior(double a_alpha, double b_alpha, int k_active,
                               int n_rows) {
  if (k_active < 0) throw std::invalid_argument("alpha_posterior: K < 0");
  const double h = harmonic_number(n_rows);
  return {static_cast<double>(k_active) + a_alpha,
          b_alpha / (1.0 + b_alpha * h)};
}

Matrix impute_missing(const ModelState& state, const Dataset& data, Rng& rng) {
  Matrix completed = data.x;
  if (data.fully_observed()) return completed;
  const Matrix mu = mean_matrix(state.alloc, state.weights, state.dict);
  const double sd = std::sqrt(state.sigma2_x);
  for (int r = 0; r < data.n(); ++r)
    for (int c = 0; c < data.d(); ++c)
      if (!data.observed(r, c)) completed(r, c) = rng.normal(mu(r, c), sd);
  return completed;
}

namespace {

// Every log-joint term except the data likelihood.
double log_prior_parts(const ModelState& state, const Hyperparameters& hypers,
                       Regime regime, ModelKind model, int k_max) {
  double lp = 0.0;
  const int n = state.n();
  const int k_cols = state.k();
  if (regime == Regime::kFullNonparametric) {
    lp += ibp_log_prob(state.alloc, state.alpha);
  } else {
    const double pseudo = state.alpha / static_cast<double>(k_max);
    for (int k = 0; k < k_cols; ++k) {
      const double m = state.alloc.col_support(k);
      lp += lbeta(pseudo + m, n - m + 1.0) - lbeta(pseudo, 1.0);
    }
  }
  for (int k = 0; k < k_cols; ++k) {
    for (int r = 0; r < n; ++r) {
      const long long lam = state.alloc(r, k);
      if (lam >= 1) {
        if (r + lam >= n && lam > 1)
          lp += static_cast<double>(lam - 1) * std::log1p(-state.rho(k));
        else if (r + lam < n)
          lp += log_geometric_pmf(lam, state.rho(k));
        if (state.weights.kind == WeightKind::kGammaDistributed)
          lp += log_gamma_pdf(state.weights.b(r, k), hypers.alpha_b,
                              hypers.beta_b);
      }
    }
    if (model != ModelKind::kStatic)
      lp += log_beta_pdf(state.rho(k), hypers.a_rho, hypers.b_rho);
  }
  for (int k = 0; k < k_cols; ++k)
    for (int d = 0; d < state.d(); ++d)
      lp += log_normal_pdf(state.dict(k, d), 0.0, state.sigma2_a);
  lp += log_gamma_pdf(state.alpha, hypers.a_alpha, hypers.b_alpha);
  lp += log_inverse_gamma_pdf(state.sigma2_x, hypers.a_sigma, hypers.b_sigma);
  lp += log_inverse_gamma_pdf(state.sigma2_a, hypers.a_sigma, hypers.b_sigma);
  return lp;
}

}  // namespace

double log_joint(const Dataset& data, const ModelState& state,
                 const Hyperparameters& hypers, Regime regime, ModelKind model,
                 int k_max) {
  return log_likelihood(data, state.alloc, state.weights, state.dict,
                        state.sigma2_x) +
         log_prior_parts(state, hypers, regime, model, k_max);
}

// --- explicit-state operations -------------------------------------------

long long slice_sample_lambda(ModelState& state, const Dataset& data, int n,
                              int k, const SamplerConfig& cfg, Rng& rng) {
  const int m = state.alloc.col_support_excluding(k, n);
  const long long cur = state.alloc(n, k);
  if (cfg.regime == Regime::kFullNonparametric && m == 0) return cur;
  const long long horizon = state.n() - n;
  long long cap = horizon;
  if (cfg.model == ModelKind::kStatic) cap = std::min<long long>(cap, 1);
  const Matrix mu = mean_matrix(state.alloc, state.weights, state.dict);
  const RowVector shift = state.weights.b(n, k) * state.dict.row(k);
  const auto log_q = [&](long long lam) {
    const double prior = capped_prior_term(lam, state.rho(k), m, state.n(),
                                           horizon, cfg.regime, state.alpha,
                                           cfg.k_max);
    double lq = std::log(prior);
    if (!std::isfinite(lq) || lam == cur) return lq;
    if (lam > cur)
      lq += masked_loglik_shift(data, mu, static_cast<int>(n + cur),
                                static_cast<int>(n + lam), shift,
                                state.sigma2_x);
    else
      lq += masked_loglik_shift(data, mu, static_cast<int>(n + lam),
                                static_cast<int>(n + cur), -shift,
                                state.sigma2_x);
    return lq;
  };
  const long long next =
      slice_integer(cur, 0, cap, cfg.initial_bracket_width, log_q, rng);
  state.alloc.set(n, k, next);
  return next;
}

bool mh_singletons(ModelState& state, const Dataset& data, int n,
                   const SamplerConfig& cfg, Rng& rng) {
  if (cfg.regime != Regime::kFullNonparametric)
    throw std::logic_error("mh_singletons: full nonparametric regime only");
  const std::vector<int> current = singleton_columns(state, n);
  const int k_star = rng.poisson(state.alpha / state.n());
  if (k_star == 0 && current.empty()) return true;  // identity proposal
  const long long cap = state.n() - n;
  const auto proposals =
      draw_singleton_proposals(k_star, cap, cfg.hypers, state.weights.kind,
                               state.sigma2_a, state.d(), rng);

  long long span = 0;
  for (int k : current) span = std::max(span, state.alloc(n, k));
  for (const auto& p : proposals) span = std::max(span, p.lifetime);
  Matrix delta = Matrix::Zero(span, state.d());
  for (int k : current)
    for (long long r = 0; r < state.alloc(n, k); ++r)
      delta.row(r) -= state.weights.b(n, k) * state.dict.row(k);
  for (const auto& p : proposals)
    for (long long r = 0; r < p.lifetime; ++r)
      delta.row(r) += p.weight * p.dict_row;

  const Matrix mu = mean_matrix(state.alloc, state.weights, state.dict);
  const double delta_ll =
      masked_loglik_shift_rows(data, mu, n, delta, state.sigma2_x);
  if (!(rng.uniform() < std::exp(delta_ll))) return false;

  for (auto it = current.rbegin(); it != current.rend(); ++it)
    state.remove_feature(*it);
  for (const auto& p : proposals) {
    Eigen::Matrix<long long, Eigen::Dynamic, 1> col =
        Eigen::Matrix<long long, Eigen::Dynamic, 1>::Zero(state.n());
    col(n) = p.lifetime;
    Vector weight_col = Vector::Ones(state.n());
    weight_col(n) = p.weight;
    state.append_feature(col, p.dict_row, weight_col, p.rho);
  }
  return true;
}

void gibbs_update_a(ModelState& state, const Dataset& completed, Rng& rng) {
  if (!completed.fully_observed())
    throw std::invalid_argument(
        "gibbs_update_a: requires complete data; impute first");
  const int k = state.k();
  if (k == 0) return;
  const Matrix y = weighted_totals_matrix(state.alloc, state.weights);
  const auto post =
      feature_posterior(y, completed.x, state.sigma2_x, state.sigma2_a);
  Eigen::LLT<Matrix> llt(post.cov);
  Matrix z(k, state.d());
  for (int i = 0; i < k; ++i)
    for (int d = 0; d < state.d(); ++d) z(i, d) = rng.normal(0.0, 1.0);
  state.dict = post.mean + llt.matrixL() * z;
}

bool mh_update_b(ModelState& state, const Dataset& data, int n, int k,
                 double alpha_b, double beta_b, Rng& rng) {
  if (state.weights.kind != WeightKind::kGammaDistributed) return false;
  const long long lam = state.alloc(n, k);
  if (lam < 1) return false;
  const double cur = state.weights.b(n, k);
  const double prop = rng.gamma(alpha_b, beta_b);
  const Matrix mu = mean_matrix(state.alloc, state.weights, state.dict);
  const int row_end =
      static_cast<int>(std::min<long long>(state.n(), n + lam));
  const RowVector shift = (prop - cur) * state.dict.row(k);
  const double delta_ll =
      masked_loglik_shift(data, mu, n, row_end, shift, state.sigma2_x);
  if (!(rng.uniform() < std::exp(delta_ll))) return false;
  state.weights.b(n, k) = prop;
  return true;
}

void sample_variances(ModelState& state, const Dataset& data,
                      const Hyperparameters& hypers, const FixedHypers& fixed,
                      Rng& rng) {
  if (!fixed.sigma2_x) {
    const Matrix mu = mean_matrix(state.alloc, state.weights, state.dict);
    double ss = 0.0;
    long long cells = 0;
    for (int r = 0; r < data.n(); ++r)
      for (int c = 0; c < data.d(); ++c)
        if (data.observed(r, c)) {
          const double resid = data.x(r, c) - mu(r, c);
          ss += resid * resid;
          ++cells;
        }
    const auto post =
        variance_posterior(hypers.a_sigma, hypers.b_sigma, cells, ss);
    state.sigma2_x = rng.inverse_gamma(post.shape, post.scale);
  }
  if (!fixed.sigma2_a) {
    const auto post = variance_posterior(
        hypers.a_sigma, hypers.b_sigma,
        static_cast<long long>(state.k()) * state.d(), state.dict.squaredNorm());
    state.sigma2_a = rng.inverse_gamma(post.shape, post.scale);
  }
}

void sample_rho(ModelState& state, const Hyperparameters& hypers, Rng& rng) {
  // Instances whose stored lifetime reaches the data horizon are censored
  // ("at least this long"): they contribute continuation terms but no
  // stopping event.
  const int n = state.n();
  for (int k = 0; k < state.k(); ++k) {
    int uncensored = 0;
    long long excess = 0;
    for (int r = 0; r < n; ++r) {
      const long long lam = state.alloc(r, k);
      if (lam < 1) continue;
      excess += lam - 1;
      if (r + lam < n) ++uncensored;
    }
    const auto post =
        rho_posterior(hypers.a_rho, hypers.b_rho, uncensored, excess);
    state.rho(k) = rng.beta(post.a, post.b);
  }
}

void sample_alpha(ModelState& state, const Hyperparameters& hypers, Rng& rng) {
  const auto post = alpha_posterior(hypers.a_alpha, hypers.b_alpha,
                                    state.alloc.active_cols(), state.n());
  state.alpha = rng.gamma(post.shape, post.scale);
}

// --- GibbsSampler ----------------------------------------------------------

GibbsSampler::GibbsSampler(Dataset data, SamplerConfig cfg, Rng rng)
    : data_(std::move(data)), cfg_(std::move(cfg)), rng_(rng) {
  data_.validate();
  cfg_.validate();
  masked_cells_ = data_.masked_cells();
  init_state();
}

void GibbsSampler::init_state() {
  // The chain starts from a prior draw. Starting from an empty allocation
  // leaves the fully nonparametric sampler stuck: feature birth then depends
  // entirely on singleton proposals whose dictionary rows are drawn blind.
  const int n = data_.n();
  const int d = data_.d();
  state_.alpha = cfg_.fixed.alpha.value_or(cfg_.hypers.alpha);
  state_.sigma2_x = cfg_.fixed.sigma2_x.value_or(cfg_.hypers.sigma2_x);
  state_.sigma2_a = cfg_.fixed.sigma2_a.value_or(cfg_.hypers.sigma2_a);

  IntMatrix lambda;
  if (cfg_.regime == Regime::kWeakLimit) {
    lambda = IntMatrix::Zero(n, cfg_.k_max);
    const double pseudo = state_.alpha / static_cast<double>(cfg_.k_max);
    for (int k = 0; k < cfg_.k_max; ++k) {
      const double pi = rng_.beta(pseudo, 1.0);
      for (int r = 0; r < n; ++r)
        if (rng_.bernoulli(pi)) lambda(r, k) = 1;
    }
  } else {
    lambda = sample_ibp(n, state_.alpha, rng_).lambda();
  }
  const int k0 = static_cast<int>(lambda.cols());
  state_.rho = Vector::Ones(k0);
  if (cfg_.model != ModelKind::kStatic)
    for (int k = 0; k < k0; ++k)
      state_.rho(k) = rng_.beta(cfg_.hypers.a_rho, cfg_.hypers.b_rho);
  for (int k = 0; k < k0; ++k)
    for (int r = 0; r < n; ++r)
      if (lambda(r, k) == 1 && cfg_.model != ModelKind::kStatic)
        lambda(r, k) =
            std::min<long long>(rng_.geometric(state_.rho(k)), n - r);
  state_.alloc = FeatureAllocation(std::move(lambda));
  state_.weights = InstanceWeights::ones(n, k0, cfg_.weight_kind());
  state_.dict.resize(k0, d);
  const double sd = std::sqrt(state_.sigma2_a);
  for (int k = 0; k < k0; ++k)
    for (int c = 0; c < d; ++c) state_.dict(k, c) = rng_.normal(0.0, sd);
  completed_ = data_.x;
  for (const auto& [r, c] : masked_cells_) completed_(r, c) = 0.0;
  rebuild_caches();
}

void GibbsSampler::rebuild_caches() {
  y_ = weighted_totals_matrix(state_.alloc, state_.weights);
  if (state_.k() == 0)
    mean_ = Matrix::Zero(data_.n(), data_.d());
  else
    mean_ = y_ * state_.dict;
  resid_ = completed_ - mean_;
}

void GibbsSampler::set_state(ModelState state) {
  state_ = std::move(state);
  rebuild_caches();
}

long long GibbsSampler::horizon_cap(int n) const {
  long long cap = data_.n() - n;
  if (cfg_.model == ModelKind::kStatic) cap = std::min<long long>(cap, 1);
  return cap;
}

void GibbsSampler::imputation_step() {
  const double sd = std::sqrt(state_.sigma2_x);
  for (const auto& [r, c] : masked_cells_) {
    const double value = rng_.normal(mean_(r, c), sd);
    completed_(r, c) = value;
    resid_(r, c) = value - mean_(r, c);
  }
}

void GibbsSampler::slice_sweep() {
  for (int n = 0; n < data_.n(); ++n)
    for (int k = 0; k < state_.k(); ++k) slice_cell(n, k);
}

long long GibbsSampler::slice_cell(int n, int k) {
  const long long cur = state_.alloc(n, k);
  const int m = state_.alloc.col_support_excluding(k, n);
  if (cfg_.regime == Regime::kFullNonparametric && m == 0) return cur;
  const long long horizon = data_.n() - n;
  const long long cap = horizon_cap(n);
  const double rho_k = state_.rho(k);
  const RowVector v = state_.weights.b(n, k) * state_.dict.row(k);
  const double v2 = v.squaredNorm();
  const double inv_two_s2 = 1.0 / (2.0 * state_.sigma2_x);
  const auto log_q = [&](long long lam) {
    const double prior = capped_prior_term(lam, rho_k, m, data_.n(), horizon,
                                           cfg_.regime, state_.alpha,
                                           cfg_.k_max);
    double lq = std::log(prior);
    if (!std::isfinite(lq) || lam == cur) return lq;
    // Only rows between the two lifetimes change; completed data, no mask.
    const int r0 = static_cast<int>(n + std::min(lam, cur));
    const int r1 = static_cast<int>(n + std::max(lam, cur));
    const double sign = lam > cur ? 1.0 : -1.0;
    double dot = 0.0;
    for (int r = r0; r < r1; ++r) dot += resid_.row(r).dot(v);
    lq += (2.0 * sign * dot - static_cast<double>(r1 - r0) * v2) * inv_two_s2;
    return lq;
  };
  const long long next =
      slice_integer(cur, 0, cap, cfg_.initial_bracket_width, log_q, rng_);
  if (next != cur) {
    const int r0 = static_cast<int>(n + std::min(next, cur));
    const int r1 = static_cast<int>(n + std::max(next, cur));
    const double sign = next > cur ? 1.0 : -1.0;
    const double db = sign * state_.weights.b(n, k);
    for (int r = r0; r < r1; ++r) {
      y_(r, k) += db;
      mean_.row(r) += sign * v;
      resid_.row(r) -= sign * v;
    }
    state_.alloc.set(n, k, next);
  }
  return next;
}

bool GibbsSampler::singleton_step(int n) {
  const std::vector<int> current = singleton_columns(state_, n);
  const int k_star = rng_.poisson(state_.alpha / data_.n());
  if (k_star == 0 && current.empty()) return true;
  const auto proposals = draw_singleton_proposals(
      k_star, horizon_cap(n), cfg_.hypers, state_.weights.kind,
      state_.sigma2_a, data_.d(), rng_);

  long long span = 0;
  for (int k : current) span = std::max(span, state_.alloc(n, k));
  for (const auto& p : proposals) span = std::max(span, p.lifetime);
  Matrix delta = Matrix::Zero(span, data_.d());
  for (int k : current)
    for (long long r = 0; r < state_.alloc(n, k); ++r)
      delta.row(r) -= state_.weights.b(n, k) * state_.dict.row(k);
  for (const auto& p : proposals)
    for (long long r = 0; r < p.lifetime; ++r)
      delta.row(r) += p.weight * p.dict_row;

  double delta_ll = 0.0;
  const double inv_two_s2 = 1.0 / (2.0 * state_.sigma2_x);
  for (long long r = 0; r < span; ++r)
    delta_ll += (2.0 * resid_.row(n + r).dot(delta.row(r)) -
                 delta.row(r).squaredNorm()) *
                inv_two_s2;
  if (!(rng_.uniform() < std::exp(delta_ll))) return false;

  for (auto it = current.rbegin(); it != current.rend(); ++it)
    state_.remove_feature(*it);
  for (const auto& p : proposals) {
    Eigen::Matrix<long long, Eigen::Dynamic, 1> col =
        Eigen::Matrix<long long, Eigen::Dynamic, 1>::Zero(data_.n());
    col(n) = p.lifetime;
    Vector weight_col = Vector::Ones(data_.n());
    weight_col(n) = p.weight;
    state_.append_feature(col, p.dict_row, weight_col, p.rho);
  }
  rebuild_caches();
  return true;
}

void GibbsSampler::feature_update() {
  if (state_.k() == 0) return;
  const auto post =
      feature_posterior(y_, completed_, state_.sigma2_x, state_.sigma2_a);
  Eigen::LLT<Matrix> llt(post.cov);
  Matrix z(state_.k(), data_.d());
  for (int k = 0; k < state_.k(); ++k)
    for (int d = 0; d < data_.d(); ++d) z(k, d) = rng_.normal(0.0, 1.0);
  state_.dict = post.mean + llt.matrixL() * z;
  mean_ = y_ * state_.dict;
  resid_ = completed_ - mean_;
}

void GibbsSampler::weight_sweep() {
  if (state_.weights.kind != WeightKind::kGammaDistributed) return;
  for (int n = 0; n < data_.n(); ++n)
    for (int k = 0; k < state_.k(); ++k)
      if (state_.alloc(n, k) >= 1) weight_cell(n, k);
}

bool GibbsSampler::weight_cell(int n, int k) {
  if (state_.weights.kind != WeightKind::kGammaDistributed) return false;
  const long long lam = state_.alloc(n, k);
  if (lam < 1) return false;
  const double cur = state_.weights.b(n, k);
  const double prop = rng_.gamma(cfg_.hypers.alpha_b, cfg_.hypers.beta_b);
  const RowVector shift = (prop - cur) * state_.dict.row(k);
  const int r1 = static_cast<int>(n + lam);  // lam is horizon capped
  double delta_ll = 0.0;
  const double s2 = shift.squaredNorm();
  for (int r = n; r < r1; ++r)
    delta_ll += 2.0 * resid_.row(r).dot(shift) - s2;
  delta_ll /= 2.0 * state_.sigma2_x;
  if (!(rng_.uniform() < std::exp(delta_ll))) return false;
  state_.weights.b(n, k) = prop;
  for (int r = n; r < r1; ++r) {
    y_(r, k) += prop - cur;
    mean_.row(r) += shift;
    resid_.row(r) -= shift;
  }
  return true;
}

void GibbsSampler::variance_update() {
  if (!cfg_.fixed.sigma2_x) {
    // Residuals over originally observed cells; masked cells integrate out.
    double ss = 0.0;
    long long cells = 0;
    for (int r = 0; r < data_.n(); ++r)
      for (int c = 0; c < data_.d(); ++c)
        if (data_.observed(r, c)) {
          ss += resid_(r, c) * resid_(r, c);
          ++cells;
        }
    const auto post =
        variance_posterior(cfg_.hypers.a_sigma, cfg_.hypers.b_sigma, cells, ss);
    state_.sigma2_x = rng_.inverse_gamma(post.shape, post.scale);
  }
  if (!cfg_.fixed.sigma2_a) {
    const auto post = variance_posterior(
        cfg_.hypers.a_sigma, cfg_.hypers.b_sigma,
        static_cast<long long>(state_.k()) * data_.d(),
        state_.dict.squaredNorm());
    state_.sigma2_a = rng_.inverse_gamma(post.shape, post.scale);
  }
}

void GibbsSampler::rho_update() {
  if (cfg_.model == ModelKind::kStatic) return;
  sample_rho(state_, cfg_.hypers, rng_);
}

void GibbsSampler::alpha_update() {
  if (cfg_.fixed.alpha) return;
  sample_alpha(state_, cfg_.hypers, rng_);
}

void GibbsSampler::run_iteration() {
  imputation_step();
  slice_sweep();
  if (cfg_.regime == Regime::kFullNonparametric)
    for (int n = 0; n < data_.n(); ++n) singleton_step(n);
  feature_update();
  weight_sweep();
  variance_update();
  rho_update();
  alpha_update();
}

double GibbsSampler::current_log_joint() const {
  // Likelihood from the cached residuals (equal to data - mean on observed
  // cells); prior terms from the shared definition.
  double ll = 0.0;
  for (int r = 0; r < data_.n(); ++r)
    for (int c = 0; c < data_.d(); ++c)
      if (data_.observed(r, c))
        ll += log_normal_pdf(resid_(r, c), 0.0, state_.sigma2_x);
  return ll + log_prior_parts(state_, cfg_.hypers, cfg_.regime, cfg_.model,
                              cfg_.k_max);
}

void GibbsSampler::record(ChainTrace& trace, int iteration) const {
  state_.check_invariants(/*capped=*/true,
                          cfg_.regime == Regime::kFullNonparametric);
  const double lj = current_log_joint();
  if (!std::isfinite(lj)) {
    std::ostringstream msg;
    msg << "non-finite log joint at iteration " << iteration;
    throw ChainDivergedError(msg.str(), iteration, state_);
  }
  trace.iteration.push_back(iteration);
  trace.log_joint.push_back(lj);
  trace.k_active.push_back(state_.alloc.active_cols());
  trace.alpha.push_back(state_.alpha);
  trace.sigma2_x.push_back(state_.sigma2_x);
  trace.sigma2_a.push_back(state_.sigma2_a);
  trace.avg_persistence.push_back(mean_lifetime_or_nan(state_.alloc));
  if (cfg_.record_imputations) {
    std::vector<double> values;
    values.reserve(masked_cells_.size());
    for (const auto& [r, c] : masked_cells_) values.push_back(completed_(r, c));
    trace.imputed.push_back(std::move(values));
  }
}

ChainTrace GibbsSampler::run() {
  ChainTrace trace;
  trace.masked_cells = masked_cells_;
  for (int t = 1; t <= cfg_.n_iters; ++t) {
    run_iteration();
    if (t > cfg_.burn_in && (t - cfg_.burn_in) % cfg_.thin == 0)
      record(trace, t);
  }
  trace.final_state = state_;
  return trace;
}

ChainTrace run_chain(const Dataset& data, const SamplerConfig& cfg, Rng rng) {
  GibbsSampler sampler(data, cfg, rng);
  return sampler.run();
}

ChainTrace run_chain(const Dataset& data, const SamplerConfig& cfg) {
  return run_chain(data, cfg, Rng(cfg.seed));
}

}  // namespace plfm
