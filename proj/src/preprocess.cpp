#include "plfm/preprocess.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace plfm {

namespace {

struct ColumnMoments {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  long long count = 0;
  long long distinct_hint = 0;  // 0/1/2 for none/constant/varying
};

ColumnMoments observed_moments(const Dataset& data, int c) {
  ColumnMoments m;
  double sum = 0.0, sum_sq = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double first = 0.0;
  bool saw_first = false, varying = false;
  for (int r = 0; r < data.n(); ++r) {
    if (!data.observed(r, c)) continue;
    const double v = data.x(r, c);
    sum += v;
    sum_sq += v * v;
    min = std::min(min, v);
    if (!saw_first) {
      first = v;
      saw_first = true;
    } else if (v != first) {
      varying = true;
    }
    ++m.count;
  }
  if (m.count > 0) {
    m.mean = sum / static_cast<double>(m.count);
    const double var =
        std::max(0.0, sum_sq / static_cast<double>(m.count) - m.mean * m.mean);
    m.sd = std::sqrt(var);
    m.min = min;
    m.distinct_hint = varying ? 2 : 1;
  }
  return m;
}

}  // namespace

PreprocessResult standardize(const Dataset& data) {
  PreprocessResult out;
  out.data = data;
  out.transforms.resize(data.d());
  for (int c = 0; c < data.d(); ++c) {
    const auto m = observed_moments(data, c);
    if (m.distinct_hint < 2)
      throw std::invalid_argument(
          "standardize: column " + std::to_string(c) +
          " has fewer than two distinct observed values");
    out.transforms[c] = {m.mean, m.sd, 0.0};
    for (int r = 0; r < data.n(); ++r)
      out.data.x(r, c) = (data.x(r, c) - m.mean) / m.sd;
  }
  return out;
}

PreprocessResult subtract_min(const Dataset& data) {
  PreprocessResult out;
  out.data = data;
  out.transforms.resize(data.d());
  for (int c = 0; c < data.d(); ++c) {
    const auto m = observed_moments(data, c);
    if (m.count == 0)
      throw std::invalid_argument("subtract_min: column " + std::to_string(c) +
                                  " has no observed values");
    out.transforms[c] = {0.0, 1.0, m.min};
    for (int r = 0; r < data.n(); ++r) out.data.x(r, c) = data.x(r, c) - m.min;
  }
  return out;
}

PreprocessResult scale_unit_variance(const Dataset& data) {
  PreprocessResult out;
  out.data = data;
  out.transforms.resize(data.d());
  for (int c = 0; c < data.d(); ++c) {
    const auto m = observed_moments(data, c);
    if (m.distinct_hint < 2)
      throw std::invalid_argument(
          "scale_unit_variance: column " + std::to_string(c) +
          " has fewer than two distinct observed values");
    out.transforms[c] = {0.0, m.sd, 0.0};
    for (int r = 0; r < data.n(); ++r) out.data.x(r, c) = data.x(r, c) / m.sd;
  }
  return out;
}

PreprocessResult standardize_and_shift(const Dataset& data) {
  PreprocessResult first = standardize(data);
  PreprocessResult second = subtract_min(first.data);
  PreprocessResult out;
  out.data = std::move(second.data);
  out.transforms.resize(data.d());
  for (int c = 0; c < data.d(); ++c)
    out.transforms[c] = {first.transforms[c].mean, first.transforms[c].sd,
                         second.transforms[c].post_shift};
  return out;
}

Dataset apply_column_transforms(
    const Dataset& data, const std::vector<ColumnTransform>& transforms) {
  if (static_cast<int>(transforms.size()) != data.d())
    throw std::invalid_argument("apply_column_transforms: width mismatch");
  Dataset out = data;
  for (int c = 0; c < data.d(); ++c)
    for (int r = 0; r < data.n(); ++r)
      out.x(r, c) =
          (data.x(r, c) - transforms[c].mean) / transforms[c].sd -
          transforms[c].post_shift;
  return out;
}

Dataset cholesky_whiten(const Dataset& data) {
  if (!data.fully_observed())
    throw std::invalid_argument(
        "cholesky_whiten: requires fully observed data");
  const int n = data.n();
  const int d = data.d();
  if (n <= d)
    throw std::invalid_argument(
        "cholesky_whiten: sample covariance singular (N <= D)");
  const RowVector mean = data.x.colwise().mean();
  const Matrix centered = data.x.rowwise() - mean;
  const Matrix cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "cholesky_whiten: covariance decomposition failed");
  Dataset out = data;
  // x -> L^{-1} (x - mean), applied row-wise.
  out.x = llt.matrixL().solve(centered.transpose()).transpose();
  return out;
}

Dataset stft_spectrogram(const std::vector<double>& samples, int n_fft,
                         StftWindow window, int hop) {
  if (n_fft <= 0 || hop <= 0)
    throw std::invalid_argument("stft_spectrogram: n_fft and hop must be > 0");
  if (static_cast<int>(samples.size()) < n_fft)
    throw std::invalid_argument("stft_spectrogram: input shorter than n_fft");
  (void)window;  // only Hanning is defined
  std::vector<double> win(n_fft);
  for (int i = 0; i < n_fft; ++i)
    win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n_fft);

  const int n_frames =
      (static_cast<int>(samples.size()) - n_fft) / hop + 1;
  Matrix spec(n_frames, n_fft);
  std::vector<std::complex<double>> twiddle(n_fft);
  for (int i = 0; i < n_fft; ++i) {
    const double angle = -2.0 * std::numbers::pi * i / n_fft;
    twiddle[i] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<double> frame(n_fft);
  for (int t = 0; t < n_frames; ++t) {
    for (int i = 0; i < n_fft; ++i)
      frame[i] = samples[t * hop + i] * win[i];
    for (int k = 0; k < n_fft; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int i = 0; i < n_fft; ++i)
        acc += frame[i] * twiddle[(static_cast<long long>(k) * i) % n_fft];
      spec(t, k) = std::abs(acc);
    }
  }
  Dataset out(std::move(spec));
  out.column_names.reserve(n_fft);
  for (int k = 0; k < n_fft; ++k)
    out.column_names.push_back("f" + std::to_string(k));
  return out;
}

Dataset apply_steps(const Dataset& data, const std::vector<std::string>& steps,
                    const StftOptions& stft) {
  Dataset current = data;
  for (const auto& step : steps) {
    if (step == "standardize") {
      current = standardize(current).data;
    } else if (step == "subtract-min") {
      current = subtract_min(current).data;
    } else if (step == "unit-variance") {
      current = scale_unit_variance(current).data;
    } else if (step == "whiten") {
      current = cholesky_whiten(current);
    } else if (step == "stft") {
      if (current.d() != 1)
        throw std::invalid_argument(
            "stft step expects a single-column waveform");
      if (!current.fully_observed())
        throw std::invalid_argument("stft step expects no missing samples");
      std::vector<double> samples(current.n());
      for (int r = 0; r < current.n(); ++r) samples[r] = current.x(r, 0);
      current =
          stft_spectrogram(samples, stft.n_fft, StftWindow::kHanning, stft.hop);
    } else {
      throw std::invalid_argument("unknown preprocessing step: " + step);
    }
  }
  return current;
}

}  // namespace plfm
