#pragma once

#include <string>
#include <vector>

#include "plfm/types.hpp"

namespace plfm {

// Per-column transform parameters computed from observed cells only.
struct ColumnTransform {
  double mean = 0.0;
  double sd = 1.0;        // population standard deviation
  double post_shift = 0.0;  // amount subtracted after scaling
};

struct PreprocessResult {
  Dataset data;
  std::vector<ColumnTransform> transforms;
};

// Zero mean, unit population variance per column. Columns need at least two
// distinct observed values.
PreprocessResult standardize(const Dataset& data);
// Subtract the observed column minimum.
PreprocessResult subtract_min(const Dataset& data);
// Unit variance without centering (the variance-only reading of the
// spectrogram scaling).
PreprocessResult scale_unit_variance(const Dataset& data);
// standardize followed by subtract_min; columns end up nonnegative with the
// observed minimum at zero.
PreprocessResult standardize_and_shift(const Dataset& data);

// Apply a stored column transform: x -> (x - mean)/sd - post_shift. Used to
// map held-out truth into the preprocessed space.
Dataset apply_column_transforms(const Dataset& data,
                                const std::vector<ColumnTransform>& transforms);

// x -> L^{-1}(x - mean) with L the lower Cholesky factor of the sample
// covariance (1/(N-1) normalisation). Requires fully observed data and a
// positive-definite covariance.
Dataset cholesky_whiten(const Dataset& data);

enum class StftWindow { kHanning };

// Magnitude spectrogram: frames of n_fft samples at stride hop, Hanning
// windowed, n_fft DFT magnitude bins per frame. Frame t covers samples
// [t*hop, t*hop + n_fft).
Dataset stft_spectrogram(const std::vector<double>& samples, int n_fft,
                         StftWindow window, int hop);

// Ordered preprocessing pipeline used by the CLI; steps are
// standardize | subtract-min | unit-variance | whiten | stft.
struct StftOptions {
  int n_fft = 128;
  int hop = 128;
};
Dataset apply_steps(const Dataset& data, const std::vector<std::string>& steps,
                    const StftOptions& stft);

}  // namespace plfm
