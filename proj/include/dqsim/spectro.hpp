#pragma once

// FFT spectra of voltage records and single-peak line-shape fitting.

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "dqsim/photophysics.hpp"

namespace dqsim {

enum class Window { rectangular, hann };

/// Single-sided amplitude spectrum of v₁. Magnitudes are normalized by the
/// window's coherent gain so a sinusoid of amplitude a centred on a bin reads
/// a. `bins` holds the complex values under the same normalization.
struct Spectrum {
  std::vector<double> frequency;  ///< Hz, k/T
  std::vector<double> magnitude;  ///< V
  std::vector<std::complex<double>> bins;
  double record_length = 0.0;  ///< T, s
  double sample_rate = 0.0;    ///< Hz
  std::size_t samples = 0;     ///< N
  Window window = Window::rectangular;
  double window_sum = 0.0;  ///< Σ w_n

  double bin_spacing() const { return 1.0 / record_length; }
  /// Σ (w_n v_n)² reconstructed from the magnitudes (Parseval).
  double windowed_power() const;
};

/// Requires at least 16 samples.
Spectrum power_spectrum(const TimeTrace& trace, Window window = Window::rectangular);

/// Σ (w_n v_n)² computed directly in the time domain.
double windowed_signal_power(const TimeTrace& trace, Window window);

enum class LineShape {
  /// Exact spectrum of a windowed, sampled, non-decaying sinusoid (Dirichlet
  /// kernel for the rectangular window) including the negative-frequency
  /// image, with a width-scale parameter. Fitted to the complex bins.
  windowed_sinusoid,
  /// Lorentzian fitted to the power spectrum, for decaying signals. The
  /// reported amplitude is the square root of the peak power.
  lorentzian,
};

struct FrequencyBand {
  double low = 0.0;   ///< Hz
  double high = 0.0;  ///< Hz
};

struct FitOptions {
  LineShape line_shape = LineShape::windowed_sinusoid;
  int half_width_bins = 4;  ///< bins fitted on each side of the peak
  int max_iterations = 200;
  double dominance = 5.0;  ///< peak must exceed dominance × band median
};

struct PeakFit {
  double center_frequency = 0.0;  ///< f̂, Hz
  double linewidth = 0.0;         ///< FWHM of the fitted line shape, Hz
  double amplitude = 0.0;         ///< V
  double phase = 0.0;             ///< rad, at the first sample (windowed sinusoid only)
  double width_scale = 1.0;       ///< fitted line width relative to the ideal record
  double sigma_frequency = 0.0;   ///< σ_f from the residual-scaled covariance, Hz
  double sigma_linewidth = 0.0;   ///< Hz
  double sigma_amplitude = 0.0;   ///< V
  double residual_norm = 0.0;     ///< V
  int iterations = 0;
};

/// Levenberg-Marquardt fit of the dominant peak inside `band`. Throws
/// DetectionError without a dominant peak and FitError on non-convergence.
PeakFit fit_peak(const Spectrum& spectrum, FrequencyBand band, const FitOptions& options = {});

/// FWHM, in units of bins, of the ideal line shape of the window for an
/// N-sample record (1.2067 for a long rectangular record).
double ideal_linewidth_bins(Window window, std::size_t samples);

/// Produces the record analysed for a given length and seed.
using TraceFactory = std::function<TimeTrace(double record_length, std::uint64_t seed)>;

struct ScalingOptions {
  FrequencyBand band;
  FitOptions fit;
  Window window = Window::rectangular;
  std::size_t seeds = 1;
  std::uint64_t base_seed = 0;
};

struct ScalingRow {
  double record_length = 0.0;
  std::uint64_t seed = 0;
  PeakFit fit;
};

struct ScalingPoint {
  double record_length = 0.0;
  double value = 0.0;  ///< mean FWHM (resolution) or std of f̂ (precision), Hz
  double sigma = 0.0;  ///< statistical uncertainty of `value`
  double mean_center = 0.0;
  double mean_sigma_frequency = 0.0;  ///< average fit-reported σ_f
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;
  std::vector<ScalingPoint> points;
  double slope = 0.0;  ///< d log(value) / d log(T)
  double slope_sigma = 0.0;
  double intercept = 0.0;
};

/// Seed used for replicate `replicate` at record index `t_index`.
std::uint64_t scaling_seed(std::uint64_t base_seed, std::size_t t_index, std::size_t replicate);

/// FWHM per record length and its log-log slope. Record lengths must span at
/// least 1.5 decades.
ScalingStudy resolution_vs_time(const TraceFactory& factory, const std::vector<double>& lengths,
                                const ScalingOptions& options);

/// Monte Carlo scatter of f̂ per record length (at least 50 seeds) and its
/// log-log slope.
ScalingStudy precision_vs_time(const TraceFactory& factory, const std::vector<double>& lengths,
                               const ScalingOptions& options);

/// a·cos(2πf t + φ) plus white noise of one-sided density ν (V/√Hz), no
/// reference channel.
TimeTrace sinusoid_trace(double frequency, double amplitude, double phase, double sample_rate,
                         double record_length, double noise_density = 0.0,
                         std::uint64_t seed = 0);

}  // namespace dqsim
