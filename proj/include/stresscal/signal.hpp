#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stresscal {

enum class SignalKind { ecg, eda };

const char* signal_kind_name(SignalKind kind) noexcept;

struct SignalRecording {
  SignalKind kind = SignalKind::ecg;
  double sample_rate_hz = 0.0;
  std::vector<double> samples;
  std::string units;  // mV for ECG, uS for EDA

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
  void validate() const;
};

// Inter-beat intervals in ms. t_ms[i] is the sum of intervals_ms[0..i];
// origin_ms places t = 0 on the recording clock (the first retained R-peak).
struct IBISeries {
  std::vector<double> intervals_ms;
  std::vector<double> t_ms;
  double origin_ms = 0.0;

  static IBISeries from_intervals(std::vector<double> intervals_ms, double origin_ms = 0.0);
  std::size_t size() const { return intervals_ms.size(); }
  double duration_ms() const { return t_ms.empty() ? 0.0 : t_ms.back(); }
  void validate() const;
};

struct FilterSpec {
  double cutoff_hz = 4.0;
  int order = 4;
  double smoothing_window_s = 1.0;
};

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
  std::complex<double> response(double freq_hz, double sample_rate_hz) const;
};

using SectionCascade = std::vector<Biquad>;

// Butterworth designs via the bilinear transform with frequency pre-warping.
// order must be a positive even number.
SectionCascade butterworth_lowpass_sections(int order, double cutoff_hz, double sample_rate_hz);
SectionCascade butterworth_highpass_sections(int order, double cutoff_hz, double sample_rate_hz);

double cascade_gain(const SectionCascade& sections, double freq_hz, double sample_rate_hz);

// Single causal pass from zero initial state.
std::vector<double> filter_forward(const SectionCascade& sections, std::span<const double> x);

// Zero-phase forward-backward filtering with odd reflection padding of
// `pad` samples per side and steady-state initial conditions.
std::vector<double> filtfilt(const SectionCascade& sections, std::span<const double> x,
                             std::size_t pad);

SignalRecording butterworth_lowpass(const SignalRecording& x, const FilterSpec& spec);

// Centered moving average; edge windows are truncated.
std::vector<double> moving_average(std::span<const double> x, std::size_t window);
SignalRecording moving_average(const SignalRecording& x, double window_s);

struct RPeakOptions {
  double band_low_hz = 5.0;
  double band_high_hz = 15.0;
  double integration_window_s = 0.150;
  double threshold_fraction = 0.5;
  double threshold_window_s = 2.0;
  double refractory_s = 0.200;
  double search_radius_s = 0.075;
  double min_ibi_ms = 300.0;
  double max_ibi_ms = 2000.0;
};

// Sample indices of detected R-peaks, ascending.
std::vector<std::size_t> detect_r_peak_indices(const SignalRecording& ecg,
                                               const RPeakOptions& options = {});

// Peaks -> intervals, dropping intervals outside [min_ibi_ms, max_ibi_ms].
IBISeries detect_r_peaks(const SignalRecording& ecg, const RPeakOptions& options = {});

struct SCREvent {
  std::size_t index = 0;
  double time_s = 0.0;
  double conductance_us = 0.0;
};

struct SCREventList {
  std::vector<SCREvent> onsets;
  std::vector<SCREvent> peaks;  // peaks[i] pairs with onsets[i]
};

inline constexpr double kDefaultScrThreshold = 0.01;  // uS/s

SCREventList detect_scr_events(const SignalRecording& eda,
                               double threshold_us_per_s = kDefaultScrThreshold);

}  // namespace stresscal
