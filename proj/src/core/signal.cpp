#include "stresscal/signal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>

#include "stresscal/error.hpp"

namespace stresscal {

const char* signal_kind_name(SignalKind kind) noexcept {
  return kind == SignalKind::ecg ? "ecg" : "eda";
}

void SignalRecording::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    fail(ErrorKind::parameter, "sample rate must be positive");
  }
  if (samples.empty()) fail(ErrorKind::empty_input, "signal recording has no samples");
}

IBISeries IBISeries::from_intervals(std::vector<double> intervals_ms, double origin_ms) {
  IBISeries s;
  s.origin_ms = origin_ms;
  s.intervals_ms = std::move(intervals_ms);
  s.t_ms.reserve(s.intervals_ms.size());
  double t = 0.0;
  for (double v : s.intervals_ms) {
    t += v;
    s.t_ms.push_back(t);
  }
  s.validate();
  return s;
}

void IBISeries::validate() const {
  if (t_ms.size() != intervals_ms.size()) fail(ErrorKind::shape, "IBI time axis length mismatch");
  for (std::size_t i = 0; i < intervals_ms.size(); ++i) {
    if (!(intervals_ms[i] > 0.0) || !std::isfinite(intervals_ms[i])) {
      fail(ErrorKind::parameter, "IBI " + std::to_string(i) + " is not a positive interval");
    }
    if (i > 0 && !(t_ms[i] > t_ms[i - 1])) {
      fail(ErrorKind::parameter, "IBI time axis is not strictly increasing");
    }
  }
}

std::complex<double> Biquad::response(double freq_hz, double sample_rate_hz) const {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

namespace {

void check_design(int order, double cutoff_hz, double sample_rate_hz) {
  if (order <= 0 || order % 2 != 0) {
    fail(ErrorKind::parameter, "filter order must be a positive even number, got " +
                                   std::to_string(order));
  }
  if (!(sample_rate_hz > 0.0)) fail(ErrorKind::parameter, "sample rate must be positive");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0) {
    fail(ErrorKind::parameter, "cutoff " + std::to_string(cutoff_hz) +
                                   " Hz must lie in (0, Nyquist = " +
                                   std::to_string(sample_rate_hz / 2.0) + " Hz)");
  }
}

SectionCascade butterworth_sections(int order, double cutoff_hz, double sample_rate_hz,
                                    bool highpass) {
  check_design(order, cutoff_hz, sample_rate_hz);
  // Pre-warped analog prototype: the bilinear map puts the -3 dB point at cutoff_hz.
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double k2 = k * k;
  SectionCascade sections;
  for (int i = 0; i < order / 2; ++i) {
    const double angle = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order);
    const double q = 1.0 / (2.0 * std::cos(angle));
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad s;
    if (highpass) {
      s.b0 = norm;
      s.b1 = -2.0 * norm;
    } else {
      s.b0 = k2 * norm;
      s.b1 = 2.0 * s.b0;
    }
    s.b2 = s.b0;
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - k / q + k2) * norm;
    sections.push_back(s);
  }
  return sections;
}

// Transposed direct form II state.
struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

double step(const Biquad& s, SectionState& st, double x) {
  const double y = s.b0 * x + st.z1;
  st.z1 = s.b1 * x - s.a1 * y + st.z2;
  st.z2 = s.b2 * x - s.a2 * y;
  return y;
}

// In-place cascade pass. With `steady` the states start as if the first
// input value had been applied forever.
void run_cascade(const SectionCascade& sections, std::vector<double>& x, bool steady) {
  if (x.empty()) return;
  std::vector<SectionState> states(sections.size());
  if (steady) {
    double level = x.front();
    for (std::size_t i = 0; i < sections.size(); ++i) {
      const Biquad& s = sections[i];
      const double y = s.dc_gain() * level;
      states[i].z2 = s.b2 * level - s.a2 * y;
      states[i].z1 = s.b1 * level - s.a1 * y + states[i].z2;
      level = y;
    }
  }
  for (double& v : x) {
    double y = v;
    for (std::size_t i = 0; i < sections.size(); ++i) y = step(sections[i], states[i], y);
    v = y;
  }
}

}  // namespace

SectionCascade butterworth_lowpass_sections(int order, double cutoff_hz, double sample_rate_hz) {
  return butterworth_sections(order, cutoff_hz, sample_rate_hz, false);
}

SectionCascade butterworth_highpass_sections(int order, double cutoff_hz, double sample_rate_hz) {
  return butterworth_sections(order, cutoff_hz, sample_rate_hz, true);
}

double cascade_gain(const SectionCascade& sections, double freq_hz, double sample_rate_hz) {
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= s.response(freq_hz, sample_rate_hz);
  return std::abs(h);
}

std::vector<double> filter_forward(const SectionCascade& sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_cascade(sections, y, false);
  return y;
}

std::vector<double> filtfilt(const SectionCascade& sections, std::span<const double> x,
                             std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  // Odd reflection about the end points keeps level and slope continuous.
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_cascade(sections, ext, true);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, ext, true);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

SignalRecording butterworth_lowpass(const SignalRecording& x, const FilterSpec& spec) {
  x.validate();
  const SectionCascade sections =
      butterworth_lowpass_sections(spec.order, spec.cutoff_hz, x.sample_rate_hz);
  SignalRecording out = x;
  out.samples = filtfilt(sections, x.samples, static_cast<std::size_t>(3 * spec.order));
  return out;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window == 0) fail(ErrorKind::parameter, "moving-average window must hold at least 1 sample");
  const std::size_t n = x.size();
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window - 1 - left;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n, i + right + 1);
    out[i] = static_cast<double>((prefix[hi] - prefix[lo]) / static_cast<long double>(hi - lo));
  }
  return out;
}

SignalRecording moving_average(const SignalRecording& x, double window_s) {
  x.validate();
  const double samples = std::round(window_s * x.sample_rate_hz);
  if (!(samples >= 1.0)) {
    fail(ErrorKind::parameter, "smoothing window of " + std::to_string(window_s) +
                                   " s is shorter than one sample");
  }
  SignalRecording out = x;
  out.samples = moving_average(x.samples, static_cast<std::size_t>(samples));
  return out;
}

namespace {

// Centered running maximum over `window` samples.
std::vector<double> running_max(std::span<const double> x, std::size_t window) {
  const std::size_t n = x.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  std::deque<std::size_t> dq;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + half);
    while (next <= hi) {
      while (!dq.empty() && x[dq.back()] <= x[next]) dq.pop_back();
      dq.push_back(next++);
    }
    const std::size_t lo = i >= half ? i - half : 0;
    while (dq.front() < lo) dq.pop_front();
    out[i] = x[dq.front()];
  }
  return out;
}

}  // namespace

std::vector<std::size_t> detect_r_peak_indices(const SignalRecording& ecg,
                                               const RPeakOptions& options) {
  ecg.validate();
  if (ecg.kind != SignalKind::ecg) fail(ErrorKind::parameter, "R-peak detection needs an ECG recording");
  const double fs = ecg.sample_rate_hz;
  if (options.band_high_hz >= fs / 2.0) {
    fail(ErrorKind::parameter, "ECG sample rate " + std::to_string(fs) +
                                   " Hz is too low for the QRS band-pass");
  }
  SectionCascade band = butterworth_highpass_sections(2, options.band_low_hz, fs);
  const SectionCascade low = butterworth_lowpass_sections(2, options.band_high_hz, fs);
  band.insert(band.end(), low.begin(), low.end());

  std::vector<double> energy = filtfilt(band, ecg.samples, 3 * 4);
  for (double& v : energy) v *= v;
  const auto integration =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(options.integration_window_s * fs)));
  const std::vector<double> integrated = moving_average(energy, integration);
  const auto thr_window =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(options.threshold_window_s * fs)));
  const std::vector<double> local_max = running_max(integrated, thr_window);
  const double global_max = *std::max_element(integrated.begin(), integrated.end());
  if (!(global_max > 0.0)) return {};
  // Noise floor from the typical beat energy, so beat-free stretches (a
  // trailing segment longer than half the threshold window) stay silent.
  std::vector<double> levels = local_max;
  std::nth_element(levels.begin(), levels.begin() + levels.size() / 2, levels.end());
  const double floor = std::max(1e-10 * global_max, 0.1 * levels[levels.size() / 2]);

  const auto radius = static_cast<std::size_t>(std::lround(options.search_radius_s * fs));
  const std::size_t n = integrated.size();
  struct Candidate {
    std::size_t index;
    double strength;
  };
  std::vector<Candidate> candidates;
  std::size_t i = 0;
  while (i < n) {
    if (!(integrated[i] > options.threshold_fraction * local_max[i] && integrated[i] > floor)) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    double strength = integrated[i];
    while (i < n && integrated[i] > options.threshold_fraction * local_max[i] &&
           integrated[i] > floor) {
      strength = std::max(strength, integrated[i]);
      ++i;
    }
    const std::size_t lo = begin >= radius ? begin - radius : 0;
    const std::size_t hi = std::min(n, i + radius);
    std::size_t best = lo;
    for (std::size_t j = lo; j < hi; ++j) {
      if (ecg.samples[j] > ecg.samples[best]) best = j;
    }
    candidates.push_back({best, strength});
  }

  const auto refractory = static_cast<std::size_t>(std::lround(options.refractory_s * fs));
  std::vector<Candidate> kept;
  for (const Candidate& c : candidates) {
    if (!kept.empty() && c.index - kept.back().index < refractory) {
      if (c.strength > kept.back().strength) kept.back() = c;
      continue;
    }
    if (!kept.empty() && c.index == kept.back().index) continue;
    kept.push_back(c);
  }
  std::vector<std::size_t> peaks;
  peaks.reserve(kept.size());
  for (const auto& c : kept) peaks.push_back(c.index);
  return peaks;
}

IBISeries detect_r_peaks(const SignalRecording& ecg, const RPeakOptions& options) {
  const std::vector<std::size_t> peaks = detect_r_peak_indices(ecg, options);
  if (peaks.size() < 2) {
    fail(ErrorKind::insufficient_data, "insufficient signal: detected " +
                                           std::to_string(peaks.size()) + " R-peak(s), need 2");
  }
  const double ms_per_sample = 1000.0 / ecg.sample_rate_hz;
  std::vector<double> intervals;
  double origin = -1.0;
  for (std::size_t k = 1; k < peaks.size(); ++k) {
    const double ibi = static_cast<double>(peaks[k] - peaks[k - 1]) * ms_per_sample;
    if (ibi < options.min_ibi_ms || ibi > options.max_ibi_ms) continue;
    if (origin < 0.0) origin = static_cast<double>(peaks[k - 1]) * ms_per_sample;
    intervals.push_back(ibi);
  }
  if (intervals.empty()) {
    fail(ErrorKind::insufficient_data, "insufficient signal: no physiologically plausible intervals");
  }
  return IBISeries::from_intervals(std::move(intervals), origin);
}

SCREventList detect_scr_events(const SignalRecording& eda, double threshold_us_per_s) {
  eda.validate();
  const std::vector<double>& r = eda.samples;
  const double fs = eda.sample_rate_hz;
  const std::size_t n = r.size();
  auto slope = [&](std::size_t k) { return (r[k] - r[k - 1]) * fs; };
  auto event = [&](std::size_t k) { return SCREvent{k, static_cast<double>(k) / fs, r[k]}; };

  SCREventList out;
  // slope(k) is defined for k >= 1; an onset needs slope(k-1) below threshold.
  std::size_t k = 2;
  while (k < n) {
    if (!(slope(k) > threshold_us_per_s && slope(k - 1) <= threshold_us_per_s)) {
      ++k;
      continue;
    }
    const std::size_t onset = k - 1;
    std::size_t m = k;
    while (m + 1 < n && r[m + 1] > r[m]) ++m;
    if (m + 1 >= n) break;  // still rising at the end: unpaired onset
    out.onsets.push_back(event(onset));
    out.peaks.push_back(event(m));
    k = m + 2;
  }
  return out;
}

}  // namespace stresscal
