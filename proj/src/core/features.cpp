#include "stresscal/features.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_fft_real.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <string>

#include "parallel.hpp"
#include "stresscal/diag.hpp"
#include "stresscal/error.hpp"
#include "stresscal/stats.hpp"

namespace stresscal {

void FeatureVector::add(std::string name, double value) {
  names_.push_back(std::move(name));
  values_.push_back(value);
}

void FeatureVector::append(const FeatureVector& other) {
  names_.insert(names_.end(), other.names_.begin(), other.names_.end());
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
}

double FeatureVector::at(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return values_[i];
  }
  fail(ErrorKind::usage, "no feature named '" + std::string(name) + "'");
}

bool FeatureVector::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

bool FeatureVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::vector<WindowRange> sliding_windows(const IBISeries& series, double length_s) {
  if (!(length_s > 0.0)) fail(ErrorKind::parameter, "window length must be positive");
  const double length_ms = length_s * 1000.0;
  constexpr double eps = 1e-6;
  const std::size_t n = series.size();
  if (n == 0 || series.duration_ms() < length_ms - eps) {
    fail(ErrorKind::insufficient_data,
         "series of " + std::to_string(series.duration_ms() / 1000.0) +
             " s is shorter than one " + std::to_string(length_s) + " s window");
  }
  std::vector<WindowRange> out;
  std::size_t end = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double start = series.t_ms[i] - series.intervals_ms[i];
    if (series.t_ms.back() - start < length_ms - eps) break;
    end = std::max(end, i);
    while (end < n && series.t_ms[end] - start <= length_ms + eps) ++end;
    out.push_back({i, end});
  }
  return out;
}

std::vector<WindowRange> sliding_windows(const SignalRecording& signal, const WindowSpec& spec) {
  signal.validate();
  if (!(spec.length_s > 0.0)) fail(ErrorKind::parameter, "window length must be positive");
  if (spec.step == 0) fail(ErrorKind::parameter, "window step must be at least 1 sample");
  const auto width = static_cast<std::size_t>(std::llround(spec.length_s * signal.sample_rate_hz));
  if (width == 0 || signal.samples.size() < width) {
    fail(ErrorKind::insufficient_data,
         "signal of " + std::to_string(signal.duration_s()) + " s is shorter than one " +
             std::to_string(spec.length_s) + " s window");
  }
  std::vector<WindowRange> out;
  for (std::size_t b = 0; b + width <= signal.samples.size(); b += spec.step) {
    out.push_back({b, b + width});
  }
  return out;
}

namespace {

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double ss = 0.0;
  for (double v : x) ss += v * v;
  return std::sqrt(ss / static_cast<double>(x.size()));
}

double percent_exceeding(std::span<const double> diffs, double limit_ms) {
  if (diffs.empty()) return 0.0;
  const auto count =
      std::count_if(diffs.begin(), diffs.end(), [&](double d) { return std::abs(d) > limit_ms; });
  return 100.0 * static_cast<double>(count) / static_cast<double>(diffs.size());
}

void require_intervals(std::span<const double> ibi, std::size_t minimum, const char* what) {
  if (ibi.size() < minimum) {
    fail(ErrorKind::insufficient_data, std::string(what) + " needs at least " +
                                           std::to_string(minimum) + " intervals, got " +
                                           std::to_string(ibi.size()));
  }
}

}  // namespace

FeatureVector hrv_time_features(std::span<const double> ibi_ms) {
  require_intervals(ibi_ms, 3, "HRV time-domain features");
  const std::vector<double> d = stats::diff(ibi_ms);
  const double sdrr = stats::stddev(ibi_ms);
  const double rmssd = rms(d);
  FeatureVector fv;
  fv.add("MEAN_RR", stats::mean(ibi_ms));
  fv.add("MEDIAN_RR", stats::median(ibi_ms));
  fv.add("SDRR", sdrr);
  fv.add("SKEW_RR", stats::skewness(ibi_ms));
  fv.add("KURT_RR", stats::kurtosis(ibi_ms));
  fv.add("RMSSD", rmssd);
  fv.add("SDSD", stats::stddev(d));
  fv.add("SDRR_RMSSD", rmssd > 0.0 ? sdrr / rmssd : 0.0);
  fv.add("pNN25", percent_exceeding(d, 25.0));
  fv.add("pNN50", percent_exceeding(d, 50.0));
  return fv;
}

std::vector<double> relative_rr_series(std::span<const double> ibi_ms) {
  std::vector<double> out;
  if (ibi_ms.size() < 2) return out;
  out.reserve(ibi_ms.size() - 1);
  for (std::size_t i = 1; i < ibi_ms.size(); ++i) {
    out.push_back(2.0 * (ibi_ms[i] - ibi_ms[i - 1]) / (ibi_ms[i] + ibi_ms[i - 1]));
  }
  return out;
}

RelativeRR relative_rr(std::span<const double> ibi_ms) {
  require_intervals(ibi_ms, 2, "relative RR");
  RelativeRR out;
  out.series = relative_rr_series(ibi_ms);
  const std::vector<double> d = stats::diff(out.series);
  out.stats.add("REL_RR_MEAN", stats::mean(out.series));
  out.stats.add("REL_RR_MEDIAN", stats::median(out.series));
  out.stats.add("REL_RR_SDRR", stats::stddev(out.series));
  out.stats.add("REL_RR_RMSSD", rms(d));
  out.stats.add("REL_RR_SDSD", stats::stddev(d));
  out.stats.add("REL_RR_SKEW", stats::skewness(out.series));
  out.stats.add("REL_RR_KURT", stats::kurtosis(out.series));
  return out;
}

Poincare poincare_descriptors(std::span<const double> ibi_ms) {
  require_intervals(ibi_ms, 3, "Poincare descriptors");
  const double sdrr = stats::stddev(ibi_ms);
  const std::vector<double> d = stats::diff(ibi_ms);
  const double sdsd = stats::stddev(d);
  double radicand = 2.0 * sdrr * sdrr - 0.5 * sdsd * sdsd;
  if (radicand < 0.0) {
    warn("SD2 radicand " + std::to_string(radicand) + " clamped to 0");
    radicand = 0.0;
  }
  return {sdsd / std::numbers::sqrt2, std::sqrt(radicand)};
}

namespace {

struct SplineDeleter {
  void operator()(gsl_spline* s) const { gsl_spline_free(s); }
};
struct AccelDeleter {
  void operator()(gsl_interp_accel* a) const { gsl_interp_accel_free(a); }
};
struct WavetableDeleter {
  void operator()(gsl_fft_real_wavetable* w) const { gsl_fft_real_wavetable_free(w); }
};
struct WorkspaceDeleter {
  void operator()(gsl_fft_real_workspace* w) const { gsl_fft_real_workspace_free(w); }
};

// GSL's default handler aborts; errors are reported through return codes instead.
void disable_gsl_abort() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

std::vector<double> spline_resample(std::span<const double> t_s, std::span<const double> y,
                                    double rate_hz) {
  disable_gsl_abort();
  std::unique_ptr<gsl_spline, SplineDeleter> spline(gsl_spline_alloc(gsl_interp_cspline, t_s.size()));
  std::unique_ptr<gsl_interp_accel, AccelDeleter> accel(gsl_interp_accel_alloc());
  if (gsl_spline_init(spline.get(), t_s.data(), y.data(), t_s.size()) != GSL_SUCCESS) {
    fail(ErrorKind::parameter, "cubic spline initialisation failed");
  }
  const double t0 = t_s.front();
  const double span = t_s.back() - t0;
  const auto count = static_cast<std::size_t>(std::floor(span * rate_hz + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double t = std::min(t0 + static_cast<double>(j) / rate_hz, t_s.back());
    out[j] = gsl_spline_eval(spline.get(), t, accel.get());
  }
  return out;
}

// One-sided Welch PSD (density scaling) with periodic Hann windows.
std::vector<double> welch_psd(std::span<const double> x, double fs, std::size_t segment,
                              std::size_t step) {
  disable_gsl_abort();
  std::vector<double> window(segment);
  double window_power = 0.0;
  for (std::size_t i = 0; i < segment; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(segment));
    window_power += window[i] * window[i];
  }
  std::unique_ptr<gsl_fft_real_wavetable, WavetableDeleter> table(gsl_fft_real_wavetable_alloc(segment));
  std::unique_ptr<gsl_fft_real_workspace, WorkspaceDeleter> work(gsl_fft_real_workspace_alloc(segment));

  const std::size_t bins = segment / 2 + 1;
  std::vector<double> psd(bins, 0.0);
  std::vector<double> buf(segment);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + segment <= x.size(); start += step) {
    for (std::size_t i = 0; i < segment; ++i) buf[i] = x[start + i] * window[i];
    if (gsl_fft_real_transform(buf.data(), 1, segment, table.get(), work.get()) != GSL_SUCCESS) {
      fail(ErrorKind::parameter, "FFT failed");
    }
    // Half-complex layout: buf[0] = Re X0, (buf[2k-1], buf[2k]) = X_k.
    psd[0] += buf[0] * buf[0];
    for (std::size_t k = 1; k < bins; ++k) {
      if (2 * k == segment) {
        psd[k] += buf[segment - 1] * buf[segment - 1];
      } else {
        psd[k] += buf[2 * k - 1] * buf[2 * k - 1] + buf[2 * k] * buf[2 * k];
      }
    }
    ++segments;
  }
  const double scale = 1.0 / (fs * window_power * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || 2 * k == segment;
    psd[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

}  // namespace

BandPowers hrv_frequency_features(std::span<const double> ibi_ms, const FrequencyBands& bands) {
  require_intervals(ibi_ms, 3, "HRV frequency features");
  std::vector<double> t_s(ibi_ms.size());
  double t = 0.0;
  for (std::size_t i = 0; i < ibi_ms.size(); ++i) {
    t += ibi_ms[i];
    t_s[i] = t / 1000.0;
  }
  std::vector<double> uniform = spline_resample(t_s, ibi_ms, bands.resample_hz);
  const double m = stats::mean(uniform);
  for (double& v : uniform) v -= m;

  const auto segment = static_cast<std::size_t>(std::llround(bands.segment_s * bands.resample_hz));
  if (segment < 2 || uniform.size() < segment) {
    fail(ErrorKind::insufficient_data, "HRV spectrum needs at least " +
                                           std::to_string(bands.segment_s) + " s of intervals");
  }
  const auto step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(segment) * (1.0 - bands.overlap))));
  const std::vector<double> psd = welch_psd(uniform, bands.resample_hz, segment, step);
  const double df = bands.resample_hz / static_cast<double>(segment);

  BandPowers p;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    if (f >= bands.vlf_low_hz && f < bands.vlf_high_hz) {
      p.vlf += psd[k] * df;
    } else if (f >= bands.vlf_high_hz && f < bands.lf_high_hz) {
      p.lf += psd[k] * df;
    } else if (f >= bands.lf_high_hz && f < bands.hf_high_hz) {
      p.hf += psd[k] * df;
    }
  }
  p.lf_hf = p.hf > 0.0 ? p.lf / p.hf : 0.0;
  return p;
}

std::vector<std::string> hrv_feature_names() {
  return {"MEAN_RR",     "MEDIAN_RR",     "SDRR",         "SKEW_RR",      "KURT_RR",
          "RMSSD",       "SDSD",          "SDRR_RMSSD",   "pNN25",        "pNN50",
          "SD1",         "SD2",           "REL_RR_MEAN",  "REL_RR_MEDIAN", "REL_RR_SDRR",
          "REL_RR_RMSSD", "REL_RR_SDSD",  "REL_RR_SKEW",  "REL_RR_KURT",  "VLF",
          "LF",          "HF",            "LF_HF"};
}

FeatureVector hrv_features(std::span<const double> ibi_ms, const FrequencyBands& bands) {
  FeatureVector fv = hrv_time_features(ibi_ms);
  const Poincare pc = poincare_descriptors(ibi_ms);
  fv.add("SD1", pc.sd1);
  fv.add("SD2", pc.sd2);
  fv.append(relative_rr(ibi_ms).stats);
  const BandPowers bp = hrv_frequency_features(ibi_ms, bands);
  fv.add("VLF", bp.vlf);
  fv.add("LF", bp.lf);
  fv.add("HF", bp.hf);
  fv.add("LF_HF", bp.lf_hf);
  return fv;
}

SCREventList restrict_events(const SCREventList& events, WindowRange window) {
  SCREventList out;
  const std::size_t pairs = std::min(events.onsets.size(), events.peaks.size());
  for (std::size_t i = 0; i < pairs; ++i) {
    SCREvent onset = events.onsets[i];
    SCREvent peak = events.peaks[i];
    if (onset.index < window.begin || peak.index >= window.end) continue;
    onset.index -= window.begin;
    peak.index -= window.begin;
    out.onsets.push_back(onset);
    out.peaks.push_back(peak);
  }
  return out;
}

std::vector<std::string> eda_feature_names() {
  return {"MEAN_SC",   "MAX_SC",     "MIN_SC",     "RANGE_SC",   "KURT_SC",  "SKEW_SC",
          "MEAN_D1",   "STD_D1",     "MEAN_D2",    "STD_D2",     "PEAK_MEAN", "PEAK_MAX",
          "PEAK_MIN",  "PEAK_STD",   "ONSET_MEAN", "ONSET_MAX",  "ONSET_MIN", "ONSET_STD",
          "ALSC",      "INSC",       "APSC",       "RMSC"};
}

namespace {

void add_amplitude_stats(FeatureVector& fv, const std::string& prefix,
                         const std::vector<SCREvent>& events) {
  std::vector<double> amp;
  amp.reserve(events.size());
  for (const auto& e : events) amp.push_back(e.conductance_us);
  fv.add(prefix + "_MEAN", stats::mean(amp));
  fv.add(prefix + "_MAX", stats::max(amp));
  fv.add(prefix + "_MIN", stats::min(amp));
  fv.add(prefix + "_STD", stats::stddev(amp));
}

}  // namespace

FeatureVector eda_features(std::span<const double> scr, const SCREventList& events_in_window) {
  if (scr.empty()) fail(ErrorKind::empty_input, "EDA window is empty");
  const std::vector<double> d1 = stats::diff(scr);
  const std::vector<double> d2 = stats::diff(d1);
  const double hi = stats::max(scr);
  const double lo = stats::min(scr);

  double arc = 0.0;
  for (double d : d1) arc += std::sqrt(1.0 + d * d);
  double integral = 0.0;
  double power = 0.0;
  for (double v : scr) {
    integral += std::abs(v);
    power += v * v;
  }
  power /= static_cast<double>(scr.size());

  FeatureVector fv;
  fv.add("MEAN_SC", stats::mean(scr));
  fv.add("MAX_SC", hi);
  fv.add("MIN_SC", lo);
  fv.add("RANGE_SC", hi - lo);
  fv.add("KURT_SC", stats::kurtosis(scr));
  fv.add("SKEW_SC", stats::skewness(scr));
  fv.add("MEAN_D1", stats::mean(d1));
  fv.add("STD_D1", stats::stddev(d1));
  fv.add("MEAN_D2", stats::mean(d2));
  fv.add("STD_D2", stats::stddev(d2));
  add_amplitude_stats(fv, "PEAK", events_in_window.peaks);
  add_amplitude_stats(fv, "ONSET", events_in_window.onsets);
  fv.add("ALSC", arc);
  fv.add("INSC", integral);
  fv.add("APSC", power);
  fv.add("RMSC", std::sqrt(power));
  return fv;
}

namespace {

struct WindowRow {
  double start_s;
  double end_s;
  std::vector<double> features;
  bool zero_denominator = false;
};

// Condition whose interval holds the whole window, or nullptr. Sets
// `straddles` when the window end lies in a condition that does not also
// hold its start.
const ConditionInterval* condition_for(const std::vector<ConditionInterval>& conditions,
                                       double start_s, double end_s, bool& straddles) {
  constexpr double eps = 1e-9;
  straddles = false;
  for (const auto& c : conditions) {
    if (end_s > c.start_s + eps && end_s <= c.end_s + eps) {
      if (start_s >= c.start_s - eps) return &c;
      straddles = true;
      return nullptr;
    }
  }
  return nullptr;
}

std::vector<WindowRow> hrv_rows(const SubjectRecording& subject, const ExtractionOptions& options) {
  IBISeries ibi = subject.ibi ? *subject.ibi : detect_r_peaks(*subject.ecg, options.rpeak);
  std::vector<WindowRow> rows;
  const std::vector<WindowRange> windows = sliding_windows(ibi, options.hrv_window_s);
  rows.reserve(windows.size());
  for (const WindowRange& w : windows) {
    std::span<const double> beats(ibi.intervals_ms.data() + w.begin, w.size());
    const FeatureVector fv = hrv_features(beats, options.bands);
    WindowRow row;
    row.start_s = (ibi.origin_ms + ibi.t_ms[w.begin] - ibi.intervals_ms[w.begin]) / 1000.0;
    row.end_s = (ibi.origin_ms + ibi.t_ms[w.end - 1]) / 1000.0;
    row.zero_denominator = fv.at("RMSSD") == 0.0 || fv.at("HF") == 0.0;
    row.features = fv.values();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<WindowRow> eda_rows(const SubjectRecording& subject, const ExtractionOptions& options) {
  const SignalRecording filtered = butterworth_lowpass(*subject.eda, options.filter);
  const SignalRecording smoothed = moving_average(filtered, options.filter.smoothing_window_s);
  const SCREventList events = detect_scr_events(smoothed, options.scr_threshold);
  const std::vector<WindowRange> windows =
      sliding_windows(smoothed, WindowSpec{options.eda_window_s, options.eda_step});
  const double fs = smoothed.sample_rate_hz;
  std::vector<WindowRow> rows;
  rows.reserve(windows.size());
  for (const WindowRange& w : windows) {
    std::span<const double> r(smoothed.samples.data() + w.begin, w.size());
    WindowRow row;
    row.start_s = static_cast<double>(w.begin) / fs;
    row.end_s = static_cast<double>(w.end) / fs;
    row.features = eda_features(r, restrict_events(events, w)).values();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ExtractionResult extract_feature_table(std::span<const SubjectRecording> subjects,
                                       const ExtractionOptions& options) {
  ExtractionResult result;
  FeatureTable& table = result.table;
  table.task = TaskKind::classification;
  table.feature_names =
      options.source == FeatureSource::hrv ? hrv_feature_names() : eda_feature_names();

  if (!options.labels.empty()) {
    table.labels = options.labels;
  } else {
    for (const auto& s : subjects) {
      for (const auto& c : s.conditions) table.labels.push_back(c.label);
    }
    std::sort(table.labels.begin(), table.labels.end());
    table.labels.erase(std::unique(table.labels.begin(), table.labels.end()), table.labels.end());
  }
  std::map<std::string, std::size_t> label_index;
  for (std::size_t i = 0; i < table.labels.size(); ++i) label_index[table.labels[i]] = i;

  for (const auto& s : subjects) {
    if (s.subject_id.empty()) fail(ErrorKind::schema, "subject with empty id");
    for (const auto& c : s.conditions) {
      if (!label_index.contains(c.label)) {
        fail(ErrorKind::schema, "condition label '" + c.label + "' of subject " + s.subject_id +
                                    " is not in the declared label set");
      }
    }
    const bool has_input = options.source == FeatureSource::hrv ? (s.ibi || s.ecg) : s.eda.has_value();
    if (!has_input) {
      fail(ErrorKind::usage, "subject " + s.subject_id + " has no " +
                                 (options.source == FeatureSource::hrv ? "ECG/IBI" : "EDA") +
                                 " input");
    }
  }

  std::vector<std::size_t> order(subjects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return subjects[a].subject_id < subjects[b].subject_id;
  });

  std::vector<std::vector<WindowRow>> per_subject(subjects.size());
  std::vector<std::string> notes(subjects.size());
  detail::parallel_for(subjects.size(), options.threads, [&](std::size_t i) {
    const SubjectRecording& s = subjects[i];
    try {
      per_subject[i] = options.source == FeatureSource::hrv ? hrv_rows(s, options) : eda_rows(s, options);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::insufficient_data) throw;
      notes[i] = e.what();
    }
  });

  for (std::size_t i : order) {
    const SubjectRecording& s = subjects[i];
    SubjectExtractionLog log;
    log.subject_id = s.subject_id;
    log.note = notes[i];
    if (!notes[i].empty()) warn("subject " + s.subject_id + ": 0 rows (" + notes[i] + ")");
    for (WindowRow& w : per_subject[i]) {
      ++log.windows;
      bool straddles = false;
      const ConditionInterval* c = condition_for(s.conditions, w.start_s, w.end_s, straddles);
      if (c == nullptr) {
        ++(straddles ? log.dropped_straddling : log.dropped_unlabeled);
        continue;
      }
      FeatureRow row;
      row.subject_id = s.subject_id;
      row.label = label_index.at(c->label);
      row.target = c->target;
      row.features = std::move(w.features);
      if (w.zero_denominator) ++log.zero_denominator;
      table.rows.push_back(std::move(row));
      ++log.emitted;
    }
    result.log.push_back(std::move(log));
  }
  table.validate();
  return result;
}

}  // namespace stresscal
