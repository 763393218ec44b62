#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stresscal/signal.hpp"
#include "stresscal/table.hpp"

namespace stresscal {

// Half-open index range [begin, end) into a series.
struct WindowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const WindowRange&) const = default;
};

struct WindowSpec {
  double length_s = 300.0;
  std::size_t step = 1;  // samples; IBI windows always advance one beat
};

// IBI windows: each window starts one beat later than the previous one and
// holds the beats whose cumulative time fits in length_s. Only windows with
// data through start + length_s are emitted.
std::vector<WindowRange> sliding_windows(const IBISeries& series, double length_s);

// Sample windows of round(length_s * rate) samples advancing by spec.step.
std::vector<WindowRange> sliding_windows(const SignalRecording& signal, const WindowSpec& spec);

// Ordered name -> value list.
class FeatureVector {
 public:
  void add(std::string name, double value);
  void append(const FeatureVector& other);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double at(std::string_view name) const;
  bool contains(std::string_view name) const;
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// MEAN_RR, MEDIAN_RR, SDRR, SKEW_RR, KURT_RR, RMSSD, SDSD, SDRR_RMSSD, pNN25, pNN50.
FeatureVector hrv_time_features(std::span<const double> ibi_ms);

// 2 (RR_i - RR_{i-1}) / (RR_i + RR_{i-1}), i = 2..N.
std::vector<double> relative_rr_series(std::span<const double> ibi_ms);

struct RelativeRR {
  std::vector<double> series;
  FeatureVector stats;  // REL_RR_MEAN ... REL_RR_KURT
};

RelativeRR relative_rr(std::span<const double> ibi_ms);

struct Poincare {
  double sd1 = 0.0;
  double sd2 = 0.0;
};

Poincare poincare_descriptors(std::span<const double> ibi_ms);

struct FrequencyBands {
  double vlf_low_hz = 0.0033;
  double vlf_high_hz = 0.04;
  double lf_high_hz = 0.15;
  double hf_high_hz = 0.4;
  double resample_hz = 4.0;
  double segment_s = 120.0;
  double overlap = 0.5;
};

struct BandPowers {
  double vlf = 0.0;
  double lf = 0.0;
  double hf = 0.0;
  double lf_hf = 0.0;
};

// Cubic-spline resampling at bands.resample_hz, mean removal, then a Welch
// PSD with Hann windows. Powers in ms^2.
BandPowers hrv_frequency_features(std::span<const double> ibi_ms,
                                  const FrequencyBands& bands = {});

// Full HRV vector (time, relative RR, Poincare, frequency), canonical order.
FeatureVector hrv_features(std::span<const double> ibi_ms, const FrequencyBands& bands = {});
std::vector<std::string> hrv_feature_names();

// Onset/peak pairs lying wholly inside the window, re-based to window-relative
// indices.
SCREventList restrict_events(const SCREventList& events, WindowRange window);

FeatureVector eda_features(std::span<const double> scr, const SCREventList& events_in_window);
std::vector<std::string> eda_feature_names();

struct ConditionInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;
  double target = 0.0;
};

struct SubjectRecording {
  std::string subject_id;
  std::optional<SignalRecording> ecg;
  std::optional<IBISeries> ibi;
  std::optional<SignalRecording> eda;
  std::vector<ConditionInterval> conditions;
};

enum class FeatureSource { hrv, eda };

struct ExtractionOptions {
  FeatureSource source = FeatureSource::hrv;
  double hrv_window_s = 300.0;
  double eda_window_s = 600.0;
  std::size_t eda_step = 1;
  FilterSpec filter;
  double scr_threshold = kDefaultScrThreshold;
  FrequencyBands bands;
  RPeakOptions rpeak;
  std::vector<std::string> labels;  // declared label order; empty = sorted as seen
  unsigned threads = 1;
};

struct SubjectExtractionLog {
  std::string subject_id;
  std::size_t windows = 0;
  std::size_t emitted = 0;
  std::size_t dropped_straddling = 0;
  std::size_t dropped_unlabeled = 0;
  std::size_t zero_denominator = 0;  // rows where SDRR_RMSSD or LF_HF hit the 0 convention
  std::string note;
};

struct ExtractionResult {
  FeatureTable table;
  std::vector<SubjectExtractionLog> log;
};

ExtractionResult extract_feature_table(std::span<const SubjectRecording> subjects,
                                       const ExtractionOptions& options);

}  // namespace stresscal
