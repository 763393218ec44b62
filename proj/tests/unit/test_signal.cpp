#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "stresscal/error.hpp"
#include "stresscal/rng.hpp"
#include "stresscal/signal.hpp"

using namespace stresscal;

namespace {

SignalRecording recording(SignalKind kind, double fs, std::vector<double> x) {
  SignalRecording r;
  r.kind = kind;
  r.sample_rate_hz = fs;
  r.samples = std::move(x);
  r.units = kind == SignalKind::ecg ? "mV" : "uS";
  return r;
}

std::vector<double> sine(double freq, double fs, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs);
  return x;
}

// Amplitude of a sinusoid from the RMS of its middle half.
double middle_amplitude(const std::vector<double>& y) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = y.size() / 4; i < 3 * y.size() / 4; ++i, ++n) ss += y[i] * y[i];
  return std::sqrt(2.0 * ss / static_cast<double>(n));
}

// Impulse train: unit spikes at the given sample positions.
SignalRecording impulses(double fs, std::size_t n, const std::vector<std::size_t>& at) {
  std::vector<double> x(n, 0.0);
  for (std::size_t i : at) x[i] = 1.0;
  return recording(SignalKind::ecg, fs, std::move(x));
}

}  // namespace

TEST_CASE("Butterworth magnitude matches the analog response") {
  const double fs = 100.0, fc = 4.0;
  const auto sections = butterworth_lowpass_sections(4, fc, fs);
  CHECK(sections.size() == 2);
  CHECK(cascade_gain(sections, 0.0, fs) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(cascade_gain(sections, fc, fs) - std::pow(2.0, -0.5)) < 0.02);
  CHECK(cascade_gain(sections, 10.0 * fc, fs) < 1e-4);
  for (int order : {2, 4, 6, 8}) {
    const auto s = butterworth_lowpass_sections(order, 10.0, 250.0);
    const double analog = std::pow(1.0 + std::pow(20.0 / 10.0, 2.0 * order), -0.5);
    // The bilinear map only sharpens the response above the cutoff.
    CHECK(cascade_gain(s, 20.0, 250.0) <= analog * 1.001);
    CHECK(std::abs(cascade_gain(s, 10.0, 250.0) - std::pow(2.0, -0.5)) < 1e-9);
  }
  const auto hp = butterworth_highpass_sections(2, 5.0, 250.0);
  CHECK(cascade_gain(hp, 0.0, 250.0) < 1e-12);
  CHECK(std::abs(cascade_gain(hp, 5.0, 250.0) - std::pow(2.0, -0.5)) < 1e-9);
}

TEST_CASE("Butterworth design rejects bad parameters") {
  CHECK_THROWS_AS(butterworth_lowpass_sections(4, 50.0, 100.0), Error);
  CHECK_THROWS_AS(butterworth_lowpass_sections(3, 4.0, 100.0), Error);
  CHECK_THROWS_AS(butterworth_lowpass_sections(4, 0.0, 100.0), Error);
  const auto rec = recording(SignalKind::eda, 4.0, std::vector<double>(100, 1.0));
  try {
    (void)butterworth_lowpass(rec, FilterSpec{4.0, 4, 1.0});
    FAIL("expected a parameter error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parameter);
  }
}

TEST_CASE("zero-phase low-pass: constants pass, cutoff tone halves") {
  const auto constant = recording(SignalKind::eda, 32.0, std::vector<double>(2000, 3.7));
  const auto y = butterworth_lowpass(constant, FilterSpec{4.0, 4, 1.0});
  REQUIRE(y.samples.size() == constant.samples.size());
  CHECK(y.sample_rate_hz == constant.sample_rate_hz);
  for (double v : y.samples) CHECK(std::abs(v - 3.7) < 1e-9);

  const double fs = 200.0, fc = 4.0;
  const auto tone = sine(fc, fs, 20000);
  const auto sections = butterworth_lowpass_sections(4, fc, fs);
  CHECK(std::abs(middle_amplitude(filter_forward(sections, tone)) - std::pow(2.0, -0.5)) < 0.02);
  CHECK(std::abs(middle_amplitude(filtfilt(sections, tone, 12)) - 0.5) < 0.02);
  CHECK(middle_amplitude(filter_forward(sections, sine(10.0 * fc, fs, 20000))) < 1e-4);
}

TEST_CASE("zero-phase filtering does not shift a symmetric pulse") {
  std::vector<double> x(1001, 0.0);
  for (int i = -30; i <= 30; ++i) x[static_cast<std::size_t>(500 + i)] = std::exp(-i * i / 200.0);
  const auto y = filtfilt(butterworth_lowpass_sections(4, 2.0, 100.0), x, 12);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (y[i] > y[arg]) arg = i;
  }
  CHECK(arg == 500);
}

TEST_CASE("moving average") {
  CHECK(moving_average(std::vector<double>{0, 0, 3, 0, 0}, 3) == std::vector<double>{0, 1, 1, 1, 0});
  const std::vector<double> x{1.5, -2, 7, 3};
  CHECK(moving_average(x, 1) == x);
  const auto c = moving_average(std::vector<double>(50, 2.5), 7);
  for (double v : c) CHECK(v == doctest::Approx(2.5));
  const auto rec = recording(SignalKind::eda, 4.0, std::vector<double>{0, 0, 3, 0, 0});
  const auto smoothed = moving_average(rec, 0.75);
  CHECK(smoothed.samples == std::vector<double>{0, 1, 1, 1, 0});
  CHECK_THROWS_AS(moving_average(rec, 0.01), Error);
}

TEST_CASE("R-peaks of a 1 Hz impulse train are 1000 ms apart") {
  const double fs = 250.0;
  std::vector<std::size_t> at;
  for (std::size_t k = 0; k < 30; ++k) at.push_back(100 + 250 * k);
  const IBISeries ibi = detect_r_peaks(impulses(fs, 100 + 250 * 30, at));
  REQUIRE(ibi.size() == 29);
  for (double v : ibi.intervals_ms) CHECK(v == doctest::Approx(1000.0));
  CHECK(ibi.origin_ms == doctest::Approx(400.0));
  ibi.validate();
}

TEST_CASE("R-peaks of alternating 0.8 s / 1.2 s gaps") {
  const double fs = 500.0;
  std::vector<std::size_t> at{200};
  for (std::size_t k = 0; k < 20; ++k) at.push_back(at.back() + (k % 2 == 0 ? 400 : 600));
  const IBISeries ibi = detect_r_peaks(impulses(fs, at.back() + 400, at));
  REQUIRE(ibi.size() == 20);
  for (std::size_t i = 0; i < ibi.size(); ++i) CHECK(ibi.intervals_ms[i] == doctest::Approx(i % 2 == 0 ? 800.0 : 1200.0));
}

TEST_CASE("R-peak detector errors") {
  const auto flat = recording(SignalKind::ecg, 250.0, std::vector<double>(5000, 0.0));
  try {
    (void)detect_r_peaks(flat);
    FAIL("expected an insufficient-data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::insufficient_data);
  }
  const auto eda = recording(SignalKind::eda, 250.0, std::vector<double>(5000, 0.0));
  CHECK_THROWS_AS(detect_r_peaks(eda), Error);
}

TEST_CASE("R-peaks on a noisy synthetic ECG keep the IBI invariants") {
  const double fs = 250.0;
  Rng rng(9);
  std::vector<double> x(fs * 60, 0.0);
  double t = 0.5;
  std::vector<double> truth;
  while (t < 59.0) {
    const auto c = static_cast<long>(t * fs);
    for (long i = -6; i <= 6; ++i) x[static_cast<std::size_t>(c + i)] += std::exp(-(i * i) / 4.0);
    truth.push_back(t);
    t += 0.7 + 0.3 * rng.uniform();
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] += 0.02 * rng.normal() + 0.1 * std::sin(2.0 * std::numbers::pi * 0.3 * static_cast<double>(i) / fs);
  }
  const IBISeries ibi = detect_r_peaks(recording(SignalKind::ecg, fs, x));
  ibi.validate();
  CHECK(ibi.size() == truth.size() - 1);
  for (std::size_t i = 0; i < std::min(ibi.size(), truth.size() - 1); ++i) {
    CHECK(std::abs(ibi.intervals_ms[i] - 1000.0 * (truth[i + 1] - truth[i])) <= 8.0);
  }
}

TEST_CASE("SCR events") {
  const double fs = 4.0;
  SUBCASE("monotonically decreasing signal has no events") {
    std::vector<double> x(200);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 10.0 - 0.01 * static_cast<double>(i);
    const auto ev = detect_scr_events(recording(SignalKind::eda, fs, x));
    CHECK(ev.onsets.empty());
    CHECK(ev.peaks.empty());
  }
  SUBCASE("one triangular bump: one onset, one peak at the apex") {
    std::vector<double> x(120, 2.0);
    // Rise at +0.1 uS/s from index 40 to 80, then fall back.
    for (std::size_t i = 41; i <= 80; ++i) x[i] = x[i - 1] + 0.1 / fs;
    for (std::size_t i = 81; i < 120; ++i) x[i] = std::max(2.0, x[i - 1] - 0.1 / fs);
    const auto ev = detect_scr_events(recording(SignalKind::eda, fs, x));
    REQUIRE(ev.onsets.size() == 1);
    REQUIRE(ev.peaks.size() == 1);
    CHECK(ev.onsets[0].index == 40);
    CHECK(ev.peaks[0].index == 80);
    CHECK(ev.peaks[0].time_s == doctest::Approx(20.0));
    CHECK(ev.peaks[0].conductance_us == doctest::Approx(3.0));
    CHECK(ev.onsets[0].conductance_us == doctest::Approx(2.0));
  }
  SUBCASE("two separated bumps give two ordered pairs") {
    std::vector<double> x(300, 1.0);
    for (std::size_t start : {50u, 180u}) {
      for (std::size_t i = start + 1; i <= start + 20; ++i) x[i] = x[i - 1] + 0.05;
      for (std::size_t i = start + 21; i <= start + 40; ++i) x[i] = x[i - 1] - 0.05;
    }
    const auto ev = detect_scr_events(recording(SignalKind::eda, fs, x));
    REQUIRE(ev.onsets.size() == 2);
    CHECK(ev.onsets[0].index == 50);
    CHECK(ev.peaks[0].index == 70);
    CHECK(ev.onsets[1].index == 180);
    CHECK(ev.peaks[1].index == 200);
  }
  SUBCASE("a rise still going at the end is dropped") {
    std::vector<double> x(60, 1.0);
    for (std::size_t i = 41; i < 60; ++i) x[i] = x[i - 1] + 0.05;
    CHECK(detect_scr_events(recording(SignalKind::eda, fs, x)).onsets.empty());
  }
}

TEST_CASE("SCR events interleave on random smooth signals") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(800);
    double v = 5.0;
    for (auto& s : x) {
      v += 0.02 * rng.normal();
      s = v;
    }
    const auto rec = moving_average(recording(SignalKind::eda, 4.0, x), 2.0);
    const auto ev = detect_scr_events(rec);
    REQUIRE(ev.onsets.size() == ev.peaks.size());
    for (std::size_t i = 0; i < ev.onsets.size(); ++i) {
      CHECK(ev.onsets[i].index < ev.peaks[i].index);
      CHECK(ev.peaks[i].conductance_us >= ev.onsets[i].conductance_us);
      if (i + 1 < ev.onsets.size()) CHECK(ev.peaks[i].index < ev.onsets[i + 1].index);
    }
  }
}

TEST_CASE("filtering and smoothing preserve length and rate") {
  Rng rng(5);
  for (std::size_t n : {1u, 2u, 5u, 13u, 100u, 1001u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    const auto rec = recording(SignalKind::eda, 16.0, x);
    const auto y = butterworth_lowpass(rec, FilterSpec{2.0, 4, 1.0});
    CHECK(y.samples.size() == n);
    CHECK(y.sample_rate_hz == 16.0);
    CHECK(moving_average(rec, 0.5).samples.size() == n);
  }
}
