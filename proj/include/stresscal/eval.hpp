#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stresscal/ensemble.hpp"
#include "stresscal/model.hpp"
#include "stresscal/table.hpp"

namespace stresscal {

// Classification fields are macro-averaged over the declared label set.
struct Metrics {
  TaskKind task = TaskKind::classification;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mae = 0.0;
  double rmse = 0.0;

  bool operator==(const Metrics&) const = default;
};

Metrics classification_metrics(std::span<const std::size_t> truth,
                               std::span<const std::size_t> predicted, std::size_t n_labels);
Metrics regression_metrics(std::span<const double> truth, std::span<const double> predicted);

// Metrics of `model` on every row of `table`.
Metrics evaluate_model(const ModelArtifact& model, const FeatureTable& table, unsigned threads = 1);

struct UnitResult {
  std::string unit;     // "fold-3", or a subject id
  std::string subject;  // subject the unit belongs to
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  Metrics metrics;

  bool operator==(const UnitResult&) const = default;
};

struct MetricsSummary {
  Metrics mean;
  Metrics std;  // population std across units

  bool operator==(const MetricsSummary&) const = default;
};

MetricsSummary summarize(std::span<const UnitResult> units, TaskKind task);

struct EvaluationReport {
  std::string protocol;  // "kfold" | "loso"
  std::uint64_t seed = 0;
  TaskKind task = TaskKind::classification;
  EnsembleHyperparams hyper;
  std::vector<UnitResult> units;
  MetricsSummary summary;

  bool operator==(const EvaluationReport&) const = default;
};

struct CalibrationConfig {
  std::size_t q = 4;
  std::vector<std::size_t> sizes{0, 1, 2, 5, 10, 20, 50, 100};
  double calibration_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate(std::size_t n_subjects) const;
};

struct CalibrationEntry {
  std::size_t size = 0;                 // requested samples per held-out subject
  std::vector<std::size_t> drawn;       // actually drawn per held-out subject
  std::vector<UnitResult> per_subject;  // metrics on each test half
  MetricsSummary summary;

  bool operator==(const CalibrationEntry&) const = default;
};

struct CalibrationCurve {
  std::uint64_t seed = 0;
  TaskKind task = TaskKind::classification;
  EnsembleHyperparams hyper;
  std::size_t q = 0;
  double calibration_fraction = 0.5;
  std::vector<std::string> held_out;
  std::vector<std::string> generic_subjects;
  MetricsSummary generic_baseline;  // generic model on the same test halves
  std::vector<CalibrationEntry> entries;

  bool operator==(const CalibrationCurve&) const = default;
};

struct ProtocolOptions {
  bool apply_transforms = true;
  TransformPolicy transform;
  unsigned threads = 1;

  ModelOptions model_options() const { return {apply_transforms, transform, threads}; }
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// k near-equal folds over a seeded shuffle of `rows`; the first n % k folds
// are one larger.
std::vector<Split> kfold_splits(std::span<const std::size_t> rows, std::size_t k,
                                std::uint64_t seed);

// One split per subject in sorted subject order.
std::vector<Split> loso_splits(const FeatureTable& table);

EvaluationReport kfold_person_specific(const FeatureTable& table, std::string_view subject,
                                       std::size_t k, const EnsembleHyperparams& hyper,
                                       const ProtocolOptions& options = {});

// kfold_person_specific for every subject; one unit per subject holding the
// subject's fold-mean metrics.
EvaluationReport person_specific_all(const FeatureTable& table, std::size_t k,
                                     const EnsembleHyperparams& hyper,
                                     const ProtocolOptions& options = {});

EvaluationReport loso_generic(const FeatureTable& table, const EnsembleHyperparams& hyper,
                              const ProtocolOptions& options = {});

// Mixes the calibration rows into the generic pool (seeded shuffle of the
// union) and fits a fresh model on the result.
ModelArtifact calibrate_model(const FeatureTable& generic_rows,
                              const FeatureTable& calibration_rows,
                              const EnsembleHyperparams& hyper,
                              const ProtocolOptions& options = {});

// Row bookkeeping of a calibration sweep, exposed for audits.
struct CalibrationPlan {
  std::vector<std::string> held_out;
  std::vector<std::string> generic_subjects;
  std::vector<std::size_t> generic_rows;
  // Per held-out subject: calibration pool in draw order, and the test half.
  std::vector<std::vector<std::size_t>> pools;
  std::vector<std::vector<std::size_t>> tests;

  // Calibration rows for `size` samples per held-out subject (pool prefixes).
  std::vector<std::size_t> calibration_rows(std::size_t size) const;
};

CalibrationPlan make_calibration_plan(const FeatureTable& table, const CalibrationConfig& config);

CalibrationCurve calibration_sweep(const FeatureTable& table, const CalibrationConfig& config,
                                   const EnsembleHyperparams& hyper,
                                   const ProtocolOptions& options = {});

struct SubjectProbeResult {
  std::vector<std::string> feature_names;  // table features + "subject_id"
  std::vector<double> importances;
  std::vector<std::size_t> ranking;  // feature indices, most important first
  std::size_t subject_id_rank = 0;   // 1-based
};

inline constexpr std::string_view kSubjectIdFeature = "subject_id";

SubjectProbeResult subject_id_probe(const FeatureTable& table, const EnsembleHyperparams& hyper,
                                    const ProtocolOptions& options = {});

}  // namespace stresscal
