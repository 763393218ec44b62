#include "stresscal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "stresscal/diag.hpp"
#include "stresscal/error.hpp"
#include "stresscal/rng.hpp"

namespace stresscal {

Metrics classification_metrics(std::span<const std::size_t> truth,
                               std::span<const std::size_t> predicted, std::size_t n_labels) {
  if (truth.size() != predicted.size()) {
    fail(ErrorKind::shape, "truth has " + std::to_string(truth.size()) + " entries, predictions " +
                               std::to_string(predicted.size()));
  }
  if (truth.empty()) fail(ErrorKind::shape, "metrics need at least one prediction");
  if (n_labels == 0) fail(ErrorKind::shape, "metrics need a non-empty label set");

  std::vector<double> tp(n_labels, 0.0), fp(n_labels, 0.0), fn(n_labels, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n_labels || predicted[i] >= n_labels) {
      fail(ErrorKind::shape, "label index outside the declared label set");
    }
    if (truth[i] == predicted[i]) {
      ++correct;
      tp[truth[i]] += 1.0;
    } else {
      fp[predicted[i]] += 1.0;
      fn[truth[i]] += 1.0;
    }
  }
  Metrics m;
  m.task = TaskKind::classification;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (std::size_t k = 0; k < n_labels; ++k) {
    // Absent classes contribute 0 to the macro averages.
    m.precision += tp[k] + fp[k] > 0.0 ? tp[k] / (tp[k] + fp[k]) : 0.0;
    m.recall += tp[k] + fn[k] > 0.0 ? tp[k] / (tp[k] + fn[k]) : 0.0;
  }
  m.precision /= static_cast<double>(n_labels);
  m.recall /= static_cast<double>(n_labels);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics regression_metrics(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) {
    fail(ErrorKind::shape, "truth has " + std::to_string(truth.size()) + " entries, predictions " +
                               std::to_string(predicted.size()));
  }
  if (truth.empty()) fail(ErrorKind::shape, "metrics need at least one prediction");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predicted[i] - truth[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(truth.size());
  Metrics m;
  m.task = TaskKind::regression;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  return m;
}

Metrics evaluate_model(const ModelArtifact& model, const FeatureTable& table, unsigned threads) {
  const std::vector<double> predicted = model.predict_table(table, threads);
  if (model.hyper.task == TaskKind::classification) {
    std::vector<std::size_t> truth, pred;
    truth.reserve(table.num_rows());
    pred.reserve(table.num_rows());
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      truth.push_back(table.rows[r].label);
      pred.push_back(static_cast<std::size_t>(predicted[r]));
    }
    return classification_metrics(truth, pred, model.ensemble.labels.size());
  }
  std::vector<double> truth;
  truth.reserve(table.num_rows());
  for (const auto& row : table.rows) truth.push_back(row.target);
  return regression_metrics(truth, predicted);
}

MetricsSummary summarize(std::span<const UnitResult> units, TaskKind task) {
  MetricsSummary s;
  s.mean.task = s.std.task = task;
  if (units.empty()) return s;
  const double n = static_cast<double>(units.size());
  auto both = [&](double Metrics::*field) {
    double sum = 0.0;
    for (const auto& u : units) sum += u.metrics.*field;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& u : units) ss += (u.metrics.*field - mean) * (u.metrics.*field - mean);
    s.mean.*field = mean;
    s.std.*field = std::sqrt(ss / n);
  };
  for (auto field : {&Metrics::accuracy, &Metrics::precision, &Metrics::recall, &Metrics::f1,
                     &Metrics::mae, &Metrics::rmse}) {
    both(field);
  }
  return s;
}

void CalibrationConfig::validate(std::size_t n_subjects) const {
  if (q < 1) fail(ErrorKind::protocol, "calibration needs at least one held-out subject");
  if (q >= n_subjects) {
    fail(ErrorKind::protocol, "q = " + std::to_string(q) + " held-out subjects leaves no generic pool among " +
                                  std::to_string(n_subjects) + " subjects");
  }
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    fail(ErrorKind::protocol, "calibration sizes must be ascending");
  }
  if (sizes.empty()) fail(ErrorKind::protocol, "calibration needs at least one size");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    fail(ErrorKind::protocol, "calibration fraction must lie in (0, 1)");
  }
}

std::vector<Split> kfold_splits(std::span<const std::size_t> rows, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::protocol, "k-fold needs k >= 2");
  if (rows.size() < k) {
    fail(ErrorKind::protocol, "k-fold with k = " + std::to_string(k) + " needs at least " +
                                  std::to_string(k) + " rows, got " + std::to_string(rows.size()));
  }
  std::vector<std::size_t> shuffled(rows.begin(), rows.end());
  Rng rng(seed);
  rng.shuffle(shuffled);
  const std::size_t base = shuffled.size() / k;
  const std::size_t extra = shuffled.size() % k;
  std::vector<Split> folds(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(at),
                         shuffled.begin() + static_cast<std::ptrdiff_t>(at + len));
    at += len;
  }
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(folds[f].test.begin(), folds[f].test.end());
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].test.begin(), folds[g].test.end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

std::vector<Split> loso_splits(const FeatureTable& table) {
  const std::vector<std::string> subjects = table.subjects();
  if (subjects.size() < 2) {
    fail(ErrorKind::protocol, "leave-one-subject-out needs at least 2 subjects, got " +
                                  std::to_string(subjects.size()));
  }
  std::vector<Split> out(subjects.size());
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto it = std::lower_bound(subjects.begin(), subjects.end(), table.rows[r].subject_id);
    const auto s = static_cast<std::size_t>(it - subjects.begin());
    for (std::size_t i = 0; i < out.size(); ++i) (i == s ? out[i].test : out[i].train).push_back(r);
  }
  return out;
}

namespace {

UnitResult run_split(const FeatureTable& table, const Split& split, const EnsembleHyperparams& hyper,
                     const ProtocolOptions& options, std::string unit, std::string subject) {
  const FeatureTable train = table.subset(split.train);
  const FeatureTable test = table.subset(split.test);
  const ModelArtifact model = fit_model(train, hyper, options.model_options());
  UnitResult u;
  u.unit = std::move(unit);
  u.subject = std::move(subject);
  u.n_train = split.train.size();
  u.n_test = split.test.size();
  u.metrics = evaluate_model(model, test, options.threads);
  return u;
}

}  // namespace

EvaluationReport kfold_person_specific(const FeatureTable& table, std::string_view subject,
                                       std::size_t k, const EnsembleHyperparams& hyper,
                                       const ProtocolOptions& options) {
  const std::vector<std::size_t> rows = table.rows_of_subject(subject);
  if (rows.size() < k) {
    fail(ErrorKind::protocol, "subject " + std::string(subject) + " has " + std::to_string(rows.size()) +
                                  " rows, fewer than k = " + std::to_string(k));
  }
  EvaluationReport report;
  report.protocol = "kfold";
  report.seed = hyper.seed;
  report.task = hyper.task;
  report.hyper = hyper;
  const std::vector<Split> folds =
      kfold_splits(rows, k, stage_seed(hyper.seed, "kfold:" + std::string(subject)));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    report.units.push_back(
        run_split(table, folds[f], hyper, options, "fold-" + std::to_string(f), std::string(subject)));
  }
  report.summary = summarize(report.units, hyper.task);
  return report;
}

EvaluationReport person_specific_all(const FeatureTable& table, std::size_t k,
                                     const EnsembleHyperparams& hyper, const ProtocolOptions& options) {
  EvaluationReport report;
  report.protocol = "kfold";
  report.seed = hyper.seed;
  report.task = hyper.task;
  report.hyper = hyper;
  for (const std::string& subject : table.subjects()) {
    const EvaluationReport per = kfold_person_specific(table, subject, k, hyper, options);
    UnitResult u;
    u.unit = subject;
    u.subject = subject;
    for (const auto& fold : per.units) {
      u.n_train += fold.n_train;
      u.n_test += fold.n_test;
    }
    u.n_train /= per.units.size();
    u.metrics = per.summary.mean;
    report.units.push_back(std::move(u));
  }
  report.summary = summarize(report.units, hyper.task);
  return report;
}

EvaluationReport loso_generic(const FeatureTable& table, const EnsembleHyperparams& hyper,
                              const ProtocolOptions& options) {
  const std::vector<std::string> subjects = table.subjects();
  const std::vector<Split> splits = loso_splits(table);
  EvaluationReport report;
  report.protocol = "loso";
  report.seed = hyper.seed;
  report.task = hyper.task;
  report.hyper = hyper;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    report.units.push_back(run_split(table, splits[i], hyper, options, subjects[i], subjects[i]));
  }
  report.summary = summarize(report.units, hyper.task);
  return report;
}

ModelArtifact calibrate_model(const FeatureTable& generic_rows, const FeatureTable& calibration_rows,
                              const EnsembleHyperparams& hyper, const ProtocolOptions& options) {
  if (generic_rows.feature_names != calibration_rows.feature_names ||
      generic_rows.labels != calibration_rows.labels) {
    fail(ErrorKind::shape, "generic and calibration rows have different columns or label sets");
  }
  const std::vector<std::string> generic = generic_rows.subjects();
  for (const std::string& s : calibration_rows.subjects()) {
    if (std::binary_search(generic.begin(), generic.end(), s)) {
      fail(ErrorKind::contamination, "subject " + s + " appears in both the generic and the calibration pool");
    }
  }
  FeatureTable mixed = generic_rows;
  mixed.rows.insert(mixed.rows.end(), calibration_rows.rows.begin(), calibration_rows.rows.end());
  Rng rng(stage_seed(hyper.seed, "calibration-mix"));
  rng.shuffle(mixed.rows);
  return fit_model(mixed, hyper, options.model_options());
}

std::vector<std::size_t> CalibrationPlan::calibration_rows(std::size_t size) const {
  std::vector<std::size_t> out;
  for (const auto& pool : pools) {
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(size, pool.size())));
  }
  return out;
}

CalibrationPlan make_calibration_plan(const FeatureTable& table, const CalibrationConfig& config) {
  std::vector<std::string> subjects = table.subjects();
  config.validate(subjects.size());
  CalibrationPlan plan;
  Rng pick(stage_seed(config.seed, "calibration-subjects"));
  std::vector<std::string> shuffled = subjects;
  pick.shuffle(shuffled);
  plan.held_out.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(config.q));
  std::sort(plan.held_out.begin(), plan.held_out.end());
  for (const auto& s : subjects) {
    if (!std::binary_search(plan.held_out.begin(), plan.held_out.end(), s)) plan.generic_subjects.push_back(s);
  }
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    if (std::binary_search(plan.generic_subjects.begin(), plan.generic_subjects.end(),
                           table.rows[r].subject_id)) {
      plan.generic_rows.push_back(r);
    }
  }
  const std::uint64_t split_seed = stage_seed(config.seed, "calibration-split");
  for (std::size_t i = 0; i < plan.held_out.size(); ++i) {
    std::vector<std::size_t> rows = table.rows_of_subject(plan.held_out[i]);
    Rng rng(derive_seed(split_seed, i));
    rng.shuffle(rows);
    const auto pool_size = static_cast<std::size_t>(
        std::llround(config.calibration_fraction * static_cast<double>(rows.size())));
    std::vector<std::size_t> pool(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(pool_size));
    std::vector<std::size_t> test(rows.begin() + static_cast<std::ptrdiff_t>(pool_size), rows.end());
    std::sort(test.begin(), test.end());
    if (test.empty()) fail(ErrorKind::protocol, "held-out subject " + plan.held_out[i] + " has no test rows");
    plan.pools.push_back(std::move(pool));
    plan.tests.push_back(std::move(test));
  }
  return plan;
}

CalibrationCurve calibration_sweep(const FeatureTable& table, const CalibrationConfig& config,
                                   const EnsembleHyperparams& hyper, const ProtocolOptions& options) {
  const CalibrationPlan plan = make_calibration_plan(table, config);
  CalibrationCurve curve;
  curve.seed = config.seed;
  curve.task = hyper.task;
  curve.hyper = hyper;
  curve.q = config.q;
  curve.calibration_fraction = config.calibration_fraction;
  curve.held_out = plan.held_out;
  curve.generic_subjects = plan.generic_subjects;

  const FeatureTable generic = table.subset(plan.generic_rows);
  std::vector<FeatureTable> tests;
  for (const auto& t : plan.tests) tests.push_back(table.subset(t));

  auto per_subject = [&](const ModelArtifact& model) {
    std::vector<UnitResult> units;
    for (std::size_t i = 0; i < plan.held_out.size(); ++i) {
      UnitResult u;
      u.unit = plan.held_out[i];
      u.subject = plan.held_out[i];
      u.n_test = plan.tests[i].size();
      u.metrics = evaluate_model(model, tests[i], options.threads);
      units.push_back(std::move(u));
    }
    return units;
  };

  {
    const ModelArtifact baseline = fit_model(generic, hyper, options.model_options());
    const std::vector<UnitResult> units = per_subject(baseline);
    curve.generic_baseline = summarize(units, hyper.task);
  }

  for (std::size_t size : config.sizes) {
    CalibrationEntry entry;
    entry.size = size;
    for (std::size_t i = 0; i < plan.pools.size(); ++i) {
      const std::size_t drawn = std::min(size, plan.pools[i].size());
      if (drawn < size) {
        warn("calibration size " + std::to_string(size) + " exceeds the pool of subject " +
             plan.held_out[i] + "; clipped to " + std::to_string(drawn));
      }
      entry.drawn.push_back(drawn);
    }
    const std::vector<std::size_t> cal_rows = plan.calibration_rows(size);
    const ModelArtifact model = calibrate_model(generic, table.subset(cal_rows), hyper, options);
    entry.per_subject = per_subject(model);
    for (auto& u : entry.per_subject) u.n_train = plan.generic_rows.size() + cal_rows.size();
    entry.summary = summarize(entry.per_subject, hyper.task);
    curve.entries.push_back(std::move(entry));
  }
  return curve;
}

SubjectProbeResult subject_id_probe(const FeatureTable& table, const EnsembleHyperparams& hyper,
                                    const ProtocolOptions& options) {
  const std::vector<std::string> subjects = table.subjects();
  if (subjects.size() < 2) fail(ErrorKind::protocol, "the subject-id probe needs at least 2 subjects");
  FeatureTable probe = table;
  probe.feature_names.emplace_back(kSubjectIdFeature);
  for (auto& row : probe.rows) {
    const auto it = std::lower_bound(subjects.begin(), subjects.end(), row.subject_id);
    row.features.push_back(static_cast<double>(it - subjects.begin()));
  }
  const ModelArtifact model = fit_model(probe, hyper, options.model_options());

  SubjectProbeResult out;
  out.feature_names = probe.feature_names;
  out.importances = model.ensemble.importances.values;
  out.ranking.resize(out.importances.size());
  std::iota(out.ranking.begin(), out.ranking.end(), std::size_t{0});
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](std::size_t a, std::size_t b) {
    return out.importances[a] > out.importances[b];
  });
  const std::size_t subject_feature = out.feature_names.size() - 1;
  for (std::size_t i = 0; i < out.ranking.size(); ++i) {
    if (out.ranking[i] == subject_feature) out.subject_id_rank = i + 1;
  }
  return out;
}

}  // namespace stresscal
