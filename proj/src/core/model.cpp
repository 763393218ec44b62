#include "stresscal/model.hpp"

#include "parallel.hpp"
#include "stresscal/error.hpp"

namespace stresscal {

double ModelArtifact::predict(std::span<const double> raw_features) const {
  if (raw_features.size() != feature_names.size()) {
    fail(ErrorKind::shape, "expected " + std::to_string(feature_names.size()) + " features, got " +
                               std::to_string(raw_features.size()));
  }
  if (recipe.empty()) return ensemble.predict(raw_features);
  std::vector<double> x(raw_features.begin(), raw_features.end());
  recipe.apply_row(x);
  return ensemble.predict(x);
}

std::vector<double> ModelArtifact::predict_table(const FeatureTable& table, unsigned threads) const {
  if (table.feature_names != feature_names) {
    fail(ErrorKind::shape, "table columns do not match the model's features");
  }
  std::vector<double> out(table.num_rows());
  detail::parallel_for(table.num_rows(), threads,
                       [&](std::size_t r) { out[r] = predict(table.rows[r].features); });
  return out;
}

ModelArtifact fit_model(const FeatureTable& table, const EnsembleHyperparams& hyper,
                        const ModelOptions& options) {
  ModelArtifact model;
  model.hyper = hyper;
  model.feature_names = table.feature_names;
  if (options.apply_transforms) {
    auto [transformed, recipe] = apply_transform_policy(table, options.transform);
    model.recipe = std::move(recipe);
    model.ensemble = fit_forest(transformed, hyper, FitOptions{options.threads});
  } else {
    model.ensemble = fit_forest(table, hyper, FitOptions{options.threads});
  }
  return model;
}

}  // namespace stresscal
