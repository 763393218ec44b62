#pragma once

#include <span>
#include <vector>

#include "stresscal/ensemble.hpp"
#include "stresscal/transforms.hpp"

namespace stresscal {

inline constexpr int kModelFormatVersion = 1;

// A fitted forest together with the feature recipe it was trained behind.
struct ModelArtifact {
  EnsembleHyperparams hyper;
  TrainedEnsemble ensemble;
  std::vector<std::string> feature_names;
  TransformRecipe recipe;
  int format_version = kModelFormatVersion;

  // Raw feature row in; recipe applied before the forest.
  double predict(std::span<const double> raw_features) const;
  std::vector<double> predict_table(const FeatureTable& table, unsigned threads = 1) const;
};

struct ModelOptions {
  bool apply_transforms = true;
  TransformPolicy transform;
  unsigned threads = 1;
};

ModelArtifact fit_model(const FeatureTable& table, const EnsembleHyperparams& hyper,
                        const ModelOptions& options = {});

}  // namespace stresscal
