#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adtcurve/features.hpp"
#include "adtcurve/forest.hpp"

namespace adt {

/// Learner selection for a nuisance model. The estimator only depends on this
/// interface, so alternative learners can be swapped in without touching it.
struct LearnerConfig {
  std::string type = "forest";  // "forest" | "linear"

  // forest settings
  int num_trees = 500;
  int tuning_trees = 0;  // 0 = use num_trees during mtry tuning
  int min_node_size = 0;
  int mtry = 0;  // 0 = tune by the model's policy
  int histogram_bins = 64;
  int max_onehot_levels = 32;

  // linear settings: product terms of numeric feature names
  std::vector<std::vector<std::string>> terms;
};

class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual std::vector<double> predict(const FeatureTable& x, int threads) const = 0;
  virtual std::vector<double> predict_override(const FeatureTable& x, int column,
                                               double value, int threads) const = 0;
  virtual const std::vector<std::string>& feature_names() const = 0;
};

struct FitRequest {
  TreeTask task = TreeTask::kRegression;
  TuningPolicy policy = TuningPolicy::kPlateau;
  std::span<const int> site_of_row;  // for site_fold tuning
  std::span<const int> t_of_row;     // for temporal_bias tuning
  std::uint64_t seed = 0;
  int threads = 0;
  std::optional<int> mtry_override;  // frozen hyperparameter from a prior fit
};

struct FitResult {
  std::unique_ptr<FittedModel> model;
  int mtry_used = 0;  // 0 for learners without mtry
  std::vector<std::string> warnings;
};

FitResult fit_model(const LearnerConfig& config, const FeatureTable& x,
                    std::span<const double> y, std::span<const double> weights,
                    const FitRequest& request);

}  // namespace adt
