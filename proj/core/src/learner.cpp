#include "adtcurve/learner.hpp"

#include "adtcurve/common.hpp"
#include "adtcurve/linear.hpp"

namespace adt {

namespace {

class ForestModel : public FittedModel {
 public:
  Forest forest;
  std::vector<double> predict(const FeatureTable& x, int threads) const override {
    return forest.predict(x, threads);
  }
  std::vector<double> predict_override(const FeatureTable& x, int column, double value,
                                       int threads) const override {
    return forest.predict_override(x, column, value, threads);
  }
  const std::vector<std::string>& feature_names() const override {
    return forest.feature_names();
  }
};

class LinearFittedModel : public FittedModel {
 public:
  LinearModel model;
  std::vector<std::string> names;
  std::vector<double> predict(const FeatureTable& x, int) const override {
    return model.predict(x);
  }
  std::vector<double> predict_override(const FeatureTable& x, int column, double value,
                                       int) const override {
    return model.predict_override(x, column, value);
  }
  const std::vector<std::string>& feature_names() const override { return names; }
};

}  // namespace

FitResult fit_model(const LearnerConfig& config, const FeatureTable& x,
                    std::span<const double> y, std::span<const double> weights,
                    const FitRequest& request) {
  FitResult result;
  if (config.type == "linear") {
    if (request.task == TreeTask::kClassification)
      throw ConfigError("linear learner does not support classification");
    auto m = std::make_unique<LinearFittedModel>();
    LinearModelSpec spec{config.terms};
    m->model.fit(spec, x, y, weights);
    m->names = x.names;
    result.model = std::move(m);
    return result;
  }
  if (config.type != "forest")
    throw ConfigError("unknown learner type: " + config.type);

  LearnerSpec spec;
  spec.task = request.task;
  spec.num_trees = config.num_trees;
  spec.min_node_size = config.min_node_size;
  spec.histogram_bins = config.histogram_bins;
  spec.max_onehot_levels = config.max_onehot_levels;

  int mtry = config.mtry;
  if (request.mtry_override.has_value()) mtry = *request.mtry_override;
  if (mtry <= 0) {
    LearnerSpec tune_spec = spec;
    if (config.tuning_trees > 0) tune_spec.num_trees = config.tuning_trees;
    TuningReport report =
        tune_mtry(tune_spec, x, y, weights, request.policy, request.site_of_row,
                  request.t_of_row, request.seed, request.threads);
    mtry = report.selected;
    result.warnings = report.warnings;
  }
  spec.mtry = mtry;
  result.mtry_used = mtry;

  auto m = std::make_unique<ForestModel>();
  m->forest.fit(spec, x, y, weights, request.seed, request.threads);
  result.model = std::move(m);
  return result;
}

}  // namespace adt
