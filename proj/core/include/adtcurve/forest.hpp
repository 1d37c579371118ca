#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adtcurve/features.hpp"

namespace adt {

enum class TreeTask { kRegression, kClassification };

enum class TuningPolicy { kPlateau, kSiteFold, kProbBounded, kTemporalBias };

struct LearnerSpec {
  TreeTask task = TreeTask::kRegression;
  int num_trees = 500;
  int min_node_size = 0;  // 0 = default for task: 5 regression, 10 classification
  int mtry = 0;           // 0 = tune (or sqrt(p) fallback when no tuner is run)
  int histogram_bins = 64;
  int max_onehot_levels = 32;  // larger categoricals are target-encoded per tree
  bool compute_oob = false;

  int resolved_min_node_size() const {
    if (min_node_size > 0) return min_node_size;
    return task == TreeTask::kRegression ? 5 : 10;
  }
};

/// Bagged CART ensemble over histogram-binned features. Observation weights
/// enter through the bootstrap resampling probabilities; split criteria are
/// weighted by the resampled multiplicities. Deterministic given the seed for
/// any worker count, and invariant to input row order (rows are processed in
/// row_id order).
class Forest {
 public:
  void fit(const LearnerSpec& spec, const FeatureTable& x, std::span<const double> y,
           std::span<const double> weights, std::uint64_t seed, int threads = 0);

  std::vector<double> predict(const FeatureTable& x, int threads = 0) const;
  double predict_row(const FeatureTable& x, std::size_t row) const;
  /// Predict with one column replaced by a constant for every row.
  std::vector<double> predict_override(const FeatureTable& x, int column, double value,
                                       int threads = 0) const;

  const LearnerSpec& spec() const { return spec_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  bool fitted() const { return !trees_.empty(); }

  /// Out-of-bag R^2 (regression) or Brier-skill (classification); only when
  /// compute_oob was set.
  double oob_score() const { return oob_score_; }
  const std::vector<double>& feature_importance() const { return importance_; }

 private:
  struct Node {
    // feature < 0 marks a leaf; `threshold` is a raw value (numeric), a level
    // code (one-vs-rest categorical), or an encoded target mean (large
    // categorical).
    int feature = -1;
    std::uint8_t kind = 0;  // 0 numeric, 1 one-vs-rest level, 2 encoded categorical
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
  };
  struct Tree {
    std::vector<Node> nodes;
    // per large-categorical feature: level -> split rank (levels ordered by
    // their in-bag target mean for this tree)
    std::vector<std::vector<double>> encodings;
  };

  double predict_tree(const Tree& tree, const FeatureTable& x, std::size_t row,
                      int override_col, double override_val) const;

  LearnerSpec spec_;
  std::vector<std::string> feature_names_;
  std::vector<int> col_levels_;
  std::vector<int> encoded_slot_;  // feature -> index into Tree::encodings, or -1
  std::vector<Tree> trees_;
  double oob_score_ = 0.0;
  std::vector<double> importance_;
};

struct TuneCandidate {
  int mtry = 0;
  double r2 = 0.0;
  double rmse = 0.0;
  double min_prob = 0.0;
  double max_prob = 0.0;
  double abs_mean_bias = 0.0;
};

struct TuningReport {
  int selected = 1;
  std::vector<TuneCandidate> candidates;
  std::vector<std::string> warnings;
};

/// Deterministic k-fold assignments; by row, or grouped so that all rows of a
/// group land in the same fold (fold sizes balanced at the group level).
std::vector<int> kfold_assignments(std::size_t n, int k, std::uint64_t seed);
std::vector<int> grouped_kfold_assignments(std::span<const int> groups, int k,
                                           std::uint64_t seed);

/// Out-of-fold predictions for the given fold assignment.
std::vector<double> cross_fit_predictions(const LearnerSpec& spec, const FeatureTable& x,
                                          std::span<const double> y,
                                          std::span<const double> weights,
                                          std::span<const int> folds, std::uint64_t seed,
                                          int threads = 0);

/// Select mtry by the given policy over candidates 1..p.
///   plateau       5-fold CV; smallest mtry past which R^2 gains < 0.01 and
///                 RMSE gains < 0.1
///   site_fold     plateau criterion with site-grouped folds
///   prob_bounded  largest mtry whose CV probabilities stay in [0.001, 0.99]
///   temporal_bias first/second half time split; minimize |mean(pred)-mean(y)|
///                 on the held-out later window
TuningReport tune_mtry(const LearnerSpec& spec, const FeatureTable& x,
                       std::span<const double> y, std::span<const double> weights,
                       TuningPolicy policy, std::span<const int> site_of_row,
                       std::span<const int> t_of_row, std::uint64_t seed,
                       int threads = 0);

}  // namespace adt
