#include "adtcurve/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adtcurve/common.hpp"
#include "adtcurve/parallel.hpp"
#include "adtcurve/rng.hpp"
#include "adtcurve/stats.hpp"

namespace adt {

namespace {

constexpr double kMinGain = 1e-12;

struct PreparedFeature {
  std::uint8_t kind = 0;  // 0 numeric, 1 one-vs-rest categorical, 2 encoded categorical
  int n_codes = 0;
  std::vector<std::uint16_t> codes;  // canonical order
  std::vector<double> edges;         // numeric: split value for "<= edges[k]"
};

struct FitContext {
  std::size_t n = 0;
  std::vector<std::size_t> canon;  // canonical position -> original row
  std::vector<double> y;           // canonical order
  std::vector<double> cum_prob;    // weighted bootstrap CDF (empty = uniform)
  std::vector<PreparedFeature> features;
  std::vector<int> encoded_slot;
  int n_encoded = 0;
};

PreparedFeature prepare_numeric(const std::vector<double>& col,
                                const std::vector<std::size_t>& canon, int max_bins) {
  PreparedFeature f;
  f.kind = 0;
  const std::size_t n = canon.size();
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = col[canon[i]];
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> uniq;
  for (double v : sorted)
    if (uniq.empty() || v != uniq.back()) uniq.push_back(v);

  if (static_cast<int>(uniq.size()) <= max_bins) {
    for (std::size_t k = 0; k + 1 < uniq.size(); ++k)
      f.edges.push_back(0.5 * (uniq[k] + uniq[k + 1]));
  } else {
    for (int b = 1; b < max_bins; ++b) {
      std::size_t idx = n * static_cast<std::size_t>(b) / max_bins;
      double e = sorted[idx];
      if (f.edges.empty() || e > f.edges.back()) f.edges.push_back(e);
    }
  }
  f.n_codes = static_cast<int>(f.edges.size()) + 1;
  f.codes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = col[canon[i]];
    auto it = std::lower_bound(f.edges.begin(), f.edges.end(), v);
    f.codes[i] = static_cast<std::uint16_t>(it - f.edges.begin());
  }
  return f;
}

PreparedFeature prepare_categorical(const std::vector<double>& col,
                                    const std::vector<std::size_t>& canon, int levels,
                                    bool encoded) {
  PreparedFeature f;
  f.kind = encoded ? 2 : 1;
  f.n_codes = levels;
  f.codes.resize(canon.size());
  for (std::size_t i = 0; i < canon.size(); ++i)
    f.codes[i] = static_cast<std::uint16_t>(col[canon[i]]);
  return f;
}

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  std::uint8_t kind = 0;
  int code = -1;  // bin / rank threshold, or level for one-vs-rest
};

struct NodeStats {
  double m = 0.0, my = 0.0, myy = 0.0;
  double impurity() const { return myy - (m > 0.0 ? my * my / m : 0.0); }
  double score() const { return m > 0.0 ? my * my / m : 0.0; }
};

}  // namespace

void Forest::fit(const LearnerSpec& spec, const FeatureTable& x, std::span<const double> y,
                 std::span<const double> weights, std::uint64_t seed, int threads) {
  const std::size_t n = x.rows();
  if (n == 0) throw DataError("forest fit: empty data");
  if (y.size() != n) throw DataError("forest fit: |y| != |X| rows");
  if (!weights.empty() && weights.size() != n)
    throw DataError("forest fit: weight length mismatch");
  if (spec.num_trees < 1) throw ConfigError("num_trees must be >= 1");

  spec_ = spec;
  feature_names_ = x.names;
  col_levels_ = x.n_levels;

  if (spec.task == TreeTask::kClassification) {
    bool saw0 = false, saw1 = false;
    for (double v : y) {
      if (v == 0.0) saw0 = true;
      else if (v == 1.0) saw1 = true;
      else throw DataError("classification targets must be 0 or 1");
    }
    if (!saw0 || !saw1)
      throw DataError("classification target is constant; cannot fit a classifier");
  }

  FitContext ctx;
  ctx.n = n;
  ctx.canon.resize(n);
  std::iota(ctx.canon.begin(), ctx.canon.end(), 0);
  std::stable_sort(ctx.canon.begin(), ctx.canon.end(), [&](std::size_t a, std::size_t b) {
    return x.row_ids[a] < x.row_ids[b];
  });
  ctx.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) ctx.y[i] = y[ctx.canon[i]];

  if (!weights.empty()) {
    double total = 0.0;
    bool any_pos = false;
    for (double w : weights) {
      if (w < 0.0 || !std::isfinite(w)) throw DataError("weights must be finite and >= 0");
      if (w > 0.0) any_pos = true;
      total += w;
    }
    if (!any_pos) throw DataError("weights must not all be zero");
    ctx.cum_prob.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += weights[ctx.canon[i]] / total;
      ctx.cum_prob[i] = acc;
    }
    ctx.cum_prob.back() = 1.0;
  }

  const std::size_t p = x.n_features();
  if (p == 0) throw DataError("forest fit: no features");
  ctx.features.resize(p);
  ctx.encoded_slot.assign(p, -1);
  for (std::size_t j = 0; j < p; ++j) {
    if (x.n_levels[j] == 0) {
      ctx.features[j] = prepare_numeric(x.cols[j], ctx.canon, spec.histogram_bins);
    } else if (x.n_levels[j] <= spec.max_onehot_levels) {
      ctx.features[j] = prepare_categorical(x.cols[j], ctx.canon, x.n_levels[j], false);
    } else {
      ctx.features[j] = prepare_categorical(x.cols[j], ctx.canon, x.n_levels[j], true);
      ctx.encoded_slot[j] = ctx.n_encoded++;
    }
  }
  encoded_slot_ = ctx.encoded_slot;

  int mtry = spec.mtry;
  if (mtry <= 0) mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
  mtry = std::min<int>(mtry, static_cast<int>(p));
  const int min_node = spec.resolved_min_node_size();
  const std::size_t n_trees = static_cast<std::size_t>(spec.num_trees);

  trees_.assign(n_trees, Tree{});
  std::vector<std::vector<double>> tree_importance(n_trees);
  std::vector<std::vector<std::uint32_t>> oob_rows(spec.compute_oob ? n_trees : 0);

  int max_codes = 0;
  for (const auto& f : ctx.features) max_codes = std::max(max_codes, f.n_codes);

  parallel_for(
      n_trees,
      [&](std::size_t t) {
        std::mt19937_64 rng = make_engine(seed, salt::kTree, t);
        Tree& tree = trees_[t];
        std::vector<double>& importance = tree_importance[t];
        importance.assign(p, 0.0);

        // Bootstrap multiplicities over canonical positions.
        std::vector<std::uint32_t> mult(ctx.n, 0);
        if (ctx.cum_prob.empty()) {
          std::uniform_int_distribution<std::size_t> pick(0, ctx.n - 1);
          for (std::size_t i = 0; i < ctx.n; ++i) ++mult[pick(rng)];
        } else {
          std::uniform_real_distribution<double> unit(0.0, 1.0);
          for (std::size_t i = 0; i < ctx.n; ++i) {
            double u = unit(rng);
            auto it = std::upper_bound(ctx.cum_prob.begin(), ctx.cum_prob.end(), u);
            if (it == ctx.cum_prob.end()) --it;
            ++mult[it - ctx.cum_prob.begin()];
          }
        }

        std::vector<std::uint32_t> rows;
        rows.reserve(ctx.n);
        for (std::size_t i = 0; i < ctx.n; ++i)
          if (mult[i] > 0) rows.push_back(static_cast<std::uint32_t>(i));
        if (spec.compute_oob) {
          for (std::size_t i = 0; i < ctx.n; ++i)
            if (mult[i] == 0) oob_rows[t].push_back(static_cast<std::uint32_t>(i));
        }

        // In-bag target encoding for large categoricals; splits use the rank of
        // each level when ordered by its encoded mean.
        double inbag_m = 0.0, inbag_my = 0.0;
        for (std::uint32_t r : rows) {
          inbag_m += mult[r];
          inbag_my += mult[r] * ctx.y[r];
        }
        double global_mean = inbag_my / inbag_m;
        tree.encodings.resize(static_cast<std::size_t>(ctx.n_encoded));
        std::vector<std::vector<std::uint16_t>> rank_of_level(ctx.n_encoded);
        for (std::size_t j = 0; j < p; ++j) {
          int slot = ctx.encoded_slot[j];
          if (slot < 0) continue;
          int levels = ctx.features[j].n_codes;
          std::vector<double> sum_m(levels, 0.0), sum_my(levels, 0.0);
          for (std::uint32_t r : rows) {
            int l = ctx.features[j].codes[r];
            sum_m[l] += mult[r];
            sum_my[l] += mult[r] * ctx.y[r];
          }
          std::vector<double> enc(levels);
          for (int l = 0; l < levels; ++l)
            enc[l] = sum_m[l] > 0.0 ? sum_my[l] / sum_m[l] : global_mean;
          std::vector<int> order(levels);
          std::iota(order.begin(), order.end(), 0);
          std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (enc[a] != enc[b]) return enc[a] < enc[b];
            return a < b;
          });
          rank_of_level[slot].resize(levels);
          tree.encodings[slot].resize(levels);
          for (int pos = 0; pos < levels; ++pos) {
            rank_of_level[slot][order[pos]] = static_cast<std::uint16_t>(pos);
            tree.encodings[slot][order[pos]] = static_cast<double>(pos);
          }
        }

        auto code_of = [&](std::size_t j, std::uint32_t r) -> int {
          const PreparedFeature& f = ctx.features[j];
          int raw = f.codes[r];
          if (f.kind == 2) return rank_of_level[ctx.encoded_slot[j]][raw];
          return raw;
        };

        std::vector<double> hm(max_codes), hmy(max_codes), hmyy(max_codes);
        std::vector<std::uint32_t> scratch(rows.size());
        std::vector<int> perm(p);

        struct Work {
          int node;
          std::uint32_t begin, end;
          NodeStats stats;
        };
        std::vector<Work> stack;

        auto node_stats = [&](std::uint32_t begin, std::uint32_t end) {
          NodeStats s;
          for (std::uint32_t i = begin; i < end; ++i) {
            std::uint32_t r = rows[i];
            double m = mult[r];
            s.m += m;
            s.my += m * ctx.y[r];
            s.myy += m * ctx.y[r] * ctx.y[r];
          }
          return s;
        };

        tree.nodes.push_back(Node{});
        stack.push_back(
            {0, 0, static_cast<std::uint32_t>(rows.size()), node_stats(0, rows.size())});

        while (!stack.empty()) {
          Work work = stack.back();
          stack.pop_back();
          Node& node = tree.nodes[work.node];
          node.value = work.stats.my / work.stats.m;

          bool splittable = work.stats.m > min_node &&
                            work.stats.impurity() > kMinGain * std::max(1.0, work.stats.myy);
          if (!splittable) continue;

          std::iota(perm.begin(), perm.end(), 0);
          SplitChoice best;
          for (int trial = 0; trial < mtry; ++trial) {
            std::uniform_int_distribution<int> pick(trial, static_cast<int>(p) - 1);
            std::swap(perm[trial], perm[pick(rng)]);
            std::size_t j = static_cast<std::size_t>(perm[trial]);
            const PreparedFeature& f = ctx.features[j];
            std::fill_n(hm.begin(), f.n_codes, 0.0);
            std::fill_n(hmy.begin(), f.n_codes, 0.0);
            std::fill_n(hmyy.begin(), f.n_codes, 0.0);
            for (std::uint32_t i = work.begin; i < work.end; ++i) {
              std::uint32_t r = rows[i];
              int c = code_of(j, r);
              double m = mult[r];
              hm[c] += m;
              hmy[c] += m * ctx.y[r];
              hmyy[c] += m * ctx.y[r] * ctx.y[r];
            }
            double parent_score = work.stats.score();
            if (f.kind == 1) {
              // one-vs-rest enumeration over levels
              for (int l = 0; l < f.n_codes; ++l) {
                if (hm[l] < 1.0 || work.stats.m - hm[l] < 1.0) continue;
                double right_m = work.stats.m - hm[l];
                double right_my = work.stats.my - hmy[l];
                double gain =
                    hmy[l] * hmy[l] / hm[l] + right_my * right_my / right_m - parent_score;
                if (gain > best.gain) {
                  best = {gain, static_cast<int>(j), 1, l};
                }
              }
            } else {
              double lm = 0.0, lmy = 0.0;
              for (int k = 0; k + 1 < f.n_codes; ++k) {
                lm += hm[k];
                lmy += hmy[k];
                if (lm < 1.0) continue;
                double rm = work.stats.m - lm;
                if (rm < 1.0) break;
                double rmy = work.stats.my - lmy;
                double gain = lmy * lmy / lm + rmy * rmy / rm - parent_score;
                if (gain > best.gain) {
                  best = {gain, static_cast<int>(j), f.kind, k};
                }
              }
            }
          }

          if (best.feature < 0 || best.gain <= kMinGain * std::max(1.0, work.stats.myy))
            continue;
          importance[best.feature] += best.gain;

          const PreparedFeature& bf = ctx.features[best.feature];
          auto goes_left = [&](std::uint32_t r) {
            int c = code_of(best.feature, r);
            if (best.kind == 1) return c == best.code;
            return c <= best.code;
          };
          std::uint32_t n_left = 0;
          for (std::uint32_t i = work.begin; i < work.end; ++i)
            if (goes_left(rows[i])) scratch[n_left++] = rows[i];
          std::uint32_t n_right = 0;
          for (std::uint32_t i = work.begin; i < work.end; ++i)
            if (!goes_left(rows[i])) scratch[n_left + n_right++] = rows[i];
          std::copy(scratch.begin(), scratch.begin() + n_left + n_right,
                    rows.begin() + work.begin);

          int left_id = static_cast<int>(tree.nodes.size());
          tree.nodes.push_back(Node{});
          tree.nodes.push_back(Node{});
          Node& parent = tree.nodes[work.node];
          parent.feature = best.feature;
          parent.kind = best.kind;
          parent.left = left_id;
          parent.right = left_id + 1;
          if (best.kind == 0) {
            parent.threshold = bf.edges[best.code];
          } else if (best.kind == 1) {
            parent.threshold = static_cast<double>(best.code);  // level
          } else {
            parent.threshold = static_cast<double>(best.code);  // encoded rank
          }

          std::uint32_t mid = work.begin + n_left;
          stack.push_back({left_id, work.begin, mid, node_stats(work.begin, mid)});
          stack.push_back({left_id + 1, mid, work.end, node_stats(mid, work.end)});
        }
      },
      threads);

  importance_.assign(p, 0.0);
  for (const auto& imp : tree_importance)
    for (std::size_t j = 0; j < p; ++j) importance_[j] += imp[j];

  oob_score_ = 0.0;
  if (spec.compute_oob) {
    std::vector<double> oob_sum(n, 0.0);
    std::vector<int> oob_cnt(n, 0);
    for (std::size_t t = 0; t < n_trees; ++t) {
      for (std::uint32_t pos : oob_rows[t]) {
        std::size_t orig = ctx.canon[pos];
        oob_sum[orig] += predict_tree(trees_[t], x, orig, -1, 0.0);
        oob_cnt[orig] += 1;
      }
    }
    double sse = 0.0, sst = 0.0, ybar = mean(y);
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (oob_cnt[i] == 0) continue;
      double pred = oob_sum[i] / oob_cnt[i];
      sse += (y[i] - pred) * (y[i] - pred);
      sst += (y[i] - ybar) * (y[i] - ybar);
      ++used;
    }
    oob_score_ = (used > 0 && sst > 0.0) ? 1.0 - sse / sst : 0.0;
  }
}

double Forest::predict_tree(const Tree& tree, const FeatureTable& x, std::size_t row,
                            int override_col, double override_val) const {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const Node& nd = tree.nodes[node];
    double v = nd.feature == override_col ? override_val : x.cols[nd.feature][row];
    bool left;
    if (nd.kind == 0) {
      left = v <= nd.threshold;
    } else if (nd.kind == 1) {
      left = static_cast<int>(v) == static_cast<int>(nd.threshold);
    } else {
      const auto& enc = tree.encodings[encoded_slot_[nd.feature]];
      int level = static_cast<int>(v);
      double rank = (level >= 0 && level < static_cast<int>(enc.size()))
                        ? enc[level]
                        : nd.threshold + 1.0;  // unknown level: send right
      left = rank <= nd.threshold;
    }
    node = left ? nd.left : nd.right;
  }
  return tree.nodes[node].value;
}

std::vector<double> Forest::predict(const FeatureTable& x, int threads) const {
  return predict_override(x, -1, 0.0, threads);
}

double Forest::predict_row(const FeatureTable& x, std::size_t row) const {
  double s = 0.0;
  for (const auto& tree : trees_) s += predict_tree(tree, x, row, -1, 0.0);
  return s / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict_override(const FeatureTable& x, int column,
                                             double value, int threads) const {
  if (!fitted()) throw NumericError("forest predict before fit");
  if (x.n_features() != feature_names_.size())
    throw DataError("forest predict: feature count mismatch");
  const std::size_t n = x.rows();
  std::vector<double> out(n, 0.0);
  const double inv = 1.0 / static_cast<double>(trees_.size());
  parallel_for(
      n,
      [&](std::size_t i) {
        double s = 0.0;
        for (const auto& tree : trees_) s += predict_tree(tree, x, i, column, value);
        out[i] = s * inv;
      },
      threads);
  return out;
}

std::vector<int> kfold_assignments(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> folds(n);
  for (std::size_t i = 0; i < n; ++i)
    folds[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return folds;
}

std::vector<int> grouped_kfold_assignments(std::span<const int> groups, int k,
                                           std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  int max_group = -1;
  for (int g : groups) max_group = std::max(max_group, g);
  std::size_t n_groups = static_cast<std::size_t>(max_group + 1);
  if (n_groups < static_cast<std::size_t>(k))
    throw DataError("fewer groups than folds: " + std::to_string(n_groups) + " < " +
                    std::to_string(k));
  std::vector<int> group_order(n_groups);
  std::iota(group_order.begin(), group_order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(group_order.begin(), group_order.end(), rng);
  std::vector<int> fold_of_group(n_groups);
  for (std::size_t i = 0; i < n_groups; ++i)
    fold_of_group[group_order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  std::vector<int> folds(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) folds[i] = fold_of_group[groups[i]];
  return folds;
}

std::vector<double> cross_fit_predictions(const LearnerSpec& spec, const FeatureTable& x,
                                          std::span<const double> y,
                                          std::span<const double> weights,
                                          std::span<const int> folds, std::uint64_t seed,
                                          int threads) {
  const std::size_t n = x.rows();
  int k = 0;
  for (int f : folds) k = std::max(k, f + 1);
  std::vector<double> out(n, 0.0);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train, held;
    for (std::size_t i = 0; i < n; ++i)
      (folds[i] == fold ? held : train).push_back(i);
    if (held.empty()) continue;
    if (train.empty()) throw DataError("cross-fit fold with empty training set");

    FeatureTable x_train = subset_rows(x, train);
    std::vector<double> y_train(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = y[train[i]];
    std::vector<double> w_train;
    if (!weights.empty()) {
      w_train.resize(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) w_train[i] = weights[train[i]];
    }
    Forest forest;
    forest.fit(spec, x_train, y_train, w_train, substream_seed(seed, salt::kFolds, fold),
               threads);
    FeatureTable x_held = subset_rows(x, held);
    std::vector<double> pred = forest.predict(x_held, threads);
    for (std::size_t i = 0; i < held.size(); ++i) out[held[i]] = pred[i];
  }
  return out;
}

namespace {

struct CvMetrics {
  double r2 = 0.0, rmse = 0.0, min_prob = 1.0, max_prob = 0.0;
};

CvMetrics pooled_metrics(std::span<const double> y, std::span<const double> pred,
                         std::span<const double> weights) {
  CvMetrics m;
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    swy += w * y[i];
  }
  double ybar = swy / sw;
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    sse += w * (y[i] - pred[i]) * (y[i] - pred[i]);
    sst += w * (y[i] - ybar) * (y[i] - ybar);
    m.min_prob = std::min(m.min_prob, pred[i]);
    m.max_prob = std::max(m.max_prob, pred[i]);
  }
  m.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
  m.rmse = std::sqrt(sse / sw);
  return m;
}

}  // namespace

TuningReport tune_mtry(const LearnerSpec& spec, const FeatureTable& x,
                       std::span<const double> y, std::span<const double> weights,
                       TuningPolicy policy, std::span<const int> site_of_row,
                       std::span<const int> t_of_row, std::uint64_t seed, int threads) {
  const std::size_t n = x.rows();
  const int p = static_cast<int>(x.n_features());
  TuningReport report;

  std::vector<int> folds;
  std::vector<std::size_t> train_rows, eval_rows;
  if (policy == TuningPolicy::kSiteFold) {
    if (site_of_row.size() != n) throw ConfigError("site_fold tuning needs site ids");
    folds = grouped_kfold_assignments(site_of_row, 5, substream_seed(seed, salt::kFolds));
  } else if (policy == TuningPolicy::kTemporalBias) {
    if (t_of_row.size() != n) throw ConfigError("temporal_bias tuning needs a time index");
    std::vector<int> distinct(t_of_row.begin(), t_of_row.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
      throw NumericError("cannot form temporal folds: fewer than 2 distinct time points");
    int t_mid = distinct[distinct.size() / 2];
    for (std::size_t i = 0; i < n; ++i)
      (t_of_row[i] < t_mid ? train_rows : eval_rows).push_back(i);
  } else {
    folds = kfold_assignments(n, 5, substream_seed(seed, salt::kFolds));
  }

  for (int mtry = 1; mtry <= p; ++mtry) {
    LearnerSpec candidate = spec;
    candidate.mtry = mtry;
    TuneCandidate entry;
    entry.mtry = mtry;
    std::uint64_t cand_seed = substream_seed(seed, salt::kTuning, mtry);

    if (policy == TuningPolicy::kTemporalBias) {
      FeatureTable x_train = subset_rows(x, train_rows);
      std::vector<double> y_train(train_rows.size());
      for (std::size_t i = 0; i < train_rows.size(); ++i) y_train[i] = y[train_rows[i]];
      std::vector<double> w_train;
      if (!weights.empty()) {
        w_train.resize(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i)
          w_train[i] = weights[train_rows[i]];
      }
      Forest forest;
      forest.fit(candidate, x_train, y_train, w_train, cand_seed, threads);
      FeatureTable x_eval = subset_rows(x, eval_rows);
      std::vector<double> pred = forest.predict(x_eval, threads);
      double pm = 0.0, ym = 0.0, wsum = 0.0;
      for (std::size_t i = 0; i < eval_rows.size(); ++i) {
        double w = weights.empty() ? 1.0 : weights[eval_rows[i]];
        pm += w * pred[i];
        ym += w * y[eval_rows[i]];
        wsum += w;
      }
      entry.abs_mean_bias = std::abs(pm / wsum - ym / wsum);
    } else {
      std::vector<double> pred =
          cross_fit_predictions(candidate, x, y, weights, folds, cand_seed, threads);
      CvMetrics m = pooled_metrics(y, pred, weights);
      entry.r2 = m.r2;
      entry.rmse = m.rmse;
      entry.min_prob = m.min_prob;
      entry.max_prob = m.max_prob;
    }
    report.candidates.push_back(entry);
  }

  switch (policy) {
    case TuningPolicy::kPlateau:
    case TuningPolicy::kSiteFold: {
      // smallest mtry beyond which neither R^2 nor RMSE improves meaningfully
      report.selected = report.candidates.back().mtry;
      for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        bool plateau = true;
        for (std::size_t j = i + 1; j < report.candidates.size(); ++j) {
          if (report.candidates[j].r2 - report.candidates[i].r2 >= 0.01 ||
              report.candidates[i].rmse - report.candidates[j].rmse >= 0.1) {
            plateau = false;
            break;
          }
        }
        if (plateau) {
          report.selected = report.candidates[i].mtry;
          break;
        }
      }
      break;
    }
    case TuningPolicy::kProbBounded: {
      report.selected = 0;
      for (const auto& c : report.candidates)
        if (c.min_prob >= 0.001 && c.max_prob <= 0.99) report.selected = c.mtry;
      if (report.selected == 0) {
        report.selected = 1;
        report.warnings.push_back(
            "no mtry keeps CV probabilities within [0.001, 0.99]; falling back to mtry=1");
      }
      break;
    }
    case TuningPolicy::kTemporalBias: {
      double best = std::numeric_limits<double>::infinity();
      report.selected = 1;
      for (const auto& c : report.candidates) {
        if (c.abs_mean_bias < best) {
          best = c.abs_mean_bias;
          report.selected = c.mtry;
        }
      }
      break;
    }
  }
  return report;
}

}  // namespace adt
