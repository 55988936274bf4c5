// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "ltr/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace ltr {

namespace {

constexpr double kMinGain = 1e-12;

struct SplitCandidate {
  double gain = 0.0;
  int feature = 0;
  double threshold = 0.0;
  bool missing_left = true;
  bool found = false;
};

struct NodeAgg {
  std::int64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double v) {
    ++n;
    sum += v;
    sumsq += v * v;
  }
  double sse() const { return n == 0 ? 0.0 : sumsq - sum * sum / static_cast<double>(n); }
};

class TreeBuilder {
 public:
  TreeBuilder(const MatrixXd& x, const VectorXd& residual, std::vector<int> features,
              const GbdtTrainConfig& config)
      : x_(x), residual_(residual), features_(std::move(features)), config_(config) {}

  Tree build(std::vector<Index> rows) {
    Tree tree;
    build_node(tree, std::move(rows), 0);
    return tree;
  }

 private:
  int build_node(Tree& tree, std::vector<Index> rows, int depth) {
    NodeAgg agg;
    for (Index r : rows) agg.add(residual_(r));
    const double mean = agg.sum / static_cast<double>(agg.n);

    SplitCandidate best;
    if (depth < config_.max_depth &&
        agg.n >= 2 * static_cast<std::int64_t>(config_.min_samples_leaf) &&
        agg.sse() > kMinGain) {
      best = find_split(rows, agg);
    }

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (!best.found) {
      tree.nodes[node_id].value = mean;
      return node_id;
    }

    std::vector<Index> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    const int col = best.feature - 1;
    for (Index r : rows) {
      const double v = x_(r, col);
      const bool go_left = std::isnan(v) ? best.missing_left : v < best.threshold;
      (go_left ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[node_id].feature = best.feature;
    tree.nodes[node_id].threshold = best.threshold;
    tree.nodes[node_id].missing_goes_left = best.missing_left;
    tree.nodes[node_id].gain = best.gain;
    const int left_id = build_node(tree, std::move(left_rows), depth + 1);
    const int right_id = build_node(tree, std::move(right_rows), depth + 1);
    tree.nodes[node_id].left = left_id;
    tree.nodes[node_id].right = right_id;
    return node_id;
  }

  SplitCandidate find_split(const std::vector<Index>& rows, const NodeAgg& parent) {
    SplitCandidate best;
    const auto min_leaf = static_cast<std::int64_t>(config_.min_samples_leaf);
    std::vector<std::pair<double, double>> present;  // (value, residual)
    present.reserve(rows.size());
    for (int feature : features_) {
      const int col = feature - 1;
      present.clear();
      NodeAgg missing;
      for (Index r : rows) {
        const double v = x_(r, col);
        if (std::isnan(v)) {
          missing.add(residual_(r));
        } else {
          present.emplace_back(v, residual_(r));
        }
      }
      if (present.empty()) continue;
      std::sort(present.begin(), present.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      NodeAgg left;
      for (std::size_t i = 0; i + 1 < present.size(); ++i) {
        left.add(present[i].second);
        if (present[i].first == present[i + 1].first) continue;
        const double threshold = present[i].first / 2.0 + present[i + 1].first / 2.0;
        // The rounded midpoint must actually separate the two values under
        // the `v < threshold` routing rule.
        if (!(present[i].first < threshold && threshold <= present[i + 1].first)) continue;
        // Try the missing block on each side; first winner keeps left on ties.
        for (bool missing_left : {true, false}) {
          NodeAgg l = left;
          if (missing_left) {
            l.n += missing.n;
            l.sum += missing.sum;
            l.sumsq += missing.sumsq;
          }
          const std::int64_t rn = parent.n - l.n;
          if (l.n < min_leaf || rn < min_leaf) continue;
          const double rsum = parent.sum - l.sum;
          const double rsumsq = parent.sumsq - l.sumsq;
          const double rsse = rsumsq - rsum * rsum / static_cast<double>(rn);
          const double gain = parent.sse() - l.sse() - rsse;
          if (gain > best.gain + kMinGain) {
            best = SplitCandidate{gain, feature, threshold, missing_left, true};
          }
        }
      }
    }
    return best;
  }

  const MatrixXd& x_;
  const VectorXd& residual_;
  std::vector<int> features_;
  const GbdtTrainConfig& config_;
};

/// Sampled subset of 0..n-1 of size ceil(fraction*n), in ascending order.
std::vector<Index> sample_subset(Index n, double fraction, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (fraction >= 1.0) return idx;
  const auto keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < keep; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::max<std::size_t>(keep, 1));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double mean_squared_error(const VectorXd& pred, const VectorXd& labels) {
  double sum = 0.0;
  for (Index i = 0; i < pred.size(); ++i) {
    const double d = pred(i) - labels(i);
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

}  // namespace

double Tree::predict(const FeatureVector& fv) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature != -1) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    if (!fv.has(n.feature)) {
      node = n.missing_goes_left ? n.left : n.right;
    } else {
      node = fv.at(n.feature) < n.threshold ? n.left : n.right;
    }
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

double Tree::predict_row(const MatrixXd& x, Index row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature != -1) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    const double v = x(row, n.feature - 1);
    if (std::isnan(v)) {
      node = n.missing_goes_left ? n.left : n.right;
    } else {
      node = v < n.threshold ? n.left : n.right;
    }
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

double GbdtModel::predict(const FeatureVector& fv) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(fv);
  return base_score + shrinkage * sum;
}

VectorXd GbdtModel::predict(const MatrixXd& x) const {
  VectorXd out = VectorXd::Constant(x.rows(), base_score);
  for (const auto& tree : trees) {
    for (Index i = 0; i < x.rows(); ++i) out(i) += shrinkage * tree.predict_row(x, i);
  }
  return out;
}

GbdtModel fit(const FeatureDataset& train, const FeatureDataset& valid,
              const GbdtTrainConfig& config, FitReport* report) {
  const Index n = train.rows();
  if (n == 0) throw std::runtime_error("gbdt fit: empty training set");
  if (config.n_trees < 1) throw std::runtime_error("gbdt fit: n_trees must be >= 1");
  if (config.max_depth < 1) throw std::runtime_error("gbdt fit: max_depth must be >= 1");
  if (config.min_samples_leaf < 1) {
    throw std::runtime_error("gbdt fit: min_samples_leaf must be >= 1");
  }
  if (config.shrinkage <= 0.0 || config.shrinkage > 1.0) {
    throw std::runtime_error("gbdt fit: shrinkage must be in (0,1]");
  }
  if (config.feature_subsample <= 0.0 || config.feature_subsample > 1.0 ||
      config.row_subsample <= 0.0 || config.row_subsample > 1.0) {
    throw std::runtime_error("gbdt fit: subsample fractions must be in (0,1]");
  }
  for (Index i = 0; i < n; ++i) {
    const double y = train.labels(i);
    if (y != std::floor(y) || y < 0.0 || y > 4.0) {
      throw std::runtime_error("gbdt fit: relevance label must be an integer grade 0..4");
    }
  }
  {
    std::unordered_map<std::int64_t, int> group_sizes;
    for (auto qid : valid.qids) ++group_sizes[qid];
    const bool has_group = std::any_of(group_sizes.begin(), group_sizes.end(),
                                       [](const auto& kv) { return kv.second > 1; });
    if (!has_group) {
      throw std::runtime_error("gbdt fit: DCG undefined (validation set has no "
                               "multi-document query)");
    }
  }

  GbdtModel model;
  model.shrinkage = config.shrinkage;
  model.enabled = train.populated;
  model.base_score = train.labels.mean();

  const std::vector<int> all_features = model.enabled.ids();
  if (all_features.empty()) throw std::runtime_error("gbdt fit: no populated features");

  VectorXd train_pred = VectorXd::Constant(n, model.base_score);
  VectorXd valid_pred = VectorXd::Constant(valid.rows(), model.base_score);
  VectorXd residual = train.labels - train_pred;

  const DcgConfig dcg_config{config.dcg_k, DcgConfig::Gain::kLinear};
  auto valid_dcg = [&]() {
    auto lists = rank_rows(valid.qids, valid.doc_index, valid_pred, valid.labels);
    return mean_dcg(lists, dcg_config);
  };

  FitReport local_report;
  FitReport& rep = report ? *report : local_report;
  rep.valid_dcg.assign(1, valid_dcg());
  rep.train_mse.assign(1, mean_squared_error(train_pred, train.labels));
  rep.best_iteration = 0;
  double best_dcg = rep.valid_dcg[0];

  std::mt19937_64 rng(config.seed);
  for (int t = 0; t < config.n_trees; ++t) {
    if (residual.squaredNorm() <= kMinGain) break;  // nothing left to fit

    std::vector<Index> rows = sample_subset(n, config.row_subsample, rng);
    std::vector<int> features = all_features;
    if (config.feature_subsample < 1.0) {
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(config.feature_subsample *
                           static_cast<double>(all_features.size()))));
      for (std::size_t i = 0; i < keep && i + 1 < features.size(); ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (features.size() - i));
        std::swap(features[i], features[j]);
      }
      features.resize(std::min(keep, features.size()));
      std::sort(features.begin(), features.end());
    }

    TreeBuilder builder(train.x, residual, std::move(features), config);
    Tree tree = builder.build(std::move(rows));
    model.trees.push_back(std::move(tree));
    const Tree& fitted = model.trees.back();

    for (Index i = 0; i < n; ++i) {
      train_pred(i) += config.shrinkage * fitted.predict_row(train.x, i);
    }
    residual = train.labels - train_pred;
    for (Index i = 0; i < valid.rows(); ++i) {
      valid_pred(i) += config.shrinkage * fitted.predict_row(valid.x, i);
    }

    rep.train_mse.push_back(mean_squared_error(train_pred, train.labels));
    const double dcg = valid_dcg();
    rep.valid_dcg.push_back(dcg);
    const int iteration = t + 1;
    if (dcg > best_dcg) {
      best_dcg = dcg;
      rep.best_iteration = iteration;
    } else if (iteration - rep.best_iteration >= config.patience) {
      break;
    }
  }

  model.trees.resize(static_cast<std::size_t>(rep.best_iteration));
  return model;
}

std::map<int, double> feature_importance(const GbdtModel& model) {
  std::map<int, double> totals;
  double sum = 0.0;
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.feature != -1) {
        totals[node.feature] += node.gain;
        sum += node.gain;
      }
    }
  }
  if (sum <= 0.0) return {};
  for (auto& [id, g] : totals) g /= sum;
  return totals;
}

namespace {
constexpr const char* kModelFormat = "ltrkit.gbdt";
constexpr int kModelVersion = 1;
}  // namespace

void save_model(const GbdtModel& model, std::ostream& sink) {
  nlohmann::json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["base_score"] = model.base_score;
  doc["shrinkage"] = model.shrinkage;
  doc["enabled"] = model.enabled.empty() ? "" : model.enabled.to_string();
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
      if (node.feature == -1) {
        nodes.push_back({{"value", node.value}});
      } else {
        nodes.push_back({{"feature", node.feature},
                         {"threshold", node.threshold},
                         {"left", node.left},
                         {"right", node.right},
                         {"missing", node.missing_goes_left ? "left" : "right"},
                         {"gain", node.gain}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  sink << doc.dump() << '\n';
}

GbdtModel load_model(std::istream& source) {
  nlohmann::json doc;
  try {
    source >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_model: not a valid model file: ") + e.what());
  }
  try {
    if (!doc.contains("format") || doc["format"] != kModelFormat) {
      throw std::runtime_error("bad magic");
    }
    if (doc["version"] != kModelVersion) {
      throw std::runtime_error("version mismatch: got " + doc["version"].dump() +
                               ", want " + std::to_string(kModelVersion));
    }
    GbdtModel model;
    model.base_score = doc["base_score"].get<double>();
    model.shrinkage = doc["shrinkage"].get<double>();
    const auto enabled = doc["enabled"].get<std::string>();
    if (!enabled.empty()) model.enabled = FeatureMask::parse(enabled);
    for (const auto& jtree : doc["trees"]) {
      Tree tree;
      for (const auto& jnode : jtree) {
        TreeNode node;
        if (jnode.contains("value")) {
          node.value = jnode["value"].get<double>();
        } else {
          node.feature = jnode["feature"].get<int>();
          node.threshold = jnode["threshold"].get<double>();
          node.left = jnode["left"].get<int>();
          node.right = jnode["right"].get<int>();
          node.missing_goes_left = jnode["missing"].get<std::string>() == "left";
          node.gain = jnode["gain"].get<double>();
        }
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw std::runtime_error("empty tree");
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_model: malformed model: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("load_model: ") + e.what());
  }
}

}  // namespace ltr
