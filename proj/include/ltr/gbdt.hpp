// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <vector>

#include "ltr/dcg.hpp"
#include "ltr/features.hpp"
#include "ltr/types.hpp"

namespace ltr {

/// One node of a regression tree, stored flat. feature == -1 marks a leaf.
struct TreeNode {
  int feature = -1;  // feature id 1..24 for internal nodes
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool missing_goes_left = true;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // SSE reduction of this split
};

struct Tree {
  std::vector<TreeNode> nodes;

  /// Routes one row; missing slots follow missing_goes_left.
  double predict(const FeatureVector& fv) const;
  double predict_row(const MatrixXd& x, Index row) const;
};

/// Additive ensemble of depth-limited regression trees:
///   prediction = base_score + shrinkage * sum of tree outputs.
struct GbdtModel {
  std::vector<Tree> trees;
  double shrinkage = 0.05;
  double base_score = 0.0;
  FeatureMask enabled;

  double predict(const FeatureVector& fv) const;
  VectorXd predict(const MatrixXd& x) const;
};

struct GbdtTrainConfig {
  int n_trees = 500;
  int max_depth = 6;
  int min_samples_leaf = 20;
  double shrinkage = 0.05;
  double feature_subsample = 0.9;
  double row_subsample = 0.9;
  std::uint64_t seed = 42;
  int patience = 50;  // early stop after this many non-improving trees
  int dcg_k = 10;     // validation DCG cutoff used for model selection
};

struct FitReport {
  std::vector<double> valid_dcg;  // [0] = baseline with zero trees
  std::vector<double> train_mse;  // [0] = baseline with zero trees
  int best_iteration = 0;         // tree count of the returned model
};

/// Least-squares gradient boosting on graded labels with exact greedy
/// variance-reduction splits. After every tree the validation mean DCG@k is
/// recorded; the returned model is truncated at the tree count that maximized
/// it (ties keep the smaller model). Deterministic given the seed.
GbdtModel fit(const FeatureDataset& train, const FeatureDataset& valid,
              const GbdtTrainConfig& config, FitReport* report = nullptr);

/// Total split SSE reduction per feature, normalized to sum 1; empty map for
/// a model with no splits.
std::map<int, double> feature_importance(const GbdtModel& model);

void save_model(const GbdtModel& model, std::ostream& sink);
GbdtModel load_model(std::istream& source);

}  // namespace ltr
