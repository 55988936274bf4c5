// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ltr/features.hpp"
#include "ltr/types.hpp"

namespace ltr {

inline constexpr double kBceClamp = 1e-12;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Summed binary cross entropy between predicted click probabilities and
/// observed click labels; log arguments are clamped at kBceClamp.
/// Accumulation is a plain sequential loop, so results are reproducible
/// bit-for-bit regardless of expression types.
template <class D1, class D2>
double bce_loss(const Eigen::DenseBase<D1>& scores, const Eigen::DenseBase<D2>& clicks) {
  if (scores.size() != clicks.size()) {
    throw std::runtime_error("bce_loss: length mismatch (" + std::to_string(scores.size()) +
                             " scores vs " + std::to_string(clicks.size()) + " clicks)");
  }
  double sum = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    const double s = scores(i);
    const double c = static_cast<double>(clicks(i));
    sum -= c * std::log(std::max(s, kBceClamp)) +
           (1.0 - c) * std::log(std::max(1.0 - s, kBceClamp));
  }
  return sum;
}

/// Pointwise probabilistic click scorer: logistic regression over
/// standardized feature slots. Supplies feature slot 1.
struct ClickScorer {
  FeatureMask inputs;  // features with nonzero training variance
  VectorXd weights;    // aligned with inputs.ids()
  double bias = 0.0;
  VectorXd mean;       // standardization, per input
  VectorXd stddev;

  /// sigmoid(w . standardized(x) + bias), clamped strictly inside (0,1).
  /// Throws, naming the feature id, when a required slot is unpopulated.
  double score(const FeatureVector& fv) const;
  double score_standardized(const VectorXd& xhat) const;
};

struct ClickTrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 42;
};

struct TrainLog {
  std::vector<double> epoch_loss;  // mean BCE after each epoch
  double initial_loss = 0.0;
  int stopped_epoch = 0;
};

/// Mean BCE of the logistic model at (w, bias) over standardized features.
double click_mean_bce(const MatrixXd& xhat, const VectorXd& clicks, const VectorXd& w,
                      double bias);

/// Analytic gradient of click_mean_bce: grad_w = xhat^T (s - c) / n,
/// grad_b = mean(s - c).
void click_gradient(const MatrixXd& xhat, const VectorXd& clicks, const VectorXd& w,
                    double bias, VectorXd& grad_w, double& grad_b);

/// Gradient descent on mean BCE over standardized features. Constant feature
/// columns are dropped; bias starts at the log-odds of the base click rate;
/// any epoch whose loss rises is retried with a halved learning rate, so the
/// recorded loss sequence is non-increasing. Deterministic given the seed.
/// Throws on an all-same click column ("degenerate click distribution").
std::pair<ClickScorer, TrainLog> train_click_scorer(const FeatureDataset& data,
                                                    const ClickTrainConfig& config);

ClickScorerHandle make_click_handle(ClickScorer scorer);

void save_click_scorer(const ClickScorer& scorer, std::ostream& sink);
ClickScorer load_click_scorer(std::istream& source);

}  // namespace ltr
