// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "ltr/click_model.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ltr/io_util.hpp"

namespace ltr {

namespace {

constexpr double kScoreClamp = 1e-12;

double clamp_prob(double s) {
  return std::min(std::max(s, kScoreClamp), 1.0 - kScoreClamp);
}

/// Fisher-Yates with an explicit draw so shuffles do not depend on the
/// standard library's std::shuffle implementation.
void seeded_shuffle(std::vector<Index>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

VectorXd parse_vector_line(const std::vector<std::string_view>& fields,
                                  const char* section) {
  if (fields.size() != 2) {
    throw std::runtime_error(std::string("load_click_scorer: malformed ") + section);
  }
  auto parts = split_tokens(fields[1]);
  VectorXd v(static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    v(static_cast<Index>(i)) = parse_double(parts[i]);
  }
  return v;
}

}  // namespace

double ClickScorer::score_standardized(const VectorXd& xhat) const {
  return clamp_prob(sigmoid(weights.dot(xhat) + bias));
}

double ClickScorer::score(const FeatureVector& fv) const {
  const auto ids = inputs.ids();
  VectorXd xhat(static_cast<Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!fv.has(ids[k])) {
      throw std::runtime_error("click scorer: missing feature " + std::to_string(ids[k]));
    }
    xhat(static_cast<Index>(k)) =
        (fv.at(ids[k]) - mean(static_cast<Index>(k))) / stddev(static_cast<Index>(k));
  }
  return score_standardized(xhat);
}

double click_mean_bce(const MatrixXd& xhat, const VectorXd& clicks, const VectorXd& w,
                      double bias) {
  VectorXd z = xhat * w;
  VectorXd s(z.size());
  for (Index i = 0; i < z.size(); ++i) s(i) = clamp_prob(sigmoid(z(i) + bias));
  return bce_loss(s, clicks) / static_cast<double>(clicks.size());
}

void click_gradient(const MatrixXd& xhat, const VectorXd& clicks, const VectorXd& w,
                    double bias, VectorXd& grad_w, double& grad_b) {
  VectorXd z = xhat * w;
  VectorXd diff(z.size());
  for (Index i = 0; i < z.size(); ++i) diff(i) = sigmoid(z(i) + bias) - clicks(i);
  const double n = static_cast<double>(clicks.size());
  grad_w = xhat.transpose() * diff / n;
  grad_b = diff.sum() / n;
}

std::pair<ClickScorer, TrainLog> train_click_scorer(const FeatureDataset& data,
                                                    const ClickTrainConfig& config) {
  const Index n = data.rows();
  if (n == 0) throw std::runtime_error("train_click_scorer: empty training set");
  VectorXd clicks(n);
  std::int64_t positives = 0;
  for (Index i = 0; i < n; ++i) {
    const double c = data.labels(i);
    if (c != 0.0 && c != 1.0) {
      throw std::runtime_error("train_click_scorer: click label must be 0 or 1, got " +
                               render_double(c));
    }
    clicks(i) = c;
    positives += c == 1.0;
  }
  if (positives == 0 || positives == n) {
    throw std::runtime_error("train_click_scorer: degenerate click distribution");
  }

  // Candidate predictors: every slot populated in all rows except slot 1,
  // which this scorer produces.
  const auto candidate_ids = data.populated.without(fid::kClickScore).ids();
  std::vector<int> ids;
  std::vector<double> means, stds;
  for (int id : candidate_ids) {
    const auto col = data.x.col(id - 1);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      ids.push_back(id);
      means.push_back(mean);
      stds.push_back(sd);
    }
  }

  ClickScorer scorer;
  for (int id : ids) scorer.inputs.insert(id);
  const Index f = static_cast<Index>(ids.size());
  scorer.mean = Eigen::Map<const VectorXd>(means.data(), f);
  scorer.stddev = Eigen::Map<const VectorXd>(stds.data(), f);
  scorer.weights = VectorXd::Zero(f);
  const double base_rate = static_cast<double>(positives) / static_cast<double>(n);
  scorer.bias = std::log(base_rate / (1.0 - base_rate));

  MatrixXd xhat(n, f);
  for (Index k = 0; k < f; ++k) {
    xhat.col(k) = (data.x.col(ids[static_cast<std::size_t>(k)] - 1).array() -
                   scorer.mean(k)) /
                  scorer.stddev(k);
  }

  TrainLog log;
  log.initial_loss = click_mean_bce(xhat, clicks, scorer.weights, scorer.bias);

  std::mt19937_64 rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  double lr = config.learning_rate;
  const Index batch = config.batch_size > 0 ? std::min<Index>(config.batch_size, n) : n;

  VectorXd grad_w(f);
  double grad_b = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const VectorXd w_before = scorer.weights;
    const double b_before = scorer.bias;
    if (batch < n) seeded_shuffle(order, rng);
    const double prev = log.epoch_loss.empty() ? log.initial_loss : log.epoch_loss.back();

    double loss = prev;
    for (int halvings = 0; halvings <= 60; ++halvings) {
      if (batch == n) {
        click_gradient(xhat, clicks, scorer.weights, scorer.bias, grad_w, grad_b);
        scorer.weights -= lr * grad_w;
        scorer.bias -= lr * grad_b;
      } else {
        for (Index start = 0; start < n; start += batch) {
          const Index m = std::min(batch, n - start);
          MatrixXd xb(m, f);
          VectorXd cb(m);
          for (Index r = 0; r < m; ++r) {
            xb.row(r) = xhat.row(order[static_cast<std::size_t>(start + r)]);
            cb(r) = clicks(order[static_cast<std::size_t>(start + r)]);
          }
          click_gradient(xb, cb, scorer.weights, scorer.bias, grad_w, grad_b);
          scorer.weights -= lr * grad_w;
          scorer.bias -= lr * grad_b;
        }
      }
      loss = click_mean_bce(xhat, clicks, scorer.weights, scorer.bias);
      if (loss <= prev) break;
      // Epoch made things worse: rewind and retry with a smaller step.
      scorer.weights = w_before;
      scorer.bias = b_before;
      loss = prev;
      lr *= 0.5;
    }
    log.epoch_loss.push_back(loss);
    log.stopped_epoch = epoch + 1;
  }
  return {std::move(scorer), std::move(log)};
}

ClickScorerHandle make_click_handle(ClickScorer scorer) {
  ClickScorerHandle handle;
  handle.inputs = scorer.inputs;
  handle.score = [s = std::move(scorer)](const FeatureVector& fv) { return s.score(fv); };
  return handle;
}

namespace {
constexpr std::string_view kClickMagic = "ltrkit.click";
constexpr int kClickVersion = 1;

void write_vector(std::ostream& sink, const char* name, const VectorXd& v) {
  sink << name << '\t';
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) sink << ' ';
    sink << render_double(v(i));
  }
  sink << '\n';
}
}  // namespace

void save_click_scorer(const ClickScorer& scorer, std::ostream& sink) {
  sink << kClickMagic << ' ' << kClickVersion << '\n';
  sink << "features\t" << scorer.inputs.to_string() << '\n';
  sink << "bias\t" << render_double(scorer.bias) << '\n';
  write_vector(sink, "weights", scorer.weights);
  write_vector(sink, "mean", scorer.mean);
  write_vector(sink, "stddev", scorer.stddev);
}

ClickScorer load_click_scorer(std::istream& source) {
  auto fail = [](const std::string& what) -> std::runtime_error {
    return std::runtime_error("load_click_scorer: " + what);
  };
  std::string line;
  if (!std::getline(source, line)) throw fail("empty file");
  auto head = split_fields(line, ' ');
  if (head.size() != 2 || head[0] != kClickMagic) throw fail("bad magic");
  if (parse_int(head[1]) != kClickVersion) {
    throw fail("unsupported version " + std::string(head[1]));
  }
  ClickScorer scorer;
  auto read_line = [&](const char* section) {
    if (!std::getline(source, line)) throw fail(std::string("truncated at ") + section);
    return split_fields(line, '\t');
  };
  auto features = read_line("features");
  if (features.size() != 2 || features[0] != "features") throw fail("malformed features");
  if (!features[1].empty()) scorer.inputs = FeatureMask::parse(features[1]);
  auto bias = read_line("bias");
  if (bias.size() != 2 || bias[0] != "bias") throw fail("malformed bias");
  scorer.bias = parse_double(bias[1]);
  scorer.weights = parse_vector_line(read_line("weights"), "weights");
  scorer.mean = parse_vector_line(read_line("mean"), "mean");
  scorer.stddev = parse_vector_line(read_line("stddev"), "stddev");
  const Index f = static_cast<Index>(scorer.inputs.count());
  if (scorer.weights.size() != f || scorer.mean.size() != f || scorer.stddev.size() != f) {
    throw fail("vector sizes disagree with feature count");
  }
  return scorer;
}

}  // namespace ltr
