// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "ltr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ltr/io_util.hpp"

namespace ltr {

std::vector<QueryEmbedding> load_embeddings(std::istream& source) {
  std::vector<QueryEmbedding> out;
  std::string line;
  std::size_t line_no = 0;
  Index dim = -1;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2) {
      throw ParseError(line_no, "expected 'qid<TAB>v1 v2 ...'");
    }
    QueryEmbedding emb;
    emb.qid = std::string(fields[0]);
    if (emb.qid.empty()) throw ParseError(line_no, "empty qid");
    auto parts = split_tokens(fields[1]);
    if (parts.empty()) throw ParseError(line_no, "empty embedding");
    emb.vec.resize(static_cast<Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      double v = 0;
      try {
        v = parse_double(parts[i]);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad component '" + std::string(parts[i]) + "'");
      }
      if (!std::isfinite(v)) throw ParseError(line_no, "non-finite component");
      emb.vec(static_cast<Index>(i)) = v;
    }
    if (dim == -1) {
      dim = emb.vec.size();
    } else if (emb.vec.size() != dim) {
      throw ParseError(line_no, "dimension " + std::to_string(emb.vec.size()) +
                                    " differs from " + std::to_string(dim));
    }
    out.push_back(std::move(emb));
  }
  return out;
}

double cosine_similarity(const VectorXd& a, const VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

std::vector<std::string> subsample_validation(std::span<const QueryEmbedding> valid,
                                              std::span<const QueryEmbedding> test,
                                              double keep_fraction) {
  if (keep_fraction <= 0.0 || keep_fraction > 1.0) {
    throw std::runtime_error("subsample_validation: keep fraction must be in (0,1]");
  }
  if (!valid.empty() && !test.empty() && valid[0].vec.size() != test[0].vec.size()) {
    throw std::runtime_error("subsample_validation: embedding dimensions differ between files");
  }
  for (const auto& emb : test) {
    if (emb.vec.norm() == 0.0) {
      throw std::runtime_error("subsample_validation: zero-norm embedding for qid " + emb.qid);
    }
  }
  struct Scored {
    const QueryEmbedding* emb;
    double max_sim;
  };
  std::vector<Scored> scored;
  scored.reserve(valid.size());
  for (const auto& emb : valid) {
    if (emb.vec.norm() == 0.0) {
      throw std::runtime_error("subsample_validation: zero-norm embedding for qid " + emb.qid);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& t : test) {
      best = std::max(best, cosine_similarity(emb.vec, t.vec));
    }
    scored.push_back(Scored{&emb, best});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.max_sim != b.max_sim) return a.max_sim > b.max_sim;
    return qid_less(a.emb->qid, b.emb->qid);
  });
  const auto keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(scored.size())));
  std::vector<std::string> kept;
  kept.reserve(keep);
  for (std::size_t i = 0; i < keep && i < scored.size(); ++i) {
    kept.push_back(scored[i].emb->qid);
  }
  std::sort(kept.begin(), kept.end(),
            [](const std::string& a, const std::string& b) { return qid_less(a, b); });
  return kept;
}

namespace {

/// Restricts the dataset to one feature subset; everything else becomes NaN.
FeatureDataset mask_dataset(const FeatureDataset& ds, const FeatureMask& subset) {
  FeatureDataset out;
  out.x = MatrixXd::Constant(ds.x.rows(), ds.x.cols(),
                             std::numeric_limits<double>::quiet_NaN());
  for (int id : subset.ids()) out.x.col(id - 1) = ds.x.col(id - 1);
  out.labels = ds.labels;
  out.qids = ds.qids;
  out.doc_index = ds.doc_index;
  out.populated = subset;
  return out;
}

}  // namespace

std::vector<AblationRow> ablate(const FeatureDataset& train, const FeatureDataset& valid,
                                std::span<const std::string> subset_specs,
                                const GbdtTrainConfig& config) {
  std::vector<AblationRow> rows;
  rows.reserve(subset_specs.size());
  for (const auto& spec : subset_specs) {
    const FeatureMask subset = FeatureMask::parse(spec);
    for (int id : subset.ids()) {
      if (!train.populated.contains(id)) {
        throw std::runtime_error("ablate: feature " + std::to_string(id) +
                                 " is not populated in the training data");
      }
    }
    FitReport report;
    (void)fit(mask_dataset(train, subset), mask_dataset(valid, subset), config, &report);
    rows.push_back(AblationRow{spec, subset.count(),
                               report.valid_dcg[static_cast<std::size_t>(report.best_iteration)]});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    return a.mean_dcg > b.mean_dcg;
  });
  return rows;
}

void write_ablation_table(std::span<const AblationRow> rows, std::ostream& sink) {
  for (const auto& row : rows) {
    sink << row.spec << '\t' << row.n_features << '\t' << render_double(row.mean_dcg)
         << '\n';
  }
}

}  // namespace ltr
