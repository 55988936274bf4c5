// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ltr/dcg.hpp"
#include "ltr/gbdt.hpp"
#include "ltr/types.hpp"

namespace ltr {

/// Externally produced fixed-dimension query embedding.
struct QueryEmbedding {
  std::string qid;
  VectorXd vec;
};

/// TSV `qid<TAB>v1 v2 ... vd`; dimension must be uniform across the file.
std::vector<QueryEmbedding> load_embeddings(std::istream& source);

double cosine_similarity(const VectorXd& a, const VectorXd& b);

/// Keeps the ceil(fraction * n) validation queries with the highest maximum
/// cosine similarity to any test query, ties broken by ascending qid.
/// Returned qids are sorted ascending. Throws on a zero-norm embedding
/// (naming the qid) or a dimension mismatch.
std::vector<std::string> subsample_validation(std::span<const QueryEmbedding> valid,
                                              std::span<const QueryEmbedding> test,
                                              double keep_fraction);

struct AblationRow {
  std::string spec;
  int n_features = 0;
  double mean_dcg = 0.0;
};

/// Fits one GBDT per feature subset on the masked training matrix and
/// reports the best validation mean DCG; rows come back sorted by DCG
/// descending (stable). Throws, naming the feature id, when a subset
/// references an unpopulated feature.
std::vector<AblationRow> ablate(const FeatureDataset& train, const FeatureDataset& valid,
                                std::span<const std::string> subset_specs,
                                const GbdtTrainConfig& config);

/// TSV `subset-spec<TAB>n_features<TAB>mean_dcg`.
void write_ablation_table(std::span<const AblationRow> rows, std::ostream& sink);

}  // namespace ltr
