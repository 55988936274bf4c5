// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ltr/types.hpp"

namespace ltr {

struct RankedEntry {
  int doc_index = 0;
  double score = 0.0;
  double relevance = 0.0;
};

/// Per-query ordering by descending score; equal scores keep ascending
/// original input order.
struct RankedList {
  std::int64_t qid = 0;
  std::vector<RankedEntry> entries;
};

struct DcgConfig {
  enum class Gain { kLinear, kExponential };
  int k = 10;
  Gain gain = Gain::kLinear;
};

/// sum_{i=1..min(k,n)} gain(rel_i) / log2(i + 1); 0 for an empty list.
double dcg_at_k(const RankedList& list, const DcgConfig& config);

struct ScoredDoc {
  std::int64_t qid = 0;
  int doc_index = 0;
  double score = 0.0;
};

using GradeLookup = std::function<double(std::int64_t qid, int doc_index)>;

/// Groups scores by qid (first-appearance order) and sorts each group per the
/// RankedList comparator. Throws on a duplicate (qid, doc_index).
std::vector<RankedList> rank_per_query(std::span<const ScoredDoc> scores,
                                       const GradeLookup& grades);

/// Row-parallel convenience: scores[i] belongs to (qids[i], doc_index[i]) and
/// carries grade grades[i].
std::vector<RankedList> rank_rows(std::span<const std::int64_t> qids,
                                  std::span<const int> doc_index, const VectorXd& scores,
                                  const VectorXd& grades);

/// Unweighted mean over queries; throws on an empty span.
double mean_dcg(std::span<const RankedList> lists, const DcgConfig& config);

}  // namespace ltr
