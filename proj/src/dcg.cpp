// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "ltr/dcg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ltr {

double dcg_at_k(const RankedList& list, const DcgConfig& config) {
  if (config.k < 1) throw std::runtime_error("dcg_at_k: k must be >= 1");
  const std::size_t depth = std::min<std::size_t>(list.entries.size(),
                                                  static_cast<std::size_t>(config.k));
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    const double rel = list.entries[i].relevance;
    const double gain =
        config.gain == DcgConfig::Gain::kLinear ? rel : std::exp2(rel) - 1.0;
    dcg += gain / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg;
}

std::vector<RankedList> rank_per_query(std::span<const ScoredDoc> scores,
                                       const GradeLookup& grades) {
  std::vector<RankedList> lists;
  std::unordered_map<std::int64_t, std::size_t> list_of_qid;
  std::unordered_map<std::int64_t, std::unordered_set<int>> seen;
  for (const auto& sd : scores) {
    if (!seen[sd.qid].insert(sd.doc_index).second) {
      throw std::runtime_error("rank_per_query: duplicate (qid " + std::to_string(sd.qid) +
                               ", doc " + std::to_string(sd.doc_index) + ")");
    }
    auto [it, inserted] = list_of_qid.emplace(sd.qid, lists.size());
    if (inserted) lists.push_back(RankedList{sd.qid, {}});
    lists[it->second].entries.push_back(
        RankedEntry{sd.doc_index, sd.score, grades(sd.qid, sd.doc_index)});
  }
  for (auto& list : lists) {
    std::stable_sort(list.entries.begin(), list.entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) {
                       return a.score > b.score;
                     });
  }
  return lists;
}

std::vector<RankedList> rank_rows(std::span<const std::int64_t> qids,
                                  std::span<const int> doc_index, const VectorXd& scores,
                                  const VectorXd& grades) {
  std::vector<RankedList> lists;
  std::unordered_map<std::int64_t, std::size_t> list_of_qid;
  for (std::size_t i = 0; i < qids.size(); ++i) {
    auto [it, inserted] = list_of_qid.emplace(qids[i], lists.size());
    if (inserted) lists.push_back(RankedList{qids[i], {}});
    lists[it->second].entries.push_back(RankedEntry{
        doc_index[i], scores(static_cast<Index>(i)), grades(static_cast<Index>(i))});
  }
  for (auto& list : lists) {
    std::stable_sort(list.entries.begin(), list.entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) {
                       return a.score > b.score;
                     });
  }
  return lists;
}

double mean_dcg(std::span<const RankedList> lists, const DcgConfig& config) {
  if (lists.empty()) throw std::runtime_error("mean_dcg: no queries");
  double sum = 0.0;
  for (const auto& list : lists) sum += dcg_at_k(list, config);
  return sum / static_cast<double>(lists.size());
}

}  // namespace ltr
