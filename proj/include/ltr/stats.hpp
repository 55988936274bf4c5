// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <unordered_map>

#include "ltr/corpus.hpp"

namespace ltr {

/// The four-and-a-bit field views the lexical scorers run over. Every
/// ranking feature maps to exactly one of these.
enum class FieldView {
  kConcat,         // title followed by content, positions running through
  kTitle,
  kContent,
  kConcatBigram,   // adjacent-pair tokens of the concat sequence
  kConcatNonstop,  // concat with stopwords removed
};

inline constexpr std::array<FieldView, 5> kAllViews = {
    FieldView::kConcat, FieldView::kTitle, FieldView::kContent,
    FieldView::kConcatBigram, FieldView::kConcatNonstop};

std::string_view view_name(FieldView view);

/// The token sequence of one record under a view.
std::vector<Token> view_tokens(const QueryDocRecord& rec, FieldView view,
                               const StopwordSet& stops);

/// The matching transformation of a query for scoring against a view.
/// Unigram views pass the query through.
std::vector<Token> view_query(std::span<const Token> query, FieldView view,
                              const StopwordSet& stops);

struct TermStats {
  std::int64_t df = 0;  // documents containing the term
  std::int64_t cf = 0;  // total occurrences

  friend bool operator==(const TermStats&, const TermStats&) = default;
};

struct ViewStats {
  std::unordered_map<Token, TermStats> terms;
  std::int64_t total_tokens = 0;
  double avgdl = 0.0;  // total_tokens / n_docs, recomputed on load

  friend bool operator==(const ViewStats&, const ViewStats&) = default;
};

/// Immutable corpus-level statistics backing BM25, query likelihood and the
/// TF/IDF features. One QueryDocRecord counts as one document.
struct CollectionStats {
  std::int64_t n_docs = 0;
  std::array<ViewStats, kAllViews.size()> views;
  StopwordSet stopwords;

  const ViewStats& view(FieldView v) const { return views[static_cast<std::size_t>(v)]; }
  ViewStats& view(FieldView v) { return views[static_cast<std::size_t>(v)]; }

  std::int64_t df(FieldView v, const Token& t) const;
  std::int64_t cf(FieldView v, const Token& t) const;

  friend bool operator==(const CollectionStats&, const CollectionStats&) = default;
};

/// Counts df/cf/total_tokens per view over the records. Throws on an empty
/// corpus.
CollectionStats build_stats(std::span<const QueryDocRecord> records, StopwordSet stops);

/// Versioned text format; load(save(x)) == x exactly (all persisted
/// quantities are integer counts, avgdl is re-derived).
void save_stats(const CollectionStats& stats, std::ostream& sink);
CollectionStats load_stats(std::istream& source);

}  // namespace ltr
