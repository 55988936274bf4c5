// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ltr {

/// Tokens are opaque whitespace-separated symbols (the corpus ships
/// pre-hashed token ids); no stemming or case folding is applied.
using Token = std::string;

/// Joins the two halves of a bigram. Cannot occur inside a token, so joined
/// bigrams never collide with each other or with unigrams.
inline constexpr char kBigramSep = '\x1f';

/// One query-document pair. Training records carry a click label, annotation
/// records carry a graded relevance label; either may be absent per split.
struct QueryDocRecord {
  std::string qid;
  std::vector<Token> query;
  std::vector<Token> title;
  std::vector<Token> content;
  std::optional<int> click;          // {0,1}
  std::optional<int> relevance;      // {0..4}
  std::optional<int> freq_bucket;    // >= 0
  std::optional<int> rank_position;  // >= 1, original SERP rank
};

enum class RecordSchema {
  kTrain,       // qid, query, title, content, click, rank_position, freq_bucket
  kAnnotation,  // qid, query, title, content, relevance, freq_bucket
};

struct ParseError : std::runtime_error {
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

/// High-frequency tokens of a reference corpus. `ordered` keeps the
/// derivation order (descending collection frequency, ties by surface form)
/// which is also the serialization order.
class StopwordSet {
 public:
  StopwordSet() = default;
  explicit StopwordSet(std::vector<Token> ordered_terms);

  bool contains(const Token& t) const { return index_.count(t) > 0; }
  std::size_t size() const { return ordered_.size(); }
  bool empty() const { return ordered_.empty(); }
  const std::vector<Token>& ordered() const { return ordered_; }

  friend bool operator==(const StopwordSet& a, const StopwordSet& b) {
    return a.ordered_ == b.ordered_;
  }

 private:
  std::vector<Token> ordered_;
  std::unordered_set<Token> index_;
};

/// Maps (original qid, exact query token sequence) to a dense integer id.
class QidRemap {
 public:
  /// Returns the id for the pair, or -1 when unseen.
  int id_of(const std::string& qid, std::span<const Token> query) const;
  int assign(const std::string& qid, std::span<const Token> query);
  std::size_t size() const { return mapping_.size(); }

 private:
  static std::string key(const std::string& qid, std::span<const Token> query);
  std::unordered_map<std::string, int> mapping_;
};

/// Reads tab-separated records, one per line; empty lines are skipped.
/// Fields are space-delimited token lists; an empty optional field is absent.
/// Throws ParseError on wrong column counts, bad label values, or an empty
/// query field.
std::vector<QueryDocRecord> parse_records(std::istream& source, RecordSchema schema);

/// The k most frequent tokens over title+content by total occurrence count,
/// ties broken by ascending surface form. k larger than the vocabulary
/// returns the whole vocabulary.
StopwordSet derive_stopwords(std::span<const QueryDocRecord> records, std::size_t k);

/// Order-preserving subsequence of `tokens` without the stopwords.
std::vector<Token> filter_stopwords(std::span<const Token> tokens, const StopwordSet& stops);

/// Adjacent token pairs joined with kBigramSep; length max(0, n-1).
std::vector<Token> bigrams(std::span<const Token> tokens);

/// Replaces qids with dense ids assigned in order of first appearance,
/// starting at 0. Records agreeing on (original qid, query text) share an id;
/// distinct query texts never share one.
std::pair<std::vector<QueryDocRecord>, QidRemap> remap_qids(
    std::span<const QueryDocRecord> records);

void save_stopwords(const StopwordSet& stops, std::ostream& sink);
StopwordSet load_stopwords(std::istream& source);

}  // namespace ltr
