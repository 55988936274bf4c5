// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ltr/stats.hpp"
#include "ltr/types.hpp"

namespace ltr {

inline constexpr int kFeatureCount = 24;

// Fixed feature-slot numbering shared by feature files, masks and models.
namespace fid {
inline constexpr int kClickScore = 1;
inline constexpr int kBm25 = 2;
inline constexpr int kQueryLen = 3;
inline constexpr int kTitleLen = 4;
inline constexpr int kContentLen = 5;
inline constexpr int kQueryFreq = 6;
inline constexpr int kQl = 7;
inline constexpr int kProx1 = 8;
inline constexpr int kProx2 = 9;
inline constexpr int kProx3 = 10;
inline constexpr int kProx4 = 11;
inline constexpr int kProx1Nonstop = 12;
inline constexpr int kProx2Nonstop = 13;
inline constexpr int kProx3Nonstop = 14;
inline constexpr int kProx4Nonstop = 15;
inline constexpr int kTfIdf = 16;
inline constexpr int kTf = 17;
inline constexpr int kIdf = 18;
inline constexpr int kBm25Title = 19;
inline constexpr int kBm25Content = 20;
inline constexpr int kBm25Bigram = 21;
inline constexpr int kQlBigram = 22;
inline constexpr int kBm25Nonstop = 23;
inline constexpr int kQlNonstop = 24;
}  // namespace fid

std::string_view feature_name(int id);

struct Bm25Params {
  double k1 = 1.6;
  double b = 0.87;
};

/// A set of feature ids, parsed from and rendered to the comma-separated
/// range syntax used across the CLI (e.g. "2-13,15-20").
class FeatureMask {
 public:
  FeatureMask() = default;

  static FeatureMask all();
  static FeatureMask of(std::initializer_list<int> ids);
  /// Throws std::runtime_error on malformed specs or ids outside 1..24.
  static FeatureMask parse(std::string_view spec);

  void insert(int id);
  bool contains(int id) const { return (bits_ >> check(id)) & 1u; }
  int count() const;
  bool empty() const { return bits_ == 0; }
  std::vector<int> ids() const;
  std::string to_string() const;  // canonical range form

  FeatureMask operator|(FeatureMask o) const { return FeatureMask(bits_ | o.bits_); }
  FeatureMask operator&(FeatureMask o) const { return FeatureMask(bits_ & o.bits_); }
  FeatureMask without(int id) const;
  bool subset_of(FeatureMask o) const { return (bits_ & ~o.bits_) == 0; }

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;

 private:
  explicit FeatureMask(std::uint32_t bits) : bits_(bits) {}
  static int check(int id);
  std::uint32_t bits_ = 0;
};

/// Fixed-slot vector of the 24 feature values. Unpopulated slots hold NaN and
/// are excluded from the mask; populated values are always finite.
class FeatureVector {
 public:
  FeatureVector() { values_.fill(std::numeric_limits<double>::quiet_NaN()); }

  void set(int id, double value);
  bool has(int id) const { return mask_.contains(id); }
  double at(int id) const;  // throws if the slot is unpopulated
  const FeatureMask& mask() const { return mask_; }

  friend bool operator==(const FeatureVector& a, const FeatureVector& b);

 private:
  std::array<double, kFeatureCount> values_;
  FeatureMask mask_;
};

// Lexical scorers. `query` and `doc` must already be the view-appropriate
// token sequences (bigrammed / stopword-filtered as needed); `view` selects
// which statistics table backs df/cf/avgdl.

/// Okapi BM25 over distinct query terms:
///   sum idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*|doc|/avgdl)),
///   idf(t) = ln((N - df + 0.5)/(df + 0.5) + 1).
/// Terms unseen in the collection contribute 0. Throws when the view has
/// avgdl == 0.
double bm25(std::span<const Token> query, std::span<const Token> doc,
            const CollectionStats& stats, FieldView view, const Bm25Params& params);

/// Dirichlet-smoothed log query likelihood over query term occurrences:
///   sum ln((tf + mu*cf/total) / (|doc| + mu)).
/// Collection-unseen terms take the floor ln(mu*eps/(|doc|+mu)) with
/// eps = 1/(2*total). Throws when the view is empty.
double query_likelihood(std::span<const Token> query, std::span<const Token> doc,
                        const CollectionStats& stats, FieldView view, double mu);

/// Mean over unordered pairs of distinct query terms (both occurring in doc)
/// of the minimum absolute position distance between their occurrences;
/// |doc| when no such pair exists.
double prox_averaged_min_distance(std::span<const Token> query, std::span<const Token> doc);

/// Mean 1-based position of query term occurrences in doc; |doc|+1 when none.
double prox_averaged_position(std::span<const Token> query, std::span<const Token> doc);

/// Number of unordered pairs of distinct query terms whose closest
/// occurrences lie within `window` positions (inclusive); each pair counted
/// at most once.
int prox_pairs_within(std::span<const Token> query, std::span<const Token> doc, int window);

/// sum over distinct query terms of ln(1 + tf(t, doc)).
double tf_feature(std::span<const Token> query, std::span<const Token> doc);

/// sum over distinct query terms of ln(N/df); unseen terms contribute ln(2N).
double idf_feature(std::span<const Token> query, const CollectionStats& stats);

/// sum over distinct query terms with df > 0 of ln(1 + tf) * ln(N/df).
double tf_idf_feature(std::span<const Token> query, std::span<const Token> doc,
                      const CollectionStats& stats);

struct LengthFeatures {
  int query_len = 0;
  int title_len = 0;
  int content_len = 0;
};
LengthFeatures length_features(const QueryDocRecord& rec);

/// Frequency bucket of the query, -1 when the record carries none.
int query_freq_feature(const QueryDocRecord& rec);

/// Producer of feature slot 1: any scorer over the other feature slots.
/// `inputs` names the slots that must be populated before calling `score`.
struct ClickScorerHandle {
  FeatureMask inputs;
  std::function<double(const FeatureVector&)> score;
};

struct ExtractConfig {
  Bm25Params bm25;
  double mu = 2000.0;
  FeatureMask enabled = FeatureMask::parse("2-24");
  const ClickScorerHandle* click_scorer = nullptr;
};

/// Computes exactly the enabled slots of the 24-feature vector. Throws,
/// naming the feature id, when an enabled feature's prerequisite is missing
/// (slot 1 without a click scorer).
FeatureVector extract(const QueryDocRecord& rec, const CollectionStats& stats,
                      const ExtractConfig& config);

// LETOR/SVMlight-style interchange:
//   <label> qid:<int> 1:<v1> 2:<v2> ... # <comment>
// ids ascending, absent slots omitted, shortest round-trip decimals.

struct FeatureRow {
  double label = 0.0;
  std::int64_t qid = 0;
  FeatureVector features;
  std::string comment;
};

void write_feature_file(std::span<const FeatureRow> rows, std::ostream& sink);
/// Throws ParseError with the offending line number.
std::vector<FeatureRow> read_feature_file(std::istream& source);

/// Dense Eigen view of a row set: n x 24 matrix with NaN in absent slots.
/// `populated` holds the ids present in every row; `doc_index` is the 0-based
/// position of the row within its qid group in file order.
struct FeatureDataset {
  MatrixXd x;
  VectorXd labels;
  std::vector<std::int64_t> qids;
  std::vector<int> doc_index;
  FeatureMask populated;

  Index rows() const { return x.rows(); }
};

FeatureDataset to_dataset(std::span<const FeatureRow> rows);

}  // namespace ltr
