// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "ltr/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "ltr/io_util.hpp"

namespace ltr {

namespace {

std::vector<Token> distinct_terms(std::span<const Token> tokens) {
  std::vector<Token> out;
  std::unordered_set<std::string_view> seen;
  for (const auto& t : tokens) {
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

std::unordered_map<Token, std::int64_t> term_counts(std::span<const Token> tokens) {
  std::unordered_map<Token, std::int64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return counts;
}

/// 1-based occurrence positions of each token.
std::unordered_map<Token, std::vector<int>> term_positions(std::span<const Token> tokens) {
  std::unordered_map<Token, std::vector<int>> pos;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    pos[tokens[i]].push_back(static_cast<int>(i) + 1);
  }
  return pos;
}

/// Minimum |a - b| over two ascending position lists.
int min_pair_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0, j = 0;
  int best = std::numeric_limits<int>::max();
  while (i < a.size() && j < b.size()) {
    best = std::min(best, std::abs(a[i] - b[j]));
    if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return best;
}

}  // namespace

std::string_view feature_name(int id) {
  switch (id) {
    case fid::kClickScore: return "click_score";
    case fid::kBm25: return "bm25";
    case fid::kQueryLen: return "query_length";
    case fid::kTitleLen: return "title_length";
    case fid::kContentLen: return "content_length";
    case fid::kQueryFreq: return "query_freq";
    case fid::kQl: return "ql";
    case fid::kProx1: return "prox-1";
    case fid::kProx2: return "prox-2";
    case fid::kProx3: return "prox-3";
    case fid::kProx4: return "prox-4";
    case fid::kProx1Nonstop: return "prox-1-nonstop";
    case fid::kProx2Nonstop: return "prox-2-nonstop";
    case fid::kProx3Nonstop: return "prox-3-nonstop";
    case fid::kProx4Nonstop: return "prox-4-nonstop";
    case fid::kTfIdf: return "tf-idf";
    case fid::kTf: return "tf";
    case fid::kIdf: return "idf";
    case fid::kBm25Title: return "bm25_title";
    case fid::kBm25Content: return "bm25_content";
    case fid::kBm25Bigram: return "bm25-bigram";
    case fid::kQlBigram: return "ql-bigram";
    case fid::kBm25Nonstop: return "bm25-nonstop";
    case fid::kQlNonstop: return "ql-nonstop";
    default: throw std::runtime_error("unknown feature id " + std::to_string(id));
  }
}

int FeatureMask::check(int id) {
  if (id < 1 || id > kFeatureCount) {
    throw std::runtime_error("feature id out of range: " + std::to_string(id));
  }
  return id;
}

FeatureMask FeatureMask::all() {
  FeatureMask m;
  for (int id = 1; id <= kFeatureCount; ++id) m.insert(id);
  return m;
}

FeatureMask FeatureMask::of(std::initializer_list<int> ids) {
  FeatureMask m;
  for (int id : ids) m.insert(id);
  return m;
}

FeatureMask FeatureMask::parse(std::string_view spec) {
  FeatureMask m;
  if (spec.empty()) throw std::runtime_error("empty feature spec");
  for (auto piece : split_fields(spec, ',')) {
    if (piece.empty()) throw std::runtime_error("empty range in feature spec");
    auto dash = piece.find('-');
    if (dash == std::string_view::npos) {
      m.insert(static_cast<int>(parse_int(piece)));
    } else {
      int lo = static_cast<int>(parse_int(piece.substr(0, dash)));
      int hi = static_cast<int>(parse_int(piece.substr(dash + 1)));
      if (lo > hi) throw std::runtime_error("descending range in feature spec");
      check(lo);
      check(hi);
      for (int id = lo; id <= hi; ++id) m.insert(id);
    }
  }
  return m;
}

void FeatureMask::insert(int id) { bits_ |= 1u << check(id); }

int FeatureMask::count() const { return __builtin_popcount(bits_); }

std::vector<int> FeatureMask::ids() const {
  std::vector<int> out;
  for (int id = 1; id <= kFeatureCount; ++id) {
    if (contains(id)) out.push_back(id);
  }
  return out;
}

std::string FeatureMask::to_string() const {
  std::string out;
  int id = 1;
  while (id <= kFeatureCount) {
    if (!contains(id)) {
      ++id;
      continue;
    }
    int end = id;
    while (end + 1 <= kFeatureCount && contains(end + 1)) ++end;
    if (!out.empty()) out.push_back(',');
    out += std::to_string(id);
    if (end > id) {
      out.push_back('-');
      out += std::to_string(end);
    }
    id = end + 1;
  }
  return out;
}

FeatureMask FeatureMask::without(int id) const {
  FeatureMask m = *this;
  m.bits_ &= ~(1u << check(id));
  return m;
}

void FeatureVector::set(int id, double value) {
  if (!std::isfinite(value)) {
    throw std::runtime_error("non-finite value for feature " + std::to_string(id));
  }
  mask_.insert(id);
  values_[static_cast<std::size_t>(id - 1)] = value;
}

double FeatureVector::at(int id) const {
  if (!has(id)) {
    throw std::runtime_error("feature " + std::to_string(id) + " not populated");
  }
  return values_[static_cast<std::size_t>(id - 1)];
}

bool operator==(const FeatureVector& a, const FeatureVector& b) {
  if (a.mask_ != b.mask_) return false;
  for (int id : a.mask_.ids()) {
    if (a.at(id) != b.at(id)) return false;
  }
  return true;
}

double bm25(std::span<const Token> query, std::span<const Token> doc,
            const CollectionStats& stats, FieldView view, const Bm25Params& params) {
  const ViewStats& vs = stats.view(view);
  if (vs.avgdl == 0.0) {
    throw std::runtime_error("bm25: empty collection view " + std::string(view_name(view)));
  }
  const auto counts = term_counts(doc);
  const double n = static_cast<double>(stats.n_docs);
  const double dl = static_cast<double>(doc.size());
  const double norm = params.k1 * (1.0 - params.b + params.b * dl / vs.avgdl);
  double score = 0.0;
  for (const auto& term : distinct_terms(query)) {
    const auto df = stats.df(view, term);
    if (df == 0) continue;
    auto it = counts.find(term);
    if (it == counts.end()) continue;
    const double tf = static_cast<double>(it->second);
    const double idf = std::log((n - static_cast<double>(df) + 0.5) /
                                    (static_cast<double>(df) + 0.5) +
                                1.0);
    score += idf * tf * (params.k1 + 1.0) / (tf + norm);
  }
  return score;
}

double query_likelihood(std::span<const Token> query, std::span<const Token> doc,
                        const CollectionStats& stats, FieldView view, double mu) {
  const ViewStats& vs = stats.view(view);
  if (vs.total_tokens == 0) {
    throw std::runtime_error("query_likelihood: empty collection view " +
                             std::string(view_name(view)));
  }
  const auto counts = term_counts(doc);
  const double total = static_cast<double>(vs.total_tokens);
  const double dl = static_cast<double>(doc.size());
  const double eps = 1.0 / (2.0 * total);
  double score = 0.0;
  for (const auto& term : query) {
    const auto cf = stats.cf(view, term);
    if (cf == 0) {
      score += std::log(mu * eps / (dl + mu));
      continue;
    }
    auto it = counts.find(term);
    const double tf = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    score += std::log((tf + mu * static_cast<double>(cf) / total) / (dl + mu));
  }
  return score;
}

double prox_averaged_min_distance(std::span<const Token> query, std::span<const Token> doc) {
  const auto positions = term_positions(doc);
  std::vector<const std::vector<int>*> present;
  for (const auto& term : distinct_terms(query)) {
    auto it = positions.find(term);
    if (it != positions.end()) present.push_back(&it->second);
  }
  double sum = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      sum += static_cast<double>(min_pair_distance(*present[i], *present[j]));
      ++pairs;
    }
  }
  if (pairs == 0) return static_cast<double>(doc.size());
  return sum / static_cast<double>(pairs);
}

double prox_averaged_position(std::span<const Token> query, std::span<const Token> doc) {
  const auto positions = term_positions(doc);
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto& term : distinct_terms(query)) {
    auto it = positions.find(term);
    if (it == positions.end()) continue;
    for (int p : it->second) sum += static_cast<double>(p);
    n += static_cast<std::int64_t>(it->second.size());
  }
  if (n == 0) return static_cast<double>(doc.size()) + 1.0;
  return sum / static_cast<double>(n);
}

int prox_pairs_within(std::span<const Token> query, std::span<const Token> doc, int window) {
  const auto positions = term_positions(doc);
  std::vector<const std::vector<int>*> present;
  for (const auto& term : distinct_terms(query)) {
    auto it = positions.find(term);
    if (it != positions.end()) present.push_back(&it->second);
  }
  int count = 0;
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      if (min_pair_distance(*present[i], *present[j]) <= window) ++count;
    }
  }
  return count;
}

double tf_feature(std::span<const Token> query, std::span<const Token> doc) {
  const auto counts = term_counts(doc);
  double sum = 0.0;
  for (const auto& term : distinct_terms(query)) {
    auto it = counts.find(term);
    if (it != counts.end()) sum += std::log1p(static_cast<double>(it->second));
  }
  return sum;
}

double idf_feature(std::span<const Token> query, const CollectionStats& stats) {
  const double n = static_cast<double>(stats.n_docs);
  double sum = 0.0;
  for (const auto& term : distinct_terms(query)) {
    const auto df = stats.df(FieldView::kConcat, term);
    sum += df == 0 ? std::log(2.0 * n) : std::log(n / static_cast<double>(df));
  }
  return sum;
}

double tf_idf_feature(std::span<const Token> query, std::span<const Token> doc,
                      const CollectionStats& stats) {
  const auto counts = term_counts(doc);
  const double n = static_cast<double>(stats.n_docs);
  double sum = 0.0;
  for (const auto& term : distinct_terms(query)) {
    const auto df = stats.df(FieldView::kConcat, term);
    if (df == 0) continue;
    auto it = counts.find(term);
    const double tf = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    sum += std::log1p(tf) * std::log(n / static_cast<double>(df));
  }
  return sum;
}

LengthFeatures length_features(const QueryDocRecord& rec) {
  return LengthFeatures{static_cast<int>(rec.query.size()),
                        static_cast<int>(rec.title.size()),
                        static_cast<int>(rec.content.size())};
}

int query_freq_feature(const QueryDocRecord& rec) {
  return rec.freq_bucket.value_or(-1);
}

FeatureVector extract(const QueryDocRecord& rec, const CollectionStats& stats,
                      const ExtractConfig& config) {
  FeatureMask wanted = config.enabled;
  if (config.enabled.contains(fid::kClickScore)) {
    if (config.click_scorer == nullptr) {
      throw std::runtime_error("extract: feature 1 (click_score) enabled without a click scorer");
    }
    wanted = wanted | config.click_scorer->inputs;
  }
  wanted = wanted.without(fid::kClickScore);

  const auto& stops = stats.stopwords;
  std::vector<Token> concat = view_tokens(rec, FieldView::kConcat, stops);
  std::vector<Token> concat_ns;     // lazily built nonstop doc
  std::vector<Token> query_ns;      // matching filtered query
  std::vector<Token> concat_bi;     // lazily built bigram doc
  std::vector<Token> query_bi;
  bool have_ns = false, have_bi = false;
  auto ensure_nonstop = [&] {
    if (!have_ns) {
      concat_ns = filter_stopwords(concat, stops);
      query_ns = view_query(rec.query, FieldView::kConcatNonstop, stops);
      have_ns = true;
    }
  };
  auto ensure_bigram = [&] {
    if (!have_bi) {
      concat_bi = bigrams(concat);
      query_bi = view_query(rec.query, FieldView::kConcatBigram, stops);
      have_bi = true;
    }
  };

  FeatureVector fv;
  for (int id : wanted.ids()) {
    double value = 0.0;
    switch (id) {
      case fid::kBm25:
        value = bm25(rec.query, concat, stats, FieldView::kConcat, config.bm25);
        break;
      case fid::kQueryLen: value = length_features(rec).query_len; break;
      case fid::kTitleLen: value = length_features(rec).title_len; break;
      case fid::kContentLen: value = length_features(rec).content_len; break;
      case fid::kQueryFreq: value = query_freq_feature(rec); break;
      case fid::kQl:
        value = query_likelihood(rec.query, concat, stats, FieldView::kConcat, config.mu);
        break;
      case fid::kProx1: value = prox_averaged_min_distance(rec.query, concat); break;
      case fid::kProx2: value = prox_averaged_position(rec.query, concat); break;
      case fid::kProx3: value = prox_pairs_within(rec.query, concat, 5); break;
      case fid::kProx4: value = prox_pairs_within(rec.query, concat, 10); break;
      case fid::kProx1Nonstop:
        ensure_nonstop();
        value = prox_averaged_min_distance(query_ns, concat_ns);
        break;
      case fid::kProx2Nonstop:
        ensure_nonstop();
        value = prox_averaged_position(query_ns, concat_ns);
        break;
      case fid::kProx3Nonstop:
        ensure_nonstop();
        value = prox_pairs_within(query_ns, concat_ns, 5);
        break;
      case fid::kProx4Nonstop:
        ensure_nonstop();
        value = prox_pairs_within(query_ns, concat_ns, 10);
        break;
      case fid::kTfIdf: value = tf_idf_feature(rec.query, concat, stats); break;
      case fid::kTf: value = tf_feature(rec.query, concat); break;
      case fid::kIdf: value = idf_feature(rec.query, stats); break;
      case fid::kBm25Title:
        value = bm25(rec.query, rec.title, stats, FieldView::kTitle, config.bm25);
        break;
      case fid::kBm25Content:
        value = bm25(rec.query, rec.content, stats, FieldView::kContent, config.bm25);
        break;
      case fid::kBm25Bigram:
        ensure_bigram();
        value = bm25(query_bi, concat_bi, stats, FieldView::kConcatBigram, config.bm25);
        break;
      case fid::kQlBigram:
        ensure_bigram();
        value = query_likelihood(query_bi, concat_bi, stats, FieldView::kConcatBigram,
                                 config.mu);
        break;
      case fid::kBm25Nonstop:
        ensure_nonstop();
        value = bm25(query_ns, concat_ns, stats, FieldView::kConcatNonstop, config.bm25);
        break;
      case fid::kQlNonstop:
        ensure_nonstop();
        value = query_likelihood(query_ns, concat_ns, stats, FieldView::kConcatNonstop,
                                 config.mu);
        break;
      default:
        throw std::runtime_error("extract: feature " + std::to_string(id) +
                                 " has no producer");
    }
    fv.set(id, value);
  }

  if (config.enabled.contains(fid::kClickScore)) {
    fv.set(fid::kClickScore, config.click_scorer->score(fv));
  }

  // Trim the scratch slots that were computed only as click-scorer inputs.
  if (wanted != config.enabled.without(fid::kClickScore)) {
    FeatureVector trimmed;
    for (int id : config.enabled.ids()) trimmed.set(id, fv.at(id));
    return trimmed;
  }
  return fv;
}

void write_feature_file(std::span<const FeatureRow> rows, std::ostream& sink) {
  for (const auto& row : rows) {
    sink << render_double(row.label) << " qid:" << row.qid;
    for (int id : row.features.mask().ids()) {
      sink << ' ' << id << ':' << render_double(row.features.at(id));
    }
    if (!row.comment.empty()) sink << " # " << row.comment;
    sink << '\n';
  }
}

std::vector<FeatureRow> read_feature_file(std::istream& source) {
  std::vector<FeatureRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view body = line;
    FeatureRow row;
    auto hash = body.find('#');
    if (hash != std::string_view::npos) {
      std::string_view comment = body.substr(hash + 1);
      if (!comment.empty() && comment.front() == ' ') comment.remove_prefix(1);
      row.comment = std::string(comment);
      body = body.substr(0, hash);
    }
    auto parts = split_tokens(body);
    if (parts.size() < 2) throw ParseError(line_no, "expected '<label> qid:<id> ...'");
    try {
      row.label = parse_double(parts[0]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad label '" + std::string(parts[0]) + "'");
    }
    if (parts[1].substr(0, 4) != "qid:") throw ParseError(line_no, "missing qid field");
    try {
      row.qid = parse_int(parts[1].substr(4));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad qid '" + std::string(parts[1]) + "'");
    }
    int prev_id = 0;
    for (std::size_t i = 2; i < parts.size(); ++i) {
      auto colon = parts[i].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "malformed feature pair '" + std::string(parts[i]) + "'");
      }
      int id = 0;
      double value = 0;
      try {
        id = static_cast<int>(parse_int(parts[i].substr(0, colon)));
        value = parse_double(parts[i].substr(colon + 1));
      } catch (const std::exception&) {
        throw ParseError(line_no, "malformed feature pair '" + std::string(parts[i]) + "'");
      }
      if (id < 1 || id > kFeatureCount) {
        throw ParseError(line_no, "feature id out of range: " + std::to_string(id));
      }
      if (id <= prev_id) throw ParseError(line_no, "feature ids not ascending");
      prev_id = id;
      if (!std::isfinite(value)) {
        throw ParseError(line_no, "non-finite value for feature " + std::to_string(id));
      }
      row.features.set(id, value);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

FeatureDataset to_dataset(std::span<const FeatureRow> rows) {
  FeatureDataset ds;
  const Index n = static_cast<Index>(rows.size());
  ds.x = MatrixXd::Constant(n, kFeatureCount, std::numeric_limits<double>::quiet_NaN());
  ds.labels = VectorXd::Zero(n);
  ds.qids.reserve(rows.size());
  ds.doc_index.reserve(rows.size());
  ds.populated = rows.empty() ? FeatureMask() : FeatureMask::all();
  std::unordered_map<std::int64_t, int> group_sizes;
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    ds.labels(i) = row.label;
    ds.qids.push_back(row.qid);
    ds.doc_index.push_back(group_sizes[row.qid]++);
    ds.populated = ds.populated & row.features.mask();
    for (int id : row.features.mask().ids()) {
      ds.x(i, id - 1) = row.features.at(id);
    }
  }
  return ds;
}

}  // namespace ltr
