// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "ltr/corpus.hpp"

#include <algorithm>
#include <map>

#include "ltr/io_util.hpp"

namespace ltr {

namespace {

std::vector<Token> tokenize_field(std::string_view field) {
  std::vector<Token> out;
  for (auto piece : split_tokens(field)) out.emplace_back(piece);
  return out;
}

std::optional<int> parse_label(std::string_view field, const char* name, int lo, int hi,
                               std::size_t line_no) {
  if (field.empty()) return std::nullopt;
  int v = 0;
  try {
    v = static_cast<int>(parse_int(field));
  } catch (const std::exception&) {
    throw ParseError(line_no, std::string("invalid ") + name + " value '" +
                                  std::string(field) + "'");
  }
  if (v < lo || v > hi) {
    throw ParseError(line_no, std::string("invalid ") + name + " value '" +
                                  std::string(field) + "'");
  }
  return v;
}

}  // namespace

StopwordSet::StopwordSet(std::vector<Token> ordered_terms)
    : ordered_(std::move(ordered_terms)), index_(ordered_.begin(), ordered_.end()) {}

std::string QidRemap::key(const std::string& qid, std::span<const Token> query) {
  // Tabs cannot occur in tokens, so qid and query text cannot bleed together.
  std::string k = qid;
  k.push_back('\t');
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (i > 0) k.push_back(' ');
    k += query[i];
  }
  return k;
}

int QidRemap::id_of(const std::string& qid, std::span<const Token> query) const {
  auto it = mapping_.find(key(qid, query));
  return it == mapping_.end() ? -1 : it->second;
}

int QidRemap::assign(const std::string& qid, std::span<const Token> query) {
  auto [it, inserted] = mapping_.emplace(key(qid, query), static_cast<int>(mapping_.size()));
  return it->second;
}

std::vector<QueryDocRecord> parse_records(std::istream& source, RecordSchema schema) {
  const std::size_t want_cols = schema == RecordSchema::kTrain ? 7 : 6;
  std::vector<QueryDocRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_fields(line, '\t');
    if (cols.size() != want_cols) {
      throw ParseError(line_no, "expected " + std::to_string(want_cols) +
                                    " columns, got " + std::to_string(cols.size()));
    }
    QueryDocRecord rec;
    rec.qid = std::string(cols[0]);
    if (rec.qid.empty()) throw ParseError(line_no, "empty qid");
    rec.query = tokenize_field(cols[1]);
    if (rec.query.empty()) throw ParseError(line_no, "empty query");
    rec.title = tokenize_field(cols[2]);
    rec.content = tokenize_field(cols[3]);
    if (schema == RecordSchema::kTrain) {
      rec.click = parse_label(cols[4], "click", 0, 1, line_no);
      rec.rank_position = parse_label(cols[5], "rank_position", 1, 1 << 30, line_no);
      rec.freq_bucket = parse_label(cols[6], "freq_bucket", 0, 1 << 30, line_no);
    } else {
      rec.relevance = parse_label(cols[4], "relevance", 0, 4, line_no);
      rec.freq_bucket = parse_label(cols[5], "freq_bucket", 0, 1 << 30, line_no);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

StopwordSet derive_stopwords(std::span<const QueryDocRecord> records, std::size_t k) {
  std::unordered_map<Token, std::int64_t> counts;
  for (const auto& rec : records) {
    for (const auto& t : rec.title) ++counts[t];
    for (const auto& t : rec.content) ++counts[t];
  }
  std::vector<std::pair<Token, std::int64_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > k) items.resize(k);
  std::vector<Token> ordered;
  ordered.reserve(items.size());
  for (auto& [t, n] : items) ordered.push_back(std::move(t));
  return StopwordSet(std::move(ordered));
}

std::vector<Token> filter_stopwords(std::span<const Token> tokens, const StopwordSet& stops) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stops.contains(t)) out.push_back(t);
  }
  return out;
}

std::vector<Token> bigrams(std::span<const Token> tokens) {
  std::vector<Token> out;
  if (tokens.size() < 2) return out;
  out.reserve(tokens.size() - 1);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    Token joined = tokens[i];
    joined.push_back(kBigramSep);
    joined += tokens[i + 1];
    out.push_back(std::move(joined));
  }
  return out;
}

std::pair<std::vector<QueryDocRecord>, QidRemap> remap_qids(
    std::span<const QueryDocRecord> records) {
  QidRemap remap;
  std::vector<QueryDocRecord> out(records.begin(), records.end());
  for (auto& rec : out) {
    rec.qid = std::to_string(remap.assign(rec.qid, rec.query));
  }
  return {std::move(out), std::move(remap)};
}

void save_stopwords(const StopwordSet& stops, std::ostream& sink) {
  for (const auto& t : stops.ordered()) sink << t << '\n';
}

StopwordSet load_stopwords(std::istream& source) {
  std::vector<Token> ordered;
  std::string line;
  while (std::getline(source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ordered.push_back(line);
  }
  return StopwordSet(std::move(ordered));
}

}  // namespace ltr
