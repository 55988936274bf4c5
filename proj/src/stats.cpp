// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "ltr/stats.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ltr/io_util.hpp"

namespace ltr {

std::string_view view_name(FieldView view) {
  switch (view) {
    case FieldView::kConcat: return "concat";
    case FieldView::kTitle: return "title";
    case FieldView::kContent: return "content";
    case FieldView::kConcatBigram: return "concat_bigram";
    case FieldView::kConcatNonstop: return "concat_nonstop";
  }
  throw std::logic_error("unknown view");
}

std::vector<Token> view_tokens(const QueryDocRecord& rec, FieldView view,
                               const StopwordSet& stops) {
  switch (view) {
    case FieldView::kTitle: return rec.title;
    case FieldView::kContent: return rec.content;
    default: break;
  }
  std::vector<Token> concat;
  concat.reserve(rec.title.size() + rec.content.size());
  concat.insert(concat.end(), rec.title.begin(), rec.title.end());
  concat.insert(concat.end(), rec.content.begin(), rec.content.end());
  switch (view) {
    case FieldView::kConcat: return concat;
    case FieldView::kConcatBigram: return bigrams(concat);
    case FieldView::kConcatNonstop: return filter_stopwords(concat, stops);
    default: break;
  }
  throw std::logic_error("unknown view");
}

std::vector<Token> view_query(std::span<const Token> query, FieldView view,
                              const StopwordSet& stops) {
  switch (view) {
    case FieldView::kConcat:
    case FieldView::kTitle:
    case FieldView::kContent:
      return {query.begin(), query.end()};
    case FieldView::kConcatBigram:
      return bigrams(query);
    case FieldView::kConcatNonstop:
      return filter_stopwords(query, stops);
  }
  throw std::logic_error("unknown view");
}

std::int64_t CollectionStats::df(FieldView v, const Token& t) const {
  const auto& m = view(v).terms;
  auto it = m.find(t);
  return it == m.end() ? 0 : it->second.df;
}

std::int64_t CollectionStats::cf(FieldView v, const Token& t) const {
  const auto& m = view(v).terms;
  auto it = m.find(t);
  return it == m.end() ? 0 : it->second.cf;
}

CollectionStats build_stats(std::span<const QueryDocRecord> records, StopwordSet stops) {
  if (records.empty()) throw std::runtime_error("build_stats: empty corpus");
  CollectionStats stats;
  stats.n_docs = static_cast<std::int64_t>(records.size());
  stats.stopwords = std::move(stops);
  std::unordered_map<Token, std::int64_t> doc_counts;
  for (const auto& rec : records) {
    for (FieldView v : kAllViews) {
      auto tokens = view_tokens(rec, v, stats.stopwords);
      auto& vs = stats.view(v);
      vs.total_tokens += static_cast<std::int64_t>(tokens.size());
      doc_counts.clear();
      for (const auto& t : tokens) ++doc_counts[t];
      for (const auto& [t, n] : doc_counts) {
        auto& ts = vs.terms[t];
        ts.df += 1;
        ts.cf += n;
      }
    }
  }
  for (FieldView v : kAllViews) {
    auto& vs = stats.view(v);
    vs.avgdl = static_cast<double>(vs.total_tokens) / static_cast<double>(stats.n_docs);
  }
  return stats;
}

namespace {

constexpr std::string_view kMagic = "ltrkit.stats";
constexpr int kVersion = 1;

[[noreturn]] void load_fail(const std::string& section, const std::string& what) {
  throw std::runtime_error("load_stats: " + section + ": " + what);
}

std::string next_line(std::istream& in, const std::string& section) {
  std::string line;
  if (!std::getline(in, line)) load_fail(section, "unexpected end of file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void save_stats(const CollectionStats& stats, std::ostream& sink) {
  sink << kMagic << ' ' << kVersion << '\n';
  sink << "ndocs\t" << stats.n_docs << '\n';
  sink << "stopwords\t" << stats.stopwords.size() << '\n';
  for (const auto& t : stats.stopwords.ordered()) sink << t << '\n';
  for (FieldView v : kAllViews) {
    const auto& vs = stats.view(v);
    sink << "view\t" << view_name(v) << '\t' << vs.total_tokens << '\t'
         << vs.terms.size() << '\n';
    std::vector<const Token*> keys;
    keys.reserve(vs.terms.size());
    for (const auto& [t, ts] : vs.terms) keys.push_back(&t);
    std::sort(keys.begin(), keys.end(),
              [](const Token* a, const Token* b) { return *a < *b; });
    for (const Token* t : keys) {
      const auto& ts = vs.terms.at(*t);
      sink << *t << '\t' << ts.df << '\t' << ts.cf << '\n';
    }
  }
  sink << "end\n";
}

CollectionStats load_stats(std::istream& source) {
  std::string line = next_line(source, "header");
  auto head = split_fields(line, ' ');
  if (head.size() != 2 || head[0] != kMagic) load_fail("header", "bad magic");
  if (parse_int(head[1]) != kVersion)
    load_fail("header", "unsupported version " + std::string(head[1]));

  CollectionStats stats;
  {
    line = next_line(source, "ndocs");
    auto f = split_fields(line, '\t');
    if (f.size() != 2 || f[0] != "ndocs") load_fail("ndocs", "malformed line");
    stats.n_docs = parse_int(f[1]);
  }
  {
    line = next_line(source, "stopwords");
    auto f = split_fields(line, '\t');
    if (f.size() != 2 || f[0] != "stopwords") load_fail("stopwords", "malformed line");
    std::int64_t n = parse_int(f[1]);
    std::vector<Token> ordered;
    ordered.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) ordered.push_back(next_line(source, "stopwords"));
    stats.stopwords = StopwordSet(std::move(ordered));
  }
  for (FieldView v : kAllViews) {
    const std::string section = "view " + std::string(view_name(v));
    line = next_line(source, section);
    auto f = split_fields(line, '\t');
    if (f.size() != 4 || f[0] != "view" || f[1] != view_name(v))
      load_fail(section, "malformed view header");
    auto& vs = stats.view(v);
    vs.total_tokens = parse_int(f[2]);
    std::int64_t n_terms = parse_int(f[3]);
    vs.terms.reserve(static_cast<std::size_t>(n_terms));
    for (std::int64_t i = 0; i < n_terms; ++i) {
      line = next_line(source, section);
      auto tf = split_fields(line, '\t');
      if (tf.size() != 3) load_fail(section, "malformed term line");
      TermStats ts{parse_int(tf[1]), parse_int(tf[2])};
      if (ts.df <= 0 || ts.df > stats.n_docs || ts.cf < ts.df)
        load_fail(section, "inconsistent counts for term '" + std::string(tf[0]) + "'");
      vs.terms.emplace(std::string(tf[0]), ts);
    }
    vs.avgdl = stats.n_docs > 0
                   ? static_cast<double>(vs.total_tokens) / static_cast<double>(stats.n_docs)
                   : 0.0;
  }
  if (next_line(source, "trailer") != "end") load_fail("trailer", "missing end marker");
  return stats;
}

}  // namespace ltr
