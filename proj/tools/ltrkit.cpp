// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// Batch front end wiring the ranking pipeline:
//   derive-stopwords, build-stats, extract, train-click, train-gbdt,
//   rank, evaluate, ablate, subsample.
// All randomness flows from --seed; identical invocations produce
// byte-identical artifacts. Outputs are written to a temp file and renamed
// on success, so interrupted runs never leave partial artifacts.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltr/click_model.hpp"
#include "ltr/corpus.hpp"
#include "ltr/dcg.hpp"
#include "ltr/eval.hpp"
#include "ltr/features.hpp"
#include "ltr/gbdt.hpp"
#include "ltr/io_util.hpp"
#include "ltr/parallel.hpp"
#include "ltr/stats.hpp"

namespace {

using namespace ltr;

RecordSchema schema_from_name(const std::string& name) {
  if (name == "train") return RecordSchema::kTrain;
  if (name == "annotation") return RecordSchema::kAnnotation;
  throw std::runtime_error("unknown schema '" + name + "'");
}

std::vector<QueryDocRecord> load_records(const std::string& path, const std::string& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open records file: " + path);
  try {
    return parse_records(in, schema_from_name(schema));
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

CollectionStats load_stats_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open stats file: " + path);
  return load_stats(in);
}

std::vector<FeatureRow> load_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  try {
    return read_feature_file(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::vector<QueryEmbedding> load_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  try {
    return load_embeddings(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

DcgConfig::Gain gain_from_name(const std::string& name) {
  if (name == "linear") return DcgConfig::Gain::kLinear;
  if (name == "exponential") return DcgConfig::Gain::kExponential;
  throw std::runtime_error("unknown gain '" + name + "'");
}

/// Grade of each scored (qid, doc_index) pair, from an annotation file that
/// went through the same qid remap and per-query doc numbering as extract.
std::map<std::pair<std::int64_t, int>, double> grade_table(
    std::span<const QueryDocRecord> raw_records) {
  auto [records, remap] = remap_qids(raw_records);
  std::map<std::pair<std::int64_t, int>, double> grades;
  std::unordered_map<std::int64_t, int> group_sizes;
  for (const auto& rec : records) {
    const std::int64_t qid = parse_int(rec.qid);
    const int doc = group_sizes[qid]++;
    grades[{qid, doc}] = static_cast<double>(rec.relevance.value_or(0));
  }
  return grades;
}

struct CommonOpts {
  std::uint64_t seed = 42;
  int threads = default_thread_count();
};

int cmd_derive_stopwords(const std::string& input, const std::string& schema,
                         std::size_t count, const std::string& output) {
  auto records = load_records(input, schema);
  auto stops = derive_stopwords(records, count);
  std::ostringstream out;
  save_stopwords(stops, out);
  write_file_atomic(output, out.str());
  std::cout << "stopwords=" << stops.size() << '\n';
  return 0;
}

int cmd_build_stats(const std::string& input, const std::string& schema,
                    const std::string& stopword_path, std::size_t stopword_count,
                    const std::string& output) {
  auto records = load_records(input, schema);
  StopwordSet stops;
  if (!stopword_path.empty()) {
    std::ifstream in(stopword_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open stopword file: " + stopword_path);
    stops = load_stopwords(in);
  } else {
    stops = derive_stopwords(records, stopword_count);
  }
  auto stats = build_stats(records, std::move(stops));
  std::ostringstream out;
  save_stats(stats, out);
  write_file_atomic(output, out.str());
  std::cout << "docs=" << stats.n_docs
            << " terms=" << stats.view(FieldView::kConcat).terms.size() << '\n';
  return 0;
}

int cmd_extract(const CommonOpts& common, const std::string& input,
                const std::string& schema, const std::string& stats_path,
                const std::string& features_spec, const std::string& click_model_path,
                const std::string& click_scores_path, double k1, double b, double mu,
                const std::string& output) {
  auto parsed = load_records(input, schema);
  auto [records, remap] = remap_qids(parsed);
  auto stats = load_stats_file(stats_path);

  ExtractConfig config;
  config.bm25 = Bm25Params{k1, b};
  config.mu = mu;
  config.enabled = FeatureMask::parse(features_spec);

  ClickScorerHandle handle;
  const bool external_scores = !click_scores_path.empty();
  if (!click_model_path.empty() && external_scores) {
    throw std::runtime_error("--click-model and --click-scores are mutually exclusive");
  }
  if (config.enabled.contains(fid::kClickScore)) {
    if (!click_model_path.empty()) {
      std::ifstream in(click_model_path, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open click model: " + click_model_path);
      handle = make_click_handle(load_click_scorer(in));
      config.click_scorer = &handle;
    } else if (!external_scores) {
      throw std::runtime_error(
          "feature 1 (click_score) needs --click-model or --click-scores");
    }
  }

  // With external scores, slot 1 is filled from the file after extraction.
  ExtractConfig worker_config = config;
  if (external_scores) worker_config.enabled = config.enabled.without(fid::kClickScore);

  std::vector<FeatureRow> rows(records.size());
  parallel_for(records.size(), common.threads, [&](std::size_t i) {
    rows[i].features = extract(records[i], stats, worker_config);
    rows[i].qid = parse_int(records[i].qid);
    const auto& rec = records[i];
    rows[i].label = schema == "train" ? rec.click.value_or(0) : rec.relevance.value_or(0);
    rows[i].comment = parsed[i].qid;  // original qid, for traceability
  });

  if (external_scores && config.enabled.contains(fid::kClickScore)) {
    std::map<std::pair<std::int64_t, int>, double> imported;
    std::ifstream in(click_scores_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open click scores: " + click_scores_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto fields = split_fields(line, '\t');
      if (fields.size() != 3) {
        throw std::runtime_error(click_scores_path + ": line " + std::to_string(line_no) +
                                 ": expected qid<TAB>doc_index<TAB>score");
      }
      imported[{parse_int(fields[0]), static_cast<int>(parse_int(fields[1]))}] =
          parse_double(fields[2]);
    }
    std::unordered_map<std::int64_t, int> group_sizes;
    for (auto& row : rows) {
      const int doc = group_sizes[row.qid]++;
      auto it = imported.find({row.qid, doc});
      if (it == imported.end()) {
        throw std::runtime_error("no imported click score for qid " +
                                 std::to_string(row.qid) + " doc " + std::to_string(doc));
      }
      row.features.set(fid::kClickScore, it->second);
    }
  }

  std::ostringstream out;
  write_feature_file(rows, out);
  write_file_atomic(output, out.str());
  std::cout << "rows=" << rows.size() << " features=" << config.enabled.count() << '\n';
  return 0;
}

int cmd_train_click(const CommonOpts& common, const std::string& train_path,
                    double learning_rate, int epochs, int batch_size,
                    const std::string& output) {
  auto ds = to_dataset(load_feature_file(train_path));
  ClickTrainConfig config;
  config.learning_rate = learning_rate;
  config.epochs = epochs;
  config.batch_size = batch_size;
  config.seed = common.seed;
  auto [scorer, log] = train_click_scorer(ds, config);
  std::ostringstream out;
  save_click_scorer(scorer, out);
  write_file_atomic(output, out.str());
  std::cout << "epochs=" << log.stopped_epoch << " initial_loss="
            << render_double(log.initial_loss) << " final_loss="
            << render_double(log.epoch_loss.empty() ? log.initial_loss
                                                    : log.epoch_loss.back())
            << '\n';
  return 0;
}

GbdtTrainConfig gbdt_config_from_flags(const CommonOpts& common, int n_trees, int max_depth,
                                       int min_leaf, double shrinkage,
                                       double feature_subsample, double row_subsample,
                                       int patience, int dcg_k) {
  GbdtTrainConfig config;
  config.n_trees = n_trees;
  config.max_depth = max_depth;
  config.min_samples_leaf = min_leaf;
  config.shrinkage = shrinkage;
  config.feature_subsample = feature_subsample;
  config.row_subsample = row_subsample;
  config.seed = common.seed;
  config.patience = patience;
  config.dcg_k = dcg_k;
  return config;
}

int cmd_train_gbdt(const std::string& train_path, const std::string& valid_path,
                   const GbdtTrainConfig& config, const std::string& output) {
  auto train = to_dataset(load_feature_file(train_path));
  auto valid = to_dataset(load_feature_file(valid_path));
  FitReport report;
  GbdtModel model = fit(train, valid, config, &report);
  std::ostringstream out;
  save_model(model, out);
  write_file_atomic(output, out.str());
  std::cout << "trees=" << report.best_iteration << " valid_dcg="
            << render_double(
                   report.valid_dcg[static_cast<std::size_t>(report.best_iteration)])
            << '\n';
  return 0;
}

int cmd_rank(const std::string& model_path, const std::string& features_path,
             const std::string& output) {
  std::ifstream in(model_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + model_path);
  GbdtModel model = load_model(in);
  auto ds = to_dataset(load_feature_file(features_path));
  VectorXd scores = model.predict(ds.x);
  std::ostringstream out;
  for (Index i = 0; i < scores.size(); ++i) {
    out << ds.qids[static_cast<std::size_t>(i)] << '\t'
        << ds.doc_index[static_cast<std::size_t>(i)] << '\t' << render_double(scores(i))
        << '\n';
  }
  write_file_atomic(output, out.str());
  std::cout << "scored=" << scores.size() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& scores_path, const std::string& annotations_path,
                 int k, const std::string& gain) {
  std::ifstream in(scores_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open score file: " + scores_path);
  std::vector<ScoredDoc> scored;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3) {
      throw std::runtime_error(scores_path + ": line " + std::to_string(line_no) +
                               ": expected qid<TAB>doc_index<TAB>score");
    }
    scored.push_back(ScoredDoc{parse_int(fields[0]), static_cast<int>(parse_int(fields[1])),
                               parse_double(fields[2])});
  }
  auto records = load_records(annotations_path, "annotation");
  auto grades = grade_table(records);
  auto lists = rank_per_query(scored, [&](std::int64_t qid, int doc) {
    auto it = grades.find({qid, doc});
    if (it == grades.end()) {
      throw std::runtime_error("no annotation for qid " + std::to_string(qid) + " doc " +
                               std::to_string(doc));
    }
    return it->second;
  });
  DcgConfig config{k, gain_from_name(gain)};
  std::cout << render_double(mean_dcg(lists, config)) << '\n';
  return 0;
}

int cmd_ablate(const std::string& train_path, const std::string& valid_path,
               const std::vector<std::string>& subsets, const GbdtTrainConfig& config,
               const std::string& output) {
  auto train = to_dataset(load_feature_file(train_path));
  auto valid = to_dataset(load_feature_file(valid_path));
  auto rows = ablate(train, valid, subsets, config);
  std::ostringstream out;
  write_ablation_table(rows, out);
  write_file_atomic(output, out.str());
  std::cout << "subsets=" << rows.size() << '\n';
  return 0;
}

int cmd_subsample(const std::string& valid_path, const std::string& test_path,
                  double fraction, const std::string& output) {
  auto valid = load_embeddings_file(valid_path);
  auto test = load_embeddings_file(test_path);
  auto kept = subsample_validation(valid, test, fraction);
  std::ostringstream out;
  for (const auto& qid : kept) out << qid << '\n';
  write_file_atomic(output, out.str());
  std::cout << "kept=" << kept.size() << " of " << valid.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ltrkit: learning-to-rank feature extraction, training and evaluation"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--seed", common.seed, "Seed for all randomized steps")
      ->capture_default_str();
  app.add_option("--threads", common.threads,
                 "Upper bound on worker threads (never affects results)")
      ->envname("LTRKIT_THREADS")
      ->capture_default_str();

  // derive-stopwords
  auto* sw = app.add_subcommand("derive-stopwords",
                                "Derive the top-k frequent tokens of a corpus");
  std::string sw_input, sw_schema = "train", sw_output;
  std::size_t sw_count = 50;
  sw->add_option("--input", sw_input, "Records file (TSV)")->required();
  sw->add_option("--schema", sw_schema, "Record schema: train|annotation")
      ->check(CLI::IsMember({"train", "annotation"}))
      ->capture_default_str();
  sw->add_option("--count", sw_count, "Number of stopwords")->capture_default_str();
  sw->add_option("--output", sw_output, "Stopword file to write")->required();

  // build-stats
  auto* bs = app.add_subcommand("build-stats", "Build collection statistics");
  std::string bs_input, bs_schema = "train", bs_stopwords, bs_output;
  std::size_t bs_stopword_count = 50;
  bs->add_option("--input", bs_input, "Records file (TSV)")->required();
  bs->add_option("--schema", bs_schema, "Record schema: train|annotation")
      ->check(CLI::IsMember({"train", "annotation"}))
      ->capture_default_str();
  bs->add_option("--stopwords", bs_stopwords,
                 "Stopword file; derived from the input when omitted");
  bs->add_option("--stopword-count", bs_stopword_count,
                 "Stopwords to derive when no file is given")
      ->capture_default_str();
  bs->add_option("--output", bs_output, "Statistics file to write")->required();

  // extract
  auto* ex = app.add_subcommand("extract", "Extract ranking features to a LETOR file");
  std::string ex_input, ex_schema = "train", ex_stats, ex_features = "2-24";
  std::string ex_click_model, ex_click_scores, ex_output;
  double ex_k1 = 1.6, ex_b = 0.87, ex_mu = 2000.0;
  ex->add_option("--input", ex_input, "Records file (TSV)")->required();
  ex->add_option("--schema", ex_schema, "Record schema: train|annotation")
      ->check(CLI::IsMember({"train", "annotation"}))
      ->capture_default_str();
  ex->add_option("--stats", ex_stats, "Statistics file from build-stats")->required();
  ex->add_option("--features", ex_features, "Feature ids/ranges, e.g. 2-13,15-20")
      ->capture_default_str();
  ex->add_option("--click-model", ex_click_model, "Click scorer file for feature 1");
  ex->add_option("--click-scores", ex_click_scores,
                 "External TSV qid<TAB>doc_index<TAB>score for feature 1");
  ex->add_option("--k1", ex_k1, "BM25 k1")->capture_default_str();
  ex->add_option("--b", ex_b, "BM25 b")->capture_default_str();
  ex->add_option("--mu", ex_mu, "Query-likelihood Dirichlet mu")->capture_default_str();
  ex->add_option("--output", ex_output, "Feature file to write")->required();

  // train-click
  auto* tc = app.add_subcommand("train-click", "Train the logistic click scorer");
  std::string tc_train, tc_output;
  double tc_lr = 0.1;
  int tc_epochs = 200, tc_batch = 0;
  tc->add_option("--train", tc_train, "Feature file with click labels")->required();
  tc->add_option("--learning-rate", tc_lr, "Gradient descent step size")
      ->capture_default_str();
  tc->add_option("--epochs", tc_epochs, "Training epochs")->capture_default_str();
  tc->add_option("--batch-size", tc_batch, "Mini-batch size; 0 = full batch")
      ->capture_default_str();
  tc->add_option("--output", tc_output, "Click scorer file to write")->required();

  // shared gbdt flags
  int gb_trees = 500, gb_depth = 6, gb_min_leaf = 20, gb_patience = 50, gb_dcg_k = 10;
  double gb_shrinkage = 0.05, gb_feature_subsample = 0.9, gb_row_subsample = 0.9;
  auto add_gbdt_flags = [&](CLI::App* cmd) {
    cmd->add_option("--trees", gb_trees, "Maximum number of trees")->capture_default_str();
    cmd->add_option("--max-depth", gb_depth, "Maximum tree depth")->capture_default_str();
    cmd->add_option("--min-leaf", gb_min_leaf, "Minimum training rows per leaf")
        ->capture_default_str();
    cmd->add_option("--shrinkage", gb_shrinkage, "Learning rate of the ensemble")
        ->capture_default_str();
    cmd->add_option("--feature-subsample", gb_feature_subsample,
                    "Fraction of features per tree")
        ->capture_default_str();
    cmd->add_option("--row-subsample", gb_row_subsample, "Fraction of rows per tree")
        ->capture_default_str();
    cmd->add_option("--patience", gb_patience,
                    "Stop after this many trees without validation DCG gain")
        ->capture_default_str();
    cmd->add_option("--dcg-k", gb_dcg_k, "Validation DCG cutoff")->capture_default_str();
  };

  // train-gbdt
  auto* tg = app.add_subcommand("train-gbdt", "Train the boosted tree ensemble");
  std::string tg_train, tg_valid, tg_output;
  tg->add_option("--train", tg_train, "Feature file with relevance labels")->required();
  tg->add_option("--valid", tg_valid, "Validation feature file for DCG selection")
      ->required();
  add_gbdt_flags(tg);
  tg->add_option("--output", tg_output, "Model file to write")->required();

  // rank
  auto* rk = app.add_subcommand("rank", "Score documents with a trained model");
  std::string rk_model, rk_features, rk_output;
  rk->add_option("--model", rk_model, "Model file from train-gbdt")->required();
  rk->add_option("--features", rk_features, "Feature file to score")->required();
  rk->add_option("--output", rk_output, "Score file to write")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Mean DCG of a score file against annotations");
  std::string ev_scores, ev_annotations, ev_gain = "linear";
  int ev_k = 10;
  ev->add_option("--scores", ev_scores, "Score file from rank")->required();
  ev->add_option("--annotations", ev_annotations, "Annotation records file (TSV)")
      ->required();
  ev->add_option("--k", ev_k, "DCG cutoff")->capture_default_str();
  ev->add_option("--gain", ev_gain, "DCG gain: linear|exponential")
      ->check(CLI::IsMember({"linear", "exponential"}))
      ->capture_default_str();

  // ablate
  auto* ab = app.add_subcommand("ablate", "Fit one model per feature subset, report DCG");
  std::string ab_train, ab_valid, ab_output;
  std::vector<std::string> ab_subsets;
  ab->add_option("--train", ab_train, "Feature file with relevance labels")->required();
  ab->add_option("--valid", ab_valid, "Validation feature file")->required();
  ab->add_option("--subset", ab_subsets,
                 "Feature subset spec (repeatable), e.g. --subset 2-13,15-20")
      ->required();
  add_gbdt_flags(ab);
  ab->add_option("--output", ab_output, "Ablation table to write (TSV)")->required();

  // subsample
  auto* ss = app.add_subcommand("subsample",
                                "Select validation queries nearest to test queries");
  std::string ss_valid, ss_test, ss_output;
  double ss_fraction = 0.2;
  ss->add_option("--valid-embeddings", ss_valid, "Validation query embeddings (TSV)")
      ->required();
  ss->add_option("--test-embeddings", ss_test, "Test query embeddings (TSV)")->required();
  ss->add_option("--fraction", ss_fraction, "Fraction of validation queries to keep")
      ->capture_default_str();
  ss->add_option("--output", ss_output, "Kept qid list to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sw->parsed()) return cmd_derive_stopwords(sw_input, sw_schema, sw_count, sw_output);
    if (bs->parsed()) {
      return cmd_build_stats(bs_input, bs_schema, bs_stopwords, bs_stopword_count,
                             bs_output);
    }
    if (ex->parsed()) {
      return cmd_extract(common, ex_input, ex_schema, ex_stats, ex_features,
                         ex_click_model, ex_click_scores, ex_k1, ex_b, ex_mu, ex_output);
    }
    if (tc->parsed()) {
      return cmd_train_click(common, tc_train, tc_lr, tc_epochs, tc_batch, tc_output);
    }
    if (tg->parsed()) {
      return cmd_train_gbdt(tg_train, tg_valid,
                            gbdt_config_from_flags(common, gb_trees, gb_depth, gb_min_leaf,
                                                   gb_shrinkage, gb_feature_subsample,
                                                   gb_row_subsample, gb_patience, gb_dcg_k),
                            tg_output);
    }
    if (rk->parsed()) return cmd_rank(rk_model, rk_features, rk_output);
    if (ev->parsed()) return cmd_evaluate(ev_scores, ev_annotations, ev_k, ev_gain);
    if (ab->parsed()) {
      return cmd_ablate(ab_train, ab_valid, ab_subsets,
                        gbdt_config_from_flags(common, gb_trees, gb_depth, gb_min_leaf,
                                               gb_shrinkage, gb_feature_subsample,
                                               gb_row_subsample, gb_patience, gb_dcg_k),
                        ab_output);
    }
    if (ss->parsed()) return cmd_subsample(ss_valid, ss_test, ss_fraction, ss_output);
  } catch (const std::exception& e) {
    std::cerr << "ltrkit: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
