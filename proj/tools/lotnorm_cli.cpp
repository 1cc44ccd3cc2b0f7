// lotnorm: long-tailed name normalization toolkit.
//
// Subcommands cover the corpus pipeline (synth, clean, resolve, filter,
// split, pairs), model training/prediction (train, predict) and the three
// evaluation tasks (evaluate --task csc|osc|osv). Every subcommand prints a
// single JSON summary line to stdout and exits 0 on success, 1 on usage
// errors, 2 on data errors.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lotnorm/cleaning.hpp"
#include "lotnorm/config.hpp"
#include "lotnorm/corpus.hpp"
#include "lotnorm/embedder.hpp"
#include "lotnorm/linear_model.hpp"
#include "lotnorm/metrics.hpp"
#include "lotnorm/model_io.hpp"
#include "lotnorm/naive_bayes.hpp"
#include "lotnorm/partition.hpp"
#include "lotnorm/pipeline.hpp"
#include "lotnorm/retrieval.hpp"
#include "lotnorm/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

void print_summary(const std::string& cmd, json summary, double elapsed_ms) {
  summary["cmd"] = cmd;
  summary["elapsed_ms"] = static_cast<std::int64_t>(elapsed_ms);
  std::cout << summary.dump() << std::endl;
}

std::map<lotnorm::ClassId, lotnorm::FrequencyBucket> buckets_from_rows(
    const std::vector<lotnorm::SplitFileRow>& rows) {
  std::map<lotnorm::ClassId, lotnorm::FrequencyBucket> out;
  static const std::map<std::string, lotnorm::FrequencyBucket> names = {
      {"many", lotnorm::FrequencyBucket::kMany},
      {"medium", lotnorm::FrequencyBucket::kMedium},
      {"few", lotnorm::FrequencyBucket::kFew},
      {"frequent", lotnorm::FrequencyBucket::kFrequent},
      {"medium_open", lotnorm::FrequencyBucket::kMediumOpen},
      {"rare", lotnorm::FrequencyBucket::kRare}};
  for (const auto& row : rows) {
    const auto it = names.find(row.bucket);
    if (it != names.end()) out[row.example.class_id] = it->second;
  }
  return out;
}

json row_to_json(const lotnorm::MetricRow& row) {
  return {{"label", row.label},
          {"examples", row.examples},
          {"accuracy", row.accuracy},
          {"macro_f1", row.macro_f1}};
}

json report_to_json(const lotnorm::BucketReport& report) {
  json rows = json::array();
  rows.push_back(row_to_json(report.overall));
  for (const auto& row : report.buckets) rows.push_back(row_to_json(row));
  return rows;
}

void write_text_report(const std::string& path,
                       const lotnorm::BucketReport& report) {
  std::ofstream out(path, std::ios::binary);
  char line[128];
  std::snprintf(line, sizeof(line), "%-12s %10s %10s %10s\n", "subset",
                "examples", "accuracy", "macro_f1");
  out << line;
  auto emit = [&](const lotnorm::MetricRow& row) {
    std::snprintf(line, sizeof(line), "%-12s %10zu %10.4f %10.4f\n",
                  row.label.c_str(), row.examples, row.accuracy, row.macro_f1);
    out << line;
  };
  emit(report.overall);
  for (const auto& row : report.buckets) emit(row);
}

struct LoadedModel {
  lotnorm::ModelKind kind;
  std::optional<lotnorm::NaiveBayesModel> nb;
  std::optional<lotnorm::LinearNgramModel> linear;
  std::optional<lotnorm::LoadedRetrieval> retrieval;
  std::optional<lotnorm::LoadedEmbedding> embedding;

  lotnorm::ClassDistribution distribution(
      const lotnorm::CleanedName& name) const {
    switch (kind) {
      case lotnorm::ModelKind::kNaiveBayes:
        return nb->predict(name);
      case lotnorm::ModelKind::kLinear:
        return linear->predict(name);
      case lotnorm::ModelKind::kEmbedding:
        return lotnorm::knn_classify(embedding->model, embedding->anchors,
                                     embedding->classes, name);
      default:
        throw lotnorm::parameter_error(
            "model kind has no class distribution");
    }
  }
};

LoadedModel load_any_model(const std::string& path) {
  LoadedModel m{lotnorm::peek_model_kind(path), {}, {}, {}, {}};
  switch (m.kind) {
    case lotnorm::ModelKind::kNaiveBayes:
      m.nb = lotnorm::load_naive_bayes(path);
      break;
    case lotnorm::ModelKind::kLinear:
      m.linear = lotnorm::load_linear(path);
      break;
    case lotnorm::ModelKind::kRetrieval:
      m.retrieval = lotnorm::load_retrieval(path);
      break;
    case lotnorm::ModelKind::kEmbedding:
      m.embedding = lotnorm::load_embedding(path);
      break;
  }
  return m;
}

json run_train(const lotnorm::PipelineConfig& cfg, const std::string& model,
               std::string out_path) {
  const auto train = lotnorm::pipeline::read_examples(
      cfg.path_in_workdir("train.jsonl"));
  if (out_path.empty()) {
    out_path = cfg.path_in_workdir("model_" + model + ".lotn");
  }
  json summary{{"model", model}, {"train_examples", train.size()},
               {"output", out_path}};
  if (model == "nb") {
    const auto nb = lotnorm::NaiveBayesModel::train(train, cfg.nb.alpha);
    lotnorm::save_model(out_path, nb);
    summary["classes"] = nb.classes()->size();
    summary["vocab"] = nb.token_counts().size();
  } else if (model == "linear") {
    lotnorm::LinearTrainConfig tc;
    tc.buckets = cfg.linear.buckets;
    tc.ngram_min = cfg.linear.ngram_min;
    tc.ngram_max = cfg.linear.ngram_max;
    tc.epochs = cfg.linear.epochs;
    tc.learning_rate = cfg.linear.lr;
    tc.resample_q = cfg.linear.q;
    tc.seed = *cfg.seed;
    const auto lm = lotnorm::LinearNgramModel::train(train, tc);
    lotnorm::save_model(out_path, lm);
    summary["classes"] = lm.classes()->size();
  } else if (model == "retrieval") {
    const auto index = lotnorm::RetrievalIndex::build(train);
    lotnorm::RerankWeights weights{cfg.retrieval.w_exact,
                                   cfg.retrieval.w_jaccard,
                                   cfg.retrieval.w_cosine,
                                   cfg.retrieval.w_prior};
    lotnorm::save_model(out_path, index, cfg.retrieval.k, weights,
                        cfg.retrieval.tau);
    summary["classes"] = index.classes()->size();
    summary["tokens"] = index.postings().size();
  } else if (model == "embed") {
    lotnorm::EmbeddingModel::Config ec;
    ec.dim = cfg.embed.dim;
    ec.buckets = cfg.embed.buckets;
    ec.ngram_min = cfg.embed.ngram_min;
    ec.ngram_max = cfg.embed.ngram_max;
    auto em = lotnorm::EmbeddingModel::init(ec, *cfg.seed);
    lotnorm::ContrastiveParams params;
    params.margin = cfg.embed.margin;
    params.batch_size = cfg.embed.batch;
    params.positives_per_batch = cfg.embed.positives;
    params.negatives_per_batch = cfg.embed.negatives;
    params.learning_rate = cfg.embed.lr;
    params.steps = cfg.embed.steps;
    params.seed = *cfg.seed;
    const auto log = lotnorm::ContrastiveTrainer::train(em, train, params);
    const auto anchors =
        lotnorm::build_anchor_set(em, train, cfg.embed.k, *cfg.seed,
                                  cfg.embed.anchors_per_class);
    lotnorm::save_model(out_path, em, anchors,
                        lotnorm::ClassIndex::from_examples(train));
    summary["steps"] = params.steps;
    summary["anchors"] = anchors.vectors.size();
    if (!log.loss_curve.empty()) {
      summary["final_loss"] = log.loss_curve.back();
    }
  } else {
    throw CLI::ValidationError("--model must be nb|linear|retrieval|embed");
  }
  return summary;
}

json run_predict(const lotnorm::PipelineConfig& cfg,
                 const std::string& model_file, const std::string& input,
                 std::string out_path) {
  const LoadedModel model = load_any_model(model_file);
  if (out_path.empty()) out_path = cfg.path_in_workdir("predictions.jsonl");

  // Input: one raw name per line; names are normalized before prediction.
  std::ifstream in(input, std::ios::binary);
  if (!in) throw lotnorm::io_error("cannot open input file: " + input);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw lotnorm::io_error("cannot write predictions: " + out_path);

  std::size_t total = 0, rejected = 0, unseen = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++total;
    const auto norm = lotnorm::normalize_name(line);
    json row{{"name", line}};
    if (!norm.accepted()) {
      ++rejected;
      row["rejected"] = lotnorm::reject_reason_name(norm.reason);
      out << row.dump() << '\n';
      continue;
    }
    if (model.kind == lotnorm::ModelKind::kRetrieval) {
      const auto decision = model.retrieval->index.normalize(
          norm.text(), model.retrieval->k, model.retrieval->weights,
          model.retrieval->validate_threshold);
      row["unseen"] = decision.unseen;
      row["score"] = decision.top_score;
      if (!decision.ranked.empty()) {
        row["class"] = decision.ranked.front().class_id;
      }
      if (decision.unseen) ++unseen;
    } else {
      const auto dist = model.distribution(norm.text());
      row["class"] = dist.argmax_class();
      row["score"] = dist.max_prob();
    }
    out << row.dump() << '\n';
  }
  return {{"input", input},   {"output", out_path}, {"total", total},
          {"rejected", rejected}, {"unseen", unseen}};
}

json evaluate_csc(const lotnorm::PipelineConfig& cfg,
                  const LoadedModel& model) {
  const auto rows =
      lotnorm::read_split_jsonl(cfg.path_in_workdir("close_test.jsonl"));
  const auto buckets = buckets_from_rows(rows);
  std::vector<lotnorm::LabeledExample> golds;
  std::vector<lotnorm::ClassId> predictions;
  for (const auto& row : rows) {
    golds.push_back(row.example);
    if (model.kind == lotnorm::ModelKind::kRetrieval) {
      const auto decision = model.retrieval->index.normalize(
          row.example.name, model.retrieval->k, model.retrieval->weights,
          /*validate_threshold=*/0.0);  // CSC assumes a known class
      predictions.push_back(
          decision.ranked.empty() ? lotnorm::ClassId() :
                                    decision.ranked.front().class_id);
    } else {
      predictions.push_back(model.distribution(row.example.name).argmax_class());
    }
  }
  const auto report = lotnorm::csc_report(predictions, golds, buckets);
  const json jreport = report_to_json(report);
  {
    std::ofstream out(cfg.path_in_workdir("report_csc.json"),
                      std::ios::binary);
    out << jreport.dump(2) << '\n';
  }
  write_text_report(cfg.path_in_workdir("report_csc.txt"), report);
  return {{"task", "csc"}, {"report", jreport}};
}

json evaluate_osc(const lotnorm::PipelineConfig& cfg,
                  const LoadedModel& model) {
  if (model.kind == lotnorm::ModelKind::kRetrieval) {
    throw CLI::ValidationError(
        "retrieval models are not scored on the osc task");
  }
  const auto close_rows =
      lotnorm::read_split_jsonl(cfg.path_in_workdir("close_test.jsonl"));
  const auto open_rows =
      lotnorm::read_split_jsonl(cfg.path_in_workdir("open_test.jsonl"));
  if (open_rows.size() > close_rows.size()) {
    throw lotnorm::parameter_error(
        "open test set larger than close test set; cannot draw the "
        "equal-size mixed sample");
  }

  // Mixed set: the whole open test set plus an equal number of close-set
  // examples drawn uniformly.
  auto rng = lotnorm::substream(*cfg.seed, "eval/osc/mix");
  const auto close_idx =
      rng.sample_indices(close_rows.size(), open_rows.size());

  struct Item {
    double score;
    bool seen;
    std::string bucket;
  };
  std::vector<Item> items;
  items.reserve(open_rows.size() * 2);
  for (const auto& row : open_rows) {
    items.push_back({lotnorm::osc_score(model.distribution(row.example.name)),
                     false, row.bucket});
  }
  for (const auto idx : close_idx) {
    items.push_back(
        {lotnorm::osc_score(model.distribution(close_rows[idx].example.name)),
         true, std::string()});
  }

  auto curve_of = [&](const std::string& bucket) {
    std::vector<double> scores;
    std::vector<bool> labels;
    for (const auto& item : items) {
      if (!bucket.empty() && !item.seen && item.bucket != bucket) continue;
      scores.push_back(item.score);
      labels.push_back(item.seen);
    }
    return lotnorm::roc(scores, labels);
  };

  json aucs;
  auto export_curve = [&](const std::string& label,
                          const lotnorm::RocCurve& curve) {
    aucs[label] = curve.auc;
    std::ofstream out(cfg.path_in_workdir("roc_" + label + ".csv"),
                      std::ios::binary);
    out << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : curve.points) {
      out << lotnorm::pipeline::fmt_double(fpr) << ','
          << lotnorm::pipeline::fmt_double(tpr) << '\n';
    }
  };
  export_curve("overall", curve_of(""));
  for (const char* bucket : {"frequent", "medium_open", "rare"}) {
    bool present = false;
    for (const auto& row : open_rows) present |= row.bucket == bucket;
    if (present) export_curve(bucket, curve_of(bucket));
  }
  {
    std::ofstream out(cfg.path_in_workdir("report_osc.json"),
                      std::ios::binary);
    out << aucs.dump(2) << '\n';
  }
  return {{"task", "osc"}, {"auc", aucs}};
}

json evaluate_osv(const lotnorm::PipelineConfig& cfg,
                  const LoadedModel& model) {
  const auto valid_pairs =
      lotnorm::read_pairs_jsonl(cfg.path_in_workdir("pairs_valid.jsonl"));
  const auto test_pairs =
      lotnorm::read_pairs_jsonl(cfg.path_in_workdir("pairs_test.jsonl"));

  auto distance = [&](const lotnorm::VerificationPair& p) {
    if (model.kind == lotnorm::ModelKind::kEmbedding) {
      return lotnorm::l2_distance(model.embedding->model.embed(p.name_a),
                                  model.embedding->model.embed(p.name_b));
    }
    // Probabilistic models compare posterior distributions by JSD.
    return lotnorm::jsd(model.distribution(p.name_a),
                        model.distribution(p.name_b));
  };
  if (model.kind == lotnorm::ModelKind::kRetrieval) {
    throw CLI::ValidationError(
        "retrieval models are not scored on the osv task");
  }

  std::vector<double> vd, td;
  std::vector<bool> vy, ty;
  for (const auto& p : valid_pairs) {
    vd.push_back(distance(p));
    vy.push_back(p.same_class);
  }
  for (const auto& p : test_pairs) {
    td.push_back(distance(p));
    ty.push_back(p.same_class);
  }
  const auto result = lotnorm::osv_evaluate(vd, vy, td, ty);
  const json jreport{{"threshold", result.threshold},
                     {"validation_accuracy", result.validation_accuracy},
                     {"test_accuracy", result.test_accuracy}};
  {
    std::ofstream out(cfg.path_in_workdir("report_osv.json"),
                      std::ios::binary);
    out << jreport.dump(2) << '\n';
  }
  return {{"task", "osv"}, {"report", jreport}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lotnorm: long-tailed name normalization toolkit"};
  app.set_version_flag(
      "--version",
      std::string("lotnorm ") + lotnorm::kToolkitVersion + " (model format v" +
          std::to_string(lotnorm::kModelFormatVersion) + ")");
  app.require_subcommand(1);

  std::string config_path;
  if (const char* env = std::getenv("LOTNORM_CONFIG")) config_path = env;
  app.add_option("--config", config_path,
                 "JSON config file (or LOTNORM_CONFIG env)");

  // Flag-side overrides; applied over the config file after parsing.
  std::optional<std::uint64_t> seed;
  std::optional<std::string> workdir, institutions, affiliations;
  std::optional<unsigned> threads;
  std::optional<double> f_open, f_test, f_valid, nb_alpha, linear_lr, linear_q,
      embed_margin, embed_lr, retrieval_tau;
  std::optional<std::uint64_t> b_few, b_medium;
  std::optional<std::size_t> synth_classes, synth_total, pairs_test,
      pairs_valid, linear_buckets, linear_epochs, embed_dim, embed_steps,
      embed_k, retrieval_k;
  std::optional<double> synth_zipf;
  app.add_option("--seed", seed, "root seed (mandatory, all stages)");
  app.add_option("--workdir", workdir, "artifact directory");
  app.add_option("--paths.institutions", institutions, "institutions TSV");
  app.add_option("--paths.affiliations", affiliations, "affiliations TSV");
  app.add_option("--threads", threads, "worker threads for parallel stages");
  app.add_option("--fractions.open", f_open, "open-set class fraction");
  app.add_option("--fractions.test", f_test, "close-test example fraction");
  app.add_option("--fractions.valid", f_valid, "valid example fraction");
  app.add_option("--buckets.few_max", b_few, "few-shot threshold");
  app.add_option("--buckets.medium_max", b_medium, "medium-shot threshold");
  app.add_option("--synth.classes", synth_classes, "synthetic class count");
  app.add_option("--synth.zipf_exponent", synth_zipf, "synthetic exponent");
  app.add_option("--synth.total", synth_total, "synthetic record target");
  app.add_option("--pairs.test_count", pairs_test, "test pair count");
  app.add_option("--pairs.valid_count", pairs_valid, "valid pair count");
  app.add_option("--nb.alpha", nb_alpha, "naive bayes smoothing");
  app.add_option("--linear.buckets", linear_buckets, "hash buckets");
  app.add_option("--linear.epochs", linear_epochs, "training epochs");
  app.add_option("--linear.lr", linear_lr, "learning rate");
  app.add_option("--linear.q", linear_q, "resampling exponent");
  app.add_option("--embed.dim", embed_dim, "embedding dimension");
  app.add_option("--embed.margin", embed_margin, "contrastive margin");
  app.add_option("--embed.lr", embed_lr, "embedding learning rate");
  app.add_option("--embed.steps", embed_steps, "contrastive steps");
  app.add_option("--embed.k", embed_k, "kNN neighbours");
  app.add_option("--retrieval.k", retrieval_k, "retrieval depth");
  app.add_option("--retrieval.tau", retrieval_tau, "validate threshold");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  auto* clean = app.add_subcommand("clean", "normalize names, dedup ids");
  auto* resolve = app.add_subcommand("resolve", "majority-vote resolution");
  auto* filter = app.add_subcommand("filter", "remove redundant variants");
  auto* split_cmd = app.add_subcommand("split", "partition into splits");
  auto* pairs_cmd = app.add_subcommand("pairs", "sample verification pairs");

  auto* train = app.add_subcommand("train", "train a model on train.jsonl");
  std::string train_model = "nb", train_out;
  train->add_option("--model", train_model, "nb|linear|retrieval|embed")
      ->required();
  train->add_option("--out", train_out, "model file path");

  auto* predict = app.add_subcommand("predict", "predict classes for names");
  std::string predict_model_file, predict_input, predict_out;
  predict->add_option("--model-file", predict_model_file, "LOTN model file")
      ->required();
  predict->add_option("--input", predict_input, "file with one name per line")
      ->required();
  predict->add_option("--out", predict_out, "predictions JSONL path");

  auto* evaluate = app.add_subcommand("evaluate", "run an evaluation task");
  std::string eval_task, eval_model_file;
  evaluate->add_option("--task", eval_task, "csc|osc|osv")->required();
  evaluate->add_option("--model-file", eval_model_file, "LOTN model file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    lotnorm::PipelineConfig cfg;
    if (!config_path.empty()) cfg = lotnorm::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workdir) cfg.workdir = *workdir;
    if (institutions) cfg.institutions = *institutions;
    if (affiliations) cfg.affiliations = *affiliations;
    if (threads) cfg.threads = *threads;
    if (f_open) cfg.fractions.open = *f_open;
    if (f_test) cfg.fractions.test = *f_test;
    if (f_valid) cfg.fractions.valid = *f_valid;
    if (b_few) cfg.buckets.few_max = *b_few;
    if (b_medium) cfg.buckets.medium_max = *b_medium;
    if (synth_classes) cfg.synth.classes = *synth_classes;
    if (synth_zipf) cfg.synth.zipf_exponent = *synth_zipf;
    if (synth_total) cfg.synth.total = *synth_total;
    if (pairs_test) cfg.pairs.test_count = *pairs_test;
    if (pairs_valid) cfg.pairs.valid_count = *pairs_valid;
    if (nb_alpha) cfg.nb.alpha = *nb_alpha;
    if (linear_buckets) cfg.linear.buckets = *linear_buckets;
    if (linear_epochs) cfg.linear.epochs = *linear_epochs;
    if (linear_lr) cfg.linear.lr = *linear_lr;
    if (linear_q) cfg.linear.q = *linear_q;
    if (embed_dim) cfg.embed.dim = *embed_dim;
    if (embed_margin) cfg.embed.margin = *embed_margin;
    if (embed_lr) cfg.embed.lr = *embed_lr;
    if (embed_steps) cfg.embed.steps = *embed_steps;
    if (embed_k) cfg.embed.k = *embed_k;
    if (retrieval_k) cfg.retrieval.k = *retrieval_k;
    if (retrieval_tau) cfg.retrieval.tau = *retrieval_tau;
    cfg.validate();

    json summary;
    std::string cmd;
    if (synth->parsed()) {
      cmd = "synth";
      summary = lotnorm::pipeline::run_synth(cfg);
    } else if (clean->parsed()) {
      cmd = "clean";
      summary = lotnorm::pipeline::run_clean(cfg);
    } else if (resolve->parsed()) {
      cmd = "resolve";
      summary = lotnorm::pipeline::run_resolve(cfg);
    } else if (filter->parsed()) {
      cmd = "filter";
      summary = lotnorm::pipeline::run_filter(cfg);
    } else if (split_cmd->parsed()) {
      cmd = "split";
      summary = lotnorm::pipeline::run_split(cfg);
    } else if (pairs_cmd->parsed()) {
      cmd = "pairs";
      summary = lotnorm::pipeline::run_pairs(cfg);
    } else if (train->parsed()) {
      cmd = "train";
      summary = run_train(cfg, train_model, train_out);
    } else if (predict->parsed()) {
      cmd = "predict";
      summary = run_predict(cfg, predict_model_file, predict_input,
                            predict_out);
    } else if (evaluate->parsed()) {
      cmd = "evaluate";
      const LoadedModel model = load_any_model(eval_model_file);
      if (eval_task == "csc") {
        summary = evaluate_csc(cfg, model);
      } else if (eval_task == "osc") {
        summary = evaluate_osc(cfg, model);
      } else if (eval_task == "osv") {
        summary = evaluate_osv(cfg, model);
      } else {
        throw CLI::ValidationError("--task must be csc|osc|osv");
      }
    }
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started)
                          .count();
    print_summary(cmd, std::move(summary), ms);
    return 0;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  } catch (const lotnorm::parameter_error& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
