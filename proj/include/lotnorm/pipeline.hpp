#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lotnorm/cleaning.hpp"
#include "lotnorm/config.hpp"
#include "lotnorm/corpus.hpp"
#include "lotnorm/partition.hpp"
#include "lotnorm/redundancy.hpp"
#include "lotnorm/resolution.hpp"

#include "json.hpp"

namespace lotnorm {

// Stage orchestration shared by the CLI and the acceptance suite. Each stage
// reads its declared inputs from the workdir, writes its artifacts there and
// returns a summary object.

namespace pipeline {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline nlohmann::json run_synth(const PipelineConfig& cfg) {
  SyntheticSpec spec;
  spec.class_count = cfg.synth.classes;
  spec.zipf_exponent = cfg.synth.zipf_exponent;
  spec.total_records = cfg.synth.total;
  spec.seed = *cfg.seed;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  write_institutions(cfg.path_in_workdir(cfg.institutions),
                     corpus.institutions);
  write_affiliations(cfg.path_in_workdir(cfg.affiliations),
                     corpus.affiliations);
  return {{"classes", spec.class_count},
          {"institution_rows", corpus.institutions.size()},
          {"affiliation_rows", corpus.affiliations.size()}};
}

struct CleanedArtifacts {
  IdRedirect redirect;
  std::vector<std::pair<CleanedName, ClassId>> rows;  // input order
  std::size_t rejected_names = 0;
  std::size_t rejected_institutions = 0;
  std::size_t unreferenced = 0;
};

inline CleanedArtifacts clean_records(
    const std::vector<InstitutionRecord>& institutions,
    const std::vector<RawAffiliationRecord>& affiliations,
    std::vector<std::pair<std::string, RejectReason>>* reject_log = nullptr) {
  CleanedArtifacts out;
  const DedupResult dedup = dedup_institution_ids(institutions);
  out.redirect = dedup.redirect;
  out.rejected_institutions = dedup.rejected.size();

  std::set<ClassId> known;
  for (const auto& [canonical, name] : dedup.canonical_names) {
    known.insert(canonical);
  }
  for (const auto& rec : affiliations) {
    const ClassId canonical = out.redirect.apply(rec.institution_id);
    if (!known.count(canonical)) {
      ++out.unreferenced;
      continue;
    }
    const NormalizeResult norm = normalize_name(rec.raw_name);
    if (!norm.accepted()) {
      ++out.rejected_names;
      if (reject_log) reject_log->emplace_back(rec.raw_name, norm.reason);
      continue;
    }
    out.rows.emplace_back(norm.text(), canonical);
  }
  return out;
}

inline nlohmann::json run_clean(const PipelineConfig& cfg) {
  const auto institutions =
      load_institutions(cfg.path_in_workdir(cfg.institutions));
  const auto affiliations =
      load_affiliations(cfg.path_in_workdir(cfg.affiliations));
  std::vector<std::pair<std::string, RejectReason>> rejects;
  const CleanedArtifacts cleaned =
      clean_records(institutions.records, affiliations.records, &rejects);

  {
    std::ofstream out(cfg.path_in_workdir("cleaned.tsv"), std::ios::binary);
    if (!out) throw io_error("cannot write cleaned.tsv");
    for (const auto& [name, cls] : cleaned.rows) {
      out << name << '\t' << cls << '\n';
    }
  }
  {
    std::ofstream out(cfg.path_in_workdir("rejects.tsv"), std::ios::binary);
    if (!out) throw io_error("cannot write rejects.tsv");
    for (const auto& [raw, reason] : rejects) {
      out << raw << '\t' << reject_reason_name(reason) << '\n';
    }
  }
  {
    std::ofstream out(cfg.path_in_workdir("redirect.tsv"), std::ios::binary);
    if (!out) throw io_error("cannot write redirect.tsv");
    for (const auto& [from, to] : cleaned.redirect.mapping()) {
      out << from << '\t' << to << '\n';
    }
  }
  return {{"institution_rows", institutions.records.size()},
          {"institution_rows_skipped", institutions.skipped},
          {"affiliation_rows", affiliations.records.size()},
          {"affiliation_rows_skipped", affiliations.skipped},
          {"rejected_names", cleaned.rejected_names},
          {"rejected_institutions", cleaned.rejected_institutions},
          {"unreferenced_ids", cleaned.unreferenced},
          {"cleaned_rows", cleaned.rows.size()},
          {"id_redirects", cleaned.redirect.redirected_count()}};
}

inline std::vector<std::pair<CleanedName, ClassId>> read_cleaned(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open cleaned file: " + path);
  std::vector<std::pair<CleanedName, ClassId>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) continue;
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

inline nlohmann::json run_resolve(const PipelineConfig& cfg) {
  const auto rows = read_cleaned(cfg.path_in_workdir("cleaned.tsv"));
  MappingTally t;
  for (const auto& [name, cls] : rows) t.add(name, cls);
  const ResolvedCorpus resolved = resolve(t);

  {
    std::ofstream out(cfg.path_in_workdir("resolved.tsv"), std::ios::binary);
    if (!out) throw io_error("cannot write resolved.tsv");
    for (std::size_t i = 0; i < resolved.examples.size(); ++i) {
      out << resolved.examples[i].name << '\t'
          << resolved.examples[i].class_id << '\t'
          << fmt_double(resolved.winning_confidence[i]) << '\n';
    }
  }
  {
    std::ofstream out(cfg.path_in_workdir("discards.tsv"), std::ios::binary);
    if (!out) throw io_error("cannot write discards.tsv");
    for (const auto& d : resolved.discarded) {
      out << d.name << '\t' << d.top_class << '\t'
          << fmt_double(d.top_confidence) << '\t' << d.total_count << '\n';
    }
  }
  return {{"names_in", t.name_count()},
          {"kept", resolved.examples.size()},
          {"discarded", resolved.discarded.size()}};
}

inline ResolvedCorpus read_resolved(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open resolved file: " + path);
  ResolvedCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos) continue;
    corpus.examples.push_back(
        {line.substr(0, t1),
         line.substr(t1 + 1, t2 == std::string::npos ? std::string::npos
                                                     : t2 - t1 - 1)});
    corpus.winning_confidence.push_back(
        t2 == std::string::npos ? 1.0 : std::stod(line.substr(t2 + 1)));
  }
  return corpus;
}

inline nlohmann::json run_filter(const PipelineConfig& cfg) {
  const ResolvedCorpus resolved =
      read_resolved(cfg.path_in_workdir("resolved.tsv"));
  const FilterResult filtered =
      filter_corpus(resolved, *cfg.seed, cfg.threads);

  {
    std::ofstream out(cfg.path_in_workdir("filtered.tsv"), std::ios::binary);
    if (!out) throw io_error("cannot write filtered.tsv");
    for (const auto& ex : filtered.corpus.examples) {
      out << ex.name << '\t' << ex.class_id << '\n';
    }
  }
  {
    std::ofstream out(cfg.path_in_workdir("filter_report.tsv"),
                      std::ios::binary);
    if (!out) throw io_error("cannot write filter_report.tsv");
    for (const auto& r : filtered.report) {
      out << r.class_id << '\t' << r.kept << '\t' << r.dropped << '\n';
    }
  }
  std::size_t dropped = 0;
  for (const auto& r : filtered.report) dropped += r.dropped;
  return {{"examples_in", resolved.examples.size()},
          {"kept", filtered.corpus.examples.size()},
          {"dropped", dropped},
          {"classes", filtered.report.size()}};
}

inline ResolvedCorpus read_filtered(const std::string& path) {
  ResolvedCorpus corpus;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open filtered file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) continue;
    corpus.examples.push_back({line.substr(0, tab), line.substr(tab + 1)});
    corpus.winning_confidence.push_back(1.0);
  }
  return corpus;
}

inline nlohmann::json run_split(const PipelineConfig& cfg) {
  const ResolvedCorpus filtered =
      read_filtered(cfg.path_in_workdir("filtered.tsv"));
  SplitFractions fractions{cfg.fractions.open, cfg.fractions.test,
                           cfg.fractions.valid};
  BucketThresholds thresholds{cfg.buckets.few_max, cfg.buckets.medium_max};
  const DatasetSplits splits =
      split(filtered, fractions, *cfg.seed, thresholds);

  write_split_jsonl(cfg.path_in_workdir("train.jsonl"), splits.train,
                    splits.bucket_of);
  write_split_jsonl(cfg.path_in_workdir("valid.jsonl"), splits.valid,
                    splits.bucket_of);
  write_split_jsonl(cfg.path_in_workdir("close_test.jsonl"),
                    splits.close_test, splits.bucket_of);
  write_split_jsonl(cfg.path_in_workdir("open_test.jsonl"), splits.open_test,
                    splits.bucket_of);
  return {{"train", splits.train.size()},
          {"valid", splits.valid.size()},
          {"close_test", splits.close_test.size()},
          {"open_test", splits.open_test.size()},
          {"classes", splits.global_freq.size()}};
}

inline nlohmann::json run_pairs(const PipelineConfig& cfg) {
  const auto open_rows =
      read_split_jsonl(cfg.path_in_workdir("open_test.jsonl"));
  const auto valid_rows = read_split_jsonl(cfg.path_in_workdir("valid.jsonl"));
  std::vector<LabeledExample> open_examples, valid_examples;
  for (const auto& r : open_rows) open_examples.push_back(r.example);
  for (const auto& r : valid_rows) valid_examples.push_back(r.example);

  const auto test_pairs = sample_verification_pairs(
      open_examples, cfg.pairs.test_count, *cfg.seed, "pairs/test");
  const auto valid_pairs = sample_verification_pairs(
      valid_examples, cfg.pairs.valid_count, *cfg.seed, "pairs/valid");
  write_pairs_jsonl(cfg.path_in_workdir("pairs_test.jsonl"), test_pairs);
  write_pairs_jsonl(cfg.path_in_workdir("pairs_valid.jsonl"), valid_pairs);
  return {{"test_pairs", test_pairs.size()},
          {"valid_pairs", valid_pairs.size()}};
}

inline std::vector<LabeledExample> read_examples(const std::string& path) {
  std::vector<LabeledExample> out;
  for (const auto& row : read_split_jsonl(path)) out.push_back(row.example);
  return out;
}

}  // namespace pipeline

}  // namespace lotnorm
