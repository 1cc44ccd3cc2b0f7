#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include "lotnorm/corpus.hpp"

#include "json.hpp"

namespace lotnorm {

// Experiment manifest. Every field maps to a JSON path and to a CLI flag of
// the same dotted name; the seed has no default and must be supplied.
struct PipelineConfig {
  std::string institutions = "institutions.tsv";
  std::string affiliations = "affiliations.tsv";
  std::string workdir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  struct {
    double open = 0.02;
    double test = 0.02;
    double valid = 0.02;
  } fractions;

  struct {
    std::uint64_t few_max = 5;
    std::uint64_t medium_max = 20;
  } buckets;

  struct {
    std::size_t classes = 1000;
    double zipf_exponent = 1.1;
    std::size_t total = 0;  // 0 -> 20x classes
  } synth;

  struct {
    std::size_t test_count = 1000;
    std::size_t valid_count = 1000;
  } pairs;

  struct {
    double alpha = 1.0;
  } nb;

  struct {
    std::size_t buckets = 1u << 18;
    int ngram_min = 2;
    int ngram_max = 4;
    std::size_t epochs = 5;
    double lr = 0.5;
    double q = 0.5;
  } linear;

  struct {
    std::size_t k = 10;
    double w_exact = 3.0;
    double w_jaccard = 1.0;
    double w_cosine = 1.0;
    double w_prior = 0.25;
    double tau = 0.5;
  } retrieval;

  struct {
    std::size_t dim = 128;
    std::size_t buckets = 1u << 16;
    int ngram_min = 2;
    int ngram_max = 4;
    double margin = 1.0;
    std::size_t batch = 16;
    std::size_t positives = 4;
    std::size_t negatives = 8;
    double lr = 0.05;
    std::size_t steps = 2000;
    std::size_t k = 10;
    std::size_t anchors_per_class = 10;
  } embed;

  void validate() const {
    if (!seed.has_value()) {
      throw parameter_error("config: seed is mandatory");
    }
    auto check_frac = [](double f, const char* name) {
      if (!(f > 0.0 && f < 1.0)) {
        throw parameter_error(std::string("config: ") + name +
                              " must lie in (0, 1)");
      }
    };
    check_frac(fractions.open, "fractions.open");
    check_frac(fractions.test, "fractions.test");
    check_frac(fractions.valid, "fractions.valid");
    if (buckets.few_max >= buckets.medium_max) {
      throw parameter_error("config: bucket thresholds must increase");
    }
    if (threads == 0) throw parameter_error("config: threads must be >= 1");
  }

  std::string path_in_workdir(const std::string& file) const {
    if (workdir.empty() || workdir == ".") return file;
    return workdir + "/" + file;
  }
};

inline void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      field = j.at(key)
                  .template get<std::remove_reference_t<decltype(field)>>();
    }
  };
  get("institutions", cfg.institutions);
  get("affiliations", cfg.affiliations);
  get("workdir", cfg.workdir);
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  get("threads", cfg.threads);
  if (j.contains("fractions")) {
    const auto& f = j.at("fractions");
    if (f.contains("open")) cfg.fractions.open = f.at("open").get<double>();
    if (f.contains("test")) cfg.fractions.test = f.at("test").get<double>();
    if (f.contains("valid")) cfg.fractions.valid = f.at("valid").get<double>();
  }
  if (j.contains("buckets")) {
    const auto& b = j.at("buckets");
    if (b.contains("few_max")) {
      cfg.buckets.few_max = b.at("few_max").get<std::uint64_t>();
    }
    if (b.contains("medium_max")) {
      cfg.buckets.medium_max = b.at("medium_max").get<std::uint64_t>();
    }
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    if (s.contains("classes")) {
      cfg.synth.classes = s.at("classes").get<std::size_t>();
    }
    if (s.contains("zipf_exponent")) {
      cfg.synth.zipf_exponent = s.at("zipf_exponent").get<double>();
    }
    if (s.contains("total")) cfg.synth.total = s.at("total").get<std::size_t>();
  }
  if (j.contains("pairs")) {
    const auto& p = j.at("pairs");
    if (p.contains("test_count")) {
      cfg.pairs.test_count = p.at("test_count").get<std::size_t>();
    }
    if (p.contains("valid_count")) {
      cfg.pairs.valid_count = p.at("valid_count").get<std::size_t>();
    }
  }
  if (j.contains("nb") && j.at("nb").contains("alpha")) {
    cfg.nb.alpha = j.at("nb").at("alpha").get<double>();
  }
  if (j.contains("linear")) {
    const auto& l = j.at("linear");
    if (l.contains("buckets")) {
      cfg.linear.buckets = l.at("buckets").get<std::size_t>();
    }
    if (l.contains("ngram_min")) {
      cfg.linear.ngram_min = l.at("ngram_min").get<int>();
    }
    if (l.contains("ngram_max")) {
      cfg.linear.ngram_max = l.at("ngram_max").get<int>();
    }
    if (l.contains("epochs")) cfg.linear.epochs = l.at("epochs").get<std::size_t>();
    if (l.contains("lr")) cfg.linear.lr = l.at("lr").get<double>();
    if (l.contains("q")) cfg.linear.q = l.at("q").get<double>();
  }
  if (j.contains("retrieval")) {
    const auto& r = j.at("retrieval");
    if (r.contains("k")) cfg.retrieval.k = r.at("k").get<std::size_t>();
    if (r.contains("w_exact")) cfg.retrieval.w_exact = r.at("w_exact").get<double>();
    if (r.contains("w_jaccard")) {
      cfg.retrieval.w_jaccard = r.at("w_jaccard").get<double>();
    }
    if (r.contains("w_cosine")) {
      cfg.retrieval.w_cosine = r.at("w_cosine").get<double>();
    }
    if (r.contains("w_prior")) cfg.retrieval.w_prior = r.at("w_prior").get<double>();
    if (r.contains("tau")) cfg.retrieval.tau = r.at("tau").get<double>();
  }
  if (j.contains("embed")) {
    const auto& e = j.at("embed");
    if (e.contains("dim")) cfg.embed.dim = e.at("dim").get<std::size_t>();
    if (e.contains("buckets")) {
      cfg.embed.buckets = e.at("buckets").get<std::size_t>();
    }
    if (e.contains("ngram_min")) cfg.embed.ngram_min = e.at("ngram_min").get<int>();
    if (e.contains("ngram_max")) cfg.embed.ngram_max = e.at("ngram_max").get<int>();
    if (e.contains("margin")) cfg.embed.margin = e.at("margin").get<double>();
    if (e.contains("batch")) cfg.embed.batch = e.at("batch").get<std::size_t>();
    if (e.contains("positives")) {
      cfg.embed.positives = e.at("positives").get<std::size_t>();
    }
    if (e.contains("negatives")) {
      cfg.embed.negatives = e.at("negatives").get<std::size_t>();
    }
    if (e.contains("lr")) cfg.embed.lr = e.at("lr").get<double>();
    if (e.contains("steps")) cfg.embed.steps = e.at("steps").get<std::size_t>();
    if (e.contains("k")) cfg.embed.k = e.at("k").get<std::size_t>();
    if (e.contains("anchors_per_class")) {
      cfg.embed.anchors_per_class =
          e.at("anchors_per_class").get<std::size_t>();
    }
  }
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  PipelineConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

}  // namespace lotnorm
