#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "lotnorm/partition.hpp"
#include "lotnorm/pipeline.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct WorkDir {
  fs::path path;
  WorkDir() {
    path = fs::temp_directory_path() /
           ("lotnorm_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~WorkDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

int run(const std::string& args) {
  const std::string cmd = std::string(LOTNORM_BIN) + " " + args +
                          " >>/dev/null 2>>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli pipeline produces valid split artifacts", "[cli]") {
  WorkDir dir;
  const std::string base =
      "--workdir " + dir.path.string() + " --seed 42 --synth.classes 150 " +
      "--synth.total 2500";
  REQUIRE(run(base + " synth") == 0);
  REQUIRE(fs::exists(dir.path / "institutions.tsv"));
  REQUIRE(fs::exists(dir.path / "affiliations.tsv"));
  REQUIRE(run(base + " clean") == 0);
  REQUIRE(run(base + " resolve") == 0);
  REQUIRE(run(base + " filter") == 0);
  REQUIRE(run(base + " split") == 0);

  for (const char* f :
       {"train.jsonl", "valid.jsonl", "close_test.jsonl", "open_test.jsonl"}) {
    REQUIRE(fs::exists(dir.path / f));
  }

  const auto train = lotnorm::read_split_jsonl((dir.path / "train.jsonl").string());
  const auto open_test =
      lotnorm::read_split_jsonl((dir.path / "open_test.jsonl").string());
  REQUIRE_FALSE(train.empty());
  REQUIRE_FALSE(open_test.empty());
  std::set<std::string> train_classes, open_classes;
  for (const auto& row : train) train_classes.insert(row.example.class_id);
  for (const auto& row : open_test) open_classes.insert(row.example.class_id);
  for (const auto& cls : open_classes) {
    CHECK(train_classes.count(cls) == 0);
  }
  // Open rows carry open-set bucket names.
  for (const auto& row : open_test) {
    CHECK((row.bucket == "frequent" || row.bucket == "medium_open" ||
           row.bucket == "rare"));
  }
}

TEST_CASE("cli reruns are byte-identical", "[cli]") {
  WorkDir a, b;
  for (const auto* dir : {&a, &b}) {
    const std::string base = "--workdir " + dir->path.string() +
                             " --seed 7 --synth.classes 100 --synth.total 1500";
    REQUIRE(run(base + " synth") == 0);
    REQUIRE(run(base + " clean") == 0);
    REQUIRE(run(base + " resolve") == 0);
    REQUIRE(run(base + " filter") == 0);
    REQUIRE(run(base + " split") == 0);
  }
  for (const char* f :
       {"institutions.tsv", "affiliations.tsv", "cleaned.tsv", "resolved.tsv",
        "filtered.tsv", "train.jsonl", "valid.jsonl", "close_test.jsonl",
        "open_test.jsonl"}) {
    INFO(f);
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  }
}

TEST_CASE("cli signals usage and data errors", "[cli]") {
  WorkDir dir;
  // Unknown flag -> usage error.
  CHECK(run("--no-such-flag synth") == 1);
  // Missing seed -> usage error.
  CHECK(run("--workdir " + dir.path.string() + " synth") == 1);
  // Unreadable inputs -> data error.
  CHECK(run("--workdir " + dir.path.string() + " --seed 1 clean") == 2);
  // Bad subcommand -> usage error.
  CHECK(run("--seed 1 frobnicate") == 1);
}

TEST_CASE("cli trains, predicts and evaluates", "[cli]") {
  WorkDir dir;
  // The valid fraction is raised so the valid split has enough same-class
  // name pairs to tune the verification threshold on.
  const std::string base =
      "--workdir " + dir.path.string() + " --seed 11 --synth.classes 200 " +
      "--synth.total 6000 --fractions.valid 0.15 --fractions.test 0.05 " +
      "--pairs.test_count 40 --pairs.valid_count 40 " +
      "--embed.steps 300 --embed.dim 32 --linear.buckets 8192 " +
      "--linear.epochs 2";
  for (const char* step :
       {"synth", "clean", "resolve", "filter", "split", "pairs"}) {
    REQUIRE(run(base + " " + step) == 0);
  }
  REQUIRE(fs::exists(dir.path / "pairs_test.jsonl"));
  const auto pairs =
      lotnorm::read_pairs_jsonl((dir.path / "pairs_test.jsonl").string());
  REQUIRE(pairs.size() == 40);

  REQUIRE(run(base + " train --model nb") == 0);
  REQUIRE(fs::exists(dir.path / "model_nb.lotn"));
  REQUIRE(run(base + " train --model linear") == 0);
  REQUIRE(run(base + " train --model retrieval") == 0);
  REQUIRE(run(base + " train --model embed") == 0);

  {
    std::ofstream out(dir.path / "queries.txt");
    out << "Yale University\nzzz\n";
  }
  REQUIRE(run(base + " predict --model-file " +
              (dir.path / "model_nb.lotn").string() + " --input " +
              (dir.path / "queries.txt").string()) == 0);
  REQUIRE(fs::exists(dir.path / "predictions.jsonl"));

  REQUIRE(run(base + " evaluate --task csc --model-file " +
              (dir.path / "model_nb.lotn").string()) == 0);
  REQUIRE(fs::exists(dir.path / "report_csc.json"));
  const auto report = json::parse(slurp(dir.path / "report_csc.json"));
  REQUIRE(report.is_array());
  CHECK(report[0].at("label") == "overall");
  std::set<std::string> labels;
  for (const auto& row : report) labels.insert(row.at("label").get<std::string>());
  CHECK(labels.count("many") == 1);
  CHECK(labels.count("medium") == 1);
  CHECK(labels.count("few") == 1);

  REQUIRE(run(base + " evaluate --task osc --model-file " +
              (dir.path / "model_nb.lotn").string()) == 0);
  REQUIRE(fs::exists(dir.path / "report_osc.json"));
  REQUIRE(fs::exists(dir.path / "roc_overall.csv"));

  REQUIRE(run(base + " evaluate --task osv --model-file " +
              (dir.path / "model_embed.lotn").string()) == 0);
  REQUIRE(fs::exists(dir.path / "report_osv.json"));
  const auto osv = json::parse(slurp(dir.path / "report_osv.json"));
  CHECK(osv.at("test_accuracy").get<double>() >= 0.0);

  // Retrieval models are rejected on osv.
  CHECK(run(base + " evaluate --task osv --model-file " +
            (dir.path / "model_retrieval.lotn").string()) == 1);
}

TEST_CASE("cli reads config files with flag overrides", "[cli]") {
  WorkDir dir;
  const auto config_path = dir.path / "config.json";
  {
    json cfg;
    cfg["workdir"] = dir.path.string();
    cfg["seed"] = 5;
    cfg["synth"] = {{"classes", 80}, {"total", 1200}};
    std::ofstream out(config_path);
    out << cfg.dump();
  }
  REQUIRE(run("--config " + config_path.string() + " synth") == 0);
  const auto first = slurp(dir.path / "affiliations.tsv");
  REQUIRE_FALSE(first.empty());

  // Flag override changes the corpus.
  REQUIRE(run("--config " + config_path.string() + " --synth.classes 40 synth") ==
          0);
  const auto second = slurp(dir.path / "affiliations.tsv");
  CHECK(first != second);
}
