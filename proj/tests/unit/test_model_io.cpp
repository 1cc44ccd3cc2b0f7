#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lotnorm/model_io.hpp"
#include "lotnorm/rng.hpp"

using namespace lotnorm;

namespace {

const std::vector<LabeledExample> kTrain = {
    {"yale university", "Y"},   {"yale medical school", "Y"},
    {"harvard university", "H"}, {"mit csail", "M"},
    {"mit media lab", "M"},      {"harvard law school", "H"},
};

struct TempFile {
  std::string path;
  explicit TempFile(const char* name)
      : path(std::string("/tmp/lotnorm_model_") + name + ".lotn") {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("naive bayes round-trips through the container", "[model_io]") {
  TempFile file("nb");
  const auto model = NaiveBayesModel::train(kTrain, 0.5);
  save_model(file.path, model);
  const auto loaded = load_naive_bayes(file.path);
  CHECK(loaded.alpha() == 0.5);
  CHECK(loaded.classes()->ids() == model.classes()->ids());
  for (const auto& ex : kTrain) {
    const auto a = model.predict(ex.name);
    const auto b = loaded.predict(ex.name);
    for (std::size_t i = 0; i < a.p.size(); ++i) {
      CHECK(a.p[i] == Catch::Approx(b.p[i]).margin(1e-12));
    }
  }
  CHECK(peek_model_kind(file.path) == ModelKind::kNaiveBayes);
}

TEST_CASE("linear model round-trips within f32 precision", "[model_io]") {
  TempFile file("linear");
  LinearTrainConfig config;
  config.buckets = 1u << 12;
  config.epochs = 4;
  config.seed = 21;
  const auto model = LinearNgramModel::train(kTrain, config);
  save_model(file.path, model);
  const auto loaded = load_linear(file.path);
  CHECK(loaded.buckets() == model.buckets());
  for (const auto& ex : kTrain) {
    CHECK(loaded.predict(ex.name).argmax_class() ==
          model.predict(ex.name).argmax_class());
  }
}

TEST_CASE("retrieval index rebuilds identically from its examples",
          "[model_io]") {
  TempFile file("retrieval");
  const auto index = RetrievalIndex::build(kTrain);
  save_model(file.path, index, 7, RerankWeights{}, 0.4);
  const auto loaded = load_retrieval(file.path);
  CHECK(loaded.k == 7);
  CHECK(loaded.validate_threshold == Catch::Approx(0.4));
  for (const auto& ex : kTrain) {
    const auto a = index.normalize(ex.name);
    const auto b = loaded.index.normalize(ex.name);
    REQUIRE_FALSE(b.ranked.empty());
    CHECK(a.ranked.front().class_id == b.ranked.front().class_id);
    CHECK(a.top_score == Catch::Approx(b.top_score).margin(1e-12));
  }
}

TEST_CASE("embedding model and anchors round-trip", "[model_io]") {
  TempFile file("embed");
  EmbeddingModel::Config config;
  config.dim = 16;
  config.buckets = 1u << 12;
  const auto model = EmbeddingModel::init(config, 5);
  const auto anchors = build_anchor_set(model, kTrain, 3, 5, 10);
  save_model(file.path, model, anchors, ClassIndex::from_examples(kTrain));
  const auto loaded = load_embedding(file.path);
  CHECK(loaded.anchors.k == 3);
  REQUIRE(loaded.anchors.vectors.size() == anchors.vectors.size());
  const auto a = model.embed("yale university");
  const auto b = loaded.model.embed("yale university");
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i] == Catch::Approx(a[i]).margin(1e-6));  // f32 storage
  }
}

TEST_CASE("container rejects corrupt files", "[model_io]") {
  const std::string path = "/tmp/lotnorm_model_bad.lotn";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTAMODEL";
  }
  CHECK_THROWS_AS(load_naive_bayes(path), model_format_error);
  {
    std::ofstream out(path, std::ios::binary);
    out << "LOTN";  // truncated after magic
  }
  CHECK_THROWS_AS(peek_model_kind(path), model_format_error);
  std::remove(path.c_str());

  TempFile file("kindmix");
  save_model(file.path, NaiveBayesModel::train(kTrain));
  CHECK_THROWS_AS(load_linear(file.path), model_format_error);
}

TEST_CASE("f32 payload encoding is little-endian", "[model_io]") {
  const auto bytes = container::f32_bytes({1.0});
  REQUIRE(bytes.size() == 4);
  // 1.0f = 0x3F800000 little-endian.
  CHECK(bytes[0] == 0x00);
  CHECK(bytes[1] == 0x00);
  CHECK(bytes[2] == 0x80);
  CHECK(bytes[3] == 0x3F);
  const auto back = container::f32_values(bytes);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == 1.0);
}
