#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/distribution.hpp"
#include "lotnorm/embedder.hpp"
#include "lotnorm/linear_model.hpp"
#include "lotnorm/naive_bayes.hpp"
#include "lotnorm/retrieval.hpp"
#include "lotnorm/version.hpp"

#include "json.hpp"

namespace lotnorm {

class model_format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind : std::uint8_t {
  kNaiveBayes = 1,
  kLinear = 2,
  kRetrieval = 3,
  kEmbedding = 4,
};

inline const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNaiveBayes:
      return "nb";
    case ModelKind::kLinear:
      return "linear";
    case ModelKind::kRetrieval:
      return "retrieval";
    case ModelKind::kEmbedding:
      return "embed";
  }
  return "unknown";
}

// Versioned model container: 4-byte magic "LOTN", format version byte,
// model-kind byte, then a section table of named blobs. Numeric payloads
// are little-endian f32; metadata sections are UTF-8 JSON.
namespace container {

inline constexpr char kMagic[4] = {'L', 'O', 'T', 'N'};

struct Section {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
}

inline std::vector<std::uint8_t> f32_bytes(const std::vector<double>& values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (const double v : values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  return out;
}

inline std::vector<double> f32_values(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0) {
    throw model_format_error("f32 section size not a multiple of 4");
  }
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    }
    float f;
    std::memcpy(&f, &bits, 4);
    out[i] = static_cast<double>(f);
  }
  return out;
}

inline std::vector<std::uint8_t> json_bytes(const nlohmann::json& j) {
  const std::string s = j.dump();
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

inline nlohmann::json json_value(const std::vector<std::uint8_t>& bytes) {
  return nlohmann::json::parse(bytes.begin(), bytes.end());
}

inline void write(const std::string& path, ModelKind kind,
                  const std::vector<Section>& sections) {
  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  buf.push_back(static_cast<std::uint8_t>(kModelFormatVersion));
  buf.push_back(static_cast<std::uint8_t>(kind));
  put_u32(buf, static_cast<std::uint32_t>(sections.size()));
  for (const Section& s : sections) {
    put_u32(buf, static_cast<std::uint32_t>(s.name.size()));
    buf.insert(buf.end(), s.name.begin(), s.name.end());
    put_u64(buf, s.bytes.size());
    buf.insert(buf.end(), s.bytes.begin(), s.bytes.end());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write model file: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

struct Loaded {
  ModelKind kind;
  std::map<std::string, std::vector<std::uint8_t>> sections;
};

inline Loaded read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open model file: " + path);
  std::vector<std::uint8_t> buf(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > buf.size()) {
      throw model_format_error("model file truncated: " + path);
    }
  };
  need(6);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw model_format_error("bad magic; not a LOTN model file: " + path);
  }
  if (buf[4] != kModelFormatVersion) {
    throw model_format_error("unsupported model format version " +
                             std::to_string(buf[4]));
  }
  if (buf[5] < 1 || buf[5] > 4) {
    throw model_format_error("unknown model kind tag " +
                             std::to_string(buf[5]));
  }
  Loaded loaded;
  loaded.kind = static_cast<ModelKind>(buf[5]);
  pos = 6;
  need(4);
  std::uint32_t n_sections = 0;
  for (int i = 0; i < 4; ++i) n_sections |= std::uint32_t(buf[pos + i]) << (8 * i);
  pos += 4;
  for (std::uint32_t s = 0; s < n_sections; ++s) {
    need(4);
    std::uint32_t name_len = 0;
    for (int i = 0; i < 4; ++i) name_len |= std::uint32_t(buf[pos + i]) << (8 * i);
    pos += 4;
    need(name_len);
    std::string name(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                     buf.begin() + static_cast<std::ptrdiff_t>(pos + name_len));
    pos += name_len;
    need(8);
    std::uint64_t size = 0;
    for (int i = 0; i < 8; ++i) size |= std::uint64_t(buf[pos + i]) << (8 * i);
    pos += 8;
    need(size);
    loaded.sections[name] = std::vector<std::uint8_t>(
        buf.begin() + static_cast<std::ptrdiff_t>(pos),
        buf.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return loaded;
}

inline const std::vector<std::uint8_t>& section(const Loaded& loaded,
                                                const std::string& name) {
  const auto it = loaded.sections.find(name);
  if (it == loaded.sections.end()) {
    throw model_format_error("missing model section: " + name);
  }
  return it->second;
}

}  // namespace container

// ---- Naive Bayes ----

inline void save_model(const std::string& path, const NaiveBayesModel& model) {
  nlohmann::json meta;
  meta["alpha"] = model.alpha();
  meta["classes"] = model.classes()->ids();
  meta["stopwords"] = model.stopwords();
  std::vector<std::string> vocab;
  std::vector<double> counts;
  for (const auto& [tok, per_class] : model.token_counts()) {
    vocab.push_back(tok);
    for (const auto n : per_class) counts.push_back(static_cast<double>(n));
  }
  meta["vocab"] = vocab;
  std::vector<double> class_examples;
  for (const auto n : model.class_examples()) {
    class_examples.push_back(static_cast<double>(n));
  }
  container::write(path, ModelKind::kNaiveBayes,
                   {{"meta", container::json_bytes(meta)},
                    {"token_counts", container::f32_bytes(counts)},
                    {"class_examples", container::f32_bytes(class_examples)}});
}

inline NaiveBayesModel load_naive_bayes(const std::string& path) {
  const auto loaded = container::read(path);
  if (loaded.kind != ModelKind::kNaiveBayes) {
    throw model_format_error("model file is not a naive bayes model");
  }
  const auto meta = container::json_value(container::section(loaded, "meta"));
  auto classes = std::make_shared<const ClassIndex>(
      meta.at("classes").get<std::vector<std::string>>());
  const auto vocab = meta.at("vocab").get<std::vector<std::string>>();
  const auto counts =
      container::f32_values(container::section(loaded, "token_counts"));
  const auto class_examples_f =
      container::f32_values(container::section(loaded, "class_examples"));
  const std::size_t c = classes->size();
  if (counts.size() != vocab.size() * c) {
    throw model_format_error("token count section has the wrong size");
  }
  std::map<std::string, std::vector<std::uint64_t>> token_counts;
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    std::vector<std::uint64_t> per_class(c);
    for (std::size_t i = 0; i < c; ++i) {
      per_class[i] = static_cast<std::uint64_t>(counts[t * c + i]);
    }
    token_counts[vocab[t]] = std::move(per_class);
  }
  std::vector<std::uint64_t> class_examples(class_examples_f.size());
  for (std::size_t i = 0; i < class_examples.size(); ++i) {
    class_examples[i] = static_cast<std::uint64_t>(class_examples_f[i]);
  }
  std::set<std::string> stopwords;
  for (const auto& w : meta.at("stopwords")) {
    stopwords.insert(w.get<std::string>());
  }
  return NaiveBayesModel::from_parts(std::move(classes),
                                     meta.at("alpha").get<double>(),
                                     std::move(stopwords),
                                     std::move(token_counts),
                                     std::move(class_examples));
}

// ---- Linear ----

inline void save_model(const std::string& path, const LinearNgramModel& model) {
  nlohmann::json meta;
  meta["buckets"] = model.buckets();
  meta["ngram_min"] = model.ngram_min();
  meta["ngram_max"] = model.ngram_max();
  meta["classes"] = model.classes()->ids();
  container::write(path, ModelKind::kLinear,
                   {{"meta", container::json_bytes(meta)},
                    {"weights", container::f32_bytes(model.weights())},
                    {"bias", container::f32_bytes(model.bias())}});
}

inline LinearNgramModel load_linear(const std::string& path) {
  const auto loaded = container::read(path);
  if (loaded.kind != ModelKind::kLinear) {
    throw model_format_error("model file is not a linear model");
  }
  const auto meta = container::json_value(container::section(loaded, "meta"));
  auto classes = std::make_shared<const ClassIndex>(
      meta.at("classes").get<std::vector<std::string>>());
  return LinearNgramModel::from_parts(
      std::move(classes), meta.at("buckets").get<std::size_t>(),
      meta.at("ngram_min").get<int>(), meta.at("ngram_max").get<int>(),
      container::f32_values(container::section(loaded, "weights")),
      container::f32_values(container::section(loaded, "bias")));
}

// ---- Retrieval ----
// The index is a pure function of the train examples; the container stores
// the examples and parameters and rebuilding happens on load.

inline void save_model(const std::string& path, const RetrievalIndex& index,
                       std::size_t k, const RerankWeights& weights,
                       double validate_threshold) {
  nlohmann::json meta;
  meta["k"] = k;
  meta["weights"] = {weights.exact, weights.jaccard, weights.cosine,
                     weights.prior};
  meta["validate_threshold"] = validate_threshold;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& ex : index.examples()) {
    rows.push_back({ex.name, ex.class_id});
  }
  meta["examples"] = rows;
  container::write(path, ModelKind::kRetrieval,
                   {{"meta", container::json_bytes(meta)}});
}

struct LoadedRetrieval {
  RetrievalIndex index;
  std::size_t k = 10;
  RerankWeights weights;
  double validate_threshold = 0.5;
};

inline LoadedRetrieval load_retrieval(const std::string& path) {
  const auto loaded = container::read(path);
  if (loaded.kind != ModelKind::kRetrieval) {
    throw model_format_error("model file is not a retrieval model");
  }
  const auto meta = container::json_value(container::section(loaded, "meta"));
  std::vector<LabeledExample> examples;
  for (const auto& row : meta.at("examples")) {
    examples.push_back({row.at(0).get<std::string>(),
                        row.at(1).get<std::string>()});
  }
  LoadedRetrieval result{RetrievalIndex::build(examples),
                         meta.at("k").get<std::size_t>(),
                         RerankWeights{},
                         meta.at("validate_threshold").get<double>()};
  const auto w = meta.at("weights");
  result.weights = {w.at(0).get<double>(), w.at(1).get<double>(),
                    w.at(2).get<double>(), w.at(3).get<double>()};
  return result;
}

// ---- Embedding ----

inline void save_model(const std::string& path, const EmbeddingModel& model,
                       const AnchorSet& anchors,
                       const std::shared_ptr<const ClassIndex>& classes) {
  nlohmann::json meta;
  meta["dim"] = model.config().dim;
  meta["buckets"] = model.config().buckets;
  meta["ngram_min"] = model.config().ngram_min;
  meta["ngram_max"] = model.config().ngram_max;
  meta["k"] = anchors.k;
  meta["classes"] = classes->ids();
  meta["anchor_classes"] = anchors.classes;
  std::vector<double> anchor_flat;
  anchor_flat.reserve(anchors.vectors.size() * model.config().dim);
  for (const auto& v : anchors.vectors) {
    anchor_flat.insert(anchor_flat.end(), v.begin(), v.end());
  }
  container::write(path, ModelKind::kEmbedding,
                   {{"meta", container::json_bytes(meta)},
                    {"table", container::f32_bytes(model.table())},
                    {"projection", container::f32_bytes(model.projection())},
                    {"bias", container::f32_bytes(model.bias())},
                    {"anchors", container::f32_bytes(anchor_flat)}});
}

struct LoadedEmbedding {
  EmbeddingModel model;
  AnchorSet anchors;
  std::shared_ptr<const ClassIndex> classes;
};

inline LoadedEmbedding load_embedding(const std::string& path) {
  const auto loaded = container::read(path);
  if (loaded.kind != ModelKind::kEmbedding) {
    throw model_format_error("model file is not an embedding model");
  }
  const auto meta = container::json_value(container::section(loaded, "meta"));
  EmbeddingModel::Config config;
  config.dim = meta.at("dim").get<std::size_t>();
  config.buckets = meta.at("buckets").get<std::size_t>();
  config.ngram_min = meta.at("ngram_min").get<int>();
  config.ngram_max = meta.at("ngram_max").get<int>();

  LoadedEmbedding result{
      EmbeddingModel::from_parts(
          config, container::f32_values(container::section(loaded, "table")),
          container::f32_values(container::section(loaded, "projection")),
          container::f32_values(container::section(loaded, "bias"))),
      AnchorSet{},
      std::make_shared<const ClassIndex>(
          meta.at("classes").get<std::vector<std::string>>())};
  result.anchors.k = meta.at("k").get<std::size_t>();
  result.anchors.classes =
      meta.at("anchor_classes").get<std::vector<std::string>>();
  const auto flat =
      container::f32_values(container::section(loaded, "anchors"));
  if (flat.size() != result.anchors.classes.size() * config.dim) {
    throw model_format_error("anchor section has the wrong size");
  }
  result.anchors.vectors.resize(result.anchors.classes.size());
  for (std::size_t a = 0; a < result.anchors.vectors.size(); ++a) {
    result.anchors.vectors[a].assign(
        flat.begin() + static_cast<std::ptrdiff_t>(a * config.dim),
        flat.begin() + static_cast<std::ptrdiff_t>((a + 1) * config.dim));
  }
  return result;
}

inline ModelKind peek_model_kind(const std::string& path) {
  return container::read(path).kind;
}

}  // namespace lotnorm
