#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "lotnorm/embedder.hpp"
#include "lotnorm/rng.hpp"
#include "lotnorm/tokenizer.hpp"

using namespace lotnorm;

TEST_CASE("tokenization of a two-word name", "[embed]") {
  const auto tok = tokenize_chars("mit lab");
  REQUIRE(tok.size() == 9);  // CLS + 7 chars + EOS
  CHECK(tok.char_ids.front() == kClsId);
  CHECK(tok.char_ids.back() == kEosId);
  for (std::size_t i = 0; i < tok.size(); ++i) {
    CHECK(tok.char_positions[i] == i);
  }
  // "mit" spans word 0; the separating space opens word 1 with "lab".
  const std::vector<std::uint16_t> expected_words = {0, 0, 0, 0, 1,
                                                     1, 1, 1, 1};
  CHECK(tok.word_positions == expected_words);
}

TEST_CASE("tokenization of the minimal name", "[embed]") {
  const auto tok = tokenize_chars("ab");
  REQUIRE(tok.size() == 4);
  CHECK(tok.char_ids[0] == kClsId);
  CHECK(tok.char_ids[1] == retained_char_index('a'));
  CHECK(tok.char_ids[2] == retained_char_index('b'));
  CHECK(tok.char_ids[3] == kEosId);
}

TEST_CASE("tokenization tracks stay aligned and round-trip", "[embed]") {
  Rng rng(555);
  for (int iter = 0; iter < 500; ++iter) {
    std::string name;
    const std::size_t len = 2 + rng.below(60);
    for (std::size_t i = 0; i < len; ++i) {
      name.push_back(kRetainedChars[rng.below(kRetainedChars.size())]);
    }
    const auto cleaned = normalize_name(name);
    if (!cleaned.accepted()) continue;
    const auto tok = tokenize_chars(cleaned.text());
    REQUIRE(tok.char_ids.size() == tok.char_positions.size());
    REQUIRE(tok.char_ids.size() == tok.word_positions.size());
    for (std::size_t i = 1; i < tok.char_positions.size(); ++i) {
      CHECK(tok.char_positions[i] == tok.char_positions[i - 1] + 1);
      CHECK(tok.word_positions[i] >= tok.word_positions[i - 1]);
    }
    CHECK(detokenize_chars(tok) == cleaned.text());
  }
}

TEST_CASE("contrastive loss closed forms", "[embed]") {
  const double margin = 1.5;
  CHECK(contrastive_loss(0.0, true, margin) == 0.0);
  CHECK(contrastive_loss(margin, false, margin) == 0.0);
  CHECK(contrastive_loss(margin + 2.0, false, margin) == 0.0);
  CHECK(contrastive_loss(0.0, false, margin) ==
        Catch::Approx(margin * margin));
  CHECK(contrastive_loss(0.5, true, margin) == Catch::Approx(0.25));
  CHECK_THROWS_AS(contrastive_loss(-0.1, true, margin), parameter_error);
}

TEST_CASE("pair loss gradient matches finite differences", "[embed]") {
  const double margin = 1.0;
  Rng rng(77);
  auto loss_of = [&](const std::vector<double>& a,
                     const std::vector<double>& b, bool same) {
    return contrastive_loss(l2_distance(a, b), same, margin);
  };
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t d = 4;
    std::vector<double> a(d), b(d);
    for (std::size_t k = 0; k < d; ++k) {
      a[k] = rng.normal();
      b[k] = rng.normal();
    }
    const bool same = rng.below(2) == 0;
    const double dist = l2_distance(a, b);
    if (dist < 1e-3) continue;  // kink at zero distance

    // Analytic gradient wrt a.
    std::vector<double> grad(d, 0.0);
    if (same) {
      for (std::size_t k = 0; k < d; ++k) grad[k] = 2.0 * (a[k] - b[k]);
    } else if (dist < margin) {
      if (std::abs(dist - margin) < 1e-3) continue;  // hinge kink
      for (std::size_t k = 0; k < d; ++k) {
        grad[k] = -2.0 * (margin - dist) * (a[k] - b[k]) / dist;
      }
    }
    const double h = 1e-6;
    for (std::size_t k = 0; k < d; ++k) {
      auto up = a, down = a;
      up[k] += h;
      down[k] -= h;
      const double fd = (loss_of(up, b, same) - loss_of(down, b, same)) /
                        (2 * h);
      REQUIRE(grad[k] == Catch::Approx(fd).epsilon(1e-4).margin(1e-7));
    }
  }
}

TEST_CASE("mining with all-distinct classes yields only negatives",
          "[embed]") {
  std::vector<std::vector<double>> vectors;
  std::vector<std::size_t> labels;
  Rng rng(3);
  for (std::size_t i = 0; i < 16; ++i) {
    vectors.push_back({rng.normal(), rng.normal()});
    labels.push_back(i);
  }
  const auto pairs = mine_hard_pairs(vectors, labels);
  CHECK(pairs.size() == 8);
  for (const auto& p : pairs) CHECK_FALSE(p.positive);
}

TEST_CASE("mining a same-class pair yields one positive", "[embed]") {
  const auto pairs = mine_hard_pairs({{0.0, 0.0}, {1.0, 0.0}}, {4, 4});
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].positive);
  CHECK(pairs[0].distance == Catch::Approx(1.0));
}

TEST_CASE("mining equals brute-force enumeration", "[embed]") {
  Rng rng(129);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t n = 2 + rng.below(24);
    std::vector<std::vector<double>> vectors(n);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      vectors[i] = {rng.normal(), rng.normal(), rng.normal()};
      labels[i] = rng.below(5);
    }
    const auto mined = mine_hard_pairs(vectors, labels);

    // Oracle: enumerate, split, sort with the same tie rule.
    struct P {
      std::size_t i, j;
      double d;
      std::size_t order;
    };
    std::vector<P> pos, neg;
    std::size_t order = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++order) {
        const P p{i, j, l2_distance(vectors[i], vectors[j]), order};
        (labels[i] == labels[j] ? pos : neg).push_back(p);
      }
    }
    std::sort(pos.begin(), pos.end(), [](const P& a, const P& b) {
      if (a.d != b.d) return a.d > b.d;
      return a.order < b.order;
    });
    std::sort(neg.begin(), neg.end(), [](const P& a, const P& b) {
      if (a.d != b.d) return a.d < b.d;
      return a.order < b.order;
    });
    if (pos.size() > 4) pos.resize(4);
    if (neg.size() > 8) neg.resize(8);

    REQUIRE(mined.size() == pos.size() + neg.size());
    for (std::size_t k = 0; k < pos.size(); ++k) {
      CHECK(mined[k].i == pos[k].i);
      CHECK(mined[k].j == pos[k].j);
    }
    for (std::size_t k = 0; k < neg.size(); ++k) {
      CHECK(mined[pos.size() + k].i == neg[k].i);
      CHECK(mined[pos.size() + k].j == neg[k].j);
    }
  }
}

TEST_CASE("embedding is deterministic with the configured dimension",
          "[embed]") {
  EmbeddingModel::Config config;
  config.dim = 32;
  config.buckets = 1u << 12;
  const auto model = EmbeddingModel::init(config, 5);
  const auto a = model.embed("yale university");
  const auto b = model.embed("yale university");
  REQUIRE(a.size() == 32);
  CHECK(a == b);
  for (const double v : a) CHECK(std::isfinite(v));
}

namespace {

std::vector<LabeledExample> variant_corpus(std::size_t classes,
                                           std::size_t per_class,
                                           Rng& rng) {
  std::vector<LabeledExample> out;
  for (std::size_t c = 0; c < classes; ++c) {
    std::string base;
    for (int w = 0; w < 2; ++w) {
      if (w) base += ' ';
      const std::size_t len = 5 + rng.below(4);
      for (std::size_t i = 0; i < len; ++i) {
        base.push_back(static_cast<char>('a' + rng.below(26)));
      }
    }
    for (std::size_t e = 0; e < per_class; ++e) {
      std::string variant = base;
      if (e % 2 == 1) variant += " dept " + std::to_string(e);
      if (e % 3 == 2 && variant.size() > 4) {
        variant[rng.below(variant.size())] =
            static_cast<char>('a' + rng.below(26));
      }
      out.push_back({variant, "c" + std::to_string(c)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("contrastive training reduces the loss", "[embed]") {
  Rng rng(31);
  const auto train = variant_corpus(12, 6, rng);
  EmbeddingModel::Config config;
  config.dim = 24;
  config.buckets = 1u << 12;
  auto model = EmbeddingModel::init(config, 4);
  ContrastiveParams params;
  params.steps = 400;
  params.learning_rate = 0.05;
  params.seed = 4;
  const auto log = ContrastiveTrainer::train(model, train, params);
  REQUIRE(log.loss_curve.size() == 400);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    first += log.loss_curve[i];
    last += log.loss_curve[log.loss_curve.size() - 100 + i];
  }
  CHECK(last < first);
}

TEST_CASE("trained embeddings separate classes", "[embed]") {
  Rng rng(67);
  const auto train = variant_corpus(10, 8, rng);
  EmbeddingModel::Config config;
  config.dim = 24;
  config.buckets = 1u << 12;
  auto model = EmbeddingModel::init(config, 4);
  ContrastiveParams params;
  params.steps = 600;
  params.learning_rate = 0.05;
  params.seed = 6;
  ContrastiveTrainer::train(model, train, params);

  double intra = 0.0, inter = 0.0;
  std::size_t intra_n = 0, inter_n = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t j = i + 1; j < train.size(); ++j) {
      const double d =
          l2_distance(model.embed(train[i].name), model.embed(train[j].name));
      if (train[i].class_id == train[j].class_id) {
        intra += d;
        ++intra_n;
      } else {
        inter += d;
        ++inter_n;
      }
    }
  }
  CHECK(intra / intra_n < inter / inter_n);
}

TEST_CASE("knn classification votes over anchors", "[embed]") {
  Rng rng(90);
  const auto train = variant_corpus(6, 5, rng);
  EmbeddingModel::Config config;
  config.dim = 16;
  config.buckets = 1u << 12;
  const auto model = EmbeddingModel::init(config, 2);
  const auto classes = ClassIndex::from_examples(train);

  SECTION("k=1 with an anchor-equal query returns that class") {
    auto anchors = build_anchor_set(model, train, 1, 3, 100);
    const auto dist = knn_classify(model, anchors, classes, train[7].name);
    CHECK(dist.argmax_class() == train[7].class_id);
    CHECK(dist.max_prob() == 1.0);
  }

  SECTION("votes normalize to a distribution") {
    AnchorSet anchors;
    anchors.k = 5;
    // 3 anchors of class c0 at the origin, 2 of c1 next to it.
    for (int i = 0; i < 3; ++i) {
      anchors.vectors.push_back(std::vector<double>(16, 0.0));
      anchors.classes.push_back("c0");
    }
    for (int i = 0; i < 2; ++i) {
      anchors.vectors.push_back(std::vector<double>(16, 0.01 * (i + 1)));
      anchors.classes.push_back("c1");
    }
    // Query embedding: whatever the model produces; override anchors to be
    // closest regardless by centering them on the query.
    const auto z = model.embed(train[0].name);
    for (auto& v : anchors.vectors) {
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += z[k];
    }
    const auto dist = knn_classify(model, anchors, classes, train[0].name);
    const auto c0 = static_cast<std::size_t>(classes->index_of("c0"));
    const auto c1 = static_cast<std::size_t>(classes->index_of("c1"));
    CHECK(dist.p[c0] == Catch::Approx(0.6));
    CHECK(dist.p[c1] == Catch::Approx(0.4));
  }

  SECTION("matches a brute-force nearest neighbour scan") {
    auto anchors = build_anchor_set(model, train, 7, 3, 100);
    for (int probe = 0; probe < 10; ++probe) {
      const auto& query = train[rng.below(train.size())].name;
      const auto dist = knn_classify(model, anchors, classes, query);

      const auto z = model.embed(query);
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t a = 0; a < anchors.vectors.size(); ++a) {
        order.emplace_back(l2_distance(z, anchors.vectors[a]), a);
      }
      std::sort(order.begin(), order.end());
      std::map<ClassId, double> votes;
      const std::size_t k = std::min<std::size_t>(7, order.size());
      for (std::size_t r = 0; r < k; ++r) {
        votes[anchors.classes[order[r].second]] += 1.0 / k;
      }
      for (const auto& [cls, p] : votes) {
        CHECK(dist.p[classes->index_of(cls)] == Catch::Approx(p));
      }
    }
  }
}

TEST_CASE("verification thresholds the pair distance", "[embed]") {
  EmbeddingModel::Config config;
  config.dim = 16;
  config.buckets = 1u << 12;
  const auto model = EmbeddingModel::init(config, 8);
  CHECK(verify(model, "yale university", "yale university", 0.5));
  CHECK_THROWS_AS(verify(model, "ab", "cd", 0.0), parameter_error);
}
