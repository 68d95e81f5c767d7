// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dtkg/codec.hpp"
#include "dtkg/embedding.hpp"
#include "dtkg/error.hpp"
#include "dtkg/synthetic.hpp"
#include "test_support.hpp"

namespace dtkg {
namespace {

std::vector<float> random_vector(synthetic::Rng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.gaussian());
    return v;
}

TEST(EmbeddingVectorTest, StoresUnitNorm) {
    const auto v = EmbeddingVector::normalized({3.0F, 4.0F});
    EXPECT_NEAR(v.values()[0], 0.6, 1e-6);
    EXPECT_NEAR(v.values()[1], 0.8, 1e-6);
    EXPECT_THROW(EmbeddingVector::normalized({0.0F, 0.0F}), Error);
    EXPECT_THROW(EmbeddingVector::normalized({NAN, 1.0F}), Error);
    EXPECT_THROW(EmbeddingVector::normalized({}), Error);
}

TEST(CosineTest, Examples) {
    const std::vector<float> a{1.0F, 0.0F};
    const std::vector<float> b{0.0F, 1.0F};
    const std::vector<float> c{static_cast<float>(1 / std::sqrt(2.0)), static_cast<float>(1 / std::sqrt(2.0))};
    EXPECT_NEAR(cosine(a, a), 1.0, 1e-12);
    EXPECT_NEAR(cosine(a, b), 0.0, 1e-12);
    EXPECT_NEAR(cosine(a, c), 0.70711, 1e-5);
    EXPECT_THROW(cosine(a, std::vector<float>{1.0F, 0.0F, 0.0F}), Error);
}

TEST(CosineTest, SymmetricAndBounded) {
    synthetic::Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto dim = 1 + rng.below(32);
        const auto a = random_vector(rng, dim);
        const auto b = random_vector(rng, dim);
        const double ab = cosine(a, b);
        ASSERT_EQ(ab, cosine(b, a));
        ASSERT_LE(std::abs(ab), 1.0 + 1e-9);
    }
}

TEST(SimilarityConfigTest, DefaultsAndValidation) {
    SimilarityConfig c;
    EXPECT_EQ(c.lambda, 0.8);
    EXPECT_EQ(c.beta, 0.2);
    EXPECT_EQ(c.theta_entity, 0.8);
    EXPECT_EQ(c.theta_relation, 0.7);
    EXPECT_NO_THROW(c.validate());
    c.beta = 0.3;
    EXPECT_THROW(c.validate(), Error);
    c = SimilarityConfig{};
    c.theta_entity = 1.2;
    EXPECT_THROW(c.validate(), Error);
}

TEST(EntitySimilarityTest, IdenticalEntitiesScoreOne) {
    const auto e = test::make_entity("a", "person", test::normalized({1, 2, 3}), test::normalized({0, 1, 0}));
    EXPECT_NEAR(entity_similarity(e, e, {}), 1.0, 1e-12);
}

TEST(EntitySimilarityTest, OrthogonalNamesSharedLabel) {
    const auto label = test::unit_axis(2, 3);
    const auto e1 = test::make_entity("a", "person", test::unit_axis(0, 3), label);
    const auto e2 = test::make_entity("b", "person", test::unit_axis(1, 3), label);
    // (0.8a + 0.2c).(0.8b + 0.2c) = 0.04, each norm^2 = 0.68.
    EXPECT_NEAR(entity_similarity(e1, e2, {}), 0.04 / 0.68, 1e-7);
}

TEST(EntitySimilarityTest, NameOnlyWeightsReduceToNameCosineAndSwapIsInvariant) {
    synthetic::Rng rng(8);
    SimilarityConfig names_only;
    names_only.lambda = 1.0;
    names_only.beta = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto e1 = test::make_entity("a", "x", random_vector(rng, 16), random_vector(rng, 16));
        const auto e2 = test::make_entity("b", "y", random_vector(rng, 16), random_vector(rng, 16));
        ASSERT_NEAR(entity_similarity(e1, e2, names_only), cosine(e1.name_embedding, e2.name_embedding), 1e-9);
        ASSERT_EQ(entity_similarity(e1, e2, {}), entity_similarity(e2, e1, {}));
    }
}

TEST(EntitySimilarityTest, MissingEmbeddingIsAnError) {
    const auto e1 = test::make_entity("a", "x", {}, test::unit_axis(0, 2));
    const auto e2 = test::make_entity("b", "x", test::unit_axis(0, 2), test::unit_axis(0, 2));
    try {
        entity_similarity(e1, e2, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kMissingEmbedding);
    }
}

TEST(RelationSimilarityTest, PredicateCosineOnly) {
    auto embedder = test::mock_embedder();
    const auto s = test::embedded_entity(*embedder, "acme", "organization");
    const auto o = test::embedded_entity(*embedder, "beta", "organization");
    const auto owns = test::embedded_relation(*embedder, s, "owns", o, {}, {}, {});
    const auto owns_later = test::embedded_relation(*embedder, o, "owns", s, {Timestamp{5}}, {}, {});
    const auto possesses = test::embedded_relation(*embedder, s, "possesses", o, {}, {}, {});
    const auto has = test::embedded_relation(*embedder, s, "has", o, {}, {}, {});
    const auto sued = test::embedded_relation(*embedder, s, "sued", o, {}, {}, {});
    EXPECT_NEAR(relation_similarity(owns, owns_later), 1.0, 1e-9);
    EXPECT_GE(relation_similarity(owns, possesses), 0.7);
    EXPECT_GE(relation_similarity(owns, has), 0.7);
    EXPECT_GE(relation_similarity(possesses, has), 0.7);
    EXPECT_LT(relation_similarity(owns, sued), 0.7);

    auto a = owns;
    auto b = owns;
    a.predicate_embedding = test::unit_axis(0, 64);
    b.predicate_embedding = test::unit_axis(1, 64);
    EXPECT_NEAR(relation_similarity(a, b), 0.0, 1e-12);
    b.predicate_embedding.clear();
    EXPECT_THROW(relation_similarity(a, b), Error);
}

TEST(MockEmbeddingProviderTest, DeterministicAndUnrelatedTextsAreFar) {
    MockEmbeddingProvider p(64);
    const auto a = p.embed({"real madrid", "champions league"});
    const auto b = p.embed({"real madrid"});
    EXPECT_EQ(a[0], b[0]);
    EXPECT_LT(std::abs(cosine(a[0], a[1])), 0.6);
    EXPECT_EQ(p.model_id(), "hash-sphere-64");
    const auto syn = p.embed({"is chief executive officer", "is_ceo"});
    EXPECT_GE(cosine(syn[0], syn[1]), 0.7);
    p.add_synonyms({"Acme Corp", "acme corporation"});
    const auto acme = p.embed({"acme corp", "Acme Corporation"});
    EXPECT_GE(cosine(acme[0], acme[1]), 0.8);
}

TEST(EmbedderTest, DuplicateTextsInOneBatchCostOneProviderText) {
    auto provider = std::make_shared<MockEmbeddingProvider>(32);
    Embedder e(provider);
    const auto out = e.embed({"hello", "hello"});
    ASSERT_EQ(out.size(), 2U);
    EXPECT_EQ(out[0], out[1]);
    EXPECT_EQ(provider->calls(), 1U);
    EXPECT_EQ(provider->texts_embedded(), 1U);
    for (const auto& v : out) {
        double n = 0;
        for (const float x : v.values()) n += static_cast<double>(x) * x;
        EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
    }
}

TEST(EmbedderTest, EmptyInputMakesNoCall) {
    auto provider = std::make_shared<MockEmbeddingProvider>(32);
    Embedder e(provider);
    EXPECT_TRUE(e.embed({}).empty());
    EXPECT_EQ(provider->calls(), 0U);
    EXPECT_THROW(e.embed({"ok", ""}), Error);
}

TEST(EmbedderTest, PrewarmedCacheLeavesOnlyMisses) {
    auto provider = std::make_shared<MockEmbeddingProvider>(16);
    Embedder e(provider, std::make_shared<EmbeddingCache>());
    std::vector<std::string> texts;
    for (int i = 0; i < 1000; ++i) texts.push_back("text " + std::to_string(i));
    e.embed(std::vector<std::string>(texts.begin(), texts.begin() + 600));
    const auto before = provider->texts_embedded();
    const auto out = e.embed(texts);
    EXPECT_EQ(out.size(), 1000U);
    EXPECT_EQ(provider->texts_embedded() - before, 400U);
    EXPECT_EQ(e.stats().cache_hits, 600U);
    EXPECT_EQ(e.stats().provider_texts, 1000U);
}

TEST(EmbedderTest, FileCacheSurvivesRestartBitForBit) {
    test::TempDir dir;
    const auto path = dir / "cache" / "embeddings.jsonl";
    std::vector<EmbeddingVector> first;
    {
        Embedder e(std::make_shared<MockEmbeddingProvider>(24), std::make_shared<EmbeddingCache>(path));
        first = e.embed({"alpha", "beta"});
    }
    auto provider = std::make_shared<MockEmbeddingProvider>(24);
    Embedder e(provider, std::make_shared<EmbeddingCache>(path));
    const auto second = e.embed({"alpha", "beta"});
    EXPECT_EQ(provider->calls(), 0U);
    ASSERT_EQ(second.size(), 2U);
    EXPECT_EQ(first[0].values(), second[0].values());
    EXPECT_EQ(first[1].values(), second[1].values());

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto rec = nlohmann::json::parse(line);
    EXPECT_EQ(rec["key"], codec::sha256_hex("alpha"));
    EXPECT_EQ(rec["model_id"], "hash-sphere-24");
    EXPECT_EQ(rec["provider_id"], "mock");
    EXPECT_EQ(rec["dim"], 24);
}

TEST(EmbedderTest, CacheIsKeyedByModel) {
    auto cache = std::make_shared<EmbeddingCache>();
    Embedder small(std::make_shared<MockEmbeddingProvider>(8), cache);
    small.embed({"shared"});
    auto provider = std::make_shared<MockEmbeddingProvider>(16);
    Embedder large(provider, cache);
    EXPECT_EQ(large.embed_one("shared").dimension(), 16U);
    EXPECT_EQ(provider->calls(), 1U);
    EXPECT_EQ(cache->size(), 2U);
}

TEST(EmbedderTest, TornTrailingRecordIsIgnored) {
    test::TempDir dir;
    const auto path = dir / "c.jsonl";
    {
        Embedder e(std::make_shared<MockEmbeddingProvider>(8), std::make_shared<EmbeddingCache>(path));
        e.embed({"kept"});
    }
    {
        std::ofstream out(path, std::ios::app);
        out << R"({"key": "abc", "model_id": "hash-sp)";
    }
    {
        auto cache = std::make_shared<EmbeddingCache>(path);
        EXPECT_EQ(cache->size(), 1U);
        Embedder e(std::make_shared<MockEmbeddingProvider>(8), cache);
        e.embed({"added"});
    }
    EmbeddingCache reread(path);
    EXPECT_EQ(reread.size(), 2U);
}

// Returns vectors of the wrong size after the first call.
class ShrinkingProvider final : public EmbeddingProvider {
  public:
    [[nodiscard]] std::string provider_id() const override { return "shrink"; }
    [[nodiscard]] std::string model_id() const override { return "m"; }
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
        const std::size_t dim = calls_++ == 0 ? 4 : 3;
        return std::vector<std::vector<float>>(texts.size(), std::vector<float>(dim, 1.0F));
    }

  private:
    int calls_ = 0;
};

TEST(EmbedderTest, DimensionMismatchIsAnError) {
    Embedder e(std::make_shared<ShrinkingProvider>());
    e.embed_one("a");
    try {
        e.embed_one("b");
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::kDimensionMismatch);
    }
}

TEST(EmbedderTest, ConcurrentCallersAgree) {
    auto provider = std::make_shared<MockEmbeddingProvider>(16);
    Embedder e(provider, std::make_shared<EmbeddingCache>());
    std::vector<std::vector<EmbeddingVector>> results(8);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < results.size(); ++t) {
        threads.emplace_back([&, t] {
            std::vector<std::string> texts;
            for (int i = 0; i < 50; ++i) texts.push_back("w" + std::to_string(i));
            results[t] = e.embed(texts);
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& r : results) EXPECT_EQ(r, results[0]);
}

TEST(HttpEmbeddingProviderTest, BatchesAndReordersByIndex) {
    test::ScopedEnv key("DTKG_TEST_EMBED_KEY", "sk-embed");
    auto reply = [](std::vector<std::pair<int, std::vector<float>>> items) {
        auto data = nlohmann::json::array();
        for (auto& [i, v] : items) data.push_back({{"index", i}, {"embedding", v}});
        return nlohmann::json{{"data", data}}.dump();
    };
    auto transport = std::make_shared<test::ScriptedTransport>(std::vector<test::ScriptedTransport::Step>{
        {200, reply({{1, {0, 1}}, {0, {1, 0}}})},
        {429, ""},
        {200, reply({{0, {1, 1}}})},
    });
    EmbeddingEndpointConfig c;
    c.endpoint = "https://embed.example.test/v1/embeddings";
    c.api_key_env_var = "DTKG_TEST_EMBED_KEY";
    c.max_batch = 2;
    HttpEmbeddingProvider p(c, transport, [](auto) {});
    const auto out = p.embed({"a", "b", "c"});
    ASSERT_EQ(out.size(), 3U);
    EXPECT_EQ(out[0], (std::vector<float>{1, 0}));
    EXPECT_EQ(out[1], (std::vector<float>{0, 1}));
    EXPECT_EQ(out[2], (std::vector<float>{1, 1}));
    EXPECT_EQ(transport->attempts(), 3);
    const auto first = nlohmann::json::parse(transport->bodies()[0]);
    EXPECT_EQ(first["input"], (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(first["model"], c.model_id);
}

TEST(HttpEmbeddingProviderTest, ProviderFailureSurfacesAfterRetries) {
    test::ScopedEnv key("DTKG_TEST_EMBED_KEY", "sk-embed");
    auto transport = std::make_shared<test::ScriptedTransport>(
        std::vector<test::ScriptedTransport::Step>(5, {0, "", true}));
    EmbeddingEndpointConfig c;
    c.endpoint = "https://embed.example.test/v1/embeddings";
    c.api_key_env_var = "DTKG_TEST_EMBED_KEY";
    Embedder e(std::make_shared<HttpEmbeddingProvider>(c, transport, [](auto) {}));
    try {
        e.embed_one("x");
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::kTransport);
    }
    EXPECT_EQ(transport->attempts(), 5);
}

TEST(CodecTest, Sha256AndFloatRoundTrip) {
    EXPECT_EQ(codec::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const std::vector<float> v{1.5F, -0.25F, 3.0e-8F, 0.0F};
    EXPECT_EQ(codec::decode_floats(codec::encode_floats(v)), v);
    EXPECT_EQ(codec::encode_floats(std::vector<float>{1.0F}), "AACAPw==");
    EXPECT_THROW(codec::decode_floats("!!!"), Error);
}

}  // namespace
}  // namespace dtkg
