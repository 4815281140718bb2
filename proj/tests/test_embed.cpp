#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>
#include <thread>

#include "httplib.h"

#include "newsaudit/embed.hpp"

using namespace newsaudit;
using embed::EmbeddingVector;

namespace {

EmbeddingVector vec(std::initializer_list<double> values) {
    return EmbeddingVector{std::vector<double>(values)};
}

EmbeddingVector random_vector(std::mt19937& rng, std::size_t dim) {
    std::normal_distribution<double> dist(0.0, 1.0);
    EmbeddingVector v;
    v.values.resize(dim);
    for (double& x : v.values) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("cosine similarity basics") {
    const auto v = vec({1.0, 2.0, -0.5});
    CHECK(embed::cosine_similarity(v, v) == doctest::Approx(1.0));

    const auto e1 = vec({1.0, 0.0});
    const auto e2 = vec({0.0, 1.0});
    CHECK(embed::cosine_similarity(e1, e2) == doctest::Approx(0.0));

    auto neg = v;
    for (double& x : neg.values) x = -x;
    CHECK(embed::cosine_similarity(v, neg) == doctest::Approx(-1.0));

    CHECK(embed::cosine_distance(v, v) == doctest::Approx(0.0));
    CHECK(embed::cosine_distance(e1, e2) == doctest::Approx(1.0));
    CHECK(embed::cosine_distance(v, neg) == doctest::Approx(2.0));
}

TEST_CASE("cosine similarity rejects zero vectors and mismatched dims") {
    const auto v = vec({1.0, 2.0});
    CHECK_THROWS_AS(embed::cosine_similarity(v, vec({0.0, 0.0})),
                    embed::EmbedError);
    CHECK_THROWS_AS(embed::cosine_similarity(v, vec({1.0, 2.0, 3.0})),
                    embed::EmbedError);
}

TEST_CASE("cosine similarity is scale invariant") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = random_vector(rng, 16);
        auto b = random_vector(rng, 16);
        const double base = embed::cosine_similarity(a, b);
        auto sa = a;
        auto sb = b;
        const double alpha = scale(rng);
        const double beta = scale(rng);
        for (double& x : sa.values) x *= alpha;
        for (double& x : sb.values) x *= beta;
        CHECK(std::fabs(embed::cosine_similarity(sa, sb) - base) < 1e-12);

        const double d = embed::cosine_distance(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
        CHECK(std::fabs(embed::cosine_distance(b, a) - d) < 1e-15);
    }

    // distance 0 iff positive scalar multiples
    auto a = vec({0.5, -1.0, 2.0});
    auto twice = vec({1.0, -2.0, 4.0});
    CHECK(embed::cosine_distance(a, twice) == doctest::Approx(0.0));
}

TEST_CASE("manhattan distance") {
    std::vector<double> zero(14, 0.0);
    std::vector<double> ones(14, 1.0);
    CHECK(embed::manhattan_distance(zero, zero) == 0.0);
    CHECK(embed::manhattan_distance(zero, ones) == doctest::Approx(14.0));

    std::vector<double> e1(14, 0.0), e2(14, 0.0);
    e1[0] = 1.0;
    e2[1] = 1.0;
    CHECK(embed::manhattan_distance(e1, e2) == doctest::Approx(2.0));

    std::vector<double> shorter(3, 0.0);
    CHECK_THROWS_AS(embed::manhattan_distance(zero, shorter),
                    embed::EmbedError);
}

TEST_CASE("percentile rank with mid-rank ties") {
    std::vector<double> population = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(embed::percentile_rank(0.5, population) == doctest::Approx(0.0));
    CHECK(embed::percentile_rank(11.0, population) == doctest::Approx(1.0));

    std::vector<double> single = {3.0};
    CHECK(embed::percentile_rank(3.0, single) == doctest::Approx(0.5));

    CHECK_THROWS_AS(embed::percentile_rank(1.0, {}), embed::EmbedError);
}

TEST_CASE("percentile rank is monotone in the value") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> n_dist(1, 20);
        std::vector<double> population;
        for (int i = 0, n = n_dist(rng); i < n; ++i)
            population.push_back(dist(rng));
        double a = dist(rng);
        double b = dist(rng);
        if (a > b) std::swap(a, b);
        CHECK(embed::percentile_rank(a, population) <=
              embed::percentile_rank(b, population));
    }
}

TEST_CASE("centroid") {
    const auto v = vec({1.0, 2.0, 3.0});
    std::vector<EmbeddingVector> one = {v};
    CHECK(embed::centroid(one) == v);

    auto neg = v;
    for (double& x : neg.values) x = -x;
    std::vector<EmbeddingVector> pair = {v, neg};
    CHECK(embed::centroid(pair) == vec({0.0, 0.0, 0.0}));

    std::vector<EmbeddingVector> three = {vec({1.0, 0.0}), vec({2.0, 3.0}),
                                          vec({3.0, 3.0})};
    CHECK(embed::centroid(three) == vec({2.0, 2.0}));

    CHECK_THROWS_AS(embed::centroid({}), embed::EmbedError);
}

TEST_CASE("hash stub embedder is deterministic, unit norm, and content "
          "sensitive") {
    embed::HashStubEmbedder embedder("stub-test", 768);
    const auto a = embedder.embed_text("Trump Repeats False Claim");
    const auto b = embedder.embed_text("Trump Repeats False Claim");
    CHECK(a == b);
    CHECK(a.dimension() == 768);

    double norm = 0.0;
    for (double x : a.values) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0));

    const auto c = embedder.embed_text("Trump Repeats False Claims");
    CHECK(a.values != c.values);

    // distinct fixture texts never collide
    embed::HashStubEmbedder fresh("stub-test", 64);
    std::vector<std::string> texts;
    for (int i = 0; i < 50; ++i)
        texts.push_back("headline variant " + std::to_string(i));
    const auto vectors = fresh.embed_many(texts);
    for (std::size_t i = 0; i < vectors.size(); ++i)
        for (std::size_t j = i + 1; j < vectors.size(); ++j)
            CHECK(vectors[i].values != vectors[j].values);
}

TEST_CASE("embedding cache persists across provider instances") {
    const auto cache_dir = std::filesystem::temp_directory_path() /
                           "newsaudit-tests" / "embed_cache";
    std::filesystem::remove_all(cache_dir);

    embed::HashStubEmbedder first("stub-cache", 32, cache_dir);
    const auto a = first.embed_text("some headline");

    embed::HashStubEmbedder second("stub-cache", 32, cache_dir);
    const auto b = second.embed_text("some headline");
    CHECK(a == b);

    CHECK_THROWS_AS(first.embed_text(""), embed::EmbedError);
}

TEST_CASE("embedding wire format round-trips") {
    std::vector<std::string> texts = {"alpha", "beta"};
    const auto body = embed::embedding_request_body(texts);
    CHECK(body.at("texts").size() == 2);

    nlohmann::json response{
        {"vectors", {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}}};
    const auto vectors = embed::parse_embedding_response(response, 2, 3);
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0] == std::vector<double>{1.0, 0.0, 0.0});

    CHECK_THROWS_AS(embed::parse_embedding_response(response, 3, 3),
                    embed::EmbedError);
    CHECK_THROWS_AS(embed::parse_embedding_response(response, 2, 4),
                    embed::EmbedError);
    nlohmann::json bad{{"vectors", {{1.0, std::nan("")}}}};
    CHECK_THROWS_AS(embed::parse_embedding_response(bad, 1, 2),
                    embed::EmbedError);
}

TEST_CASE("http embedder speaks the wire contract against a local server") {
    httplib::Server server;
    server.Post("/v1/embed", [&](const httplib::Request& req,
                                 httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json vectors = nlohmann::json::array();
        for (std::size_t i = 0; i < body.at("texts").size(); ++i) {
            std::vector<double> v(4, 0.0);
            v[i % 4] = 1.0;
            vectors.push_back(v);
        }
        res.set_content(nlohmann::json{{"vectors", vectors}}.dump(),
                        "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) {
        MESSAGE("skipping: cannot bind a local port in this environment");
        return;
    }
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    embed::EmbeddingProviderConfig cfg;
    cfg.provider_id = "remote-encoder";
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/embed";
    cfg.dimension = 4;
    cfg.retry_limit = 0;
    auto provider = embed::make_embedding_provider(cfg);

    std::vector<std::string> texts = {"alpha", "beta"};
    const auto vectors = provider->embed_many(texts);
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0].values == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    CHECK(vectors[1].values == std::vector<double>{0.0, 1.0, 0.0, 0.0});

    server.stop();
    server_thread.join();
}

TEST_CASE("provider factory dispatches on endpoint scheme") {
    embed::EmbeddingProviderConfig stub_cfg;
    stub_cfg.endpoint = "stub://embed";
    CHECK(embed::make_embedding_provider(stub_cfg) != nullptr);

    embed::EmbeddingProviderConfig http_cfg;
    http_cfg.endpoint = "http://localhost:1/v1/embed";
    CHECK(embed::make_embedding_provider(http_cfg) != nullptr);

    embed::EmbeddingProviderConfig bad_cfg;
    bad_cfg.endpoint = "ftp://nope";
    CHECK_THROWS_AS(embed::make_embedding_provider(bad_cfg),
                    embed::EmbedError);
}
