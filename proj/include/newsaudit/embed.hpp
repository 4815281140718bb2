#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace newsaudit::embed {

class EmbedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

inline constexpr int kDefaultDimension = 768;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// 1 - cosine_similarity, in [0, 2].
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

double manhattan_distance(std::span<const double> a,
                          std::span<const double> b);

// Fraction of the population strictly below value plus half the ties
// (mid-rank convention), in [0, 1].
double percentile_rank(double value, std::span<const double> population);

EmbeddingVector centroid(std::span<const EmbeddingVector> vectors);

struct EmbeddingProviderConfig {
    std::string provider_id = "hash-stub-768";
    std::string endpoint = "stub://embed";
    int dimension = kDefaultDimension;
    int timeout_ms = 30000;
    int retry_limit = 3;
    int backoff_base_ms = 250;
    std::string auth_env_var;

    nlohmann::json to_json() const;
    static EmbeddingProviderConfig from_json(const nlohmann::json& j);
};

// Caching text-embedding front end. Vectors are memoized in memory for the
// lifetime of the provider (same text, same bytes within a run) and
// optionally persisted under a cache directory, one file per text hash.
class EmbeddingProvider {
public:
    EmbeddingProvider(std::string provider_id, int dimension,
                      std::filesystem::path cache_root = {});
    virtual ~EmbeddingProvider() = default;

    const std::string& provider_id() const { return provider_id_; }
    int dimension() const { return dimension_; }

    EmbeddingVector embed_text(const std::string& text);
    std::vector<EmbeddingVector> embed_many(
        std::span<const std::string> texts);

protected:
    virtual std::vector<std::vector<double>> compute_batch(
        const std::vector<std::string>& texts) = 0;

private:
    std::string cache_key(const std::string& text) const;
    bool load_cached(const std::string& key, EmbeddingVector& out) const;
    void store_cached(const std::string& key, const EmbeddingVector& v) const;

    std::string provider_id_;
    int dimension_;
    std::filesystem::path cache_root_;
    std::unordered_map<std::string, EmbeddingVector> memo_;
    std::mutex mutex_;
};

// Deterministic stand-in: unit-norm vector derived from a content hash.
// Distinct texts get distinct directions; no network, no model weights.
class HashStubEmbedder : public EmbeddingProvider {
public:
    HashStubEmbedder(std::string provider_id, int dimension,
                     std::filesystem::path cache_root = {});

protected:
    std::vector<std::vector<double>> compute_batch(
        const std::vector<std::string>& texts) override;
};

// Remote embedding service: POST {"texts": [...]} -> {"vectors": [[...]]}.
class HttpEmbedder : public EmbeddingProvider {
public:
    HttpEmbedder(EmbeddingProviderConfig config,
                 std::filesystem::path cache_root = {});

protected:
    std::vector<std::vector<double>> compute_batch(
        const std::vector<std::string>& texts) override;

private:
    EmbeddingProviderConfig config_;
};

// Dispatches on the endpoint scheme: "stub://" builds the hash stub,
// http(s):// the remote client.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingProviderConfig& config,
    std::filesystem::path cache_root = {});

// Wire-format helpers, split out so the contract is testable without a
// live server.
nlohmann::json embedding_request_body(std::span<const std::string> texts);
std::vector<std::vector<double>> parse_embedding_response(
    const nlohmann::json& body, std::size_t expected_count, int dimension);

}  // namespace newsaudit::embed
