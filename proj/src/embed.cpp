#include "newsaudit/embed.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "newsaudit/rng.hpp"
#include "newsaudit/sha256.hpp"

namespace newsaudit::embed {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw EmbedError(msg); }

void check_same_dimension(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        fail("dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
             std::to_string(b.dimension()));
}

double norm(const EmbeddingVector& v) {
    double s = 0.0;
    for (double x : v.values) s += x * x;
    return std::sqrt(s);
}

struct SplitUrl {
    std::string host_port;  // scheme://host:port
    std::string path;
};

SplitUrl split_url(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        fail("endpoint '" + endpoint + "' has no scheme");
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    check_same_dimension(a, b);
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0)
        fail("cosine similarity undefined for zero vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        dot += a.values[i] * b.values[i];
    return dot / (na * nb);
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return 1.0 - cosine_similarity(a, b);
}

double manhattan_distance(std::span<const double> a,
                          std::span<const double> b) {
    if (a.size() != b.size())
        fail("dimension mismatch: " + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double percentile_rank(double value, std::span<const double> population) {
    if (population.empty())
        fail("percentile_rank requires a non-empty population");
    double below = 0.0;
    double ties = 0.0;
    for (double x : population) {
        if (x < value)
            below += 1.0;
        else if (x == value)
            ties += 1.0;
    }
    return (below + ties / 2.0) / static_cast<double>(population.size());
}

EmbeddingVector centroid(std::span<const EmbeddingVector> vectors) {
    if (vectors.empty()) fail("centroid requires a non-empty list");
    const std::size_t dim = vectors.front().dimension();
    EmbeddingVector out;
    out.values.assign(dim, 0.0);
    for (const auto& v : vectors) {
        if (v.dimension() != dim) fail("centroid requires uniform dimensions");
        for (std::size_t i = 0; i < dim; ++i) out.values[i] += v.values[i];
    }
    for (double& x : out.values) x /= static_cast<double>(vectors.size());
    return out;
}

nlohmann::json EmbeddingProviderConfig::to_json() const {
    return nlohmann::json{{"provider_id", provider_id},
                          {"endpoint", endpoint},
                          {"dimension", dimension},
                          {"timeout_ms", timeout_ms},
                          {"retry_limit", retry_limit},
                          {"backoff_base_ms", backoff_base_ms},
                          {"auth_env_var", auth_env_var}};
}

EmbeddingProviderConfig EmbeddingProviderConfig::from_json(
    const nlohmann::json& j) {
    EmbeddingProviderConfig c;
    if (j.contains("provider_id")) c.provider_id = j["provider_id"];
    if (j.contains("endpoint")) c.endpoint = j["endpoint"];
    if (j.contains("dimension")) c.dimension = j["dimension"];
    if (j.contains("timeout_ms")) c.timeout_ms = j["timeout_ms"];
    if (j.contains("retry_limit")) c.retry_limit = j["retry_limit"];
    if (j.contains("backoff_base_ms")) c.backoff_base_ms = j["backoff_base_ms"];
    if (j.contains("auth_env_var")) c.auth_env_var = j["auth_env_var"];
    if (c.dimension <= 0) fail("embedding dimension must be positive");
    return c;
}

EmbeddingProvider::EmbeddingProvider(std::string provider_id, int dimension,
                                     std::filesystem::path cache_root)
    : provider_id_(std::move(provider_id)),
      dimension_(dimension),
      cache_root_(std::move(cache_root)) {
    if (dimension_ <= 0) fail("embedding dimension must be positive");
}

std::string EmbeddingProvider::cache_key(const std::string& text) const {
    Sha256 h;
    h.update(provider_id_);
    h.update("\x1f", 1);
    h.update(text);
    return to_hex(h.finish());
}

bool EmbeddingProvider::load_cached(const std::string& key,
                                    EmbeddingVector& out) const {
    if (cache_root_.empty()) return false;
    const auto path = cache_root_ / provider_id_ / (key + ".json");
    std::ifstream in(path);
    if (!in.good()) return false;
    nlohmann::json j;
    try {
        in >> j;
        out.values = j.at("values").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
        return false;  // corrupt entry: recompute
    }
    return out.values.size() == static_cast<std::size_t>(dimension_);
}

void EmbeddingProvider::store_cached(const std::string& key,
                                     const EmbeddingVector& v) const {
    if (cache_root_.empty()) return;
    const auto dir = cache_root_ / provider_id_;
    std::filesystem::create_directories(dir);
    const auto path = dir / (key + ".json");
    const auto tmp = dir / (key + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << nlohmann::json{{"values", v.values}}.dump();
    }
    std::filesystem::rename(tmp, path);
}

EmbeddingVector EmbeddingProvider::embed_text(const std::string& text) {
    std::array<std::string, 1> one{text};
    return embed_many(one).front();
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_many(
    std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> missing_texts;

    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (texts[i].empty()) fail("cannot embed empty text");
            auto it = memo_.find(texts[i]);
            if (it != memo_.end()) {
                out[i] = it->second;
                continue;
            }
            EmbeddingVector cached;
            if (load_cached(cache_key(texts[i]), cached)) {
                memo_[texts[i]] = cached;
                out[i] = std::move(cached);
                continue;
            }
            missing.push_back(i);
            missing_texts.push_back(texts[i]);
        }
    }

    if (missing.empty()) return out;

    auto computed = compute_batch(missing_texts);
    if (computed.size() != missing_texts.size())
        fail("embedding provider returned " + std::to_string(computed.size()) +
             " vectors for " + std::to_string(missing_texts.size()) + " texts");

    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t k = 0; k < missing.size(); ++k) {
        if (computed[k].size() != static_cast<std::size_t>(dimension_))
            fail("embedding dimension mismatch: declared " +
                 std::to_string(dimension_) + ", got " +
                 std::to_string(computed[k].size()));
        EmbeddingVector v{std::move(computed[k])};
        store_cached(cache_key(missing_texts[k]), v);
        memo_[missing_texts[k]] = v;
        out[missing[k]] = std::move(v);
    }
    return out;
}

HashStubEmbedder::HashStubEmbedder(std::string provider_id, int dimension,
                                   std::filesystem::path cache_root)
    : EmbeddingProvider(std::move(provider_id), dimension,
                        std::move(cache_root)) {}

std::vector<std::vector<double>> HashStubEmbedder::compute_batch(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        SplitMix64 rng(sha256_seed(provider_id() + "\x1f" + text));
        std::vector<double> v(dimension());
        double ss = 0.0;
        for (double& x : v) {
            x = rng.next_symmetric();
            ss += x * x;
        }
        const double n = std::sqrt(ss);
        if (n > 0)
            for (double& x : v) x /= n;
        else
            v[0] = 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

HttpEmbedder::HttpEmbedder(EmbeddingProviderConfig config,
                           std::filesystem::path cache_root)
    : EmbeddingProvider(config.provider_id, config.dimension,
                        std::move(cache_root)),
      config_(std::move(config)) {}

std::vector<std::vector<double>> HttpEmbedder::compute_batch(
    const std::vector<std::string>& texts) {
    const auto url = split_url(config_.endpoint);
    httplib::Client client(url.host_port);
    client.set_connection_timeout(config_.timeout_ms / 1000,
                                  (config_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000,
                            (config_.timeout_ms % 1000) * 1000);
    if (!config_.auth_env_var.empty()) {
        const char* token = std::getenv(config_.auth_env_var.c_str());
        if (token == nullptr)
            fail("auth env var '" + config_.auth_env_var + "' is not set");
        client.set_bearer_token_auth(token);
    }

    const auto body =
        embedding_request_body(std::span<const std::string>(texts)).dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(
                config_.backoff_base_ms << (attempt - 1)));
        auto res = client.Post(url.path, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            return parse_embedding_response(nlohmann::json::parse(res->body),
                                            texts.size(), dimension());
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
        }
    }
    fail("embedding request to '" + config_.endpoint + "' failed after " +
         std::to_string(config_.retry_limit + 1) + " attempts: " + last_error);
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingProviderConfig& config, std::filesystem::path cache_root) {
    if (config.endpoint.rfind("stub://", 0) == 0)
        return std::make_unique<HashStubEmbedder>(
            config.provider_id, config.dimension, std::move(cache_root));
    if (config.endpoint.rfind("http://", 0) == 0 ||
        config.endpoint.rfind("https://", 0) == 0)
        return std::make_unique<HttpEmbedder>(config, std::move(cache_root));
    fail("unsupported embedding endpoint '" + config.endpoint + "'");
}

nlohmann::json embedding_request_body(std::span<const std::string> texts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : texts) arr.push_back(t);
    return nlohmann::json{{"texts", std::move(arr)}};
}

std::vector<std::vector<double>> parse_embedding_response(
    const nlohmann::json& body, std::size_t expected_count, int dimension) {
    const auto& vectors = body.at("vectors");
    if (!vectors.is_array() || vectors.size() != expected_count)
        fail("embedding response must carry one vector per input text");
    std::vector<std::vector<double>> out;
    out.reserve(expected_count);
    for (const auto& v : vectors) {
        auto values = v.get<std::vector<double>>();
        if (values.size() != static_cast<std::size_t>(dimension))
            fail("embedding response vector has dimension " +
                 std::to_string(values.size()) + ", expected " +
                 std::to_string(dimension));
        for (double x : values)
            if (!std::isfinite(x)) fail("embedding contains non-finite value");
        out.push_back(std::move(values));
    }
    return out;
}

}  // namespace newsaudit::embed
