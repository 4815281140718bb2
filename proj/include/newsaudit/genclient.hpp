#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "newsaudit/corpus.hpp"

namespace newsaudit::gen {

class GenError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fixed trailer appended to every prompt.
inline constexpr std::string_view kVerbatimTrailer =
    "Return only the headline text, verbatim, with no quotation marks or "
    "commentary.";

inline constexpr std::size_t kMaxHeadlineLength = 300;

struct ProviderDescriptor {
    std::string model_id;
    // Scheme selects the adapter: stub:// (deterministic), stub-fail://
    // (always errors, for failure-path tests), http(s)://.
    std::string endpoint;
    std::string auth_env_var;
    int max_parallel = 4;
    int timeout_ms = 30000;
    int samples_per_cell = 10;
    int retry_limit = 3;
    int backoff_base_ms = 250;
    int max_tokens = 64;
    // Provider-opaque extras forwarded verbatim in the request body.
    nlohmann::json options = nlohmann::json::object();

    void validate() const;
    nlohmann::json to_json() const;
    static ProviderDescriptor from_json(const nlohmann::json& j);
};

// Rendered instruction + article body + verbatim trailer.
std::string build_prompt(const corpus::PromptVariant& variant,
                         const corpus::Article& article);

enum class RejectReason { empty, too_long, multiline_commentary };

const char* to_string(RejectReason r);

struct SanitizeResult {
    std::optional<std::string> text;
    RejectReason reason = RejectReason::empty;

    bool accepted() const { return text.has_value(); }
};

// Strips surrounding quotes and whitespace and collapses the response to a
// single line. Rejects empty results, results over kMaxHeadlineLength, and
// responses whose original lines end more than one sentence (commentary).
SanitizeResult sanitize_response(const std::string& raw);

struct GeneratedHeadline {
    std::string article_id;
    std::string model_id;
    corpus::PromptVariant variant;
    int sample_index = 0;
    std::string text;
    std::string raw_response;
    std::string created_at;

    bool operator==(const GeneratedHeadline&) const = default;
};

nlohmann::json to_json(const GeneratedHeadline& h);
GeneratedHeadline headline_from_json(const nlohmann::json& j);
std::vector<GeneratedHeadline> load_headlines(
    const std::filesystem::path& path);
void save_headlines(const std::filesystem::path& path,
                    std::span<const GeneratedHeadline> headlines);

class HeadlineProvider {
public:
    virtual ~HeadlineProvider() = default;
    // Throws GenError on transport failure. sample_index lets the
    // deterministic stub vary across samples the way a sampling model
    // would; remote adapters ignore it.
    virtual std::string generate(const std::string& prompt,
                                 int sample_index) = 0;
};

std::unique_ptr<HeadlineProvider> make_provider(
    const ProviderDescriptor& descriptor);

// One file per cell under root/model_id/article_id/. The key hashes every
// input that shapes the response, so a hit is only possible for an
// identical request.
class GenerationCache {
public:
    explicit GenerationCache(std::filesystem::path root);

    struct Entry {
        std::string raw_response;
        std::string created_at;
    };

    static std::string cell_key(const std::string& model_id,
                                const std::string& article_id,
                                const corpus::PromptVariant& variant,
                                int sample_index, const std::string& prompt);

    std::optional<Entry> lookup(const std::string& model_id,
                                const std::string& article_id,
                                const corpus::PromptVariant& variant,
                                int sample_index,
                                const std::string& prompt) const;

    void store(const std::string& model_id, const std::string& article_id,
               const corpus::PromptVariant& variant, int sample_index,
               const std::string& prompt, const Entry& entry) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path cell_path(const std::string& model_id,
                                    const std::string& article_id,
                                    const corpus::PromptVariant& variant,
                                    int sample_index,
                                    const std::string& prompt) const;

    std::filesystem::path root_;
};

struct CellFailure {
    std::string article_id;
    std::string model_id;
    int variant_index = 0;
    int sample_index = 0;
    std::string kind;  // "transport" or a rejection reason
    std::string detail;
};

nlohmann::json to_json(const CellFailure& f);

struct GenerationOutcome {
    std::vector<GeneratedHeadline> headlines;  // sorted, deterministic
    std::vector<CellFailure> failures;         // sorted like headlines
    std::size_t provider_calls = 0;
    std::size_t cache_hits = 0;
};

// Walks the article x provider x variant x sample matrix. Requests may run
// concurrently up to each provider's max_parallel; results are returned in
// (article_id, model_id, variant, sample) order regardless of completion
// order. Transport errors are retried with exponential backoff, then
// recorded as cell failures while the run continues.
GenerationOutcome generate_matrix(
    std::span<const corpus::Article> articles,
    std::span<const ProviderDescriptor> providers,
    std::span<const corpus::PromptVariant> variants,
    const GenerationCache* cache = nullptr);

// Wire-format helpers for the POST {model, prompt, max_tokens} -> {text}
// contract.
nlohmann::json provider_request_body(const ProviderDescriptor& descriptor,
                                     const std::string& prompt);
std::string parse_provider_response(const nlohmann::json& body);

}  // namespace newsaudit::gen
