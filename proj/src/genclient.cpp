#include "newsaudit/genclient.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "httplib.h"

#include "newsaudit/rng.hpp"
#include "newsaudit/sha256.hpp"

namespace newsaudit::gen {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw GenError(msg); }

// Matching surrounding quote pairs recognized by the sanitizer. Curly
// variants are UTF-8 byte sequences.
struct QuotePair {
    std::string_view open;
    std::string_view close;
};

constexpr QuotePair kQuotePairs[] = {
    {"\"", "\""},
    {"'", "'"},
    {"\xe2\x80\x9c", "\xe2\x80\x9d"},  // curly double
    {"\xe2\x80\x98", "\xe2\x80\x99"},  // curly single
};

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool strip_one_quote_pair(std::string& s) {
    for (const auto& [open, close] : kQuotePairs) {
        if (s.size() > open.size() + close.size() &&
            s.compare(0, open.size(), open) == 0 &&
            s.compare(s.size() - close.size(), close.size(), close) == 0) {
            s = s.substr(open.size(),
                         s.size() - open.size() - close.size());
            return true;
        }
    }
    return false;
}

bool ends_sentence(const std::string& line) {
    // ignore trailing quotes/space when looking for the terminator
    for (auto it = line.rbegin(); it != line.rend(); ++it) {
        const char c = *it;
        if (std::isspace(static_cast<unsigned char>(c)) || c == '"' ||
            c == '\'')
            continue;
        return c == '.' || c == '!' || c == '?';
    }
    return false;
}

struct SplitUrl {
    std::string host_port;
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

// Deterministic in-tree provider. Picks a headline skeleton and a variation
// tag from a hash of (model, prompt, sample), covering the correction and
// identity categories the downstream classifiers care about.
class StubProvider : public HeadlineProvider {
public:
    explicit StubProvider(ProviderDescriptor descriptor)
        : descriptor_(std::move(descriptor)) {}

    std::string generate(const std::string& prompt,
                         int sample_index) override {
        static const char* kTemplates[] = {
            "Officials Debunk False Pet-Eating Rumor In Springfield",
            "Trump Falsely Claims Haitian Immigrants Are Eating Pets",
            "Ohio Leaders Dismiss Pet-Eating Rumor As Baseless",
            "Trump Repeats Claim That Migrants Are Eating Pets In Ohio",
            "Springfield Debate Puts Immigrant Community In Spotlight",
            "Residents React As National Debate Reaches Springfield",
        };
        const std::string key = descriptor_.model_id + "\x1f" + prompt +
                                "\x1f" + std::to_string(sample_index);
        SplitMix64 rng(sha256_seed(key));
        const auto pick = rng.next_below(std::size(kTemplates));
        char tag[16];
        std::snprintf(tag, sizeof(tag), "%06llx",
                      static_cast<unsigned long long>(rng.next() & 0xffffff));
        return std::string("\"") + kTemplates[pick] + " [" + tag + "]\"\n";
    }

private:
    ProviderDescriptor descriptor_;
};

class FailingStubProvider : public HeadlineProvider {
public:
    std::string generate(const std::string&, int) override {
        fail("stub transport failure");
    }
};

// Returns multi-sentence commentary that the sanitizer must reject;
// exercises the rejection path end to end.
class RejectingStubProvider : public HeadlineProvider {
public:
    std::string generate(const std::string&, int sample_index) override {
        return "Here is a headline option.\nOption " +
               std::to_string(sample_index) +
               " covers the story.\nLet me know if you want another.";
    }
};

class HttpProvider : public HeadlineProvider {
public:
    explicit HttpProvider(ProviderDescriptor descriptor)
        : descriptor_(std::move(descriptor)) {}

    std::string generate(const std::string& prompt, int) override {
        const auto url = split_url(descriptor_.endpoint);
        httplib::Client client(url.host_port);
        client.set_connection_timeout(descriptor_.timeout_ms / 1000,
                                      (descriptor_.timeout_ms % 1000) * 1000);
        client.set_read_timeout(descriptor_.timeout_ms / 1000,
                                (descriptor_.timeout_ms % 1000) * 1000);
        if (!descriptor_.auth_env_var.empty()) {
            const char* token = std::getenv(descriptor_.auth_env_var.c_str());
            if (token == nullptr)
                fail("auth env var '" + descriptor_.auth_env_var +
                     "' is not set");
            client.set_bearer_token_auth(token);
        }
        const auto body = provider_request_body(descriptor_, prompt).dump();
        auto res = client.Post(url.path, body, "application/json");
        if (!res)
            fail("transport error: " + httplib::to_string(res.error()));
        if (res->status != 200)
            fail("HTTP status " + std::to_string(res->status));
        try {
            return parse_provider_response(nlohmann::json::parse(res->body));
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("bad response body: ") + e.what());
        }
    }

private:
    ProviderDescriptor descriptor_;
};

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace

void ProviderDescriptor::validate() const {
    if (model_id.empty()) fail("provider model_id must be non-empty");
    if (endpoint.empty()) fail("provider endpoint must be non-empty");
    if (max_parallel < 1) fail("max_parallel must be at least 1");
    if (samples_per_cell < 1) fail("samples_per_cell must be at least 1");
    if (timeout_ms <= 0) fail("timeout_ms must be positive");
    if (retry_limit < 0) fail("retry_limit must be non-negative");
    if (backoff_base_ms < 0) fail("backoff_base_ms must be non-negative");
}

nlohmann::json ProviderDescriptor::to_json() const {
    return nlohmann::json{{"model_id", model_id},
                          {"endpoint", endpoint},
                          {"auth_env_var", auth_env_var},
                          {"max_parallel", max_parallel},
                          {"timeout_ms", timeout_ms},
                          {"samples_per_cell", samples_per_cell},
                          {"retry_limit", retry_limit},
                          {"backoff_base_ms", backoff_base_ms},
                          {"max_tokens", max_tokens},
                          {"options", options}};
}

ProviderDescriptor ProviderDescriptor::from_json(const nlohmann::json& j) {
    ProviderDescriptor d;
    d.model_id = j.at("model_id").get<std::string>();
    d.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("auth_env_var")) d.auth_env_var = j["auth_env_var"];
    if (j.contains("max_parallel")) d.max_parallel = j["max_parallel"];
    if (j.contains("timeout_ms")) d.timeout_ms = j["timeout_ms"];
    if (j.contains("samples_per_cell"))
        d.samples_per_cell = j["samples_per_cell"];
    if (j.contains("retry_limit")) d.retry_limit = j["retry_limit"];
    if (j.contains("backoff_base_ms")) d.backoff_base_ms = j["backoff_base_ms"];
    if (j.contains("max_tokens")) d.max_tokens = j["max_tokens"];
    if (j.contains("options")) d.options = j["options"];
    d.validate();
    return d;
}

std::string build_prompt(const corpus::PromptVariant& variant,
                         const corpus::Article& article) {
    if (article.body.empty())
        fail("article '" + article.id + "' has an empty body");
    std::string prompt = corpus::render_instruction(variant);
    prompt += "\n";
    prompt += article.body;
    prompt += "\n";
    prompt += kVerbatimTrailer;
    return prompt;
}

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::empty: return "empty";
        case RejectReason::too_long: return "too_long";
        case RejectReason::multiline_commentary: return "multiline_commentary";
    }
    fail("invalid reject reason");
}

SanitizeResult sanitize_response(const std::string& raw) {
    std::string s = trim(raw);
    while (strip_one_quote_pair(s)) s = trim(s);

    // split into non-blank lines before collapsing
    std::vector<std::string> lines;
    std::string cur;
    for (char c : s) {
        if (c == '\n' || c == '\r') {
            cur = trim(cur);
            if (!cur.empty()) lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cur = trim(cur);
    if (!cur.empty()) lines.push_back(cur);

    if (lines.empty()) return {std::nullopt, RejectReason::empty};

    std::string collapsed;
    int sentence_lines = 0;
    for (const auto& line : lines) {
        if (!collapsed.empty()) collapsed += ' ';
        collapsed += line;
        if (ends_sentence(line)) ++sentence_lines;
    }

    if (collapsed.size() > kMaxHeadlineLength)
        return {std::nullopt, RejectReason::too_long};
    if (sentence_lines > 1)
        return {std::nullopt, RejectReason::multiline_commentary};
    return {collapsed, RejectReason::empty};
}

nlohmann::json to_json(const GeneratedHeadline& h) {
    return nlohmann::json{{"article_id", h.article_id},
                          {"model_id", h.model_id},
                          {"variant_index", h.variant.index()},
                          {"sample_index", h.sample_index},
                          {"text", h.text},
                          {"raw_response", h.raw_response},
                          {"created_at", h.created_at}};
}

GeneratedHeadline headline_from_json(const nlohmann::json& j) {
    GeneratedHeadline h;
    h.article_id = j.at("article_id").get<std::string>();
    h.model_id = j.at("model_id").get<std::string>();
    h.variant =
        corpus::PromptVariant::from_index(j.at("variant_index").get<int>());
    h.sample_index = j.at("sample_index").get<int>();
    h.text = j.at("text").get<std::string>();
    h.raw_response = j.at("raw_response").get<std::string>();
    h.created_at = j.at("created_at").get<std::string>();
    return h;
}

std::vector<GeneratedHeadline> load_headlines(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good())
        fail("cannot open headline file '" + path.string() + "'");
    std::vector<GeneratedHeadline> out;
    std::set<std::tuple<std::string, std::string, int, int>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(headline_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            fail(path.filename().string() + ":" + std::to_string(line_no) +
                 ": " + e.what());
        }
        const auto& h = out.back();
        if (!seen.insert({h.article_id, h.model_id, h.variant.index(),
                          h.sample_index})
                 .second)
            fail(path.filename().string() + ":" + std::to_string(line_no) +
                 ": duplicate headline cell (" + h.article_id + ", " +
                 h.model_id + ", " + std::to_string(h.variant.index()) +
                 ", " + std::to_string(h.sample_index) + ")");
    }
    return out;
}

void save_headlines(const std::filesystem::path& path,
                    std::span<const GeneratedHeadline> headlines) {
    std::ofstream out(path, std::ios::trunc);
    if (!out.good())
        fail("cannot write headline file '" + path.string() + "'");
    for (const auto& h : headlines) out << to_json(h).dump() << "\n";
}

std::unique_ptr<HeadlineProvider> make_provider(
    const ProviderDescriptor& descriptor) {
    descriptor.validate();
    if (descriptor.endpoint.rfind("stub-fail://", 0) == 0)
        return std::make_unique<FailingStubProvider>();
    if (descriptor.endpoint.rfind("stub-reject://", 0) == 0)
        return std::make_unique<RejectingStubProvider>();
    if (descriptor.endpoint.rfind("stub://", 0) == 0)
        return std::make_unique<StubProvider>(descriptor);
    if (descriptor.endpoint.rfind("http://", 0) == 0 ||
        descriptor.endpoint.rfind("https://", 0) == 0)
        return std::make_unique<HttpProvider>(descriptor);
    fail("unsupported provider endpoint '" + descriptor.endpoint + "'");
}

GenerationCache::GenerationCache(std::filesystem::path root)
    : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::string GenerationCache::cell_key(const std::string& model_id,
                                      const std::string& article_id,
                                      const corpus::PromptVariant& variant,
                                      int sample_index,
                                      const std::string& prompt) {
    Sha256 h;
    for (const auto& part :
         {model_id, article_id, std::to_string(variant.index()),
          std::to_string(sample_index), prompt}) {
        h.update(part);
        h.update("\x1f", 1);
    }
    return to_hex(h.finish());
}

std::filesystem::path GenerationCache::cell_path(
    const std::string& model_id, const std::string& article_id,
    const corpus::PromptVariant& variant, int sample_index,
    const std::string& prompt) const {
    const auto key =
        cell_key(model_id, article_id, variant, sample_index, prompt);
    char name[64];
    std::snprintf(name, sizeof(name), "v%02d_s%02d_%.16s.json",
                  variant.index(), sample_index, key.c_str());
    return root_ / model_id / article_id / name;
}

std::optional<GenerationCache::Entry> GenerationCache::lookup(
    const std::string& model_id, const std::string& article_id,
    const corpus::PromptVariant& variant, int sample_index,
    const std::string& prompt) const {
    const auto path =
        cell_path(model_id, article_id, variant, sample_index, prompt);
    std::ifstream in(path);
    if (!in.good()) return std::nullopt;
    try {
        nlohmann::json j;
        in >> j;
        return Entry{j.at("raw_response").get<std::string>(),
                     j.at("created_at").get<std::string>()};
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;  // corrupt entry: regenerate
    }
}

void GenerationCache::store(const std::string& model_id,
                            const std::string& article_id,
                            const corpus::PromptVariant& variant,
                            int sample_index, const std::string& prompt,
                            const Entry& entry) const {
    const auto path =
        cell_path(model_id, article_id, variant, sample_index, prompt);
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.parent_path() /
                     (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << nlohmann::json{{"model_id", model_id},
                              {"article_id", article_id},
                              {"variant_index", variant.index()},
                              {"sample_index", sample_index},
                              {"prompt_sha256", sha256_hex(prompt)},
                              {"raw_response", entry.raw_response},
                              {"created_at", entry.created_at}}
                   .dump();
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json to_json(const CellFailure& f) {
    return nlohmann::json{{"article_id", f.article_id},
                          {"model_id", f.model_id},
                          {"variant_index", f.variant_index},
                          {"sample_index", f.sample_index},
                          {"kind", f.kind},
                          {"detail", f.detail}};
}

GenerationOutcome generate_matrix(
    std::span<const corpus::Article> articles,
    std::span<const ProviderDescriptor> providers,
    std::span<const corpus::PromptVariant> variants,
    const GenerationCache* cache) {
    for (const auto& d : providers) {
        d.validate();
        const bool remote = d.endpoint.rfind("http://", 0) == 0 ||
                            d.endpoint.rfind("https://", 0) == 0;
        if (remote && !d.auth_env_var.empty() &&
            std::getenv(d.auth_env_var.c_str()) == nullptr)
            fail("auth env var '" + d.auth_env_var + "' required by '" +
                 d.model_id + "' is not set");
    }

    struct Cell {
        const corpus::Article* article;
        corpus::PromptVariant variant;
        int sample_index;
    };

    GenerationOutcome outcome;
    std::atomic<std::size_t> provider_calls{0};
    std::atomic<std::size_t> cache_hits{0};

    for (const auto& descriptor : providers) {
        auto provider = make_provider(descriptor);

        std::vector<Cell> cells;
        for (const auto& article : articles)
            for (const auto& variant : variants)
                for (int s = 0; s < descriptor.samples_per_cell; ++s)
                    cells.push_back({&article, variant, s});

        std::vector<std::optional<GeneratedHeadline>> slots(cells.size());
        std::vector<std::optional<CellFailure>> failures(cells.size());
        std::atomic<std::size_t> next{0};

        auto process_cell = [&](std::size_t i, const Cell& cell) {
            const std::string prompt =
                build_prompt(cell.variant, *cell.article);

            std::string raw;
            std::string created_at;
            bool have_raw = false;
            if (cache) {
                if (auto hit = cache->lookup(
                        descriptor.model_id, cell.article->id, cell.variant,
                        cell.sample_index, prompt)) {
                    raw = hit->raw_response;
                    created_at = hit->created_at;
                    have_raw = true;
                    cache_hits.fetch_add(1);
                }
            }

            if (!have_raw) {
                std::string last_error;
                for (int attempt = 0; attempt <= descriptor.retry_limit;
                     ++attempt) {
                    if (attempt > 0 && descriptor.backoff_base_ms > 0)
                        std::this_thread::sleep_for(
                            std::chrono::milliseconds(
                                descriptor.backoff_base_ms << (attempt - 1)));
                    try {
                        provider_calls.fetch_add(1);
                        raw = provider->generate(prompt, cell.sample_index);
                        have_raw = true;
                        break;
                    } catch (const GenError& e) {
                        last_error = e.what();
                    }
                }
                if (!have_raw) {
                    failures[i] = CellFailure{
                        cell.article->id, descriptor.model_id,
                        cell.variant.index(), cell.sample_index, "transport",
                        last_error};
                    return;
                }
                // Deterministic stamp for the deterministic providers.
                created_at = descriptor.endpoint.rfind("stub", 0) == 0
                                 ? "1970-01-01T00:00:00Z"
                                 : now_iso8601();
                if (cache)
                    cache->store(descriptor.model_id, cell.article->id,
                                 cell.variant, cell.sample_index, prompt,
                                 {raw, created_at});
            }

            const auto sanitized = sanitize_response(raw);
            if (!sanitized.accepted()) {
                failures[i] = CellFailure{
                    cell.article->id, descriptor.model_id,
                    cell.variant.index(), cell.sample_index,
                    to_string(sanitized.reason), "response rejected"};
                return;
            }

            GeneratedHeadline h;
            h.article_id = cell.article->id;
            h.model_id = descriptor.model_id;
            h.variant = cell.variant;
            h.sample_index = cell.sample_index;
            h.text = *sanitized.text;
            h.raw_response = raw;
            h.created_at = created_at;
            slots[i] = std::move(h);
        };

        // Workers never leak exceptions; anything unexpected lands in the
        // failure report for that cell.
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                const Cell& cell = cells[i];
                try {
                    process_cell(i, cell);
                } catch (const std::exception& e) {
                    failures[i] = CellFailure{
                        cell.article->id, descriptor.model_id,
                        cell.variant.index(), cell.sample_index, "internal",
                        e.what()};
                }
            }
        };

        const int thread_count = std::max(
            1, std::min<int>(descriptor.max_parallel,
                             static_cast<int>(cells.size())));
        if (thread_count == 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            threads.reserve(thread_count);
            for (int t = 0; t < thread_count; ++t)
                threads.emplace_back(worker);
            for (auto& t : threads) t.join();
        }

        for (auto& slot : slots)
            if (slot) outcome.headlines.push_back(std::move(*slot));
        for (auto& f : failures)
            if (f) outcome.failures.push_back(std::move(*f));
    }

    std::sort(outcome.headlines.begin(), outcome.headlines.end(),
              [](const GeneratedHeadline& a, const GeneratedHeadline& b) {
                  return std::make_tuple(a.article_id, a.model_id,
                                         a.variant.index(), a.sample_index) <
                         std::make_tuple(b.article_id, b.model_id,
                                         b.variant.index(), b.sample_index);
              });
    std::sort(outcome.failures.begin(), outcome.failures.end(),
              [](const CellFailure& a, const CellFailure& b) {
                  return std::tie(a.article_id, a.model_id, a.variant_index,
                                  a.sample_index) <
                         std::tie(b.article_id, b.model_id, b.variant_index,
                                  b.sample_index);
              });
    outcome.provider_calls = provider_calls.load();
    outcome.cache_hits = cache_hits.load();
    return outcome;
}

nlohmann::json provider_request_body(const ProviderDescriptor& descriptor,
                                     const std::string& prompt) {
    nlohmann::json body{{"model", descriptor.model_id},
                        {"prompt", prompt},
                        {"max_tokens", descriptor.max_tokens}};
    for (const auto& [key, value] : descriptor.options.items())
        body[key] = value;
    return body;
}

std::string parse_provider_response(const nlohmann::json& body) {
    if (!body.contains("text") || !body["text"].is_string())
        fail("provider response missing string field 'text'");
    return body["text"].get<std::string>();
}

}  // namespace newsaudit::gen
