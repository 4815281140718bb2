#pragma once

#include <compare>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace newsaudit::corpus {

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Audience { national, local, international, ethnic };
enum class Bias { right, right_center, neutral, left_center, left, none };
enum class Factuality {
    very_low,
    low,
    mixed,
    mostly_factual,
    high,
    very_high,
    none
};

const char* to_string(Audience a);
const char* to_string(Bias b);
const char* to_string(Factuality f);
Audience audience_from_string(const std::string& s);
Bias bias_from_string(const std::string& s);
Factuality factuality_from_string(const std::string& s);

struct Outlet {
    std::string name;
    Audience audience = Audience::national;
    Bias bias = Bias::none;
    Factuality factuality = Factuality::none;

    bool operator==(const Outlet&) const = default;
};

struct Article {
    std::string id;
    Outlet outlet;
    std::string original_headline;
    std::string body;
    std::string published_date;  // ISO-8601 calendar date, YYYY-MM-DD
    std::string url;

    bool operator==(const Article&) const = default;
};

// The three prompt dimensions. Their cartesian product is the 12-variant
// instruction matrix.
enum class Style { none, ap };
enum class Task { for_article, summarize };
enum class Characteristic { none, clear_unbiased, factual_informative };

struct PromptVariant {
    Style style = Style::none;
    Task task = Task::for_article;
    Characteristic characteristic = Characteristic::none;

    bool operator==(const PromptVariant&) const = default;

    // Canonical position in the style-major ordering (0..11). Stable across
    // runs; used for cache keys and output sorting.
    int index() const;
    static PromptVariant from_index(int index);

    // Compact token such as "ap.summarize.clear_unbiased" for filenames and
    // log lines.
    std::string token() const;
};

inline constexpr int kVariantCount = 12;

// All 12 variants in style-major order (style, then task, then
// characteristic).
std::vector<PromptVariant> all_prompt_variants();

// The exact instruction sentence for a variant. The "a"/"an" article is
// chosen by the first rendered word, so "AP-style" takes "an".
std::string render_instruction(const PromptVariant& v);

nlohmann::json to_json(const Article& a);
Article article_from_json(const nlohmann::json& j);

// Reads a UTF-8 line-delimited corpus file, one JSON article per line.
// Rejects duplicate ids, missing fields, and undeclared enum tokens; errors
// carry the offending line number.
std::vector<Article> load_corpus(const std::filesystem::path& path);

void save_corpus(const std::filesystem::path& path,
                 const std::vector<Article>& articles);

}  // namespace newsaudit::corpus
