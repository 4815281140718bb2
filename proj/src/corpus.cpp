#include "newsaudit/corpus.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace newsaudit::corpus {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw CorpusError(msg); }

int days_in_month(int year, int month) {
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap =
            (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return days[month - 1];
}

void validate_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        fail("published_date '" + s + "' is not an ISO-8601 date (YYYY-MM-DD)");
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (s[i] < '0' || s[i] > '9')
            fail("published_date '" + s + "' is not an ISO-8601 date (YYYY-MM-DD)");
    const int year = std::stoi(s.substr(0, 4));
    const int month = std::stoi(s.substr(5, 2));
    const int day = std::stoi(s.substr(8, 2));
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month))
        fail("published_date '" + s + "' is out of range");
}

const nlohmann::json& require_field(const nlohmann::json& j,
                                    const char* field) {
    auto it = j.find(field);
    if (it == j.end()) fail(std::string("missing field '") + field + "'");
    return *it;
}

std::string require_string(const nlohmann::json& j, const char* field) {
    const auto& v = require_field(j, field);
    if (!v.is_string()) fail(std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

const char* to_string(Audience a) {
    switch (a) {
        case Audience::national: return "national";
        case Audience::local: return "local";
        case Audience::international: return "international";
        case Audience::ethnic: return "ethnic";
    }
    fail("invalid audience value");
}

const char* to_string(Bias b) {
    switch (b) {
        case Bias::right: return "right";
        case Bias::right_center: return "right_center";
        case Bias::neutral: return "neutral";
        case Bias::left_center: return "left_center";
        case Bias::left: return "left";
        case Bias::none: return "none";
    }
    fail("invalid bias value");
}

const char* to_string(Factuality f) {
    switch (f) {
        case Factuality::very_low: return "very_low";
        case Factuality::low: return "low";
        case Factuality::mixed: return "mixed";
        case Factuality::mostly_factual: return "mostly_factual";
        case Factuality::high: return "high";
        case Factuality::very_high: return "very_high";
        case Factuality::none: return "none";
    }
    fail("invalid factuality value");
}

Audience audience_from_string(const std::string& s) {
    if (s == "national") return Audience::national;
    if (s == "local") return Audience::local;
    if (s == "international") return Audience::international;
    if (s == "ethnic") return Audience::ethnic;
    fail("unknown audience '" + s +
         "' (expected national|local|international|ethnic)");
}

Bias bias_from_string(const std::string& s) {
    if (s == "right") return Bias::right;
    if (s == "right_center") return Bias::right_center;
    if (s == "neutral") return Bias::neutral;
    if (s == "left_center") return Bias::left_center;
    if (s == "left") return Bias::left;
    if (s == "none") return Bias::none;
    fail("unknown bias '" + s +
         "' (expected right|right_center|neutral|left_center|left|none)");
}

Factuality factuality_from_string(const std::string& s) {
    if (s == "very_low") return Factuality::very_low;
    if (s == "low") return Factuality::low;
    if (s == "mixed") return Factuality::mixed;
    if (s == "mostly_factual") return Factuality::mostly_factual;
    if (s == "high") return Factuality::high;
    if (s == "very_high") return Factuality::very_high;
    if (s == "none") return Factuality::none;
    fail("unknown factuality '" + s + "'");
}

int PromptVariant::index() const {
    return static_cast<int>(style) * 6 + static_cast<int>(task) * 3 +
           static_cast<int>(characteristic);
}

PromptVariant PromptVariant::from_index(int index) {
    if (index < 0 || index >= kVariantCount)
        fail("prompt variant index " + std::to_string(index) +
             " out of range [0, 12)");
    PromptVariant v;
    v.style = static_cast<Style>(index / 6);
    v.task = static_cast<Task>((index / 3) % 2);
    v.characteristic = static_cast<Characteristic>(index % 3);
    return v;
}

std::string PromptVariant::token() const {
    std::string out = style == Style::ap ? "ap" : "plain";
    out += task == Task::summarize ? ".summarize" : ".for_article";
    switch (characteristic) {
        case Characteristic::none: out += ".none"; break;
        case Characteristic::clear_unbiased: out += ".clear_unbiased"; break;
        case Characteristic::factual_informative:
            out += ".factual_informative";
            break;
    }
    return out;
}

std::vector<PromptVariant> all_prompt_variants() {
    std::vector<PromptVariant> out;
    out.reserve(kVariantCount);
    for (int i = 0; i < kVariantCount; ++i)
        out.push_back(PromptVariant::from_index(i));
    return out;
}

std::string render_instruction(const PromptVariant& v) {
    std::string rest;
    switch (v.characteristic) {
        case Characteristic::none: break;
        case Characteristic::clear_unbiased: rest += "clear, unbiased "; break;
        case Characteristic::factual_informative:
            rest += "factual, informative ";
            break;
    }
    if (v.style == Style::ap) rest += "AP-style ";
    rest += "headline ";
    rest += v.task == Task::summarize ? "that summarizes this news article:"
                                      : "for this news article:";

    const char first = static_cast<char>(std::tolower(rest.front()));
    const bool vowel = first == 'a' || first == 'e' || first == 'i' ||
                       first == 'o' || first == 'u';
    return std::string("Write ") + (vowel ? "an " : "a ") + rest;
}

nlohmann::json to_json(const Article& a) {
    return nlohmann::json{
        {"id", a.id},
        {"outlet",
         {{"name", a.outlet.name},
          {"audience", to_string(a.outlet.audience)},
          {"bias", to_string(a.outlet.bias)},
          {"factuality", to_string(a.outlet.factuality)}}},
        {"original_headline", a.original_headline},
        {"body", a.body},
        {"published_date", a.published_date},
        {"url", a.url}};
}

Article article_from_json(const nlohmann::json& j) {
    Article a;
    a.id = require_string(j, "id");
    if (a.id.empty()) fail("field 'id' must be non-empty");

    const auto& outlet = require_field(j, "outlet");
    if (!outlet.is_object()) fail("field 'outlet' must be an object");
    a.outlet.name = require_string(outlet, "name");
    if (a.outlet.name.empty()) fail("field 'outlet.name' must be non-empty");
    a.outlet.audience = audience_from_string(require_string(outlet, "audience"));
    a.outlet.bias = bias_from_string(require_string(outlet, "bias"));
    a.outlet.factuality =
        factuality_from_string(require_string(outlet, "factuality"));

    a.original_headline = require_string(j, "original_headline");
    if (a.original_headline.empty())
        fail("field 'original_headline' must be non-empty");
    a.body = require_string(j, "body");
    if (a.body.empty()) fail("field 'body' must be non-empty");
    a.published_date = require_string(j, "published_date");
    validate_date(a.published_date);
    a.url = require_string(j, "url");
    return a;
}

std::vector<Article> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good())
        fail("cannot open corpus file '" + path.string() + "'");

    std::vector<Article> articles;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(path.filename().string() + ":" + std::to_string(line_no) +
                 ": parse error: " + e.what());
        }
        try {
            Article a = article_from_json(j);
            if (!seen_ids.insert(a.id).second)
                fail("duplicate article id '" + a.id + "'");
            articles.push_back(std::move(a));
        } catch (const CorpusError& e) {
            fail(path.filename().string() + ":" + std::to_string(line_no) +
                 ": " + e.what());
        }
    }
    return articles;
}

void save_corpus(const std::filesystem::path& path,
                 const std::vector<Article>& articles) {
    std::ofstream out(path, std::ios::trunc);
    if (!out.good())
        fail("cannot write corpus file '" + path.string() + "'");
    for (const auto& a : articles) out << to_json(a).dump() << "\n";
}

}  // namespace newsaudit::corpus
