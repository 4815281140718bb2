#include "newsaudit/annotate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace newsaudit::annotate {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw AnnotateError(msg); }

// Inflected suffixes accepted after a cue word.
constexpr std::array<std::string_view, 8> kStemSuffixes = {
    "s", "es", "d", "ed", "ing", "ly", "hood", "hoods"};

bool word_matches(const std::string& token, const std::string& word) {
    if (token == word) return true;
    if (token.size() <= word.size()) return false;
    if (token.compare(0, word.size(), word) != 0) return false;
    const std::string_view rest =
        std::string_view(token).substr(word.size());
    return std::find(kStemSuffixes.begin(), kStemSuffixes.end(), rest) !=
           kStemSuffixes.end();
}

struct CompiledPattern {
    // Conjunction of word sequences; every sequence must appear as a
    // contiguous token run.
    std::vector<std::vector<std::string>> conjuncts;
};

CompiledPattern compile_pattern(const std::string& pattern) {
    CompiledPattern out;
    std::string part;
    std::stringstream ss(pattern);
    while (std::getline(ss, part, '+')) {
        auto words = detail::tokenize(part);
        if (!words.empty()) out.conjuncts.push_back(std::move(words));
    }
    return out;
}

// Count of contiguous runs starting positions matching the word sequence.
int count_sequence(const std::vector<std::string>& tokens,
                   const std::vector<std::string>& words) {
    if (words.empty() || tokens.size() < words.size()) return 0;
    int count = 0;
    for (std::size_t i = 0; i + words.size() <= tokens.size(); ++i) {
        bool all = true;
        for (std::size_t k = 0; k < words.size(); ++k) {
            if (!word_matches(tokens[i + k], words[k])) {
                all = false;
                break;
            }
        }
        if (all) ++count;
    }
    return count;
}

bool pattern_matches(const std::vector<std::string>& tokens,
                     const CompiledPattern& p) {
    if (p.conjuncts.empty()) return false;
    for (const auto& seq : p.conjuncts)
        if (count_sequence(tokens, seq) == 0) return false;
    return true;
}

bool any_pattern_matches(const std::vector<std::string>& tokens,
                         const std::vector<std::string>& patterns) {
    for (const auto& raw : patterns)
        if (pattern_matches(tokens, compile_pattern(raw))) return true;
    return false;
}

// Occurrence count, summed over patterns. A conjunction counts the
// occurrences of its first part once all parts are present.
int count_hits(const std::vector<std::string>& tokens,
               const std::vector<std::string>& patterns) {
    int hits = 0;
    for (const auto& raw : patterns) {
        const auto p = compile_pattern(raw);
        if (!pattern_matches(tokens, p)) continue;
        hits += count_sequence(tokens, p.conjuncts.front());
    }
    return hits;
}

std::vector<std::string> require_string_list(const nlohmann::json& j,
                                             const char* field) {
    auto it = j.find(field);
    if (it == j.end())
        fail(std::string("lexicon missing list '") + field + "'");
    if (!it->is_array())
        fail(std::string("lexicon field '") + field + "' must be an array");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string())
            fail(std::string("lexicon field '") + field +
                 "' must contain strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // 1-based ranks; ties share the mean rank of the group
        const double rank = (static_cast<double>(i + 1) +
                             static_cast<double>(j + 1)) /
                            2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

namespace detail {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
        while (!cur.empty() && cur.back() == '\'') cur.pop_back();
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (c < 0x80 && std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (c == '\'') {
            if (!cur.empty()) cur += '\'';
        } else {
            flush();
        }
    }
    flush();
    return out;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) -
                         std::lgamma(b) + a * std::log(x) +
                         b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * beta_continued_fraction(a, b, x) / a;
    return 1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b;
}

}  // namespace detail

const char* to_string(Partisanship p) {
    switch (p) {
        case Partisanship::right: return "right";
        case Partisanship::right_center: return "right_center";
        case Partisanship::neutral: return "neutral";
        case Partisanship::left_center: return "left_center";
        case Partisanship::left: return "left";
    }
    fail("invalid partisanship value");
}

Partisanship partisanship_from_string(const std::string& s) {
    if (s == "right") return Partisanship::right;
    if (s == "right_center") return Partisanship::right_center;
    if (s == "neutral") return Partisanship::neutral;
    if (s == "left_center") return Partisanship::left_center;
    if (s == "left") return Partisanship::left;
    fail("unknown partisanship '" + s + "'");
}

const char* to_string(CorrectionLabel c) {
    switch (c) {
        case CorrectionLabel::explicit_correction: return "explicit";
        case CorrectionLabel::implicit_correction: return "implicit";
        case CorrectionLabel::no_correction: return "no_correction";
        case CorrectionLabel::non_engaging: return "non_engaging";
    }
    fail("invalid correction label");
}

CorrectionLabel correction_from_string(const std::string& s) {
    if (s == "explicit") return CorrectionLabel::explicit_correction;
    if (s == "implicit") return CorrectionLabel::implicit_correction;
    if (s == "no_correction") return CorrectionLabel::no_correction;
    if (s == "non_engaging") return CorrectionLabel::non_engaging;
    fail("unknown correction label '" + s + "'");
}

LexiconConfig LexiconConfig::defaults() {
    LexiconConfig lex;
    lex.explicit_cues = {"false",    "falsely", "falsehood", "lie",
                         "lies",     "lied",    "lying",     "not true",
                         "untrue",   "fact-check"};
    lex.implicit_cues = {"debunked",       "debunk",   "baseless",
                         "unsubstantiated", "unfounded", "deny",
                         "denies",          "denied",    "dismiss",
                         "dismissed",       "no evidence", "rumor",
                         "rumour"};
    lex.claim_cues = {"eat+pets", "eat+cats", "eat+dogs", "pet-eating",
                      "springfield controversy"};
    lex.ethnicity_terms = {"haitian"};
    lex.immigrant_terms = {"immigrant"};
    lex.migrant_terms = {"migrant"};
    lex.left_cues = {"racist", "xenophobic", "anti-immigrant", "far-right",
                     "extremist", "baseless"};
    lex.right_cues = {"illegal", "invasion", "open borders", "crime wave",
                      "radical left"};
    return lex;
}

void LexiconConfig::validate() const {
    struct Named {
        const char* name;
        const std::vector<std::string>& list;
    };
    const Named lists[] = {
        {"explicit_cues", explicit_cues},   {"implicit_cues", implicit_cues},
        {"claim_cues", claim_cues},         {"ethnicity_terms", ethnicity_terms},
        {"immigrant_terms", immigrant_terms}, {"migrant_terms", migrant_terms},
        {"left_cues", left_cues},           {"right_cues", right_cues}};
    for (const auto& [name, list] : lists) {
        if (list.empty())
            fail(std::string("lexicon list '") + name + "' must be non-empty");
        for (const auto& pattern : list) {
            for (unsigned char c : pattern) {
                if (c < 0x80 && std::isupper(c))
                    fail(std::string("lexicon pattern '") + pattern +
                         "' must be lowercase");
            }
        }
    }
}

nlohmann::json LexiconConfig::to_json() const {
    return nlohmann::json{{"explicit_cues", explicit_cues},
                          {"implicit_cues", implicit_cues},
                          {"claim_cues", claim_cues},
                          {"ethnicity_terms", ethnicity_terms},
                          {"immigrant_terms", immigrant_terms},
                          {"migrant_terms", migrant_terms},
                          {"left_cues", left_cues},
                          {"right_cues", right_cues}};
}

LexiconConfig LexiconConfig::from_json(const nlohmann::json& j) {
    LexiconConfig lex;
    lex.explicit_cues = require_string_list(j, "explicit_cues");
    lex.implicit_cues = require_string_list(j, "implicit_cues");
    lex.claim_cues = require_string_list(j, "claim_cues");
    lex.ethnicity_terms = require_string_list(j, "ethnicity_terms");
    lex.immigrant_terms = require_string_list(j, "immigrant_terms");
    lex.migrant_terms = require_string_list(j, "migrant_terms");
    lex.left_cues = require_string_list(j, "left_cues");
    lex.right_cues = require_string_list(j, "right_cues");
    lex.validate();
    return lex;
}

LexiconConfig LexiconConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) fail("cannot open lexicon file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail("lexicon parse error in '" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

double cohen_kappa(std::span<const std::pair<int, int>> pairs) {
    if (pairs.empty()) fail("cohen_kappa requires at least one pair");
    const double n = static_cast<double>(pairs.size());
    std::map<int, double> marginal_a;
    std::map<int, double> marginal_b;
    double agree = 0.0;
    for (const auto& [a, b] : pairs) {
        marginal_a[a] += 1.0;
        marginal_b[b] += 1.0;
        if (a == b) agree += 1.0;
    }
    const double p_o = agree / n;
    double p_e = 0.0;
    for (const auto& [cat, count_a] : marginal_a) {
        auto it = marginal_b.find(cat);
        if (it != marginal_b.end()) p_e += (count_a / n) * (it->second / n);
    }
    if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
    return (p_o - p_e) / (1.0 - p_e);
}

SpearmanResult spearman_rho(std::span<const double> x,
                            std::span<const double> y) {
    if (x.size() != y.size())
        fail("spearman_rho requires equal-length inputs");
    if (x.size() < 3) fail("spearman_rho requires at least 3 observations");

    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const std::size_t n = rx.size();
    const double mean = (static_cast<double>(n) + 1.0) / 2.0;

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        fail("spearman_rho undefined for constant input");

    SpearmanResult result;
    result.rho = sxy / std::sqrt(sxx * syy);
    // clamp tiny numeric overshoot
    result.rho = std::clamp(result.rho, -1.0, 1.0);

    const double nu = static_cast<double>(n) - 2.0;
    if (std::fabs(result.rho) >= 1.0) {
        result.p_value = 0.0;
    } else {
        const double t =
            result.rho * std::sqrt(nu / (1.0 - result.rho * result.rho));
        result.p_value =
            detail::regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
    }
    return result;
}

CorrectionLabel classify_correction(const std::string& text,
                                    const LexiconConfig& lexicon) {
    if (text.empty()) fail("classify_correction requires non-empty text");
    const auto tokens = detail::tokenize(text);
    if (any_pattern_matches(tokens, lexicon.explicit_cues))
        return CorrectionLabel::explicit_correction;
    if (any_pattern_matches(tokens, lexicon.implicit_cues))
        return CorrectionLabel::implicit_correction;
    if (any_pattern_matches(tokens, lexicon.claim_cues))
        return CorrectionLabel::no_correction;
    return CorrectionLabel::non_engaging;
}

IdentityMentions detect_identity(const std::string& text,
                                 const LexiconConfig& lexicon) {
    if (text.empty()) fail("detect_identity requires non-empty text");
    const auto tokens = detail::tokenize(text);
    IdentityMentions m;
    m.ethnicity = any_pattern_matches(tokens, lexicon.ethnicity_terms);
    m.immigrant = any_pattern_matches(tokens, lexicon.immigrant_terms);
    m.migrant = any_pattern_matches(tokens, lexicon.migrant_terms);
    return m;
}

double lexical_partisanship(const std::string& text,
                            const LexiconConfig& lexicon) {
    if (text.empty()) fail("lexical_partisanship requires non-empty text");
    const auto tokens = detail::tokenize(text);
    const int right = count_hits(tokens, lexicon.right_cues);
    const int left = count_hits(tokens, lexicon.left_cues);
    return static_cast<double>(right - left) /
           (1.0 + static_cast<double>(right + left));
}

ClassifierScores evaluate_classifier(std::span<const int> predicted,
                                     std::span<const int> gold,
                                     int positive_class) {
    if (predicted.size() != gold.size())
        fail("evaluate_classifier requires equal-length inputs");
    if (predicted.empty())
        fail("evaluate_classifier requires at least one item");

    double tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == positive_class;
        const bool g = gold[i] == positive_class;
        if (predicted[i] == gold[i]) correct += 1;
        if (p && g) tp += 1;
        if (p && !g) fp += 1;
        if (!p && g) fn += 1;
    }

    ClassifierScores s;
    s.accuracy = correct / static_cast<double>(predicted.size());
    if (tp + fp > 0) {
        s.precision = tp / (tp + fp);
    } else {
        s.precision = 0.0;
        s.degenerate = true;
    }
    if (tp + fn > 0) {
        s.recall = tp / (tp + fn);
    } else {
        s.recall = 0.0;
        s.degenerate = true;
    }
    s.f1 = (s.precision + s.recall > 0)
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

LabelVector to_label_vector(const AnnotationRecord& record) {
    LabelVector v;
    for (int i = 0; i < kLabelDimensions; ++i)
        v.values[i] =
            record.binary_answers[i + kStyleQuestionCount] ? 1.0 : 0.0;
    return v;
}

nlohmann::json to_json(const AnnotationRecord& r) {
    nlohmann::json j{
        {"headline_ref",
         {{"article_id", r.headline_ref.article_id},
          {"model_id", r.headline_ref.model_id},
          {"variant_index", r.headline_ref.variant_index},
          {"sample_index", r.headline_ref.sample_index}}},
        {"annotator_id", r.annotator_id},
        {"binary_answers", r.binary_answers},
        {"partisanship", to_string(r.partisanship)}};
    if (!r.free_text.empty()) j["free_text"] = r.free_text;
    return j;
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
    AnnotationRecord r;
    const auto& ref = j.at("headline_ref");
    r.headline_ref.article_id = ref.at("article_id").get<std::string>();
    r.headline_ref.model_id = ref.at("model_id").get<std::string>();
    r.headline_ref.variant_index = ref.at("variant_index").get<int>();
    r.headline_ref.sample_index = ref.at("sample_index").get<int>();
    r.annotator_id = j.at("annotator_id").get<std::string>();
    const auto& answers = j.at("binary_answers");
    if (!answers.is_array() || answers.size() != kBinaryQuestionCount)
        fail("binary_answers must contain exactly " +
             std::to_string(kBinaryQuestionCount) + " booleans");
    for (int i = 0; i < kBinaryQuestionCount; ++i)
        r.binary_answers[i] = answers[i].get<bool>();
    r.partisanship =
        partisanship_from_string(j.at("partisanship").get<std::string>());
    if (j.contains("free_text")) r.free_text = j["free_text"].get<std::string>();
    return r;
}

std::vector<AnnotationRecord> load_annotations(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good())
        fail("cannot open annotation file '" + path.string() + "'");
    std::vector<AnnotationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(
                annotation_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            fail(path.filename().string() + ":" + std::to_string(line_no) +
                 ": " + e.what());
        }
    }
    return records;
}

void save_annotations(const std::filesystem::path& path,
                      std::span<const AnnotationRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out.good())
        fail("cannot write annotation file '" + path.string() + "'");
    for (const auto& r : records) out << to_json(r).dump() << "\n";
}

}  // namespace newsaudit::annotate
