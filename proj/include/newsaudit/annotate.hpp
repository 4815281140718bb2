#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace newsaudit::annotate {

class AnnotateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ordinal political-lean rating. Numeric values order the scale so rank
// correlations can be computed directly.
enum class Partisanship : int {
    right = -2,
    right_center = -1,
    neutral = 0,
    left_center = 1,
    left = 2
};

const char* to_string(Partisanship p);
Partisanship partisanship_from_string(const std::string& s);

// Identifies one headline instance: a generated cell, or the original
// headline when model_id == "original" (variant/sample fixed to 0).
struct HeadlineRef {
    std::string article_id;
    std::string model_id;
    int variant_index = 0;
    int sample_index = 0;

    bool operator==(const HeadlineRef&) const = default;
};

inline constexpr int kBinaryQuestionCount = 16;
inline constexpr int kLabelDimensions = 14;
// The first two binary questions rate presentation style rather than
// content; they are excluded from label vectors.
inline constexpr int kStyleQuestionCount = 2;

struct AnnotationRecord {
    HeadlineRef headline_ref;
    std::string annotator_id;
    std::array<bool, kBinaryQuestionCount> binary_answers{};
    Partisanship partisanship = Partisanship::neutral;
    std::string free_text;  // stored verbatim, never interpreted
};

// 14-dimensional content descriptor used as regressor input.
struct LabelVector {
    std::array<double, kLabelDimensions> values{};

    bool operator==(const LabelVector&) const = default;
    auto operator<=>(const LabelVector&) const = default;
};

enum class CorrectionLabel {
    explicit_correction,
    implicit_correction,
    no_correction,
    non_engaging
};

const char* to_string(CorrectionLabel c);
CorrectionLabel correction_from_string(const std::string& s);

struct IdentityMentions {
    bool ethnicity = false;
    bool immigrant = false;
    bool migrant = false;

    bool operator==(const IdentityMentions&) const = default;
};

// Keyword lists driving the classifiers. Patterns are lowercase words or
// phrases; "a+b" requires every part to match somewhere in the text
// (co-occurrence), and single words also match a small set of inflected
// suffixes ("false" covers falsely/falsehoods).
struct LexiconConfig {
    std::vector<std::string> explicit_cues;
    std::vector<std::string> implicit_cues;
    std::vector<std::string> claim_cues;
    std::vector<std::string> ethnicity_terms;
    std::vector<std::string> immigrant_terms;
    std::vector<std::string> migrant_terms;
    std::vector<std::string> left_cues;
    std::vector<std::string> right_cues;

    // Shipped defaults, calibrated on the bundled gold headlines.
    static LexiconConfig defaults();

    void validate() const;

    nlohmann::json to_json() const;
    static LexiconConfig from_json(const nlohmann::json& j);
    static LexiconConfig load(const std::filesystem::path& path);
};

// Cohen's kappa over paired categorical labels: (p_o - p_e) / (1 - p_e)
// with chance agreement from the marginal products. Degenerate case where
// both raters always emit the same single category yields 1.
double cohen_kappa(std::span<const std::pair<int, int>> pairs);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;  // two-sided, t-approximation with n-2 dof
};

// Rank correlation with average ranks for ties. Requires n >= 3 and
// non-constant inputs.
SpearmanResult spearman_rho(std::span<const double> x,
                            std::span<const double> y);

// Priority rule: explicit cue > implicit cue > claim cue (no_correction);
// text that never touches the claim is non_engaging.
CorrectionLabel classify_correction(const std::string& text,
                                    const LexiconConfig& lexicon);

// Word-boundary identity-term detection. "immigrants" never sets the
// migrant flag; only standalone "migrant(s)" does.
IdentityMentions detect_identity(const std::string& text,
                                 const LexiconConfig& lexicon);

// (right hits - left hits) / (1 + total hits); 0 when no cues match.
double lexical_partisanship(const std::string& text,
                            const LexiconConfig& lexicon);

struct ClassifierScores {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when precision or recall had an empty denominator and was
    // defined as 0.
    bool degenerate = false;
};

// Confusion-matrix metrics for a declared positive class.
ClassifierScores evaluate_classifier(std::span<const int> predicted,
                                     std::span<const int> gold,
                                     int positive_class);

// Drops the two style questions; remaining 14 answers map to {0,1} in
// question order.
LabelVector to_label_vector(const AnnotationRecord& record);

nlohmann::json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

std::vector<AnnotationRecord> load_annotations(
    const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path,
                      std::span<const AnnotationRecord> records);

namespace detail {
// Lowercased alphanumeric tokens; apostrophes survive inside a word,
// hyphens and any other punctuation split.
std::vector<std::string> tokenize(const std::string& text);
// Regularized incomplete beta I_x(a, b), exposed for verification.
double regularized_incomplete_beta(double a, double b, double x);
}  // namespace detail

}  // namespace newsaudit::annotate
