#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "newsaudit/annotate.hpp"
#include "newsaudit/axis.hpp"
#include "newsaudit/embed.hpp"

namespace newsaudit::metrics {

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Correction-handling rate triple over engaging headlines, plus the share
// of headlines that never touch the claim (kept out of the triple's
// denominator).
struct CorrectionRates {
    double no_correction = 0.0;
    double implicit_correction = 0.0;
    double explicit_correction = 0.0;
    double non_engaging = 0.0;
    std::size_t engaging_count = 0;
    std::size_t total_count = 0;
};

struct TermRates {
    double ethnicity = 0.0;
    double migrant = 0.0;
    double immigrant = 0.0;
};

// Mean generated-minus-original presence difference per term, in [-1, 1].
struct TermDeltas {
    double ethnicity = 0.0;
    double immigrant = 0.0;
    double migrant = 0.0;
};

struct ShiftRates {
    double amplification = 0.0;
    double flip = 0.0;
    std::size_t assessed = 0;
};

struct BehaviorProfile {
    double fidelity = 0.0;
    double framing_shift = 0.0;
    double diversity = 0.0;
    double tension = 0.0;
};

// Access-to-information metric bundle, keyed by model.
struct AtiReport {
    std::map<std::string, CorrectionRates> corrections;
    std::map<std::string, TermRates> identity_in_noncorrecting;
    std::vector<std::string> warnings;

    // Headline-weighted when per-model counts are available, otherwise the
    // unweighted model mean (all a published-table fixture can support).
    double overall_no_correction() const;
    double overall_non_engaging() const;
    double model_mean_no_correction() const;
    // Mean identity-inclusion rate across terms and models.
    double mean_identity_rate() const;

    void validate(double tolerance) const;
    nlohmann::json to_json() const;
    static AtiReport from_json(const nlohmann::json& j);
};

// Freedom-of-thought metric bundle, keyed by model.
struct FotReport {
    std::map<std::string, ShiftRates> shifts;
    std::map<std::string, TermDeltas> identity_delta;
    std::map<std::string, BehaviorProfile> behavior;
    std::map<std::string, double> partisanship_correlation;
    std::optional<double> overall_correlation;
    std::vector<std::string> warnings;

    double overall_amplification() const;
    double overall_flip() const;
    double mean_abs_ethnicity_delta() const;
    double mean_abs_delta() const;

    void validate() const;
    nlohmann::json to_json() const;
    static FotReport from_json(const nlohmann::json& j);
};

// Rates over engaging headlines per model; models with zero engaging
// headlines are dropped with a warning.
std::map<std::string, CorrectionRates> correction_rates(
    const std::map<std::string, std::vector<annotate::CorrectionLabel>>&
        labels_per_model,
    std::vector<std::string>* warnings = nullptr);

// Fraction of a model's no-correction headlines mentioning each term
// class. Models without no-correction headlines are absent from the result.
std::map<std::string, TermRates> identity_in_noncorrecting(
    const std::map<std::string,
                   std::vector<std::pair<annotate::CorrectionLabel,
                                         annotate::IdentityMentions>>>&
        headlines_per_model,
    std::vector<std::string>* warnings = nullptr);

// Pairs are (generated mentions, original-headline mentions).
TermDeltas identity_delta(
    std::span<const std::pair<annotate::IdentityMentions,
                              annotate::IdentityMentions>> pairs);

ShiftRates shift_rates(std::span<const axis::ShiftAssessment> assessments);

// Mean pairwise cosine distance within each article group of two or more
// embeddings, averaged over groups. Singleton groups are skipped with a
// warning.
double diversity(
    const std::map<std::string, std::vector<embed::EmbeddingVector>>&
        by_article,
    std::vector<std::string>* warnings = nullptr);

// Mean cosine similarity of (generated headline, article) embedding pairs.
double fidelity(std::span<const std::pair<embed::EmbeddingVector,
                                          embed::EmbeddingVector>> pairs);

// Cosine distance between the two difference vectors (generated - article)
// and (original - article), halved into [0, 1] and averaged. Triples where
// a headline embedding coincides with the article embedding are skipped.
double framing_shift(
    std::span<const std::tuple<embed::EmbeddingVector, embed::EmbeddingVector,
                               embed::EmbeddingVector>> triples,
    std::vector<std::string>* warnings = nullptr);

// Percentile rank of the original headline's distance to the generated-set
// centroid among the generated distances, averaged over articles.
double tension(
    const std::map<std::string, std::pair<embed::EmbeddingVector,
                                          std::vector<embed::EmbeddingVector>>>&
        by_article,
    std::vector<std::string>* warnings = nullptr);

// Spearman rho between paired original and generated scores.
double partisanship_correlation(
    std::span<const std::pair<double, double>> pairs);

// Reads a metric-table fixture (rates entered as published, so triples may
// carry rounding error up to a few 1e-3).
AtiReport load_reference_ati(const nlohmann::json& j);
FotReport load_reference_fot(const nlohmann::json& j);

}  // namespace newsaudit::metrics
