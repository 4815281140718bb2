#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "newsaudit/metrics.hpp"

namespace newsaudit::rights {

class RightsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Rating { low, medium, high };

const char* to_string(Rating r);
Rating rating_from_string(const std::string& s);

enum class Right { access_to_information, freedom_of_thought };

const char* to_string(Right r);

// Rating bounds and contextual inputs. Scope and likelihood are computed
// from the metric bundles; scale and remediability are judgments supplied
// here and surfaced with explicit provenance.
struct ThresholdConfig {
    double likelihood_low_max = 0.10;
    double likelihood_med_max = 0.33;
    double scope_low_max = 0.10;
    double scope_med_max = 0.33;
    // Ethnicity-salience delta beyond which likelihood escalates to high.
    double identity_delta_high = 0.33;

    Rating ati_scale = Rating::medium;
    Rating fot_scale = Rating::high;
    std::string ati_remediability =
        "limited: headline-level corrections rarely reach first readers; "
        "apply editorial review before publication";
    std::string fot_remediability =
        "limited: initial framing effects persist after exposure";

    void validate() const;
    nlohmann::json to_json() const;
    static ThresholdConfig from_json(const nlohmann::json& j);
};

struct EvidenceItem {
    std::string metric;
    std::optional<double> value;
    std::string note;
};

struct RightRiskProfile {
    Right right = Right::access_to_information;
    Rating scale = Rating::low;
    Rating scope = Rating::low;
    Rating likelihood = Rating::low;
    std::string remediability;
    std::vector<EvidenceItem> evidence;
    std::string narrative;

    // Every rating must be backed by at least one evidence entry.
    void validate() const;
    nlohmann::json to_json() const;
};

// Maps a rate into low/medium/high against (low_max, med_max] bounds.
Rating rate_to_rating(double rate, double low_max, double med_max);

// Likelihood from the overall no-correction rate; scope from the mean
// identity-inclusion rate in non-correcting headlines.
RightRiskProfile assess_access_to_information(const metrics::AtiReport& ati,
                                              const ThresholdConfig& cfg);

// Likelihood is the worse of the amplification-rate rating and a high
// escalation when ethnicity salience shifts beyond identity_delta_high;
// scope is the worse of the shift-prevalence rating and a medium floor
// when identity deltas are common.
RightRiskProfile assess_freedom_of_thought(const metrics::FotReport& fot,
                                           const ThresholdConfig& cfg);

struct RunProvenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string corpus_hash;
    std::string lexicon_hash;
    std::string embedding_provider_id;
    std::string axis_hash;
    std::string timestamp;  // optional; excluded when empty

    nlohmann::json to_json() const;
};

// Renders the machine-readable audit report. Deterministic for identical
// inputs: key order is canonical and no clock is consulted.
nlohmann::json compose_report_json(
    const std::vector<RightRiskProfile>& profiles,
    const metrics::AtiReport& ati, const metrics::FotReport& fot,
    const ThresholdConfig& cfg, const RunProvenance& provenance);

// Plain-text rendering of the same content.
std::string compose_report_text(const nlohmann::json& report);

}  // namespace newsaudit::rights
