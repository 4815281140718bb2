#include "newsaudit/rights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace newsaudit::rights {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw RightsError(msg); }

Rating worst(Rating a, Rating b) { return std::max(a, b); }

std::string bounds_note(double low_max, double med_max) {
    std::ostringstream os;
    os << "<=" << low_max << " low, <=" << med_max << " medium, else high";
    return os.str();
}

std::string format_value(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

const char* to_string(Rating r) {
    switch (r) {
        case Rating::low: return "low";
        case Rating::medium: return "medium";
        case Rating::high: return "high";
    }
    fail("invalid rating");
}

Rating rating_from_string(const std::string& s) {
    if (s == "low") return Rating::low;
    if (s == "medium") return Rating::medium;
    if (s == "high") return Rating::high;
    fail("unknown rating '" + s + "' (expected low|medium|high)");
}

const char* to_string(Right r) {
    switch (r) {
        case Right::access_to_information: return "access_to_information";
        case Right::freedom_of_thought: return "freedom_of_thought";
    }
    fail("invalid right");
}

void ThresholdConfig::validate() const {
    auto check_bounds = [](double low, double med, const char* what) {
        if (!(low > 0.0 && low < 1.0 && med > 0.0 && med < 1.0))
            fail(std::string(what) + " bounds must lie in (0, 1)");
        if (!(low < med))
            fail(std::string(what) + " low bound must be below medium bound");
    };
    check_bounds(likelihood_low_max, likelihood_med_max, "likelihood");
    check_bounds(scope_low_max, scope_med_max, "scope");
    if (identity_delta_high <= 0.0 || identity_delta_high >= 1.0)
        fail("identity_delta_high must lie in (0, 1)");
}

nlohmann::json ThresholdConfig::to_json() const {
    return nlohmann::json{{"likelihood_low_max", likelihood_low_max},
                          {"likelihood_med_max", likelihood_med_max},
                          {"scope_low_max", scope_low_max},
                          {"scope_med_max", scope_med_max},
                          {"identity_delta_high", identity_delta_high},
                          {"ati_scale", to_string(ati_scale)},
                          {"fot_scale", to_string(fot_scale)},
                          {"ati_remediability", ati_remediability},
                          {"fot_remediability", fot_remediability}};
}

ThresholdConfig ThresholdConfig::from_json(const nlohmann::json& j) {
    ThresholdConfig c;
    if (j.contains("likelihood_low_max"))
        c.likelihood_low_max = j["likelihood_low_max"];
    if (j.contains("likelihood_med_max"))
        c.likelihood_med_max = j["likelihood_med_max"];
    if (j.contains("scope_low_max")) c.scope_low_max = j["scope_low_max"];
    if (j.contains("scope_med_max")) c.scope_med_max = j["scope_med_max"];
    if (j.contains("identity_delta_high"))
        c.identity_delta_high = j["identity_delta_high"];
    if (j.contains("ati_scale"))
        c.ati_scale = rating_from_string(j["ati_scale"]);
    if (j.contains("fot_scale"))
        c.fot_scale = rating_from_string(j["fot_scale"]);
    if (j.contains("ati_remediability"))
        c.ati_remediability = j["ati_remediability"];
    if (j.contains("fot_remediability"))
        c.fot_remediability = j["fot_remediability"];
    c.validate();
    return c;
}

void RightRiskProfile::validate() const {
    if (evidence.empty())
        fail("risk profile must carry at least one evidence entry");
    if (remediability.empty())
        fail("risk profile must carry a remediability note");
}

nlohmann::json RightRiskProfile::to_json() const {
    validate();
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : evidence) {
        nlohmann::json item{{"metric", e.metric}, {"note", e.note}};
        if (e.value) item["value"] = *e.value;
        ev.push_back(std::move(item));
    }
    return nlohmann::json{{"right", to_string(right)},
                          {"scale", to_string(scale)},
                          {"scope", to_string(scope)},
                          {"likelihood", to_string(likelihood)},
                          {"remediability", remediability},
                          {"evidence", std::move(ev)},
                          {"narrative", narrative}};
}

Rating rate_to_rating(double rate, double low_max, double med_max) {
    if (rate <= low_max) return Rating::low;
    if (rate <= med_max) return Rating::medium;
    return Rating::high;
}

RightRiskProfile assess_access_to_information(const metrics::AtiReport& ati,
                                              const ThresholdConfig& cfg) {
    cfg.validate();
    if (ati.corrections.empty())
        fail("access-to-information report is empty");

    RightRiskProfile p;
    p.right = Right::access_to_information;
    p.scale = cfg.ati_scale;
    p.remediability = cfg.ati_remediability;

    const double no_correction = ati.overall_no_correction();
    p.likelihood = rate_to_rating(no_correction, cfg.likelihood_low_max,
                                  cfg.likelihood_med_max);
    p.evidence.push_back(
        {"no_correction_rate", no_correction,
         bounds_note(cfg.likelihood_low_max, cfg.likelihood_med_max)});

    double identity_mean = 0.0;
    if (!ati.identity_in_noncorrecting.empty()) {
        identity_mean = ati.mean_identity_rate();
        p.scope = rate_to_rating(identity_mean, cfg.scope_low_max,
                                 cfg.scope_med_max);
        p.evidence.push_back(
            {"identity_in_noncorrecting_mean", identity_mean,
             bounds_note(cfg.scope_low_max, cfg.scope_med_max)});
    } else {
        p.scope = Rating::low;
        p.evidence.push_back({"identity_in_noncorrecting_mean", std::nullopt,
                              "no non-correcting headlines observed"});
    }

    p.evidence.push_back(
        {"scale", std::nullopt, "contextual input (configured)"});
    p.evidence.push_back(
        {"remediability", std::nullopt, "contextual input (configured)"});

    std::ostringstream narrative;
    narrative << "Access to information: likelihood "
              << to_string(p.likelihood) << " (no-correction rate "
              << format_value(no_correction) << "), scope "
              << to_string(p.scope) << " (identity inclusion mean "
              << format_value(identity_mean) << "), scale "
              << to_string(p.scale) << " (contextual).";
    p.narrative = narrative.str();
    p.validate();
    return p;
}

RightRiskProfile assess_freedom_of_thought(const metrics::FotReport& fot,
                                           const ThresholdConfig& cfg) {
    cfg.validate();
    if (fot.shifts.empty()) fail("freedom-of-thought report is empty");

    RightRiskProfile p;
    p.right = Right::freedom_of_thought;
    p.scale = cfg.fot_scale;
    p.remediability = cfg.fot_remediability;

    const double amplification = fot.overall_amplification();
    Rating likelihood = rate_to_rating(amplification, cfg.likelihood_low_max,
                                       cfg.likelihood_med_max);
    p.evidence.push_back(
        {"amplification_rate", amplification,
         bounds_note(cfg.likelihood_low_max, cfg.likelihood_med_max)});

    double ethnicity_delta = 0.0;
    if (!fot.identity_delta.empty()) {
        ethnicity_delta = fot.mean_abs_ethnicity_delta();
        if (ethnicity_delta > cfg.identity_delta_high) {
            likelihood = worst(likelihood, Rating::high);
            p.evidence.push_back({"abs_ethnicity_delta_mean", ethnicity_delta,
                                  "> " + format_value(cfg.identity_delta_high) +
                                      " escalates likelihood to high"});
        } else {
            p.evidence.push_back({"abs_ethnicity_delta_mean", ethnicity_delta,
                                  "<= " + format_value(cfg.identity_delta_high) +
                                      ", no escalation"});
        }
    }
    p.likelihood = likelihood;

    const double shift_prevalence = amplification + fot.overall_flip();
    Rating scope = rate_to_rating(shift_prevalence, cfg.scope_low_max,
                                  cfg.scope_med_max);
    p.evidence.push_back({"significant_shift_rate", shift_prevalence,
                          bounds_note(cfg.scope_low_max, cfg.scope_med_max)});
    double delta_mean = 0.0;
    if (!fot.identity_delta.empty()) {
        delta_mean = fot.mean_abs_delta();
        if (delta_mean > cfg.scope_low_max) {
            scope = worst(scope, Rating::medium);
            p.evidence.push_back({"abs_identity_delta_mean", delta_mean,
                                  "> " + format_value(cfg.scope_low_max) +
                                      " raises scope to at least medium"});
        } else {
            p.evidence.push_back({"abs_identity_delta_mean", delta_mean,
                                  "<= " + format_value(cfg.scope_low_max) +
                                      ", no scope floor"});
        }
    }
    p.scope = scope;

    p.evidence.push_back(
        {"scale", std::nullopt, "contextual input (configured)"});
    p.evidence.push_back(
        {"remediability", std::nullopt, "contextual input (configured)"});

    std::ostringstream narrative;
    narrative << "Freedom of thought: likelihood " << to_string(p.likelihood)
              << " (amplification " << format_value(amplification)
              << ", ethnicity salience delta " << format_value(ethnicity_delta)
              << "), scope " << to_string(p.scope)
              << " (significant shifts " << format_value(shift_prevalence)
              << ", identity delta mean " << format_value(delta_mean)
              << "), scale " << to_string(p.scale) << " (contextual).";
    p.narrative = narrative.str();
    p.validate();
    return p;
}

nlohmann::json RunProvenance::to_json() const {
    nlohmann::json j{{"config_hash", config_hash},
                     {"seed", seed},
                     {"corpus_hash", corpus_hash},
                     {"lexicon_hash", lexicon_hash},
                     {"embedding_provider_id", embedding_provider_id},
                     {"axis_hash", axis_hash}};
    if (!timestamp.empty()) j["timestamp"] = timestamp;
    return j;
}

nlohmann::json compose_report_json(
    const std::vector<RightRiskProfile>& profiles,
    const metrics::AtiReport& ati, const metrics::FotReport& fot,
    const ThresholdConfig& cfg, const RunProvenance& provenance) {
    if (profiles.empty()) fail("report requires at least one risk profile");

    nlohmann::json rights_array = nlohmann::json::array();
    for (const auto& p : profiles) rights_array.push_back(p.to_json());

    return nlohmann::json{{"schema_version", 1},
                          {"provenance", provenance.to_json()},
                          {"thresholds", cfg.to_json()},
                          {"rights", std::move(rights_array)},
                          {"access_to_information", ati.to_json()},
                          {"freedom_of_thought", fot.to_json()}};
}

namespace {

std::string render_number(const nlohmann::json& v) {
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v.get<double>());
        return buf;
    }
    return v.dump();
}

void render_table(std::ostringstream& os, const nlohmann::json& rows,
                  const std::vector<std::string>& columns) {
    for (const auto& [model, values] : rows.items()) {
        os << "  " << model << ":";
        for (const auto& col : columns) {
            if (values.contains(col))
                os << " " << col << "=" << render_number(values[col]);
        }
        os << "\n";
    }
}

}  // namespace

std::string compose_report_text(const nlohmann::json& report) {
    std::ostringstream os;
    os << "HEADLINE AUDIT REPORT (schema v"
       << report.at("schema_version").get<int>() << ")\n";
    os << std::string(64, '=') << "\n\n";

    const auto& prov = report.at("provenance");
    os << "Provenance\n";
    for (const auto& key :
         {"config_hash", "corpus_hash", "lexicon_hash", "axis_hash"})
        os << "  " << key << ": " << prov.at(key).get<std::string>() << "\n";
    os << "  embedding_provider_id: "
       << prov.at("embedding_provider_id").get<std::string>() << "\n";
    os << "  seed: " << prov.at("seed").get<std::uint64_t>() << "\n";
    if (prov.contains("timestamp"))
        os << "  timestamp: " << prov.at("timestamp").get<std::string>()
           << "\n";
    os << "\n";

    for (const auto& profile : report.at("rights")) {
        os << "Right: " << profile.at("right").get<std::string>() << "\n";
        os << "  scale:        " << profile.at("scale").get<std::string>()
           << "\n";
        os << "  scope:        " << profile.at("scope").get<std::string>()
           << "\n";
        os << "  likelihood:   "
           << profile.at("likelihood").get<std::string>() << "\n";
        os << "  remediability: "
           << profile.at("remediability").get<std::string>() << "\n";
        os << "  evidence:\n";
        for (const auto& e : profile.at("evidence")) {
            os << "    - " << e.at("metric").get<std::string>();
            if (e.contains("value")) os << " = " << render_number(e["value"]);
            os << " (" << e.at("note").get<std::string>() << ")\n";
        }
        os << "  " << profile.at("narrative").get<std::string>() << "\n\n";
    }

    const auto& ati = report.at("access_to_information");
    os << "Misinformation correction rates (per model, over engaging "
          "headlines)\n";
    render_table(os, ati.at("correction_rates"),
                 {"explicit", "implicit", "no_correction", "non_engaging"});
    os << "Identity inclusion in non-correcting headlines (per model)\n";
    render_table(os, ati.at("identity_in_noncorrecting"),
                 {"ethnicity", "migrant", "immigrant"});

    const auto& fot = report.at("freedom_of_thought");
    os << "Significant partisanship shifts (per model)\n";
    render_table(os, fot.at("significant_shifts"),
                 {"amplification", "flip", "assessed"});
    os << "Identity salience deltas vs originals (per model)\n";
    render_table(os, fot.at("identity_delta"),
                 {"ethnicity", "immigrant", "migrant"});
    os << "Behavior profile (per model)\n";
    render_table(os, fot.at("behavior_profile"),
                 {"fidelity", "framing_shift", "diversity", "tension"});

    os << "\nThresholds\n";
    for (const auto& [key, value] : report.at("thresholds").items())
        os << "  " << key << ": " << value.dump() << "\n";
    return os.str();
}

}  // namespace newsaudit::rights
