#include "newsaudit/metrics.hpp"

#include <cmath>

namespace newsaudit::metrics {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw MetricsError(msg); }

void check_rate(double r, const char* what) {
    if (r < 0.0 || r > 1.0)
        fail(std::string(what) + " rate " + std::to_string(r) +
             " outside [0, 1]");
}

nlohmann::json rates_to_json(const CorrectionRates& c) {
    return nlohmann::json{{"no_correction", c.no_correction},
                          {"implicit", c.implicit_correction},
                          {"explicit", c.explicit_correction},
                          {"non_engaging", c.non_engaging},
                          {"engaging_count", c.engaging_count},
                          {"total_count", c.total_count}};
}

CorrectionRates rates_from_json(const nlohmann::json& j) {
    CorrectionRates c;
    c.no_correction = j.at("no_correction").get<double>();
    c.implicit_correction = j.at("implicit").get<double>();
    c.explicit_correction = j.at("explicit").get<double>();
    if (j.contains("non_engaging")) c.non_engaging = j["non_engaging"];
    if (j.contains("engaging_count")) c.engaging_count = j["engaging_count"];
    if (j.contains("total_count")) c.total_count = j["total_count"];
    return c;
}

nlohmann::json term_rates_to_json(const TermRates& t) {
    return nlohmann::json{{"ethnicity", t.ethnicity},
                          {"migrant", t.migrant},
                          {"immigrant", t.immigrant}};
}

TermRates term_rates_from_json(const nlohmann::json& j) {
    return TermRates{j.at("ethnicity").get<double>(),
                     j.at("migrant").get<double>(),
                     j.at("immigrant").get<double>()};
}

nlohmann::json deltas_to_json(const TermDeltas& t) {
    return nlohmann::json{{"ethnicity", t.ethnicity},
                          {"immigrant", t.immigrant},
                          {"migrant", t.migrant}};
}

TermDeltas deltas_from_json(const nlohmann::json& j) {
    return TermDeltas{j.at("ethnicity").get<double>(),
                      j.at("immigrant").get<double>(),
                      j.at("migrant").get<double>()};
}

}  // namespace

double AtiReport::overall_no_correction() const {
    double weighted = 0.0;
    double engaging = 0.0;
    for (const auto& [model, c] : corrections) {
        weighted += c.no_correction * static_cast<double>(c.engaging_count);
        engaging += static_cast<double>(c.engaging_count);
    }
    if (engaging > 0.0) return weighted / engaging;
    return model_mean_no_correction();
}

double AtiReport::model_mean_no_correction() const {
    if (corrections.empty()) fail("report has no correction rates");
    double sum = 0.0;
    for (const auto& [model, c] : corrections) sum += c.no_correction;
    return sum / static_cast<double>(corrections.size());
}

double AtiReport::overall_non_engaging() const {
    if (corrections.empty()) fail("report has no correction rates");
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& [model, c] : corrections) {
        weighted += c.non_engaging * static_cast<double>(c.total_count);
        total += static_cast<double>(c.total_count);
    }
    if (total > 0.0) return weighted / total;
    double sum = 0.0;
    for (const auto& [model, c] : corrections) sum += c.non_engaging;
    return sum / static_cast<double>(corrections.size());
}

double AtiReport::mean_identity_rate() const {
    if (identity_in_noncorrecting.empty())
        fail("report has no identity-inclusion rates");
    double sum = 0.0;
    for (const auto& [model, t] : identity_in_noncorrecting)
        sum += t.ethnicity + t.migrant + t.immigrant;
    return sum / (3.0 * static_cast<double>(identity_in_noncorrecting.size()));
}

void AtiReport::validate(double tolerance) const {
    for (const auto& [model, c] : corrections) {
        check_rate(c.no_correction, "no_correction");
        check_rate(c.implicit_correction, "implicit");
        check_rate(c.explicit_correction, "explicit");
        check_rate(c.non_engaging, "non_engaging");
        const double sum =
            c.no_correction + c.implicit_correction + c.explicit_correction;
        if (std::fabs(sum - 1.0) > tolerance)
            fail("correction rates for '" + model + "' sum to " +
                 std::to_string(sum) + ", expected 1");
    }
    for (const auto& [model, t] : identity_in_noncorrecting) {
        check_rate(t.ethnicity, "ethnicity");
        check_rate(t.migrant, "migrant");
        check_rate(t.immigrant, "immigrant");
    }
}

nlohmann::json AtiReport::to_json() const {
    nlohmann::json corr = nlohmann::json::object();
    for (const auto& [model, c] : corrections)
        corr[model] = rates_to_json(c);
    nlohmann::json ident = nlohmann::json::object();
    for (const auto& [model, t] : identity_in_noncorrecting)
        ident[model] = term_rates_to_json(t);
    return nlohmann::json{
        {"correction_rates", std::move(corr)},
        {"identity_in_noncorrecting", std::move(ident)},
        {"overall",
         {{"no_correction_headline_weighted", overall_no_correction()},
          {"no_correction_model_mean", model_mean_no_correction()},
          {"non_engaging", overall_non_engaging()},
          {"identity_rate_mean", mean_identity_rate()}}},
        {"warnings", warnings}};
}

AtiReport AtiReport::from_json(const nlohmann::json& j) {
    AtiReport r;
    for (const auto& [model, v] : j.at("correction_rates").items())
        r.corrections[model] = rates_from_json(v);
    for (const auto& [model, v] : j.at("identity_in_noncorrecting").items())
        r.identity_in_noncorrecting[model] = term_rates_from_json(v);
    if (j.contains("warnings"))
        r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
}

double FotReport::overall_amplification() const {
    if (shifts.empty()) fail("report has no shift rates");
    double weighted = 0.0;
    double assessed = 0.0;
    for (const auto& [model, s] : shifts) {
        weighted += s.amplification * static_cast<double>(s.assessed);
        assessed += static_cast<double>(s.assessed);
    }
    if (assessed > 0.0) return weighted / assessed;
    double sum = 0.0;
    for (const auto& [model, s] : shifts) sum += s.amplification;
    return sum / static_cast<double>(shifts.size());
}

double FotReport::overall_flip() const {
    if (shifts.empty()) fail("report has no shift rates");
    double weighted = 0.0;
    double assessed = 0.0;
    for (const auto& [model, s] : shifts) {
        weighted += s.flip * static_cast<double>(s.assessed);
        assessed += static_cast<double>(s.assessed);
    }
    if (assessed > 0.0) return weighted / assessed;
    double sum = 0.0;
    for (const auto& [model, s] : shifts) sum += s.flip;
    return sum / static_cast<double>(shifts.size());
}

double FotReport::mean_abs_ethnicity_delta() const {
    if (identity_delta.empty()) fail("report has no identity deltas");
    double sum = 0.0;
    for (const auto& [model, d] : identity_delta)
        sum += std::fabs(d.ethnicity);
    return sum / static_cast<double>(identity_delta.size());
}

double FotReport::mean_abs_delta() const {
    if (identity_delta.empty()) fail("report has no identity deltas");
    double sum = 0.0;
    for (const auto& [model, d] : identity_delta)
        sum += std::fabs(d.ethnicity) + std::fabs(d.immigrant) +
               std::fabs(d.migrant);
    return sum / (3.0 * static_cast<double>(identity_delta.size()));
}

void FotReport::validate() const {
    for (const auto& [model, s] : shifts) {
        check_rate(s.amplification, "amplification");
        check_rate(s.flip, "flip");
    }
    for (const auto& [model, d] : identity_delta) {
        for (double x : {d.ethnicity, d.immigrant, d.migrant})
            if (x < -1.0 || x > 1.0)
                fail("identity delta for '" + model + "' outside [-1, 1]");
    }
    for (const auto& [model, b] : behavior) {
        if (b.diversity < 0.0 || b.diversity > 2.0)
            fail("diversity for '" + model + "' outside [0, 2]");
        if (b.tension < 0.0 || b.tension > 1.0)
            fail("tension for '" + model + "' outside [0, 1]");
        if (b.fidelity < -1.0 || b.fidelity > 1.0)
            fail("fidelity for '" + model + "' outside [-1, 1]");
        if (b.framing_shift < 0.0 || b.framing_shift > 1.0)
            fail("framing shift for '" + model + "' outside [0, 1]");
    }
}

nlohmann::json FotReport::to_json() const {
    nlohmann::json shift = nlohmann::json::object();
    for (const auto& [model, s] : shifts)
        shift[model] = {{"amplification", s.amplification},
                        {"flip", s.flip},
                        {"assessed", s.assessed}};
    nlohmann::json deltas = nlohmann::json::object();
    for (const auto& [model, d] : identity_delta)
        deltas[model] = deltas_to_json(d);
    nlohmann::json beh = nlohmann::json::object();
    for (const auto& [model, b] : behavior)
        beh[model] = {{"fidelity", b.fidelity},
                      {"framing_shift", b.framing_shift},
                      {"diversity", b.diversity},
                      {"tension", b.tension}};
    nlohmann::json corr = nlohmann::json::object();
    for (const auto& [model, c] : partisanship_correlation) corr[model] = c;

    nlohmann::json out{{"significant_shifts", std::move(shift)},
                       {"identity_delta", std::move(deltas)},
                       {"behavior_profile", std::move(beh)},
                       {"partisanship_correlation", std::move(corr)},
                       {"overall",
                        {{"amplification", overall_amplification()},
                         {"flip", overall_flip()},
                         {"abs_ethnicity_delta_mean", mean_abs_ethnicity_delta()},
                         {"abs_delta_mean", mean_abs_delta()}}},
                       {"warnings", warnings}};
    if (overall_correlation)
        out["overall"]["partisanship_correlation"] = *overall_correlation;
    return out;
}

FotReport FotReport::from_json(const nlohmann::json& j) {
    FotReport r;
    for (const auto& [model, v] : j.at("significant_shifts").items()) {
        ShiftRates s;
        s.amplification = v.at("amplification").get<double>();
        s.flip = v.at("flip").get<double>();
        if (v.contains("assessed")) s.assessed = v["assessed"];
        r.shifts[model] = s;
    }
    for (const auto& [model, v] : j.at("identity_delta").items())
        r.identity_delta[model] = deltas_from_json(v);
    if (j.contains("behavior_profile")) {
        for (const auto& [model, v] : j["behavior_profile"].items()) {
            BehaviorProfile b;
            b.fidelity = v.at("fidelity").get<double>();
            b.framing_shift = v.at("framing_shift").get<double>();
            b.diversity = v.at("diversity").get<double>();
            b.tension = v.at("tension").get<double>();
            r.behavior[model] = b;
        }
    }
    if (j.contains("partisanship_correlation"))
        for (const auto& [model, v] : j["partisanship_correlation"].items())
            r.partisanship_correlation[model] = v.get<double>();
    if (j.contains("overall") &&
        j["overall"].contains("partisanship_correlation"))
        r.overall_correlation = j["overall"]["partisanship_correlation"];
    if (j.contains("warnings"))
        r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
}

std::map<std::string, CorrectionRates> correction_rates(
    const std::map<std::string, std::vector<annotate::CorrectionLabel>>&
        labels_per_model,
    std::vector<std::string>* warnings) {
    using annotate::CorrectionLabel;
    std::map<std::string, CorrectionRates> out;
    for (const auto& [model, labels] : labels_per_model) {
        std::size_t none = 0, implicit = 0, explicit_c = 0, non_engaging = 0;
        for (const auto l : labels) {
            switch (l) {
                case CorrectionLabel::no_correction: ++none; break;
                case CorrectionLabel::implicit_correction: ++implicit; break;
                case CorrectionLabel::explicit_correction: ++explicit_c; break;
                case CorrectionLabel::non_engaging: ++non_engaging; break;
            }
        }
        const std::size_t engaging = none + implicit + explicit_c;
        if (engaging == 0) {
            if (warnings)
                warnings->push_back("model '" + model +
                                    "' has no engaging headlines; omitted "
                                    "from correction rates");
            continue;
        }
        CorrectionRates r;
        r.engaging_count = engaging;
        r.total_count = labels.size();
        r.no_correction = static_cast<double>(none) / engaging;
        r.implicit_correction = static_cast<double>(implicit) / engaging;
        r.explicit_correction = static_cast<double>(explicit_c) / engaging;
        r.non_engaging =
            static_cast<double>(non_engaging) / static_cast<double>(labels.size());
        out[model] = r;
    }
    return out;
}

std::map<std::string, TermRates> identity_in_noncorrecting(
    const std::map<std::string,
                   std::vector<std::pair<annotate::CorrectionLabel,
                                         annotate::IdentityMentions>>>&
        headlines_per_model,
    std::vector<std::string>* warnings) {
    std::map<std::string, TermRates> out;
    for (const auto& [model, headlines] : headlines_per_model) {
        std::size_t n = 0, eth = 0, mig = 0, imm = 0;
        for (const auto& [label, mentions] : headlines) {
            if (label != annotate::CorrectionLabel::no_correction) continue;
            ++n;
            if (mentions.ethnicity) ++eth;
            if (mentions.migrant) ++mig;
            if (mentions.immigrant) ++imm;
        }
        if (n == 0) {
            if (warnings)
                warnings->push_back("model '" + model +
                                    "' has no non-correcting headlines; "
                                    "identity rates absent");
            continue;
        }
        out[model] = TermRates{static_cast<double>(eth) / n,
                               static_cast<double>(mig) / n,
                               static_cast<double>(imm) / n};
    }
    return out;
}

TermDeltas identity_delta(
    std::span<const std::pair<annotate::IdentityMentions,
                              annotate::IdentityMentions>> pairs) {
    if (pairs.empty()) fail("identity_delta requires at least one pair");
    double eth = 0.0, imm = 0.0, mig = 0.0;
    for (const auto& [gen, orig] : pairs) {
        eth += static_cast<double>(gen.ethnicity) -
               static_cast<double>(orig.ethnicity);
        imm += static_cast<double>(gen.immigrant) -
               static_cast<double>(orig.immigrant);
        mig += static_cast<double>(gen.migrant) -
               static_cast<double>(orig.migrant);
    }
    const double n = static_cast<double>(pairs.size());
    return TermDeltas{eth / n, imm / n, mig / n};
}

ShiftRates shift_rates(std::span<const axis::ShiftAssessment> assessments) {
    if (assessments.empty()) fail("shift_rates requires assessments");
    std::size_t amp = 0, flip = 0;
    for (const auto& a : assessments) {
        if (!a.significant) continue;
        if (a.category == axis::ShiftCategory::amplification) ++amp;
        if (a.category == axis::ShiftCategory::flip) ++flip;
    }
    ShiftRates r;
    r.assessed = assessments.size();
    r.amplification = static_cast<double>(amp) / assessments.size();
    r.flip = static_cast<double>(flip) / assessments.size();
    return r;
}

double diversity(
    const std::map<std::string, std::vector<embed::EmbeddingVector>>&
        by_article,
    std::vector<std::string>* warnings) {
    double total = 0.0;
    std::size_t groups = 0;
    for (const auto& [article, vectors] : by_article) {
        if (vectors.size() < 2) {
            if (warnings)
                warnings->push_back("article '" + article +
                                    "' has fewer than two headlines; skipped "
                                    "in diversity");
            continue;
        }
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            for (std::size_t j = i + 1; j < vectors.size(); ++j) {
                sum += embed::cosine_distance(vectors[i], vectors[j]);
                ++pairs;
            }
        }
        total += sum / static_cast<double>(pairs);
        ++groups;
    }
    if (groups == 0) fail("diversity requires a group with two headlines");
    return total / static_cast<double>(groups);
}

double fidelity(std::span<const std::pair<embed::EmbeddingVector,
                                          embed::EmbeddingVector>> pairs) {
    if (pairs.empty()) fail("fidelity requires at least one pair");
    double sum = 0.0;
    for (const auto& [gen, article] : pairs)
        sum += embed::cosine_similarity(gen, article);
    return sum / static_cast<double>(pairs.size());
}

double framing_shift(
    std::span<const std::tuple<embed::EmbeddingVector, embed::EmbeddingVector,
                               embed::EmbeddingVector>> triples,
    std::vector<std::string>* warnings) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& [gen, orig, article] : triples) {
        embed::EmbeddingVector dgen{gen.values};
        embed::EmbeddingVector dorig{orig.values};
        double ngen = 0.0, norig = 0.0;
        for (std::size_t i = 0; i < article.values.size(); ++i) {
            dgen.values[i] -= article.values[i];
            dorig.values[i] -= article.values[i];
            ngen += dgen.values[i] * dgen.values[i];
            norig += dorig.values[i] * dorig.values[i];
        }
        if (ngen == 0.0 || norig == 0.0) {
            if (warnings)
                warnings->push_back(
                    "headline embedding equals article embedding; skipped in "
                    "framing shift");
            continue;
        }
        sum += embed::cosine_distance(dgen, dorig) / 2.0;
        ++used;
    }
    if (used == 0) fail("framing_shift has no usable triples");
    return sum / static_cast<double>(used);
}

double tension(
    const std::map<std::string, std::pair<embed::EmbeddingVector,
                                          std::vector<embed::EmbeddingVector>>>&
        by_article,
    std::vector<std::string>* warnings) {
    double total = 0.0;
    std::size_t articles = 0;
    for (const auto& [article, entry] : by_article) {
        const auto& [orig, generated] = entry;
        if (generated.size() < 2) {
            if (warnings)
                warnings->push_back("article '" + article +
                                    "' has fewer than two generated "
                                    "headlines; skipped in tension");
            continue;
        }
        const auto center = embed::centroid(
            std::span<const embed::EmbeddingVector>(generated));
        std::vector<double> distances;
        distances.reserve(generated.size());
        for (const auto& g : generated)
            distances.push_back(embed::cosine_distance(g, center));
        const double orig_distance = embed::cosine_distance(orig, center);
        total += embed::percentile_rank(orig_distance, distances);
        ++articles;
    }
    if (articles == 0) fail("tension requires an article with two headlines");
    return total / static_cast<double>(articles);
}

double partisanship_correlation(
    std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 3)
        fail("partisanship_correlation requires at least 3 pairs");
    std::vector<double> orig, gen;
    orig.reserve(pairs.size());
    gen.reserve(pairs.size());
    for (const auto& [o, g] : pairs) {
        orig.push_back(o);
        gen.push_back(g);
    }
    return annotate::spearman_rho(orig, gen).rho;
}

AtiReport load_reference_ati(const nlohmann::json& j) {
    AtiReport r;
    for (const auto& [model, v] : j.at("correction_rates").items()) {
        CorrectionRates c;
        c.no_correction = v.at("no_correction").get<double>();
        c.implicit_correction = v.at("implicit").get<double>();
        c.explicit_correction = v.at("explicit").get<double>();
        r.corrections[model] = c;
    }
    for (const auto& [model, v] : j.at("identity_in_noncorrecting").items())
        r.identity_in_noncorrecting[model] = term_rates_from_json(v);
    // published tables round to three decimals
    r.validate(2e-3);
    return r;
}

FotReport load_reference_fot(const nlohmann::json& j) {
    FotReport r;
    for (const auto& [model, v] : j.at("significant_shifts").items()) {
        ShiftRates s;
        s.amplification = v.at("amplification").get<double>();
        s.flip = v.at("flip").get<double>();
        r.shifts[model] = s;
    }
    for (const auto& [model, v] : j.at("identity_delta").items())
        r.identity_delta[model] = deltas_from_json(v);
    if (j.contains("behavior_profile")) {
        for (const auto& [model, v] : j["behavior_profile"].items()) {
            BehaviorProfile b;
            b.fidelity = v.at("fidelity").get<double>();
            b.framing_shift = v.at("framing").get<double>();
            b.diversity = v.at("diversity").get<double>();
            b.tension = v.at("tension").get<double>();
            r.behavior[model] = b;
        }
    }
    r.validate();
    return r;
}

}  // namespace newsaudit::metrics
