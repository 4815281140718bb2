#include "newsaudit/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "newsaudit/metrics.hpp"
#include "newsaudit/sha256.hpp"

namespace newsaudit::pipeline {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw StageError(msg); }

nlohmann::json read_json_file(const std::filesystem::path& path,
                              const char* what) {
    std::ifstream in(path);
    if (!in.good())
        fail(std::string("cannot open ") + what + " '" + path.string() + "'");
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("parse error in ") + what + " '" + path.string() +
             "': " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out.good()) fail("cannot write '" + path.string() + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string hash_json(const nlohmann::json& j) { return sha256_hex(j.dump()); }

// ---- stage manifests -------------------------------------------------

// Stage manifest. Carries the provenance block on behalf of line-delimited
// outputs, which cannot embed it in-band.
struct Manifest {
    std::string stage;
    nlohmann::json inputs = nlohmann::json::object();
    nlohmann::json outputs = nlohmann::json::object();
    nlohmann::json provenance = nlohmann::json::object();
};

std::filesystem::path stage_dir(const RunConfig& config,
                                const std::string& stage) {
    return config.out_dir / stage;
}

std::filesystem::path manifest_path(const RunConfig& config,
                                    const std::string& stage) {
    return stage_dir(config, stage) / "manifest.json";
}

std::optional<Manifest> load_manifest(const RunConfig& config,
                                      const std::string& stage) {
    const auto path = manifest_path(config, stage);
    if (!std::filesystem::exists(path)) return std::nullopt;
    const auto j = read_json_file(path, "stage manifest");
    Manifest m;
    m.stage = j.value("stage", "");
    if (j.contains("inputs")) m.inputs = j["inputs"];
    if (j.contains("outputs")) m.outputs = j["outputs"];
    return m;
}

void save_manifest(const RunConfig& config, const Manifest& m) {
    write_json_file(manifest_path(config, m.stage),
                    nlohmann::json{{"stage", m.stage},
                                   {"inputs", m.inputs},
                                   {"outputs", m.outputs},
                                   {"provenance", m.provenance}});
}

bool outputs_match_disk(const RunConfig& config, const Manifest& m) {
    for (const auto& [rel, hash] : m.outputs.items()) {
        const auto path = config.out_dir / rel;
        if (!std::filesystem::exists(path)) return false;
        if (file_sha256(path) != hash.get<std::string>()) return false;
    }
    return true;
}

// No-op detection: inputs unchanged and outputs intact.
bool stage_up_to_date(const RunConfig& config, const std::string& stage,
                      const nlohmann::json& inputs) {
    const auto m = load_manifest(config, stage);
    if (!m) return false;
    if (m->inputs != inputs) return false;
    return outputs_match_disk(config, *m);
}

// Predecessor check: the stage must have run, against the inputs the
// current configuration implies, and its outputs must still be the bytes
// it recorded.
Manifest require_stage(const RunConfig& config, const std::string& stage,
                       const std::string& command,
                       const nlohmann::json& expected_inputs) {
    auto m = load_manifest(config, stage);
    if (!m)
        fail("missing artifacts from stage '" + stage + "'; run `newsaudit " +
             command + "` first");
    if (m->inputs != expected_inputs)
        fail("stale artifacts from stage '" + stage +
             "' (inputs changed since it ran); re-run `newsaudit " + command +
             "`");
    if (!outputs_match_disk(config, *m))
        fail("stale artifacts from stage '" + stage +
             "' (outputs changed on disk); re-run `newsaudit " + command +
             "`");
    return *m;
}

// Per-stage dependency fingerprints. Later stages recompute these to
// detect predecessors that ran against a different configuration.
nlohmann::json ingest_inputs(const RunConfig& config) {
    return nlohmann::json{{"corpus", file_sha256(config.corpus)}};
}

nlohmann::json generate_inputs(const RunConfig& config) {
    nlohmann::json providers_json = nlohmann::json::array();
    for (const auto& p : config.providers) providers_json.push_back(p.to_json());
    nlohmann::json variants_json = nlohmann::json::array();
    for (const auto& v : config.active_variants())
        variants_json.push_back(v.index());
    return nlohmann::json{
        {"corpus_norm",
         file_sha256(stage_dir(config, "ingest") / "corpus.jsonl")},
        {"providers", hash_json(providers_json)},
        {"variants", hash_json(variants_json)},
        {"trailer", sha256_hex(gen::kVerbatimTrailer)}};
}

nlohmann::json train_axis_inputs(const RunConfig& config) {
    nlohmann::json annotation_hashes = nlohmann::json::array();
    for (const auto& a : config.annotations)
        annotation_hashes.push_back(file_sha256(a));
    nlohmann::json axis_cfg = config.axis.to_json();
    axis_cfg["seed"] = config.seed;
    return nlohmann::json{
        {"corpus_norm",
         file_sha256(stage_dir(config, "ingest") / "corpus.jsonl")},
        {"annotations", annotation_hashes},
        {"embedding", hash_json(config.embedding.to_json())},
        {"axis_config", hash_json(axis_cfg)}};
}

nlohmann::json score_inputs(const RunConfig& config) {
    nlohmann::json scoring{{"z", config.axis.z},
                           {"neutral_eps", config.axis.neutral_eps}};
    return nlohmann::json{
        {"headlines",
         file_sha256(stage_dir(config, "generate") / "headlines.jsonl")},
        {"axis", file_sha256(stage_dir(config, "train_axis") / "axis.json")},
        {"lexicon", file_sha256(config.lexicon)},
        {"embedding", hash_json(config.embedding.to_json())},
        {"scoring", hash_json(scoring)}};
}

std::string record_outputs(const RunConfig& config, Manifest& m,
                           const std::vector<std::filesystem::path>& files) {
    for (const auto& f : files) {
        const auto rel =
            std::filesystem::relative(f, config.out_dir).generic_string();
        m.outputs[rel] = file_sha256(f);
    }
    return {};
}

nlohmann::json provenance_json(const RunConfig& config,
                               const std::string& axis_hash) {
    auto p = config.provenance_base();
    p.axis_hash = axis_hash;
    return p.to_json();
}

// ---- scoring helpers -------------------------------------------------

struct OriginalContext {
    embed::EmbeddingVector headline_emb;
    embed::EmbeddingVector article_emb;
    annotate::IdentityMentions identity;
    double score = 0.0;
};

}  // namespace

nlohmann::json AxisTrainingConfig::to_json() const {
    return nlohmann::json{{"layer_widths", layer_widths},
                          {"learning_rate", learning_rate},
                          {"epochs", epochs},
                          {"batch_size", batch_size},
                          {"z", z},
                          {"neutral_eps", neutral_eps},
                          {"include_left_center", include_left_center}};
}

AxisTrainingConfig AxisTrainingConfig::from_json(const nlohmann::json& j) {
    AxisTrainingConfig c;
    if (j.contains("layer_widths"))
        c.layer_widths = j["layer_widths"].get<std::vector<int>>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"];
    if (j.contains("epochs")) c.epochs = j["epochs"];
    if (j.contains("batch_size")) c.batch_size = j["batch_size"];
    if (j.contains("z")) c.z = j["z"];
    if (j.contains("neutral_eps")) c.neutral_eps = j["neutral_eps"];
    if (j.contains("include_left_center"))
        c.include_left_center = j["include_left_center"];
    if (c.z <= 0) fail("axis config: z must be positive");
    if (c.neutral_eps < 0) fail("axis config: neutral_eps must be >= 0");
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& config_path) {
    const auto j = read_json_file(config_path, "run config");
    const auto base = config_path.has_parent_path()
                          ? config_path.parent_path()
                          : std::filesystem::path(".");
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base / path;
    };

    RunConfig c;
    c.corpus = resolve(j.at("corpus").get<std::string>());
    c.lexicon = resolve(j.at("lexicon").get<std::string>());
    for (const auto& a : j.at("annotations"))
        c.annotations.push_back(resolve(a.get<std::string>()));
    if (j.contains("gold_corrections"))
        c.gold_corrections = resolve(j["gold_corrections"].get<std::string>());
    for (const auto& p : j.at("providers"))
        c.providers.push_back(gen::ProviderDescriptor::from_json(p));
    if (j.contains("embedding"))
        c.embedding = embed::EmbeddingProviderConfig::from_json(j["embedding"]);
    if (j.contains("axis"))
        c.axis = AxisTrainingConfig::from_json(j["axis"]);
    if (j.contains("thresholds"))
        c.thresholds = rights::ThresholdConfig::from_json(j["thresholds"]);
    if (j.contains("out_dir"))
        c.out_dir = std::filesystem::path(j["out_dir"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("variants"))
        c.variant_filter = j["variants"].get<std::vector<int>>();
    c.validate();
    return c;
}

void RunConfig::validate() const {
    if (!std::filesystem::exists(corpus))
        fail("corpus file '" + corpus.string() + "' does not exist");
    if (!std::filesystem::exists(lexicon))
        fail("lexicon file '" + lexicon.string() + "' does not exist");
    if (annotations.empty()) fail("config lists no annotation files");
    for (const auto& a : annotations)
        if (!std::filesystem::exists(a))
            fail("annotation file '" + a.string() + "' does not exist");
    if (gold_corrections && !std::filesystem::exists(*gold_corrections))
        fail("gold corrections file '" + gold_corrections->string() +
             "' does not exist");
    if (providers.empty()) fail("config lists no providers");
    std::set<std::string> ids;
    for (const auto& p : providers) {
        p.validate();
        if (!ids.insert(p.model_id).second)
            fail("duplicate provider model_id '" + p.model_id + "'");
    }
    for (int v : variant_filter)
        if (v < 0 || v >= corpus::kVariantCount)
            fail("variant index " + std::to_string(v) + " out of range");
    thresholds.validate();
}

std::vector<corpus::PromptVariant> RunConfig::active_variants() const {
    if (variant_filter.empty()) return corpus::all_prompt_variants();
    std::vector<int> sorted = variant_filter;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<corpus::PromptVariant> out;
    for (int v : sorted) out.push_back(corpus::PromptVariant::from_index(v));
    return out;
}

nlohmann::json RunConfig::canonical_json() const {
    nlohmann::json providers_json = nlohmann::json::array();
    for (const auto& p : providers) providers_json.push_back(p.to_json());
    nlohmann::json annotation_hashes = nlohmann::json::array();
    for (const auto& a : annotations)
        annotation_hashes.push_back(file_sha256(a));
    nlohmann::json variants_json = nlohmann::json::array();
    for (const auto& v : active_variants()) variants_json.push_back(v.index());
    return nlohmann::json{{"corpus_sha256", file_sha256(corpus)},
                          {"lexicon_sha256", file_sha256(lexicon)},
                          {"annotations_sha256", annotation_hashes},
                          {"providers", providers_json},
                          {"embedding", embedding.to_json()},
                          {"axis", axis.to_json()},
                          {"thresholds", thresholds.to_json()},
                          {"seed", seed},
                          {"variants", variants_json}};
}

std::string RunConfig::config_hash() const {
    return hash_json(canonical_json());
}

rights::RunProvenance RunConfig::provenance_base() const {
    rights::RunProvenance p;
    p.config_hash = config_hash();
    p.seed = seed;
    p.corpus_hash = file_sha256(corpus);
    p.lexicon_hash = file_sha256(lexicon);
    p.embedding_provider_id = embedding.provider_id;
    return p;
}

std::string file_sha256(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) fail("cannot hash missing file '" + path.string() + "'");
    Sha256 h;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h.update(buf, static_cast<std::size_t>(in.gcount()));
    return to_hex(h.finish());
}

StageResult run_ingest(const RunConfig& config) {
    const auto inputs = ingest_inputs(config);
    if (stage_up_to_date(config, "ingest", inputs))
        return {true, "ingest: up to date"};

    const auto articles = corpus::load_corpus(config.corpus);
    const auto dir = stage_dir(config, "ingest");
    std::filesystem::create_directories(dir);
    corpus::save_corpus(dir / "corpus.jsonl", articles);

    std::map<std::string, int> audience_counts;
    for (const auto& a : articles)
        ++audience_counts[corpus::to_string(a.outlet.audience)];
    nlohmann::json summary{{"articles", articles.size()},
                           {"audience_counts", audience_counts},
                           {"provenance", provenance_json(config, "")}};
    write_json_file(dir / "summary.json", summary);

    Manifest m{"ingest", inputs, {}, provenance_json(config, "")};
    record_outputs(config, m, {dir / "corpus.jsonl", dir / "summary.json"});
    save_manifest(config, m);
    return {false,
            "ingest: " + std::to_string(articles.size()) + " articles"};
}

StageResult run_generate(const RunConfig& config) {
    require_stage(config, "ingest", "ingest", ingest_inputs(config));

    const auto inputs = generate_inputs(config);
    if (stage_up_to_date(config, "generate", inputs))
        return {true, "generate: up to date"};

    const auto articles =
        corpus::load_corpus(stage_dir(config, "ingest") / "corpus.jsonl");
    const auto variants = config.active_variants();
    const auto dir = stage_dir(config, "generate");
    std::filesystem::create_directories(dir);
    gen::GenerationCache cache(dir / "cache");

    const auto outcome =
        gen::generate_matrix(articles, config.providers, variants, &cache);

    gen::save_headlines(dir / "headlines.jsonl", outcome.headlines);
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : outcome.failures) failures.push_back(gen::to_json(f));
    write_json_file(dir / "failures.json",
                    nlohmann::json{{"failures", failures},
                                   {"provider_calls", outcome.provider_calls},
                                   {"cache_hits", outcome.cache_hits},
                                   {"headlines", outcome.headlines.size()},
                                   {"provenance", provenance_json(config, "")}});

    Manifest m{"generate", inputs, {}, provenance_json(config, "")};
    record_outputs(config, m,
                   {dir / "headlines.jsonl", dir / "failures.json"});
    save_manifest(config, m);
    return {false, "generate: " + std::to_string(outcome.headlines.size()) +
                       " headlines, " +
                       std::to_string(outcome.failures.size()) + " failures"};
}

StageResult run_train_axis(const RunConfig& config) {
    require_stage(config, "ingest", "ingest", ingest_inputs(config));

    const auto inputs = train_axis_inputs(config);
    if (stage_up_to_date(config, "train_axis", inputs))
        return {true, "train-axis: up to date"};

    const auto articles =
        corpus::load_corpus(stage_dir(config, "ingest") / "corpus.jsonl");
    std::map<std::string, const corpus::Article*> by_id;
    for (const auto& a : articles) by_id[a.id] = &a;

    std::vector<annotate::AnnotationRecord> records;
    for (const auto& path : config.annotations) {
        auto batch = annotate::load_annotations(path);
        records.insert(records.end(), batch.begin(), batch.end());
    }
    if (records.empty()) fail("no annotation records loaded");

    const auto dir = stage_dir(config, "train_axis");
    std::filesystem::create_directories(dir);
    auto embedder = embed::make_embedding_provider(
        config.embedding, config.out_dir / "embed_cache");

    // Training pairs: label vector -> embedding of the annotated headline.
    axis::TrainingSet pairs;
    for (const auto& r : records) {
        if (r.headline_ref.model_id != "original")
            continue;  // generated-cell annotations need the matching run
        auto it = by_id.find(r.headline_ref.article_id);
        if (it == by_id.end())
            fail("annotation references unknown article '" +
                 r.headline_ref.article_id + "'");
        const auto label = annotate::to_label_vector(r);
        const auto emb = embedder->embed_text(it->second->original_headline);
        pairs.emplace_back(
            std::vector<double>(label.values.begin(), label.values.end()),
            emb.values);
    }
    if (pairs.empty()) fail("no trainable annotation records (model_id "
                            "'original') found");

    axis::RegressorConfig reg_cfg;
    reg_cfg.layer_widths = config.axis.layer_widths;
    reg_cfg.layer_widths.front() = annotate::kLabelDimensions;
    reg_cfg.layer_widths.back() = config.embedding.dimension;
    reg_cfg.learning_rate = config.axis.learning_rate;
    reg_cfg.epochs = config.axis.epochs;
    reg_cfg.batch_size = config.axis.batch_size;
    reg_cfg.seed = config.seed;

    auto regressor = axis::train_regressor(pairs, reg_cfg);
    const auto [left_pole, right_pole] =
        axis::select_poles(records, config.axis.include_left_center);
    const auto axis_obj = axis::build_axis(regressor, left_pole, right_pole);

    nlohmann::json regressor_json = regressor.to_json();
    regressor_json["provenance"] = provenance_json(config, "");
    write_json_file(dir / "regressor.json", regressor_json);

    nlohmann::json axis_json = axis_obj.to_json();
    axis_json["regressor_sha256"] = regressor.content_hash();
    axis_json["embedding_provider_id"] = config.embedding.provider_id;
    axis_json["provenance"] = provenance_json(config, "");
    write_json_file(dir / "axis.json", axis_json);

    Manifest m{"train_axis", inputs, {},
                provenance_json(config, axis_obj.content_hash())};
    record_outputs(config, m, {dir / "regressor.json", dir / "axis.json"});
    save_manifest(config, m);

    const double final_loss =
        regressor.loss_curve().empty() ? 0.0
                                       : regressor.loss_curve().back().second;
    return {false, "train-axis: " + std::to_string(pairs.size()) +
                       " pairs, final mse " + std::to_string(final_loss)};
}

StageResult run_score(const RunConfig& config) {
    require_stage(config, "ingest", "ingest", ingest_inputs(config));
    require_stage(config, "generate", "generate", generate_inputs(config));
    require_stage(config, "train_axis", "train-axis",
                  train_axis_inputs(config));

    const auto headlines_path =
        stage_dir(config, "generate") / "headlines.jsonl";
    const auto axis_path = stage_dir(config, "train_axis") / "axis.json";
    const auto inputs = score_inputs(config);
    if (stage_up_to_date(config, "score", inputs))
        return {true, "score: up to date"};

    const auto articles =
        corpus::load_corpus(stage_dir(config, "ingest") / "corpus.jsonl");
    const auto headlines = gen::load_headlines(headlines_path);
    if (headlines.empty()) fail("no generated headlines to score");
    const auto axis_json = read_json_file(axis_path, "axis artifact");
    const auto axis_obj = axis::PartisanshipAxis::from_json(axis_json);
    const std::string axis_hash = axis_obj.content_hash();
    const auto lexicon = annotate::LexiconConfig::load(config.lexicon);

    auto embedder = embed::make_embedding_provider(
        config.embedding, config.out_dir / "embed_cache");

    std::map<std::string, OriginalContext> originals;
    for (const auto& a : articles) {
        OriginalContext ctx;
        ctx.headline_emb = embedder->embed_text(a.original_headline);
        ctx.article_emb = embedder->embed_text(a.body);
        ctx.identity = annotate::detect_identity(a.original_headline, lexicon);
        ctx.score = axis::score_headline(axis_obj, ctx.headline_emb);
        originals[a.id] = std::move(ctx);
    }

    // Per-model accumulators.
    std::map<std::string, std::vector<annotate::CorrectionLabel>> labels;
    std::map<std::string,
             std::vector<std::pair<annotate::CorrectionLabel,
                                   annotate::IdentityMentions>>>
        id_pairs;
    std::map<std::string, std::vector<std::pair<annotate::IdentityMentions,
                                                annotate::IdentityMentions>>>
        delta_pairs;
    std::map<std::string, std::vector<axis::ShiftAssessment>> assessments;
    std::map<std::string,
             std::map<std::string, std::vector<embed::EmbeddingVector>>>
        diversity_groups;
    std::map<std::string, std::vector<std::pair<embed::EmbeddingVector,
                                                embed::EmbeddingVector>>>
        fidelity_pairs;
    std::map<std::string,
             std::vector<std::tuple<embed::EmbeddingVector,
                                    embed::EmbeddingVector,
                                    embed::EmbeddingVector>>>
        framing_triples;
    std::map<std::string,
             std::map<std::string, std::pair<embed::EmbeddingVector,
                                             std::vector<embed::EmbeddingVector>>>>
        tension_groups;
    std::map<std::string, std::vector<std::pair<double, double>>> corr_pairs;
    std::vector<std::pair<double, double>> all_corr_pairs;
    std::map<std::string, std::vector<double>> sigma_groups;

    struct ScoredHeadline {
        const gen::GeneratedHeadline* headline;
        double score;
    };
    std::vector<ScoredHeadline> scored;
    scored.reserve(headlines.size());

    for (const auto& h : headlines) {
        auto orig_it = originals.find(h.article_id);
        if (orig_it == originals.end())
            fail("generated headline references unknown article '" +
                 h.article_id + "'");
        const auto& orig = orig_it->second;

        const auto emb = embedder->embed_text(h.text);
        const double score = axis::score_headline(axis_obj, emb);
        const auto label = annotate::classify_correction(h.text, lexicon);
        const auto identity = annotate::detect_identity(h.text, lexicon);

        labels[h.model_id].push_back(label);
        id_pairs[h.model_id].push_back({label, identity});
        delta_pairs[h.model_id].push_back({identity, orig.identity});
        diversity_groups[h.model_id][h.article_id].push_back(emb);
        fidelity_pairs[h.model_id].push_back({emb, orig.article_emb});
        framing_triples[h.model_id].push_back(
            {emb, orig.headline_emb, orig.article_emb});
        auto& tension_entry = tension_groups[h.model_id][h.article_id];
        tension_entry.first = orig.headline_emb;
        tension_entry.second.push_back(emb);
        corr_pairs[h.model_id].push_back({orig.score, score});
        all_corr_pairs.push_back({orig.score, score});
        sigma_groups[h.article_id + "\x1f" + h.model_id].push_back(score);
        scored.push_back({&h, score});
    }

    const double sigma = axis::estimate_sigma(sigma_groups);

    metrics::AtiReport ati;
    ati.corrections = metrics::correction_rates(labels, &ati.warnings);
    ati.identity_in_noncorrecting =
        metrics::identity_in_noncorrecting(id_pairs, &ati.warnings);
    ati.validate(1e-9);

    metrics::FotReport fot;
    for (const auto& s : scored) {
        const auto& orig = originals.at(s.headline->article_id);
        assessments[s.headline->model_id].push_back(
            axis::assess_shift(orig.score, s.score, sigma, config.axis.z,
                               config.axis.neutral_eps));
    }
    for (const auto& [model, list] : assessments)
        fot.shifts[model] = metrics::shift_rates(list);
    for (const auto& [model, list] : delta_pairs)
        fot.identity_delta[model] = metrics::identity_delta(list);
    for (const auto& [model, groups] : diversity_groups) {
        metrics::BehaviorProfile b;
        b.diversity = metrics::diversity(groups, &fot.warnings);
        b.fidelity = metrics::fidelity(fidelity_pairs.at(model));
        b.framing_shift =
            metrics::framing_shift(framing_triples.at(model), &fot.warnings);
        b.tension = metrics::tension(tension_groups.at(model), &fot.warnings);
        fot.behavior[model] = b;
    }
    for (const auto& [model, pairs] : corr_pairs) {
        try {
            fot.partisanship_correlation[model] =
                metrics::partisanship_correlation(pairs);
        } catch (const std::exception& e) {
            fot.warnings.push_back("partisanship correlation for '" + model +
                                   "' unavailable: " + e.what());
        }
    }
    try {
        fot.overall_correlation =
            metrics::partisanship_correlation(all_corr_pairs);
    } catch (const std::exception& e) {
        fot.warnings.push_back(std::string("overall partisanship correlation "
                                           "unavailable: ") +
                               e.what());
    }
    fot.validate();

    const auto dir = stage_dir(config, "score");
    std::filesystem::create_directories(dir);
    write_json_file(dir / "metrics.json",
                    nlohmann::json{{"schema_version", 1},
                                   {"provenance",
                                    provenance_json(config, axis_hash)},
                                   {"sigma", sigma},
                                   {"z", config.axis.z},
                                   {"neutral_eps", config.axis.neutral_eps},
                                   {"ati", ati.to_json()},
                                   {"fot", fot.to_json()}});

    Manifest m{"score", inputs, {},
                provenance_json(config, axis_hash)};
    record_outputs(config, m, {dir / "metrics.json"});
    save_manifest(config, m);
    return {false, "score: " + std::to_string(headlines.size()) +
                       " headlines across " +
                       std::to_string(labels.size()) + " models"};
}

ReportOutcome run_report(const RunConfig& config) {
    require_stage(config, "ingest", "ingest", ingest_inputs(config));
    require_stage(config, "generate", "generate", generate_inputs(config));
    require_stage(config, "train_axis", "train-axis",
                  train_axis_inputs(config));
    require_stage(config, "score", "score", score_inputs(config));

    const auto metrics_path = stage_dir(config, "score") / "metrics.json";
    const nlohmann::json inputs{
        {"metrics", file_sha256(metrics_path)},
        {"thresholds", hash_json(config.thresholds.to_json())}};

    const auto metrics_json = read_json_file(metrics_path, "metric bundle");
    const auto ati = metrics::AtiReport::from_json(metrics_json.at("ati"));
    const auto fot = metrics::FotReport::from_json(metrics_json.at("fot"));

    const auto ati_profile =
        rights::assess_access_to_information(ati, config.thresholds);
    const auto fot_profile =
        rights::assess_freedom_of_thought(fot, config.thresholds);

    rights::Rating max_rating = rights::Rating::low;
    for (const auto& p : {ati_profile, fot_profile}) {
        max_rating = std::max(max_rating, p.scale);
        max_rating = std::max(max_rating, p.scope);
        max_rating = std::max(max_rating, p.likelihood);
    }

    if (stage_up_to_date(config, "report", inputs))
        return {{true, "report: up to date"}, max_rating};

    auto provenance = config.provenance_base();
    provenance.axis_hash =
        metrics_json.at("provenance").value("axis_hash", "");

    const auto report = rights::compose_report_json(
        {ati_profile, fot_profile}, ati, fot, config.thresholds, provenance);

    const auto dir = stage_dir(config, "report");
    std::filesystem::create_directories(dir);
    write_json_file(dir / "report.json", report);
    write_text_file(dir / "report.txt", rights::compose_report_text(report));

    Manifest m{"report", inputs, {}, provenance.to_json()};
    record_outputs(config, m, {dir / "report.json", dir / "report.txt"});
    save_manifest(config, m);
    return {{false, "report: ati likelihood " +
                        std::string(rights::to_string(ati_profile.likelihood)) +
                        ", fot likelihood " +
                        std::string(rights::to_string(fot_profile.likelihood))},
            max_rating};
}

nlohmann::json AgreementSummary::to_json() const {
    return nlohmann::json{{"kappa_per_question", kappa_per_question},
                          {"kappa_mean", kappa_mean},
                          {"partisanship_spearman",
                           {{"rho", partisanship.rho},
                            {"p_value", partisanship.p_value}}},
                          {"classifier",
                           {{"accuracy", classifier_accuracy},
                            {"per_class", per_class}}}};
}

AgreementSummary run_annotate_eval(const RunConfig& config) {
    if (config.annotations.size() < 2)
        fail("annotate-eval needs two annotation files for agreement");

    const auto first = annotate::load_annotations(config.annotations[0]);
    const auto second = annotate::load_annotations(config.annotations[1]);

    // Pair records by headline reference.
    std::map<std::tuple<std::string, std::string, int, int>,
             const annotate::AnnotationRecord*>
        second_by_ref;
    for (const auto& r : second)
        second_by_ref[{r.headline_ref.article_id, r.headline_ref.model_id,
                       r.headline_ref.variant_index,
                       r.headline_ref.sample_index}] = &r;

    std::vector<std::pair<const annotate::AnnotationRecord*,
                          const annotate::AnnotationRecord*>>
        paired;
    for (const auto& r : first) {
        auto it = second_by_ref.find(
            {r.headline_ref.article_id, r.headline_ref.model_id,
             r.headline_ref.variant_index, r.headline_ref.sample_index});
        if (it != second_by_ref.end()) paired.push_back({&r, it->second});
    }
    if (paired.empty())
        fail("annotation files share no headline references");

    AgreementSummary summary;
    double kappa_sum = 0.0;
    int kappa_count = 0;
    for (int q = 0; q < annotate::kBinaryQuestionCount; ++q) {
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(paired.size());
        for (const auto& [a, b] : paired)
            pairs.push_back({a->binary_answers[q] ? 1 : 0,
                             b->binary_answers[q] ? 1 : 0});
        const double k = annotate::cohen_kappa(pairs);
        summary.kappa_per_question.push_back(k);
        kappa_sum += k;
        ++kappa_count;
    }
    summary.kappa_mean = kappa_sum / kappa_count;

    std::vector<double> ord_a, ord_b;
    for (const auto& [a, b] : paired) {
        ord_a.push_back(static_cast<double>(a->partisanship));
        ord_b.push_back(static_cast<double>(b->partisanship));
    }
    summary.partisanship = annotate::spearman_rho(ord_a, ord_b);

    summary.per_class = nlohmann::json::object();
    if (config.gold_corrections) {
        const auto lexicon = annotate::LexiconConfig::load(config.lexicon);
        std::vector<int> predicted, gold;
        std::ifstream in(*config.gold_corrections);
        if (!in.good())
            fail("cannot open gold corrections '" +
                 config.gold_corrections->string() + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const auto text = j.at("text").get<std::string>();
            const auto expected = annotate::correction_from_string(
                j.at("label").get<std::string>());
            predicted.push_back(static_cast<int>(
                annotate::classify_correction(text, lexicon)));
            gold.push_back(static_cast<int>(expected));
        }
        if (predicted.empty()) fail("gold corrections file is empty");

        std::size_t correct = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i)
            if (predicted[i] == gold[i]) ++correct;
        summary.classifier_accuracy =
            static_cast<double>(correct) / static_cast<double>(predicted.size());

        for (const auto label :
             {annotate::CorrectionLabel::explicit_correction,
              annotate::CorrectionLabel::implicit_correction,
              annotate::CorrectionLabel::no_correction,
              annotate::CorrectionLabel::non_engaging}) {
            const auto scores = annotate::evaluate_classifier(
                predicted, gold, static_cast<int>(label));
            summary.per_class[annotate::to_string(label)] = {
                {"precision", scores.precision},
                {"recall", scores.recall},
                {"f1", scores.f1},
                {"degenerate", scores.degenerate}};
        }
    }

    const auto dir = stage_dir(config, "annotate_eval");
    std::filesystem::create_directories(dir);
    nlohmann::json out = summary.to_json();
    out["provenance"] = provenance_json(config, "");
    write_json_file(dir / "agreement.json", out);
    return summary;
}

}  // namespace newsaudit::pipeline
