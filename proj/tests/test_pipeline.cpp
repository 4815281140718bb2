#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "newsaudit/metrics.hpp"
#include "newsaudit/pipeline.hpp"
#include "newsaudit/sha256.hpp"

using namespace newsaudit;
namespace fs = std::filesystem;

namespace {

fs::path data_dir() { return NEWSAUDIT_DATA_DIR; }

fs::path fresh_temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "newsaudit-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

pipeline::RunConfig fixture_config(const fs::path& out_dir) {
    auto config = pipeline::RunConfig::load(data_dir() / "fixture_config.json");
    config.out_dir = out_dir;
    return config;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("sha256 matches the published test vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // incremental updates equal one-shot hashing
    Sha256 h;
    h.update("ab");
    h.update("c");
    CHECK(to_hex(h.finish()) == sha256_hex("abc"));

    // file hashing agrees with buffer hashing
    const auto tmp = fs::temp_directory_path() / "newsaudit-tests" /
                     "hash_me.txt";
    fs::create_directories(tmp.parent_path());
    std::ofstream(tmp, std::ios::binary) << "abc";
    CHECK(pipeline::file_sha256(tmp) == sha256_hex("abc"));

    CHECK(sha256_seed("abc") == 0xba7816bf8f01cfeaULL);
}

TEST_CASE("fixture config loads with resolved paths") {
    const auto config = fixture_config(fresh_temp_dir("cfg"));
    CHECK(fs::exists(config.corpus));
    CHECK(fs::exists(config.lexicon));
    CHECK(config.annotations.size() == 2);
    CHECK(config.providers.size() == 1);
    CHECK(config.providers[0].model_id == "stub-alpha");
    CHECK(config.seed == 42);
    CHECK(config.active_variants().size() == 12);
}

TEST_CASE("config hash is content addressed, not path addressed") {
    const auto a = fixture_config(fresh_temp_dir("hash_a"));
    const auto b = fixture_config(fresh_temp_dir("hash_b"));
    CHECK(a.config_hash() == b.config_hash());

    auto c = a;
    c.seed = 43;
    CHECK(c.config_hash() != a.config_hash());

    auto d = a;
    d.variant_filter = {0, 1};
    CHECK(d.config_hash() != a.config_hash());
}

TEST_CASE("config validation reports missing files and bad variants") {
    auto config = fixture_config(fresh_temp_dir("val"));
    config.corpus = "/nonexistent/corpus.jsonl";
    CHECK_THROWS_AS(config.validate(), pipeline::StageError);

    auto bad_variant = fixture_config(fresh_temp_dir("val2"));
    bad_variant.variant_filter = {12};
    CHECK_THROWS_AS(bad_variant.validate(), pipeline::StageError);

    auto dup = fixture_config(fresh_temp_dir("val3"));
    dup.providers.push_back(dup.providers[0]);
    CHECK_THROWS_AS(dup.validate(), pipeline::StageError);
}

TEST_CASE("stages demand their predecessors by command name") {
    const auto config = fixture_config(fresh_temp_dir("deps"));

    CHECK_THROWS_WITH_AS(pipeline::run_generate(config),
                         doctest::Contains("newsaudit ingest"),
                         pipeline::StageError);

    REQUIRE_FALSE(pipeline::run_ingest(config).skipped);
    CHECK_THROWS_WITH_AS(pipeline::run_score(config),
                         doctest::Contains("newsaudit generate"),
                         pipeline::StageError);

    REQUIRE_FALSE(pipeline::run_generate(config).skipped);
    CHECK_THROWS_WITH_AS(pipeline::run_score(config),
                         doctest::Contains("newsaudit train-axis"),
                         pipeline::StageError);

    CHECK_THROWS_WITH_AS(pipeline::run_report(config),
                         doctest::Contains("newsaudit"),
                         pipeline::StageError);
}

TEST_CASE("full pipeline runs, is resumable, and emits provenance") {
    const auto out = fresh_temp_dir("full");
    const auto config = fixture_config(out);

    CHECK_FALSE(pipeline::run_ingest(config).skipped);
    CHECK_FALSE(pipeline::run_generate(config).skipped);
    CHECK_FALSE(pipeline::run_train_axis(config).skipped);
    CHECK_FALSE(pipeline::run_score(config).skipped);
    const auto report = pipeline::run_report(config);
    CHECK_FALSE(report.stage.skipped);

    for (const char* artifact :
         {"ingest/corpus.jsonl", "ingest/summary.json",
          "generate/headlines.jsonl", "generate/failures.json",
          "train_axis/regressor.json", "train_axis/axis.json",
          "score/metrics.json", "report/report.json", "report/report.txt"})
        CHECK(fs::exists(out / artifact));

    // 14 articles x 12 variants x 3 samples from one stub provider
    const auto headlines =
        gen::load_headlines(out / "generate" / "headlines.jsonl");
    CHECK(headlines.size() == 14 * 12 * 3);

    // every stage is a no-op on rerun
    CHECK(pipeline::run_ingest(config).skipped);
    CHECK(pipeline::run_generate(config).skipped);
    CHECK(pipeline::run_train_axis(config).skipped);
    CHECK(pipeline::run_score(config).skipped);
    CHECK(pipeline::run_report(config).stage.skipped);

    // provenance block embeds the run identity everywhere
    const auto metrics_json =
        nlohmann::json::parse(slurp(out / "score" / "metrics.json"));
    const auto& prov = metrics_json.at("provenance");
    CHECK(prov.at("config_hash") == config.config_hash());
    CHECK(prov.at("seed") == 42);
    CHECK(prov.at("corpus_hash") == pipeline::file_sha256(config.corpus));
    CHECK(prov.at("lexicon_hash") == pipeline::file_sha256(config.lexicon));
    CHECK(prov.at("embedding_provider_id") == "hash-stub-768");
    CHECK(prov.at("axis_hash").get<std::string>().size() == 64);

    const auto report_json =
        nlohmann::json::parse(slurp(out / "report" / "report.json"));
    CHECK(report_json.at("provenance").at("axis_hash") ==
          prov.at("axis_hash"));
    CHECK(report_json.at("rights").size() == 2);

    // the metric bundle holds a valid report pair
    const auto ati = metrics::AtiReport::from_json(metrics_json.at("ati"));
    ati.validate(1e-9);
    const auto fot = metrics::FotReport::from_json(metrics_json.at("fot"));
    fot.validate();
    CHECK(ati.corrections.count("stub-alpha") == 1);
    CHECK(fot.behavior.count("stub-alpha") == 1);
}

TEST_CASE("two runs in different directories are byte-identical") {
    const auto out_a = fresh_temp_dir("det_a");
    const auto out_b = fresh_temp_dir("det_b");
    const auto config_a = fixture_config(out_a);
    const auto config_b = fixture_config(out_b);

    for (const auto* config : {&config_a, &config_b}) {
        pipeline::run_ingest(*config);
        pipeline::run_generate(*config);
        pipeline::run_train_axis(*config);
        pipeline::run_score(*config);
        pipeline::run_report(*config);
    }

    for (const char* artifact :
         {"generate/headlines.jsonl", "train_axis/axis.json",
          "score/metrics.json", "report/report.json", "report/report.txt"})
        CHECK(slurp(out_a / artifact) == slurp(out_b / artifact));
}

TEST_CASE("changing the seed changes the axis but keeps the run valid") {
    const auto out = fresh_temp_dir("seed_change");
    auto config = fixture_config(out);
    pipeline::run_ingest(config);
    pipeline::run_generate(config);
    pipeline::run_train_axis(config);
    const auto axis_a = slurp(out / "train_axis" / "axis.json");

    config.seed = 7;
    CHECK_FALSE(pipeline::run_train_axis(config).skipped);
    const auto axis_b = slurp(out / "train_axis" / "axis.json");
    CHECK(axis_a != axis_b);
}

TEST_CASE("editing an input marks downstream stages stale") {
    const auto out = fresh_temp_dir("stale");
    const auto config = fixture_config(out);
    pipeline::run_ingest(config);
    pipeline::run_generate(config);
    pipeline::run_train_axis(config);
    pipeline::run_score(config);

    // corrupt the generated headlines behind the manifest's back
    const auto headlines_path = out / "generate" / "headlines.jsonl";
    std::ofstream(headlines_path, std::ios::app) << "\n";
    CHECK_THROWS_WITH_AS(pipeline::run_score(config),
                         doctest::Contains("stale"), pipeline::StageError);
}

TEST_CASE("a changed corpus is detected transitively") {
    const auto out = fresh_temp_dir("stale_corpus");
    auto config = fixture_config(out);

    // copy the corpus so the fixture file is untouched
    const auto corpus_copy = out / "corpus_copy.jsonl";
    fs::copy_file(config.corpus, corpus_copy);
    config.corpus = corpus_copy;

    pipeline::run_ingest(config);
    pipeline::run_generate(config);

    std::ofstream(corpus_copy, std::ios::app)
        << R"({"id":"a99","outlet":{"name":"New","audience":"local","bias":"neutral","factuality":"high"},"original_headline":"H","body":"B","published_date":"2024-09-12","url":"u"})"
        << "\n";

    // generate now refuses to run against the stale ingest artifacts
    CHECK_THROWS_WITH_AS(pipeline::run_generate(config),
                         doctest::Contains("re-run `newsaudit ingest`"),
                         pipeline::StageError);

    // re-running ingest clears the staleness
    CHECK_FALSE(pipeline::run_ingest(config).skipped);
    CHECK_FALSE(pipeline::run_generate(config).skipped);
}

TEST_CASE("annotate-eval computes agreement and classifier validation") {
    const auto config = fixture_config(fresh_temp_dir("agreement"));
    const auto summary = pipeline::run_annotate_eval(config);

    CHECK(summary.kappa_per_question.size() == 16);
    for (double k : summary.kappa_per_question) {
        CHECK(k >= -1.0);
        CHECK(k <= 1.0);
    }
    // the two bundled annotators mostly agree
    CHECK(summary.kappa_mean > 0.5);
    CHECK(summary.partisanship.rho > 0.5);
    CHECK(summary.partisanship.p_value < 0.05);
    // the default lexicon reproduces the bundled gold labels
    CHECK(summary.classifier_accuracy == doctest::Approx(1.0));
    CHECK(summary.per_class.at("explicit").at("f1") == doctest::Approx(1.0));

    CHECK(fs::exists(config.out_dir / "annotate_eval" / "agreement.json"));
}

TEST_CASE("variant filter narrows the generation matrix") {
    const auto out = fresh_temp_dir("filtered");
    auto config = fixture_config(out);
    config.variant_filter = {0, 5, 7};
    pipeline::run_ingest(config);
    pipeline::run_generate(config);
    const auto headlines =
        gen::load_headlines(out / "generate" / "headlines.jsonl");
    CHECK(headlines.size() == 14 * 3 * 3);
    for (const auto& h : headlines) {
        const int v = h.variant.index();
        CHECK((v == 0 || v == 5 || v == 7));
    }
}
