// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each criterion carries its own wall-clock budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "newsaudit/annotate.hpp"
#include "newsaudit/axis.hpp"
#include "newsaudit/embed.hpp"
#include "newsaudit/metrics.hpp"
#include "newsaudit/pipeline.hpp"
#include "newsaudit/rights.hpp"
#include "newsaudit/rng.hpp"
#include "oracles.hpp"

using namespace newsaudit;
namespace fs = std::filesystem;

namespace {

fs::path data_dir() { return NEWSAUDIT_DATA_DIR; }

struct Checker {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void expect_near(double got, double want, double tol,
                     const std::string& what) {
        if (!(std::fabs(got - want) <= tol)) {
            std::ostringstream os;
            os << what << " (got " << got << ", want " << want << " +/- "
               << tol << ")";
            failures.push_back(os.str());
        }
    }
};

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;
    std::function<void(Checker&)> body;
};

fs::path fresh_temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "newsaudit-acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return "<missing file: " + path.string() + ">";
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

std::vector<double> random_values(std::mt19937& rng, std::size_t n,
                                  double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

embed::EmbeddingVector unit_stub(std::uint64_t seed, std::size_t dim) {
    SplitMix64 rng(seed);
    embed::EmbeddingVector v;
    v.values.resize(dim);
    double ss = 0.0;
    for (double& x : v.values) {
        x = rng.next_symmetric();
        ss += x * x;
    }
    for (double& x : v.values) x /= std::sqrt(ss);
    return v;
}

// ---- criterion 1: correction classifier replays the example tables ----

void criterion_correction_classifier(Checker& check) {
    using annotate::CorrectionLabel;
    const auto lexicon = annotate::LexiconConfig::defaults();
    auto classify = [&](const char* text) {
        return annotate::classify_correction(text, lexicon);
    };

    struct Case {
        const char* text;
        CorrectionLabel expected;
    };
    // the nine single-label examples
    const Case table1[] = {
        {"Trump and some Republicans spread false claims that migrants in "
         "Ohio are eating people's pets, despite officials denying the "
         "reports.",
         CorrectionLabel::explicit_correction},
        {"Trump falsely claims immigrants are eating pets in US, Harris and "
         "debate moderator fact-check him",
         CorrectionLabel::explicit_correction},
        {"Ohio Leaders Debunk Baseless Claims of Haitian Immigrants Eating "
         "Pets as Trump Amplifies Falsehoods",
         CorrectionLabel::explicit_correction},
        {"Trump Repeats Debunked Claims About Haitian Immigrants During "
         "Debate",
         CorrectionLabel::implicit_correction},
        {"Ohio Leaders Deny Claims of Haitian Migrants Eating Pets",
         CorrectionLabel::implicit_correction},
        {"Trump Doubles Down on Debunked Claim That Immigrants \"Eat Pets\" "
         "During First Debate with Harris",
         CorrectionLabel::implicit_correction},
        {"Findlay Mayor Says City Managing Growing Haitian Population Amid "
         "Springfield Controversy",
         CorrectionLabel::no_correction},
        {"Trump's 'Eating the Dogs' Claim Sparks Dip in Approval Among Focus "
         "Group Voters",
         CorrectionLabel::no_correction},
        {"Trump Renews Claim Haitian Migrants in Ohio Are Eating Pets",
         CorrectionLabel::no_correction},
    };
    int hits = 0;
    for (const auto& c : table1) {
        if (classify(c.text) == c.expected)
            ++hits;
        else
            check.expect(false, std::string("misclassified: ") + c.text);
    }

    // the three original/generated shift pairs
    struct PairCase {
        const char* original;
        CorrectionLabel original_expected;
        const char* generated;
        CorrectionLabel generated_expected;
    };
    const PairCase table2[] = {
        {"At debate, Trump shares falsehoods about pet-eating, infanticide",
         CorrectionLabel::explicit_correction,
         "Trump Makes False Claims, Spreads Viral Misinformation During "
         "Debate With Harris; Moderators Fact-Check Statements",
         CorrectionLabel::explicit_correction},
        {"Springfield Haitians, other residents respond to being at center "
         "of immigration debate",
         CorrectionLabel::non_engaging,
         "Trump's Unsubstantiated Claims About Haitian Immigrants Spark "
         "Controversy in Springfield",
         CorrectionLabel::implicit_correction},
        {"'They're Eating the Cats': Trump Repeats False Claim About "
         "Immigrants",
         CorrectionLabel::explicit_correction,
         "Trump Repeats Baseless Claim of Haitian Immigrants Eating Pets in "
         "Ohio",
         CorrectionLabel::implicit_correction},
    };
    for (const auto& c : table2) {
        const bool ok = classify(c.original) == c.original_expected &&
                        classify(c.generated) == c.generated_expected;
        if (ok)
            ++hits;
        else
            check.expect(false,
                         std::string("pair labels diverged: ") + c.original);
    }
    check.expect(hits == 12, "expected 12/12 table replays");
}

// ---- criterion 2: rights-engine fixture replay -------------------------

void criterion_rights_replay(Checker& check) {
    std::ifstream in(data_dir() / "reference_metrics.json");
    check.expect(in.good(), "reference_metrics.json present");
    nlohmann::json tables;
    in >> tables;

    const auto ati_report = metrics::load_reference_ati(tables);
    const auto fot_report = metrics::load_reference_fot(tables);
    const rights::ThresholdConfig cfg;

    const auto ati = rights::assess_access_to_information(ati_report, cfg);
    check.expect(ati.scale == rights::Rating::medium, "ati scale medium");
    check.expect(ati.scope == rights::Rating::high, "ati scope high");
    check.expect(ati.likelihood == rights::Rating::medium,
                 "ati likelihood medium");

    const auto fot = rights::assess_freedom_of_thought(fot_report, cfg);
    check.expect(fot.scale == rights::Rating::high, "fot scale high");
    check.expect(fot.scope == rights::Rating::medium, "fot scope medium");
    check.expect(fot.likelihood == rights::Rating::high,
                 "fot likelihood high");
}

// ---- criterion 3: statistics oracles -----------------------------------

void criterion_statistics_oracles(Checker& check) {
    std::mt19937 rng(2024);

    int kappa_cases = 0;
    while (kappa_cases < 120) {
        std::uniform_int_distribution<int> n_dist(1, 30);
        std::uniform_int_distribution<int> cat_dist(0, 3);
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0, n = n_dist(rng); i < n; ++i)
            pairs.push_back({cat_dist(rng), cat_dist(rng)});
        const double got = annotate::cohen_kappa(pairs);
        const double want = oracle::cohen_kappa(pairs);
        check.expect_near(got, want, 1e-12, "cohen_kappa oracle");
        ++kappa_cases;
    }

    int rho_cases = 0;
    while (rho_cases < 120) {
        std::uniform_int_distribution<int> n_dist(3, 25);
        std::uniform_int_distribution<int> v_dist(0, 9);
        std::vector<double> x, y;
        for (int i = 0, n = n_dist(rng); i < n; ++i) {
            x.push_back(v_dist(rng));
            y.push_back(v_dist(rng));
        }
        const bool x_const =
            std::all_of(x.begin(), x.end(),
                        [&](double v) { return v == x.front(); });
        const bool y_const =
            std::all_of(y.begin(), y.end(),
                        [&](double v) { return v == y.front(); });
        if (x_const || y_const) continue;
        check.expect_near(annotate::spearman_rho(x, y).rho,
                          oracle::spearman_rho(x, y), 1e-12,
                          "spearman_rho oracle");
        ++rho_cases;
    }

    std::bernoulli_distribution coin(0.4);
    for (int trial = 0; trial < 120; ++trial) {
        std::uniform_int_distribution<int> n_dist(1, 40);
        std::vector<int> predicted, gold;
        for (int i = 0, n = n_dist(rng); i < n; ++i) {
            predicted.push_back(coin(rng) ? 1 : 0);
            gold.push_back(coin(rng) ? 1 : 0);
        }
        const auto s = annotate::evaluate_classifier(predicted, gold, 1);
        const auto c = oracle::count_confusion(predicted, gold, 1);
        const double n = static_cast<double>(predicted.size());
        check.expect_near(s.accuracy, (c.tp + c.tn) / n, 1e-12,
                          "classifier accuracy oracle");
        const double p = (c.tp + c.fp) > 0 ? c.tp / (c.tp + c.fp) : 0.0;
        const double r = (c.tp + c.fn) > 0 ? c.tp / (c.tp + c.fn) : 0.0;
        check.expect_near(s.precision, p, 1e-12, "precision oracle");
        check.expect_near(s.recall, r, 1e-12, "recall oracle");
        check.expect_near(s.f1, (p + r) > 0 ? 2 * p * r / (p + r) : 0.0,
                          1e-12, "f1 oracle");
    }

    std::uniform_real_distribution<double> score_dist(-2.0, 2.0);
    int sigma_cases = 0;
    while (sigma_cases < 120) {
        std::uniform_int_distribution<int> group_count(1, 6);
        std::uniform_int_distribution<int> group_size(1, 8);
        std::map<std::string, std::vector<double>> groups;
        bool usable = false;
        for (int g = 0, n = group_count(rng); g < n; ++g) {
            std::vector<double> xs;
            for (int i = 0, m = group_size(rng); i < m; ++i)
                xs.push_back(score_dist(rng));
            if (xs.size() >= 2) usable = true;
            groups["g" + std::to_string(g)] = xs;
        }
        if (!usable) continue;
        check.expect_near(axis::estimate_sigma(groups),
                          oracle::pooled_sigma(groups), 1e-12,
                          "estimate_sigma oracle");
        ++sigma_cases;
    }

    std::uniform_real_distribution<double> v_dist(-5.0, 5.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> n_dist(1, 20);
        std::vector<double> population;
        for (int i = 0, n = n_dist(rng); i < n; ++i)
            population.push_back(v_dist(rng));
        double a = v_dist(rng);
        double b = v_dist(rng);
        if (a > b) std::swap(a, b);
        check.expect(embed::percentile_rank(a, population) <=
                         embed::percentile_rank(b, population),
                     "percentile_rank monotone");
    }
}

// ---- criterion 4: regressor numerics -----------------------------------

void criterion_regressor_numerics(Checker& check) {
    for (int seed = 1; seed <= 20; ++seed) {
        axis::RegressorConfig cfg;  // production widths 14-64-128-768
        cfg.seed = static_cast<std::uint64_t>(seed);
        axis::Regressor reg(cfg);
        std::mt19937 rng(seed * 131);
        axis::TrainingPair pair{
            random_values(rng, 14, 1.0),
            unit_stub(static_cast<std::uint64_t>(seed) + 5000, 768).values};
        const double err =
            reg.finite_difference_check(pair, 1e-5, 24, seed * 977);
        check.expect(err < 1e-4, "gradient check seed " +
                                     std::to_string(seed) + " err " +
                                     std::to_string(err));
    }

    axis::RegressorConfig cfg;
    cfg.epochs = 2000;
    cfg.seed = 12;
    axis::TrainingSet data;
    for (int i = 0; i < 14; ++i) {
        std::vector<double> one_hot(14, 0.0);
        one_hot[i] = 1.0;
        data.emplace_back(one_hot,
                          unit_stub(static_cast<std::uint64_t>(i) + 400, 768)
                              .values);
    }
    const auto reg = axis::train_regressor(data, cfg);
    check.expect(reg.mse(data) < 1e-3,
                 "memorization mse " + std::to_string(reg.mse(data)));

    axis::RegressorConfig small;
    small.layer_widths = {14, 16, 16, 32};
    small.epochs = 300;
    small.seed = 77;
    axis::TrainingSet small_data(data.begin(), data.begin() + 6);
    for (auto& [x, y] : small_data) y.resize(32);
    const auto a = axis::train_regressor(small_data, small);
    const auto b = axis::train_regressor(small_data, small);
    check.expect(a.loss_curve() == b.loss_curve(),
                 "identical seeds give bit-identical loss curves");
}

// ---- criterion 5: axis geometry ----------------------------------------

void criterion_axis_geometry(Checker& check) {
    std::mt19937 rng(909);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dim = 64;
        const auto left =
            unit_stub(static_cast<std::uint64_t>(trial) * 2 + 1, dim);
        const auto right =
            unit_stub(static_cast<std::uint64_t>(trial) * 2 + 2, dim);
        const auto ax = axis::build_axis_from_embeddings(left, right);

        check.expect(std::fabs(axis::score_headline(ax, left) + 1.0) < 1e-9,
                     "left pole scores -1");
        check.expect(std::fabs(axis::score_headline(ax, right) - 1.0) < 1e-9,
                     "right pole scores +1");

        const auto swapped = axis::build_axis_from_embeddings(right, left);
        embed::EmbeddingVector probe{random_values(rng, dim, 2.0)};
        check.expect(std::fabs(axis::score_headline(swapped, probe) +
                               axis::score_headline(ax, probe)) < 1e-9,
                     "pole swap negates scores");

        const auto shift = random_values(rng, dim, 3.0);
        auto left_shift = left;
        auto right_shift = right;
        auto probe_shift = probe;
        for (std::size_t i = 0; i < dim; ++i) {
            left_shift.values[i] += shift[i];
            right_shift.values[i] += shift[i];
            probe_shift.values[i] += shift[i];
        }
        const auto ax_shift =
            axis::build_axis_from_embeddings(left_shift, right_shift);
        check.expect(std::fabs(axis::score_headline(ax_shift, probe_shift) -
                               axis::score_headline(ax, probe)) < 1e-9,
                     "translation covariance");

        // ascending interpolation ladder
        double prev = -2.0;
        bool monotone = true;
        for (int step = 0; step <= 12; ++step) {
            const double t = step / 12.0;
            embed::EmbeddingVector e;
            e.values.resize(dim);
            for (std::size_t i = 0; i < dim; ++i)
                e.values[i] =
                    left.values[i] + t * (right.values[i] - left.values[i]);
            const double s = axis::score_headline(ax, e);
            if (s <= prev) monotone = false;
            prev = s;
        }
        check.expect(monotone, "segment scores strictly increase");
    }
}

// ---- criterion 6: metric bounds and identities --------------------------

void criterion_metric_bounds(Checker& check) {
    using annotate::CorrectionLabel;
    using annotate::IdentityMentions;
    using embed::EmbeddingVector;

    std::mt19937 rng(606);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_vec = [&](std::size_t dim) {
        EmbeddingVector v;
        v.values.resize(dim);
        for (double& x : v.values) x = normal(rng);
        return v;
    };

    // diversity identities
    const auto x = random_vec(16);
    check.expect_near(metrics::diversity({{"a", {x, x, x}}}), 0.0, 1e-12,
                      "diversity of identical embeddings");
    EmbeddingVector e1{std::vector<double>{1.0, 0.0}};
    EmbeddingVector e2{std::vector<double>{0.0, 1.0}};
    check.expect_near(metrics::diversity({{"a", {e1, e2}}}), 1.0, 1e-12,
                      "diversity of an orthogonal pair");

    // tension bounds and the tie rule
    check.expect_near(metrics::tension({{"a", {x, {x, x, x}}}}), 0.5, 1e-12,
                      "tension tie case");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EmbeddingVector> generated;
        std::uniform_int_distribution<int> n_dist(2, 8);
        for (int i = 0, n = n_dist(rng); i < n; ++i)
            generated.push_back(random_vec(12));
        const double t =
            metrics::tension({{"a", {random_vec(12), generated}}});
        check.expect(t >= 0.0 && t <= 1.0, "tension within [0, 1]");
    }

    // fidelity is 1 whenever headline and article share text, regardless
    // of the provider identity
    embed::HashStubEmbedder provider_a("provider-a", 96);
    embed::HashStubEmbedder provider_b("provider-b", 64);
    for (auto* provider :
         std::initializer_list<embed::EmbeddingProvider*>{&provider_a,
                                                          &provider_b}) {
        const auto emb = provider->embed_text("identical text");
        std::vector<std::pair<EmbeddingVector, EmbeddingVector>> same_pair{
            {emb, emb}};
        check.expect_near(metrics::fidelity(same_pair), 1.0, 1e-12,
                          "fidelity of identical text");
    }

    // identity_delta antisymmetry on random fixtures
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::pair<IdentityMentions, IdentityMentions>> fwd, rev;
        std::uniform_int_distribution<int> n_dist(1, 25);
        for (int i = 0, n = n_dist(rng); i < n; ++i) {
            IdentityMentions a{coin(rng), coin(rng), coin(rng)};
            IdentityMentions b{coin(rng), coin(rng), coin(rng)};
            fwd.push_back({a, b});
            rev.push_back({b, a});
        }
        const auto df = metrics::identity_delta(fwd);
        const auto dr = metrics::identity_delta(rev);
        check.expect_near(df.ethnicity, -dr.ethnicity, 1e-12,
                          "identity_delta antisymmetry (ethnicity)");
        check.expect_near(df.immigrant, -dr.immigrant, 1e-12,
                          "identity_delta antisymmetry (immigrant)");
        check.expect_near(df.migrant, -dr.migrant, 1e-12,
                          "identity_delta antisymmetry (migrant)");
    }

    // correction triples over random label mixes
    std::uniform_int_distribution<int> count(0, 30);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<CorrectionLabel> labels;
        labels.insert(labels.end(), count(rng),
                      CorrectionLabel::no_correction);
        labels.insert(labels.end(), count(rng),
                      CorrectionLabel::implicit_correction);
        labels.insert(labels.end(), count(rng),
                      CorrectionLabel::explicit_correction);
        labels.insert(labels.end(), count(rng),
                      CorrectionLabel::non_engaging);
        const auto rates = metrics::correction_rates({{"m", labels}});
        if (rates.empty()) continue;
        const auto& r = rates.at("m");
        check.expect(std::fabs(r.no_correction + r.implicit_correction +
                               r.explicit_correction - 1.0) < 1e-9,
                     "correction triple sums to 1");
    }
}

// ---- criterion 7: end-to-end determinism --------------------------------

void criterion_end_to_end(Checker& check) {
    auto run_pipeline = [&](const fs::path& out) {
        auto config =
            pipeline::RunConfig::load(data_dir() / "fixture_config.json");
        config.out_dir = out;
        pipeline::run_ingest(config);
        pipeline::run_generate(config);
        pipeline::run_train_axis(config);
        pipeline::run_score(config);
        pipeline::run_report(config);
    };

    const auto out_a = fresh_temp_dir("run_a");
    const auto out_b = fresh_temp_dir("run_b");
    run_pipeline(out_a);
    run_pipeline(out_b);

    const auto report_a = slurp(out_a / "report" / "report.json");
    const auto report_b = slurp(out_b / "report" / "report.json");
    check.expect(report_a == report_b,
                 "consecutive runs produce byte-identical report.json");
    check.expect(slurp(out_a / "report" / "report.txt") ==
                     slurp(out_b / "report" / "report.txt"),
                 "consecutive runs produce byte-identical report.txt");

    check.expect(report_a == slurp(data_dir() / "golden" / "report.json"),
                 "report.json matches the checked-in golden report");
    check.expect(slurp(out_a / "report" / "report.txt") ==
                     slurp(data_dir() / "golden" / "report.txt"),
                 "report.txt matches the checked-in golden report");
}

// ---- criterion 8: identity tokenization ---------------------------------

void criterion_identity_tokenization(Checker& check) {
    const auto lexicon = annotate::LexiconConfig::defaults();
    const auto a = annotate::detect_identity(
        "Officials respond as immigrants arrive", lexicon);
    check.expect(a.immigrant, "'immigrants' sets immigrant");
    check.expect(!a.migrant, "'immigrants' must not set migrant");

    const auto b =
        annotate::detect_identity("Officials respond as migrants arrive",
                                  lexicon);
    check.expect(b.migrant, "standalone 'migrants' sets migrant");
    check.expect(!b.immigrant, "'migrants' must not set immigrant");
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "correction classifier replays the example tables (12/12)", 1.0,
         criterion_correction_classifier},
        {2, "rights engine reproduces the documented ordinal ratings", 1.0,
         criterion_rights_replay},
        {3, "statistics match brute-force oracles to 1e-12", 10.0,
         criterion_statistics_oracles},
        {4, "regressor gradients, memorization, and determinism", 60.0,
         criterion_regressor_numerics},
        {5, "axis geometry holds to 1e-9 on randomized axes", 5.0,
         criterion_axis_geometry},
        {6, "metric bounds and identities hold on random fixtures", 10.0,
         criterion_metric_bounds},
        {7,
         "end-to-end pipeline is byte-stable and matches the golden report",
         120.0, criterion_end_to_end},
        {8, "identity tokenization separates immigrant from migrant", 1.0,
         criterion_identity_tokenization},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        Checker check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.body(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        if (elapsed > criterion.budget_seconds)
            check.failures.push_back(
                "exceeded budget of " +
                std::to_string(criterion.budget_seconds) + "s");

        if (check.failures.empty()) {
            std::printf("PASS criterion %d: %s [%.2fs]\n", criterion.id,
                        criterion.title.c_str(), elapsed);
        } else {
            ++failed;
            std::printf("FAIL criterion %d: %s [%.2fs]\n", criterion.id,
                        criterion.title.c_str(), elapsed);
            for (const auto& f : check.failures)
                std::printf("       - %s\n", f.c_str());
        }
    }

    if (failed > 0) {
        std::printf("%d criterion(s) failed\n", failed);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
