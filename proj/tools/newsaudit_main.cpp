#include <cstdio>
#include <exception>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "newsaudit/pipeline.hpp"

namespace {

using newsaudit::pipeline::RunConfig;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> models;
    std::vector<int> variants;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Run config JSON file")
        ->required();
    cmd->add_option("--out", flags.out_dir,
                    "Output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "Run seed (overrides config)")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--models", flags.models,
                    "Restrict to these provider model ids")
        ->delimiter(',');
    cmd->add_option("--variants", flags.variants,
                    "Restrict to these prompt variant indices (0-11)")
        ->delimiter(',');
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig config = RunConfig::load(flags.config_path);
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.seed_set) config.seed = flags.seed;
    if (!flags.variants.empty()) config.variant_filter = flags.variants;
    if (!flags.models.empty()) {
        std::set<std::string> wanted(flags.models.begin(),
                                     flags.models.end());
        std::vector<newsaudit::gen::ProviderDescriptor> kept;
        for (const auto& p : config.providers) {
            if (wanted.erase(p.model_id) > 0) kept.push_back(p);
        }
        if (!wanted.empty())
            throw newsaudit::pipeline::StageError(
                "unknown model id '" + *wanted.begin() + "' in --models");
        config.providers = std::move(kept);
    }
    config.validate();
    return config;
}

void print_result(const newsaudit::pipeline::StageResult& result) {
    std::printf("%s\n", result.message.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "newsaudit: rights-risk audit pipeline for LLM-generated news "
        "headlines"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string fail_on;

    auto* ingest = app.add_subcommand("ingest", "Validate and load the corpus");
    add_common_flags(ingest, flags);

    auto* generate = app.add_subcommand(
        "generate", "Generate headlines across the prompt matrix");
    add_common_flags(generate, flags);

    auto* annotate_eval = app.add_subcommand(
        "annotate-eval",
        "Inter-annotator agreement and classifier validation");
    add_common_flags(annotate_eval, flags);

    auto* train_axis = app.add_subcommand(
        "train-axis", "Train the label regressor and build the axis");
    add_common_flags(train_axis, flags);

    auto* score = app.add_subcommand("score", "Compute the metric bundles");
    add_common_flags(score, flags);

    auto* report = app.add_subcommand(
        "report", "Aggregate metric bundles into rights risk profiles");
    add_common_flags(report, flags);
    report->add_option("--fail-on", fail_on,
                       "Exit nonzero when any rating reaches this level")
        ->check(CLI::IsMember({"high", "medium"}));

    auto* run = app.add_subcommand(
        "run", "Run ingest, generate, train-axis, score, and report");
    add_common_flags(run, flags);
    run->add_option("--fail-on", fail_on,
                    "Exit nonzero when any rating reaches this level")
        ->check(CLI::IsMember({"high", "medium"}));

    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = resolve_config(flags);
        using namespace newsaudit::pipeline;

        auto finish_report = [&](const ReportOutcome& outcome) {
            print_result(outcome.stage);
            if (fail_on.empty()) return 0;
            const auto threshold =
                newsaudit::rights::rating_from_string(fail_on);
            if (outcome.max_rating >= threshold) {
                std::fprintf(stderr,
                             "fail-on %s: a rating at or above this level is "
                             "present\n",
                             fail_on.c_str());
                return 2;
            }
            return 0;
        };

        if (ingest->parsed()) {
            print_result(run_ingest(config));
        } else if (generate->parsed()) {
            print_result(run_generate(config));
        } else if (annotate_eval->parsed()) {
            const auto summary = run_annotate_eval(config);
            std::printf("kappa mean %.4f, partisanship rho %.4f (p %.4g), "
                        "classifier accuracy %.4f\n",
                        summary.kappa_mean, summary.partisanship.rho,
                        summary.partisanship.p_value,
                        summary.classifier_accuracy);
        } else if (train_axis->parsed()) {
            print_result(run_train_axis(config));
        } else if (score->parsed()) {
            print_result(run_score(config));
        } else if (report->parsed()) {
            return finish_report(run_report(config));
        } else if (run->parsed()) {
            print_result(run_ingest(config));
            print_result(run_generate(config));
            print_result(run_train_axis(config));
            print_result(run_score(config));
            return finish_report(run_report(config));
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
