#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "newsaudit/annotate.hpp"
#include "newsaudit/axis.hpp"
#include "newsaudit/embed.hpp"
#include "newsaudit/genclient.hpp"
#include "newsaudit/rights.hpp"

namespace newsaudit::pipeline {

class StageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AxisTrainingConfig {
    std::vector<int> layer_widths = {14, 64, 128, 768};
    double learning_rate = 0.001;
    int epochs = 500;
    int batch_size = 0;
    // Shift-significance parameters used at scoring time.
    double z = 1.96;
    double neutral_eps = 0.05;
    bool include_left_center = false;

    nlohmann::json to_json() const;
    static AxisTrainingConfig from_json(const nlohmann::json& j);
};

// Resolved run configuration. Relative paths in the config file are
// interpreted against the file's directory; out_dir against the working
// directory.
struct RunConfig {
    std::filesystem::path corpus;
    std::filesystem::path lexicon;
    std::vector<std::filesystem::path> annotations;
    std::optional<std::filesystem::path> gold_corrections;
    std::vector<gen::ProviderDescriptor> providers;
    embed::EmbeddingProviderConfig embedding;
    AxisTrainingConfig axis;
    rights::ThresholdConfig thresholds;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 42;
    std::vector<int> variant_filter;  // empty = all 12

    static RunConfig load(const std::filesystem::path& config_path);
    void validate() const;

    // Active prompt variants after filtering.
    std::vector<corpus::PromptVariant> active_variants() const;

    // Content-addressed canonical form: file contents are hashed, paths
    // are not recorded, so the hash is stable across checkouts.
    nlohmann::json canonical_json() const;
    std::string config_hash() const;

    rights::RunProvenance provenance_base() const;
};

std::string file_sha256(const std::filesystem::path& path);

struct StageResult {
    bool skipped = false;
    std::string message;
};

StageResult run_ingest(const RunConfig& config);
StageResult run_generate(const RunConfig& config);
StageResult run_train_axis(const RunConfig& config);
StageResult run_score(const RunConfig& config);

struct ReportOutcome {
    StageResult stage;
    rights::Rating max_rating = rights::Rating::low;
};

ReportOutcome run_report(const RunConfig& config);

struct AgreementSummary {
    std::vector<double> kappa_per_question;
    double kappa_mean = 0.0;
    annotate::SpearmanResult partisanship;
    double classifier_accuracy = 0.0;
    nlohmann::json per_class;  // precision/recall/f1 per correction label

    nlohmann::json to_json() const;
};

// Inter-annotator agreement plus keyword-classifier validation against the
// gold correction labels. Standalone; not part of the resumable chain.
AgreementSummary run_annotate_eval(const RunConfig& config);

}  // namespace newsaudit::pipeline
