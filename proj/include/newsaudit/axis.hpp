#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "newsaudit/annotate.hpp"
#include "newsaudit/embed.hpp"

namespace newsaudit::axis {

class AxisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RegressorConfig {
    // Input, hidden..., output widths. Hidden layers use the rectifier,
    // the output layer is linear.
    std::vector<int> layer_widths = {14, 64, 128, 768};
    double learning_rate = 0.001;
    int epochs = 2000;
    int batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 0;
    // Adaptive-moment parameters.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const;
    nlohmann::json to_json() const;
    static RegressorConfig from_json(const nlohmann::json& j);
};

using TrainingPair = std::pair<std::vector<double>, std::vector<double>>;
using TrainingSet = std::vector<TrainingPair>;

// Fully connected feedforward regressor trained with mean squared error
// and the Adam update rule. Initialization, data order, and updates are
// fixed by the seed, so identical inputs give bit-identical weights and
// loss curves.
class Regressor {
public:
    explicit Regressor(RegressorConfig config);

    const RegressorConfig& config() const { return config_; }
    int input_dimension() const { return config_.layer_widths.front(); }
    int output_dimension() const { return config_.layer_widths.back(); }

    std::vector<double> forward(std::span<const double> input) const;
    embed::EmbeddingVector project(const annotate::LabelVector& label) const;

    // MSE over all samples and output components.
    double mse(const TrainingSet& data) const;

    // Runs config().epochs passes over the data in the given order.
    // Throws on non-finite loss.
    void train(const TrainingSet& data);

    const std::vector<std::pair<int, double>>& loss_curve() const {
        return loss_curve_;
    }

    // Max relative disagreement between backpropagated gradients and
    // central finite differences of the per-pair loss. Checks every
    // parameter when sample_per_tensor == 0, otherwise a seeded random
    // subset of each weight matrix and bias vector.
    double finite_difference_check(const TrainingPair& pair, double epsilon,
                                   std::size_t sample_per_tensor = 0,
                                   std::uint64_t sample_seed = 0) const;

    nlohmann::json to_json() const;
    static Regressor from_json(const nlohmann::json& j);

    // Hash of the serialized parameters; stable provenance identifier.
    std::string content_hash() const;

private:
    struct Tensors {
        // One entry per layer: weights row-major (out x in), then biases.
        std::vector<std::vector<double>> w;
        std::vector<std::vector<double>> b;
    };

    void initialize_parameters();
    // Mean loss over the batch plus parameter gradients.
    double backward(const TrainingSet& batch, Tensors& grads) const;

    RegressorConfig config_;
    Tensors params_;
    Tensors adam_m_;
    Tensors adam_v_;
    std::uint64_t adam_step_ = 0;
    std::vector<std::pair<int, double>> loss_curve_;
};

Regressor train_regressor(const TrainingSet& pairs,
                          const RegressorConfig& config);

// Mean label vector of left-annotated records, and the observed label
// vector farthest from it in Manhattan distance (ties resolved to the
// lexicographically smallest vector).
std::pair<annotate::LabelVector, annotate::LabelVector> select_poles(
    std::span<const annotate::AnnotationRecord> records,
    bool include_left_center = false);

struct PartisanshipAxis {
    annotate::LabelVector left_pole_label;
    annotate::LabelVector right_pole_label;
    embed::EmbeddingVector left_emb;
    embed::EmbeddingVector right_emb;
    embed::EmbeddingVector direction;  // unit vector left -> right
    embed::EmbeddingVector midpoint;
    double half_length = 0.0;

    nlohmann::json to_json() const;
    static PartisanshipAxis from_json(const nlohmann::json& j);
    std::string content_hash() const;
};

// Projects the poles through the regressor and fixes the scoring geometry
// so the left pole lands at -1 and the right pole at +1.
PartisanshipAxis build_axis(const Regressor& regressor,
                            const annotate::LabelVector& left_pole,
                            const annotate::LabelVector& right_pole);

PartisanshipAxis build_axis_from_embeddings(
    embed::EmbeddingVector left_emb, embed::EmbeddingVector right_emb,
    annotate::LabelVector left_pole_label = {},
    annotate::LabelVector right_pole_label = {});

// Signed projection onto the axis: negative = left-leaning, positive =
// right-leaning, unclamped.
double score_headline(const PartisanshipAxis& axis,
                      const embed::EmbeddingVector& e);

enum class ShiftCategory { amplification, preservation, flip };

const char* to_string(ShiftCategory c);

struct ShiftAssessment {
    ShiftCategory category = ShiftCategory::preservation;
    bool significant = false;
    double delta = 0.0;
    double sigma = 0.0;
};

// Categorizes the move from an original score to a generated score. A flip
// requires a sign change with both scores outside the neutral band; a move
// outward (from agreement or from neutral) is amplification; anything else
// preserves. Significance is |delta| > z * sigma.
ShiftAssessment assess_shift(double s_orig, double s_gen, double sigma,
                             double z, double neutral_eps);

// Pooled within-group standard deviation (n-1 denominator), over groups
// with at least two scores.
double estimate_sigma(const std::map<std::string, std::vector<double>>& groups);

}  // namespace newsaudit::axis
