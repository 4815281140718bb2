#include "newsaudit/axis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "newsaudit/rng.hpp"
#include "newsaudit/sha256.hpp"

namespace newsaudit::axis {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw AxisError(msg); }

constexpr double kDegenerateAxisNorm = 1e-9;

}  // namespace

void RegressorConfig::validate() const {
    if (layer_widths.size() < 2)
        fail("regressor needs at least input and output widths");
    for (int w : layer_widths)
        if (w <= 0) fail("layer widths must be positive");
    if (learning_rate <= 0.0) fail("learning_rate must be positive");
    if (epochs < 0) fail("epochs must be non-negative");
    if (batch_size < 0) fail("batch_size must be non-negative");
}

nlohmann::json RegressorConfig::to_json() const {
    return nlohmann::json{{"layer_widths", layer_widths},
                          {"learning_rate", learning_rate},
                          {"epochs", epochs},
                          {"batch_size", batch_size},
                          {"seed", seed},
                          {"beta1", beta1},
                          {"beta2", beta2},
                          {"adam_epsilon", adam_epsilon}};
}

RegressorConfig RegressorConfig::from_json(const nlohmann::json& j) {
    RegressorConfig c;
    if (j.contains("layer_widths"))
        c.layer_widths = j["layer_widths"].get<std::vector<int>>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"];
    if (j.contains("epochs")) c.epochs = j["epochs"];
    if (j.contains("batch_size")) c.batch_size = j["batch_size"];
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("beta1")) c.beta1 = j["beta1"];
    if (j.contains("beta2")) c.beta2 = j["beta2"];
    if (j.contains("adam_epsilon")) c.adam_epsilon = j["adam_epsilon"];
    c.validate();
    return c;
}

Regressor::Regressor(RegressorConfig config) : config_(std::move(config)) {
    config_.validate();
    initialize_parameters();
}

void Regressor::initialize_parameters() {
    const auto& widths = config_.layer_widths;
    const std::size_t layers = widths.size() - 1;
    params_.w.assign(layers, {});
    params_.b.assign(layers, {});
    adam_m_.w.assign(layers, {});
    adam_m_.b.assign(layers, {});
    adam_v_.w.assign(layers, {});
    adam_v_.b.assign(layers, {});
    adam_step_ = 0;

    SplitMix64 rng(config_.seed);
    for (std::size_t l = 0; l < layers; ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        params_.w[l].resize(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& x : params_.w[l]) x = rng.next_uniform(scale);
        params_.b[l].assign(fan_out, 0.0);
        adam_m_.w[l].assign(params_.w[l].size(), 0.0);
        adam_v_.w[l].assign(params_.w[l].size(), 0.0);
        adam_m_.b[l].assign(fan_out, 0.0);
        adam_v_.b[l].assign(fan_out, 0.0);
    }
}

std::vector<double> Regressor::forward(std::span<const double> input) const {
    if (input.size() != static_cast<std::size_t>(input_dimension()))
        fail("forward input has dimension " + std::to_string(input.size()) +
             ", expected " + std::to_string(input_dimension()));
    std::vector<double> act(input.begin(), input.end());
    const std::size_t layers = params_.w.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = config_.layer_widths[l];
        const int out = config_.layer_widths[l + 1];
        std::vector<double> next(out);
        const bool last = l + 1 == layers;
        for (int o = 0; o < out; ++o) {
            double z = params_.b[l][o];
            const double* row = params_.w[l].data() +
                                static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) z += row[i] * act[i];
            next[o] = last ? z : (z > 0.0 ? z : 0.0);
        }
        act = std::move(next);
    }
    return act;
}

embed::EmbeddingVector Regressor::project(
    const annotate::LabelVector& label) const {
    return embed::EmbeddingVector{
        forward(std::span<const double>(label.values))};
}

double Regressor::mse(const TrainingSet& data) const {
    if (data.empty()) fail("mse requires at least one pair");
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& [x, y] : data) {
        const auto out = forward(x);
        if (out.size() != y.size())
            fail("target dimension " + std::to_string(y.size()) +
                 " does not match output " + std::to_string(out.size()));
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - y[i];
            total += d * d;
        }
        count += out.size();
    }
    return total / static_cast<double>(count);
}

double Regressor::backward(const TrainingSet& batch, Tensors& grads) const {
    const std::size_t layers = params_.w.size();
    grads.w.assign(layers, {});
    grads.b.assign(layers, {});
    for (std::size_t l = 0; l < layers; ++l) {
        grads.w[l].assign(params_.w[l].size(), 0.0);
        grads.b[l].assign(params_.b[l].size(), 0.0);
    }

    const double denom =
        static_cast<double>(batch.size()) * output_dimension();
    double loss = 0.0;

    for (const auto& [x, y] : batch) {
        if (x.size() != static_cast<std::size_t>(input_dimension()))
            fail("training input has wrong dimension");
        if (y.size() != static_cast<std::size_t>(output_dimension()))
            fail("training target has wrong dimension");

        // Forward pass, keeping activations per layer.
        std::vector<std::vector<double>> acts;
        acts.reserve(layers + 1);
        acts.emplace_back(x.begin(), x.end());
        for (std::size_t l = 0; l < layers; ++l) {
            const int in = config_.layer_widths[l];
            const int out = config_.layer_widths[l + 1];
            const bool last = l + 1 == layers;
            std::vector<double> next(out);
            for (int o = 0; o < out; ++o) {
                double z = params_.b[l][o];
                const double* row = params_.w[l].data() +
                                    static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) z += row[i] * acts[l][i];
                next[o] = last ? z : (z > 0.0 ? z : 0.0);
            }
            acts.push_back(std::move(next));
        }

        // dL/da for the output layer; L averages over batch and components.
        std::vector<double> delta(output_dimension());
        for (int o = 0; o < output_dimension(); ++o) {
            const double d = acts[layers][o] - y[o];
            loss += d * d;
            delta[o] = 2.0 * d / denom;
        }

        for (std::size_t l = layers; l-- > 0;) {
            const int in = config_.layer_widths[l];
            const int out = config_.layer_widths[l + 1];
            std::vector<double> prev_delta(in, 0.0);
            for (int o = 0; o < out; ++o) {
                const double g = delta[o];
                if (g == 0.0) continue;
                double* wgrad = grads.w[l].data() +
                                static_cast<std::size_t>(o) * in;
                const double* row = params_.w[l].data() +
                                    static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) {
                    wgrad[i] += g * acts[l][i];
                    prev_delta[i] += g * row[i];
                }
                grads.b[l][o] += g;
            }
            if (l > 0) {
                // rectifier derivative: zero where the unit was inactive
                for (int i = 0; i < in; ++i)
                    if (acts[l][i] <= 0.0) prev_delta[i] = 0.0;
                delta = std::move(prev_delta);
            }
        }
    }
    return loss / denom;
}

void Regressor::train(const TrainingSet& data) {
    if (data.empty()) fail("train requires at least one pair");
    loss_curve_.clear();

    const std::size_t n = data.size();
    const std::size_t batch_size =
        config_.batch_size == 0
            ? n
            : std::min<std::size_t>(config_.batch_size, n);

    Tensors grads;
    // running beta powers; exact products keep runs bit-reproducible
    double beta1_pow = 1.0;
    double beta2_pow = 1.0;
    for (std::uint64_t s = 0; s < adam_step_; ++s) {
        beta1_pow *= config_.beta1;
        beta2_pow *= config_.beta2;
    }
    for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(n, start + batch_size);
            TrainingSet batch(data.begin() + start, data.begin() + end);
            const double batch_loss = backward(batch, grads);
            epoch_loss += batch_loss * static_cast<double>(batch.size());

            if (!std::isfinite(batch_loss))
                fail("training diverged at epoch " + std::to_string(epoch) +
                     " (non-finite loss)");

            ++adam_step_;
            beta1_pow *= config_.beta1;
            beta2_pow *= config_.beta2;
            const double bc1 = 1.0 - beta1_pow;
            const double bc2 = 1.0 - beta2_pow;
            for (std::size_t l = 0; l < params_.w.size(); ++l) {
                auto update = [&](std::vector<double>& theta,
                                  std::vector<double>& m,
                                  std::vector<double>& v,
                                  const std::vector<double>& g) {
                    for (std::size_t i = 0; i < theta.size(); ++i) {
                        m[i] = config_.beta1 * m[i] +
                               (1.0 - config_.beta1) * g[i];
                        v[i] = config_.beta2 * v[i] +
                               (1.0 - config_.beta2) * g[i] * g[i];
                        const double mhat = m[i] / bc1;
                        const double vhat = v[i] / bc2;
                        theta[i] -= config_.learning_rate * mhat /
                                    (std::sqrt(vhat) + config_.adam_epsilon);
                    }
                };
                update(params_.w[l], adam_m_.w[l], adam_v_.w[l], grads.w[l]);
                update(params_.b[l], adam_m_.b[l], adam_v_.b[l], grads.b[l]);
            }
        }
        loss_curve_.emplace_back(epoch, epoch_loss / static_cast<double>(n));
    }
}

double Regressor::finite_difference_check(const TrainingPair& pair,
                                          double epsilon,
                                          std::size_t sample_per_tensor,
                                          std::uint64_t sample_seed) const {
    if (epsilon <= 0.0 || epsilon > 1e-2)
        fail("finite difference step must be in (0, 1e-2]");

    Tensors analytic;
    TrainingSet single{pair};
    backward(single, analytic);

    Regressor probe = *this;
    double max_rel = 0.0;
    SplitMix64 rng(sample_seed ^ 0x9d1f29a3c5b7e011ULL);

    auto check_tensor = [&](std::vector<double>& theta,
                            const std::vector<double>& grad) {
        std::vector<std::size_t> indices;
        if (sample_per_tensor == 0 || sample_per_tensor >= theta.size()) {
            indices.resize(theta.size());
            for (std::size_t i = 0; i < theta.size(); ++i) indices[i] = i;
        } else {
            std::set<std::size_t> picked;
            while (picked.size() < sample_per_tensor)
                picked.insert(rng.next_below(theta.size()));
            indices.assign(picked.begin(), picked.end());
        }
        for (std::size_t i : indices) {
            const double saved = theta[i];
            theta[i] = saved + epsilon;
            const double up = probe.mse(single);
            theta[i] = saved - epsilon;
            const double down = probe.mse(single);
            theta[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            // A unit sitting exactly on the rectifier kink yields a
            // one-sided O(epsilon) numeric term against an analytic zero;
            // both below the step size counts as agreement.
            if (std::fabs(grad[i]) <= epsilon &&
                std::fabs(numeric) <= epsilon)
                continue;
            const double denom =
                std::max(std::fabs(grad[i]) + std::fabs(numeric), 1e-12);
            const double rel = std::fabs(grad[i] - numeric) / denom;
            max_rel = std::max(max_rel, rel);
        }
    };

    for (std::size_t l = 0; l < probe.params_.w.size(); ++l) {
        check_tensor(probe.params_.w[l], analytic.w[l]);
        check_tensor(probe.params_.b[l], analytic.b[l]);
    }
    return max_rel;
}

nlohmann::json Regressor::to_json() const {
    return nlohmann::json{{"format_version", 1},
                          {"config", config_.to_json()},
                          {"weights", params_.w},
                          {"biases", params_.b},
                          {"loss_curve", loss_curve_}};
}

Regressor Regressor::from_json(const nlohmann::json& j) {
    Regressor r(RegressorConfig::from_json(j.at("config")));
    auto w = j.at("weights").get<std::vector<std::vector<double>>>();
    auto b = j.at("biases").get<std::vector<std::vector<double>>>();
    if (w.size() != r.params_.w.size() || b.size() != r.params_.b.size())
        fail("serialized regressor has wrong layer count");
    for (std::size_t l = 0; l < w.size(); ++l) {
        if (w[l].size() != r.params_.w[l].size() ||
            b[l].size() != r.params_.b[l].size())
            fail("serialized regressor has wrong tensor shapes");
    }
    r.params_.w = std::move(w);
    r.params_.b = std::move(b);
    if (j.contains("loss_curve"))
        r.loss_curve_ =
            j["loss_curve"].get<std::vector<std::pair<int, double>>>();
    return r;
}

std::string Regressor::content_hash() const {
    return sha256_hex(to_json().dump());
}

Regressor train_regressor(const TrainingSet& pairs,
                          const RegressorConfig& config) {
    Regressor r(config);
    if (pairs.empty()) fail("train_regressor requires at least one pair");
    r.train(pairs);
    return r;
}

std::pair<annotate::LabelVector, annotate::LabelVector> select_poles(
    std::span<const annotate::AnnotationRecord> records,
    bool include_left_center) {
    using annotate::LabelVector;
    using annotate::Partisanship;

    std::vector<LabelVector> left_vectors;
    std::vector<LabelVector> observed;
    for (const auto& r : records) {
        const LabelVector v = annotate::to_label_vector(r);
        observed.push_back(v);
        const bool is_left =
            r.partisanship == Partisanship::left ||
            (include_left_center &&
             r.partisanship == Partisanship::left_center);
        if (is_left) left_vectors.push_back(v);
    }

    if (left_vectors.empty())
        fail("pole selection requires at least one left-annotated record");

    std::set<LabelVector> distinct(observed.begin(), observed.end());
    if (distinct.size() < 2)
        fail("pole selection requires at least two distinct label vectors");

    LabelVector left_pole;
    for (const auto& v : left_vectors)
        for (int i = 0; i < annotate::kLabelDimensions; ++i)
            left_pole.values[i] += v.values[i];
    for (double& x : left_pole.values)
        x /= static_cast<double>(left_vectors.size());

    // Farthest observed vector; ties go to the lexicographically smallest,
    // which std::set iteration order delivers.
    const LabelVector* right_pole = &*distinct.begin();
    double best = embed::manhattan_distance(
        std::span<const double>(left_pole.values),
        std::span<const double>(right_pole->values));
    for (const auto& v : distinct) {
        const double d = embed::manhattan_distance(
            std::span<const double>(left_pole.values),
            std::span<const double>(v.values));
        if (d > best) {
            best = d;
            right_pole = &v;
        }
    }
    return {left_pole, *right_pole};
}

nlohmann::json PartisanshipAxis::to_json() const {
    return nlohmann::json{
        {"format_version", 1},
        {"left_pole_label", left_pole_label.values},
        {"right_pole_label", right_pole_label.values},
        {"left_emb", left_emb.values},
        {"right_emb", right_emb.values},
        {"direction", direction.values},
        {"midpoint", midpoint.values},
        {"half_length", half_length}};
}

PartisanshipAxis PartisanshipAxis::from_json(const nlohmann::json& j) {
    PartisanshipAxis a;
    const auto lp = j.at("left_pole_label").get<std::vector<double>>();
    const auto rp = j.at("right_pole_label").get<std::vector<double>>();
    if (lp.size() != annotate::kLabelDimensions ||
        rp.size() != annotate::kLabelDimensions)
        fail("serialized axis has wrong pole label dimensions");
    std::copy(lp.begin(), lp.end(), a.left_pole_label.values.begin());
    std::copy(rp.begin(), rp.end(), a.right_pole_label.values.begin());
    a.left_emb.values = j.at("left_emb").get<std::vector<double>>();
    a.right_emb.values = j.at("right_emb").get<std::vector<double>>();
    a.direction.values = j.at("direction").get<std::vector<double>>();
    a.midpoint.values = j.at("midpoint").get<std::vector<double>>();
    a.half_length = j.at("half_length").get<double>();
    return a;
}

std::string PartisanshipAxis::content_hash() const {
    return sha256_hex(to_json().dump());
}

PartisanshipAxis build_axis_from_embeddings(
    embed::EmbeddingVector left_emb, embed::EmbeddingVector right_emb,
    annotate::LabelVector left_pole_label,
    annotate::LabelVector right_pole_label) {
    if (left_emb.dimension() != right_emb.dimension())
        fail("pole embeddings have mismatched dimensions");

    const std::size_t dim = left_emb.dimension();
    PartisanshipAxis axis;
    axis.left_pole_label = left_pole_label;
    axis.right_pole_label = right_pole_label;
    axis.left_emb = std::move(left_emb);
    axis.right_emb = std::move(right_emb);

    std::vector<double> diff(dim);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        diff[i] = axis.right_emb.values[i] - axis.left_emb.values[i];
        norm_sq += diff[i] * diff[i];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm < kDegenerateAxisNorm)
        fail("degenerate axis: pole embeddings coincide");

    axis.direction.values.resize(dim);
    axis.midpoint.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        axis.direction.values[i] = diff[i] / norm;
        axis.midpoint.values[i] =
            (axis.left_emb.values[i] + axis.right_emb.values[i]) / 2.0;
    }
    axis.half_length = norm / 2.0;
    return axis;
}

PartisanshipAxis build_axis(const Regressor& regressor,
                            const annotate::LabelVector& left_pole,
                            const annotate::LabelVector& right_pole) {
    return build_axis_from_embeddings(regressor.project(left_pole),
                                      regressor.project(right_pole),
                                      left_pole, right_pole);
}

double score_headline(const PartisanshipAxis& axis,
                      const embed::EmbeddingVector& e) {
    if (e.dimension() != axis.direction.dimension())
        fail("headline embedding dimension " + std::to_string(e.dimension()) +
             " does not match axis dimension " +
             std::to_string(axis.direction.dimension()));
    double proj = 0.0;
    for (std::size_t i = 0; i < e.values.size(); ++i)
        proj += (e.values[i] - axis.midpoint.values[i]) *
                axis.direction.values[i];
    return proj / axis.half_length;
}

const char* to_string(ShiftCategory c) {
    switch (c) {
        case ShiftCategory::amplification: return "amplification";
        case ShiftCategory::preservation: return "preservation";
        case ShiftCategory::flip: return "flip";
    }
    fail("invalid shift category");
}

ShiftAssessment assess_shift(double s_orig, double s_gen, double sigma,
                             double z, double neutral_eps) {
    if (sigma < 0.0) fail("sigma must be non-negative");
    if (z <= 0.0) fail("z must be positive");
    if (neutral_eps < 0.0) fail("neutral_eps must be non-negative");

    ShiftAssessment a;
    a.delta = s_gen - s_orig;
    a.sigma = sigma;
    a.significant = std::fabs(a.delta) > z * sigma;

    const bool orig_neutral = std::fabs(s_orig) <= neutral_eps;
    const bool gen_neutral = std::fabs(s_gen) <= neutral_eps;
    const bool sign_change = (s_orig < 0.0) != (s_gen < 0.0);

    if (!orig_neutral && !gen_neutral && sign_change) {
        a.category = ShiftCategory::flip;
    } else if ((!sign_change || orig_neutral) &&
               std::fabs(s_gen) > std::fabs(s_orig)) {
        a.category = ShiftCategory::amplification;
    } else {
        a.category = ShiftCategory::preservation;
    }
    return a;
}

double estimate_sigma(
    const std::map<std::string, std::vector<double>>& groups) {
    double ss = 0.0;
    double dof = 0.0;
    for (const auto& [key, scores] : groups) {
        if (scores.size() < 2) continue;
        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        for (double s : scores) ss += (s - mean) * (s - mean);
        dof += static_cast<double>(scores.size()) - 1.0;
    }
    if (dof <= 0.0)
        fail("sigma estimation requires at least one group with two scores");
    return std::sqrt(ss / dof);
}

}  // namespace newsaudit::axis
