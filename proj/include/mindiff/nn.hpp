#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mindiff/matrix.hpp"

namespace mindiff {

/// Weights of a one-hidden-layer network
///     p(x) = sigmoid(w2 . relu(W1^T x + b1) + b2).
///
/// All parameters live in one contiguous buffer laid out as [W1 | b1 | w2 | b2];
/// W1 is stored row-major with shape [input_dim x hidden_units]. The same type
/// is used for gradients and optimizer moments.
class ModelParams {
public:
    ModelParams() = default;
    /// All-zero parameters.
    ModelParams(std::size_t input_dim, std::size_t hidden_units);

    /// Glorot-uniform weights, zero biases. Deterministic in `seed`.
    static ModelParams glorot_uniform(std::size_t input_dim, std::size_t hidden_units, std::uint64_t seed);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t hidden_units() const noexcept { return hidden_; }

    std::span<double> w1() noexcept { return {values_.data(), input_dim_ * hidden_}; }
    std::span<const double> w1() const noexcept { return {values_.data(), input_dim_ * hidden_}; }
    std::span<double> b1() noexcept { return {values_.data() + b1_offset(), hidden_}; }
    std::span<const double> b1() const noexcept { return {values_.data() + b1_offset(), hidden_}; }
    std::span<double> w2() noexcept { return {values_.data() + w2_offset(), hidden_}; }
    std::span<const double> w2() const noexcept { return {values_.data() + w2_offset(), hidden_}; }
    double& b2() noexcept { return values_.back(); }
    double b2() const noexcept { return values_.back(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool same_shape(const ModelParams& other) const noexcept {
        return input_dim_ == other.input_dim_ && hidden_ == other.hidden_;
    }
    bool all_finite() const noexcept;

    bool operator==(const ModelParams&) const = default;

private:
    std::size_t b1_offset() const noexcept { return input_dim_ * hidden_; }
    std::size_t w2_offset() const noexcept { return input_dim_ * hidden_ + hidden_; }

    std::size_t input_dim_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> values_;
};

using Gradients = ModelParams;

/// Intermediate values of a forward pass, kept for the backward pass.
struct Activations {
    std::vector<double> hidden;         ///< [rows x hidden_units], post-ReLU
    std::vector<double> probabilities;  ///< [rows]
};

Activations forward_pass(const ModelParams& params, const Matrix& x);

/// Predicted probabilities, one per row of `x`.
std::vector<double> forward(const ModelParams& params, const Matrix& x);

/// Gradient of sum_r upstream[r] * p(x_r) with respect to every parameter.
///
/// Zero entries of `x` are skipped, which makes one-hot inputs cheap.
Gradients backward(const ModelParams& params, const Matrix& x, const Activations& acts,
                   std::span<const double> upstream);

/// Convenience overload that recomputes the forward pass.
Gradients backward(const ModelParams& params, const Matrix& x, std::span<const double> upstream);

inline constexpr double kProbabilityClamp = 1e-7;

struct LossAndGradient {
    double value = 0.0;
    std::vector<double> grad;  ///< d value / d prediction
};

/// Mean binary cross-entropy. Predictions are clamped to [eps, 1 - eps].
LossAndGradient bce_loss(std::span<const double> predictions, std::span<const int> labels);

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    ModelParams first_moment;
    ModelParams second_moment;
    std::uint64_t step = 0;
    AdamConfig config;

    static OptimizerState for_params(const ModelParams& params, AdamConfig config = {});
};

/// One bias-corrected Adam update. Throws NumericError and leaves both
/// `params` and `state` untouched when any gradient entry is non-finite.
void optimizer_step(ModelParams& params, const Gradients& grads, OptimizerState& state);

}  // namespace mindiff
