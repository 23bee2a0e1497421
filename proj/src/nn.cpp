#include "mindiff/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mindiff/rng.hpp"

namespace mindiff {
namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

ModelParams::ModelParams(std::size_t input_dim, std::size_t hidden_units)
    : input_dim_(input_dim), hidden_(hidden_units), values_(input_dim * hidden_units + 2 * hidden_units + 1, 0.0) {
    if (input_dim == 0 || hidden_units == 0) throw DimensionError("network needs input_dim >= 1 and hidden_units >= 1");
}

ModelParams ModelParams::glorot_uniform(std::size_t input_dim, std::size_t hidden_units, std::uint64_t seed) {
    ModelParams params(input_dim, hidden_units);
    Rng rng(seed);
    const double limit1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_units));
    for (double& w : params.w1()) w = rng.uniform(-limit1, limit1);
    const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden_units + 1));
    for (double& w : params.w2()) w = rng.uniform(-limit2, limit2);
    return params;
}

bool ModelParams::all_finite() const noexcept { return mindiff::all_finite(values_); }

Activations forward_pass(const ModelParams& params, const Matrix& x) {
    const std::size_t d = params.input_dim();
    const std::size_t h = params.hidden_units();
    if (x.cols() != d) throw DimensionError("input has " + std::to_string(x.cols()) + " columns, network expects " + std::to_string(d));

    Activations acts;
    acts.hidden.assign(x.rows() * h, 0.0);
    acts.probabilities.resize(x.rows());
    const auto w1 = params.w1();
    const auto b1 = params.b1();
    const auto w2 = params.w2();

    for (std::size_t r = 0; r < x.rows(); ++r) {
        double* hid = acts.hidden.data() + r * h;
        std::copy(b1.begin(), b1.end(), hid);
        const auto xr = x.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = xr[i];
            if (xi == 0.0) continue;
            const double* wrow = w1.data() + i * h;
            for (std::size_t j = 0; j < h; ++j) hid[j] += xi * wrow[j];
        }
        double logit = params.b2();
        for (std::size_t j = 0; j < h; ++j) {
            hid[j] = std::max(hid[j], 0.0);
            logit += w2[j] * hid[j];
        }
        acts.probabilities[r] = sigmoid(logit);
    }
    return acts;
}

std::vector<double> forward(const ModelParams& params, const Matrix& x) {
    return forward_pass(params, x).probabilities;
}

Gradients backward(const ModelParams& params, const Matrix& x, const Activations& acts,
                   std::span<const double> upstream) {
    const std::size_t d = params.input_dim();
    const std::size_t h = params.hidden_units();
    if (x.cols() != d) throw DimensionError("input column count does not match network");
    if (upstream.size() != x.rows() || acts.probabilities.size() != x.rows())
        throw DimensionError("upstream gradient length must equal batch size");
    if (!all_finite(upstream)) throw NumericError("non-finite upstream gradient");

    Gradients grads(d, h);
    auto gw1 = grads.w1();
    auto gb1 = grads.b1();
    auto gw2 = grads.w2();
    const auto w2 = params.w2();
    std::vector<double> dhidden(h);

    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double p = acts.probabilities[r];
        const double dlogit = upstream[r] * p * (1.0 - p);
        if (dlogit == 0.0) continue;
        grads.b2() += dlogit;
        const double* hid = acts.hidden.data() + r * h;
        for (std::size_t j = 0; j < h; ++j) {
            gw2[j] += dlogit * hid[j];
            dhidden[j] = hid[j] > 0.0 ? dlogit * w2[j] : 0.0;
            gb1[j] += dhidden[j];
        }
        const auto xr = x.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = xr[i];
            if (xi == 0.0) continue;
            double* grow = gw1.data() + i * h;
            for (std::size_t j = 0; j < h; ++j) grow[j] += xi * dhidden[j];
        }
    }
    return grads;
}

Gradients backward(const ModelParams& params, const Matrix& x, std::span<const double> upstream) {
    return backward(params, x, forward_pass(params, x), upstream);
}

LossAndGradient bce_loss(std::span<const double> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw DimensionError("predictions and labels differ in length");
    if (predictions.empty()) throw DimensionError("bce_loss on empty batch");
    const double n = static_cast<double>(predictions.size());
    LossAndGradient out;
    out.grad.resize(predictions.size());
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = std::clamp(predictions[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
        const double y = labels[i] != 0 ? 1.0 : 0.0;
        total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        out.grad[i] = (p - y) / (p * (1.0 - p)) / n;
    }
    out.value = total / n;
    return out;
}

OptimizerState OptimizerState::for_params(const ModelParams& params, AdamConfig config) {
    OptimizerState state;
    state.first_moment = ModelParams(params.input_dim(), params.hidden_units());
    state.second_moment = state.first_moment;
    state.config = config;
    return state;
}

void optimizer_step(ModelParams& params, const Gradients& grads, OptimizerState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.first_moment))
        throw DimensionError("gradient shape does not match parameters");
    if (!grads.all_finite()) throw NumericError("non-finite gradient passed to optimizer");

    const AdamConfig& cfg = state.config;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);

    auto p = params.values();
    const auto g = grads.values();
    auto m = state.first_moment.values();
    auto v = state.second_moment.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace mindiff
