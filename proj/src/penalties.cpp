#include "mindiff/penalties.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mindiff {
namespace {

constexpr double kMinStddev = 1e-12;

// Derivative of the kernel w.r.t. its first argument, as a function of the
// difference d = x - y and the kernel value k(x, y).
double kernel_slope(const KernelSpec& kernel, double d, double k) {
    if (kernel.family == KernelFamily::kGaussian) return -2.0 * d / (kernel.length * kernel.length) * k;
    if (d == 0.0) return 0.0;
    return (d > 0.0 ? -k : k) / kernel.length;
}

struct SortedSample {
    std::vector<double> values;
    std::vector<std::size_t> origin;  // values[i] == input[origin[i]]
};

SortedSample sorted(std::span<const double> input) {
    SortedSample s;
    s.origin.resize(input.size());
    std::iota(s.origin.begin(), s.origin.end(), std::size_t{0});
    std::stable_sort(s.origin.begin(), s.origin.end(), [&](std::size_t a, std::size_t b) { return input[a] < input[b]; });
    s.values.reserve(input.size());
    for (std::size_t i : s.origin) s.values.push_back(input[i]);
    return s;
}

bool canonical_less(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// sum_i sum_j k(a_i, b_j); adds scale * dk/da_i to grad_a and scale * dk/db_j to grad_b.
double kernel_sum(const KernelSpec& kernel, const std::vector<double>& a, const std::vector<double>& b,
                  double scale, std::vector<double>& grad_a, std::vector<double>* grad_b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = a[i] - b[j];
            const double k = kernel_value(kernel, a[i], b[j]);
            row += k;
            const double slope = kernel_slope(kernel, d, k);
            grad_a[i] += scale * slope;
            if (grad_b != nullptr) (*grad_b)[j] -= scale * slope;
        }
        total += row;
    }
    return total;
}

}  // namespace

void KernelSpec::validate() const {
    if (!std::isfinite(length) || length <= 0.0) throw ConfigError("kernel length must be finite and > 0");
}

double gaussian_kernel(double x, double y, double length) {
    if (!std::isfinite(length) || length <= 0.0) throw ConfigError("kernel length must be finite and > 0");
    const double d = (x - y) / length;
    return std::exp(-d * d);
}

double laplace_kernel(double x, double y, double length) {
    if (!std::isfinite(length) || length <= 0.0) throw ConfigError("kernel length must be finite and > 0");
    return std::exp(-std::abs(x - y) / length);
}

double kernel_value(const KernelSpec& kernel, double x, double y) {
    if (kernel.family == KernelFamily::kGaussian) {
        const double d = (x - y) / kernel.length;
        return std::exp(-d * d);
    }
    return std::exp(-std::abs(x - y) / kernel.length);
}

MmdResult mmd_squared(std::span<const double> s0, std::span<const double> s1, const KernelSpec& kernel) {
    kernel.validate();
    MmdResult out;
    out.grad_first.assign(s0.size(), 0.0);
    out.grad_second.assign(s1.size(), 0.0);
    if (s0.empty() || s1.empty()) return out;

    SortedSample first = sorted(s0);
    SortedSample second = sorted(s1);
    const bool swapped = canonical_less(second.values, first.values);
    const SortedSample& a = swapped ? second : first;
    const SortedSample& b = swapped ? first : second;
    const double m = static_cast<double>(a.values.size());
    const double n = static_cast<double>(b.values.size());

    std::vector<double> grad_a(a.values.size(), 0.0);
    std::vector<double> grad_b(b.values.size(), 0.0);
    // Within-sample sums: every element appears as both arguments, hence the factor 2.
    const double within_a = kernel_sum(kernel, a.values, a.values, 2.0 / (m * m), grad_a, nullptr);
    const double within_b = kernel_sum(kernel, b.values, b.values, 2.0 / (n * n), grad_b, nullptr);
    const double cross = kernel_sum(kernel, a.values, b.values, -2.0 / (m * n), grad_a, &grad_b);

    out.value = within_a / (m * m) + within_b / (n * n) - 2.0 * cross / (m * n);
    out.applied = true;

    auto& ga = swapped ? out.grad_second : out.grad_first;
    auto& gb = swapped ? out.grad_first : out.grad_second;
    for (std::size_t i = 0; i < grad_a.size(); ++i) ga[a.origin[i]] = grad_a[i];
    for (std::size_t j = 0; j < grad_b.size(); ++j) gb[b.origin[j]] = grad_b[j];
    return out;
}

PenaltyResult correlation_penalty(std::span<const double> x, std::span<const double> z) {
    if (x.size() != z.size()) throw DimensionError("correlation inputs differ in length");
    PenaltyResult out;
    out.grad.assign(x.size(), 0.0);
    if (x.size() < 2) return out;
    out.applied = true;

    const double n = static_cast<double>(x.size());
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mean_z = std::accumulate(z.begin(), z.end(), 0.0) / n;
    double sxx = 0.0, szz = 0.0, sxz = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dz = z[i] - mean_z;
        sxx += dx * dx;
        szz += dz * dz;
        sxz += dx * dz;
    }
    if (std::sqrt(sxx / (n - 1.0)) < kMinStddev || std::sqrt(szz / (n - 1.0)) < kMinStddev) return out;

    const double denom = std::sqrt(sxx * szz);
    const double r = sxz / denom;
    out.value = std::abs(r);
    const double sign = r < 0.0 ? -1.0 : 1.0;
    // d r / d x_i = (z_i - mean_z) / sqrt(sxx szz) - r (x_i - mean_x) / sxx
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.grad[i] = sign * ((z[i] - mean_z) / denom - r * (x[i] - mean_x) / sxx);
    }
    return out;
}

void PenaltyConfig::validate() const {
    if (!std::isfinite(weight) || weight < 0.0) throw ConfigError("penalty weight must be finite and >= 0");
    if (kind == PenaltyKind::kMmd) {
        if (!kernel) throw ConfigError("mmd penalty requires a kernel");
        kernel->validate();
    } else if (kernel) {
        throw ConfigError("kernel given for a non-mmd penalty");
    }
}

std::string to_string(KernelFamily family) { return family == KernelFamily::kGaussian ? "gaussian" : "laplace"; }

std::string to_string(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::kNone: return "none";
        case PenaltyKind::kCorrelation: return "correlation";
        case PenaltyKind::kMmd: return "mmd";
    }
    return "none";
}

KernelFamily parse_kernel_family(const std::string& text) {
    if (text == "gaussian") return KernelFamily::kGaussian;
    if (text == "laplace") return KernelFamily::kLaplace;
    throw ConfigError("unknown kernel family '" + text + "'");
}

PenaltyKind parse_penalty_kind(const std::string& text) {
    if (text == "none") return PenaltyKind::kNone;
    if (text == "correlation" || text == "corr") return PenaltyKind::kCorrelation;
    if (text == "mmd") return PenaltyKind::kMmd;
    throw ConfigError("unknown penalty kind '" + text + "'");
}

PenaltyResult mindiff_penalty(std::span<const double> predictions, std::span<const int> labels,
                              std::span<const Group> groups, const PenaltyConfig& config) {
    if (predictions.size() != labels.size() || predictions.size() != groups.size())
        throw DimensionError("predictions, labels and groups differ in length");
    config.validate();

    PenaltyResult out;
    out.grad.assign(predictions.size(), 0.0);
    if (config.kind == PenaltyKind::kNone || config.weight == 0.0) return out;

    std::vector<std::size_t> rows0, rows1;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (labels[i] != 0) continue;
        if (groups[i] == Group::kZero) rows0.push_back(i);
        if (groups[i] == Group::kOne) rows1.push_back(i);
    }
    const std::size_t min_side = std::max<std::size_t>(config.min_side, 1);
    if (rows0.size() < min_side || rows1.size() < min_side) return out;

    if (config.kind == PenaltyKind::kCorrelation) {
        std::vector<std::size_t> rows;
        std::vector<double> x, z;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            if (labels[i] != 0 || groups[i] == Group::kUnknown) continue;
            rows.push_back(i);
            x.push_back(predictions[i]);
            z.push_back(groups[i] == Group::kOne ? 1.0 : 0.0);
        }
        const PenaltyResult corr = correlation_penalty(x, z);
        out.applied = corr.applied;
        out.value = config.weight * corr.value;
        for (std::size_t k = 0; k < rows.size(); ++k) out.grad[rows[k]] = config.weight * corr.grad[k];
        return out;
    }

    std::vector<double> s0, s1;
    for (std::size_t i : rows0) s0.push_back(predictions[i]);
    for (std::size_t i : rows1) s1.push_back(predictions[i]);
    const MmdResult mmd = mmd_squared(s0, s1, *config.kernel);
    out.applied = mmd.applied;
    out.value = config.weight * mmd.value;
    for (std::size_t k = 0; k < rows0.size(); ++k) out.grad[rows0[k]] = config.weight * mmd.grad_first[k];
    for (std::size_t k = 0; k < rows1.size(); ++k) out.grad[rows1[k]] = config.weight * mmd.grad_second[k];
    return out;
}

}  // namespace mindiff
