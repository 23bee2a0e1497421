#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mindiff/types.hpp"

namespace mindiff {

enum class KernelFamily { kGaussian, kLaplace };

struct KernelSpec {
    KernelFamily family = KernelFamily::kGaussian;
    double length = 0.1;

    /// Throws ConfigError unless length is finite and > 0.
    void validate() const;
    bool operator==(const KernelSpec&) const = default;
};

/// exp(-(x - y)^2 / l^2)
double gaussian_kernel(double x, double y, double length);
/// exp(-|x - y| / l)
double laplace_kernel(double x, double y, double length);
double kernel_value(const KernelSpec& kernel, double x, double y);

struct MmdResult {
    double value = 0.0;
    std::vector<double> grad_first;   ///< d value / d s0[i]
    std::vector<double> grad_second;  ///< d value / d s1[j]
    bool applied = false;             ///< false when a sample was empty
};

/// Biased (V-statistic) squared MMD between two scalar samples:
///
///     1/m^2 sum k(s0_i, s0_j) - 2/(mn) sum k(s0_i, s1_j) + 1/n^2 sum k(s1_i, s1_j)
///
/// Self-pairs are included. Samples are evaluated in sorted order and the pair
/// in a canonical order, so the result is bit-identical under permutation of
/// either sample and under swapping the two samples.
MmdResult mmd_squared(std::span<const double> s0, std::span<const double> s1, const KernelSpec& kernel);

struct PenaltyResult {
    double value = 0.0;
    std::vector<double> grad;  ///< same length as the predictions passed in
    bool applied = false;      ///< false when the penalty was skipped
};

/// |Pearson(x, z)| with its gradient w.r.t. x. Zero (and zero gradient) when
/// either sample standard deviation is below 1e-12; skipped when fewer than
/// two values are given.
PenaltyResult correlation_penalty(std::span<const double> x, std::span<const double> z);

enum class PenaltyKind { kNone, kCorrelation, kMmd };

struct PenaltyConfig {
    PenaltyKind kind = PenaltyKind::kNone;
    std::optional<KernelSpec> kernel;
    double weight = 0.0;
    std::size_t min_side = 2;

    static PenaltyConfig none() { return {}; }
    static PenaltyConfig correlation(double weight) { return {PenaltyKind::kCorrelation, std::nullopt, weight}; }
    static PenaltyConfig mmd(KernelSpec kernel, double weight) { return {PenaltyKind::kMmd, kernel, weight}; }

    /// Throws ConfigError for negative or non-finite weight, or a kernel
    /// present/absent inconsistently with `kind`.
    void validate() const;
    bool operator==(const PenaltyConfig&) const = default;
};

std::string to_string(KernelFamily family);
std::string to_string(PenaltyKind kind);
KernelFamily parse_kernel_family(const std::string& text);
PenaltyKind parse_penalty_kind(const std::string& text);

/// MinDiff term for one batch: restricts to negative examples with a known
/// group, splits predictions by group and returns weight * penalty together
/// with the gradient w.r.t. every prediction of the batch.
PenaltyResult mindiff_penalty(std::span<const double> predictions, std::span<const int> labels,
                              std::span<const Group> groups, const PenaltyConfig& config);

inline PenaltyResult mindiff_penalty(std::span<const double> predictions, const Batch& batch,
                                     const PenaltyConfig& config) {
    return mindiff_penalty(predictions, batch.y, batch.a, config);
}

}  // namespace mindiff
