#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mindiff/pairwise.hpp"
#include "mindiff/training.hpp"

namespace mindiff {

enum class Variant { kCorr, kMmdGaussian, kMmdLaplace };

std::string to_string(Variant variant);
Variant parse_variant(std::string_view text);
/// Parses a comma-separated list such as "corr,mmd_gaussian".
std::vector<Variant> parse_variant_list(std::string_view text);
const std::vector<Variant>& all_variants();
PenaltyConfig variant_penalty(Variant variant, double lambda, double kernel_length);

enum class SweepParameter { kLambda, kKernelLength };

std::string to_string(SweepParameter parameter);
SweepParameter parse_sweep_parameter(std::string_view text);

std::vector<double> default_lambda_grid();
/// 10 log-spaced kernel lengths from 1e-3 to 10.
std::vector<double> default_kernel_length_grid();
/// The three published curves plus a lambda = 0 control.
std::vector<double> default_kernel_sweep_lambdas();

struct SweepSpec {
    TrainConfig base;
    SweepParameter parameter = SweepParameter::kLambda;
    std::vector<double> values = default_lambda_grid();
    std::size_t runs = 20;
    std::vector<Variant> variants = all_variants();
    double kernel_length = 0.1;  ///< fixed length while lambda is swept
    double lambda = 1.0;         ///< fixed weight while the kernel length is swept

    void validate() const;
};

struct ParetoPoint {
    Variant variant = Variant::kCorr;
    SweepParameter parameter = SweepParameter::kLambda;
    double lambda = 0.0;
    double kernel_length = 0.1;
    std::size_t runs = 0;
    std::size_t failed_runs = 0;
    bool single_run = false;
    std::optional<double> accuracy_mean;
    double accuracy_stderr = 0.0;
    std::optional<double> fpr_gap_mean;
    double fpr_gap_stderr = 0.0;
    std::uint64_t seed_first = 0;  ///< runs used seeds seed_first .. seed_last
    std::uint64_t seed_last = 0;
    std::string config_hash;       ///< FNV-1a of the cell's resolved TrainConfig
    bool sweet_spot = false;       ///< kernel length inside [0.1, 0.5]
    std::size_t duplicates = 0;    ///< identical points folded into this one by pareto_front

    double swept_value() const { return parameter == SweepParameter::kLambda ? lambda : kernel_length; }
    bool operator==(const ParetoPoint&) const = default;
};

/// First seed of the runs for one sweep cell. Depends only on its arguments.
std::uint64_t cell_seed(std::uint64_t base_seed, Variant variant, double lambda, double kernel_length);

std::string config_hash(const TrainConfig& config);

/// One point per (variant, value), variant-major in spec order. Cells run on
/// up to `jobs` threads; the output does not depend on `jobs`.
std::vector<ParetoPoint> sweep(const Dataset& train_set, const Dataset& test_set, const SweepSpec& spec,
                               std::size_t jobs = 1);

/// Kernel-length sweep (spec.values are lengths) repeated for every lambda in
/// `lambdas`. Only MMD variants are allowed.
std::vector<ParetoPoint> kernel_length_sweep(const Dataset& train_set, const Dataset& test_set, const SweepSpec& spec,
                                             std::span<const double> lambdas, std::size_t jobs = 1);

/// Non-dominated points (accuracy up, fpr_gap down) ordered by fpr_gap
/// ascending. Points with identical means keep the first occurrence, whose
/// `duplicates` counts the others. Points lacking a mean are ignored.
std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points);

std::string points_csv_header();
std::string points_to_csv(std::span<const ParetoPoint> points);
std::vector<ParetoPoint> points_from_csv(std::string_view text);

struct PairSimConfig {
    std::uint64_t seed = 0;
    PairCorpusConfig corpus;  ///< its seed is replaced by values derived from `seed`
    PairTrainConfig train;    ///< its seed and penalty are replaced per model
    double corr_lambda = 1.0;
    double mmd_lambda = 1.0;
    KernelSpec kernel{KernelFamily::kGaussian, 0.1};

    void validate() const;
};

struct PairSimResult {
    PairwiseReport baseline;
    PairwiseReport corr;
    PairwiseReport mmd;
    double discarded_pair_fraction = 0.0;
    std::optional<double> corr_reduction;  ///< 1 - corr gap / baseline gap; empty if the baseline gap is not positive
    std::optional<double> mmd_reduction;
};

/// Trains a baseline, a correlation and an MMD pair model on one synthetic
/// training corpus and scores them on an independent test corpus.
PairSimResult pairwise_simulation(const PairSimConfig& config, std::size_t jobs = 1);

/// One row per model: total_gap, overall accuracy and reduction vs baseline.
std::string pair_sim_summary_csv(const PairSimResult& result);

}  // namespace mindiff
