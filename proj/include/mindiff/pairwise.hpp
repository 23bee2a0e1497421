#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mindiff/data.hpp"
#include "mindiff/nn.hpp"
#include "mindiff/penalties.hpp"

namespace mindiff {

struct AlphaBeta {
    double alpha = 0.0;        ///< score(clicked) - score(unclicked)
    std::optional<int> beta;   ///< A(clicked) - A(unclicked); empty if either group is unknown
};

std::optional<int> pair_beta(const PairExample& pair);
AlphaBeta alpha_beta(const PairExample& pair, const ModelParams& model);

/// alpha for every pair, scored with one forward pass per side.
std::vector<double> pair_alphas(std::span<const PairExample> pairs, const ModelParams& model);

struct BucketAccuracy {
    int bucket = 0;
    std::size_t pairs_in = 0;   ///< clicked item in the subgroup (A = 1)
    std::size_t pairs_out = 0;  ///< clicked item outside the subgroup (A = 0)
    std::optional<double> accuracy_in;
    std::optional<double> accuracy_out;
    std::optional<double> gap;  ///< accuracy_out - accuracy_in; positive means the subgroup is under-ranked

    bool operator==(const BucketAccuracy&) const = default;
};

struct PairwiseReport {
    std::vector<BucketAccuracy> buckets;  ///< ascending bucket id
    double total_gap = 0.0;               ///< sum of the defined per-bucket gaps
    double overall_accuracy = 0.0;
    bool complete = true;                 ///< false when some (bucket, clicked-group) cell is empty

    bool operator==(const PairwiseReport&) const = default;
};

/// Pairwise ranking accuracy per (bucket, clicked-group) cell; alpha == 0 counts as half correct.
PairwiseReport pairwise_metric(std::span<const PairExample> pairs, std::span<const double> alphas);
PairwiseReport pairwise_metric(std::span<const PairExample> pairs, const ModelParams& model);

/// Header line followed by one row per bucket and a final `total` row.
std::string pairwise_report_csv(const PairwiseReport& report);

/// Pair-level MinDiff term with its gradient w.r.t. every alpha.
///   correlation: |Pearson(alpha, beta)| over pairs with a known beta (beta = 0 included)
///   mmd:         mmd_squared({alpha : beta = +1}, {alpha : beta = -1})
/// Scaled by the configured weight; zero when either side has fewer than min_side pairs.
PenaltyResult pairwise_mindiff_penalty(std::span<const double> alphas, std::span<const std::optional<int>> betas,
                                       const PenaltyConfig& config);

struct PairTrainConfig {
    std::uint64_t seed = 0;
    std::size_t epochs = 10;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    std::size_t hidden_units = 16;
    double temperature = 0.1;  ///< primary loss is log(1 + exp(-alpha / temperature))
    PenaltyConfig penalty;

    void validate() const;
};

struct PairTrainResult {
    ModelParams params;
    std::vector<double> primary_trace;
    std::vector<double> penalty_trace;
    std::size_t batches = 0;
    std::size_t penalty_skipped_batches = 0;
    double discarded_pair_fraction = 0.0;  ///< share of pairs with beta = 0 (ignored by the mmd variant)
};

struct PairBatchLoss {
    double primary = 0.0;  ///< mean log(1 + exp(-alpha / temperature))
    double penalty = 0.0;
    bool penalty_applied = false;
    Gradients grads;
};

PairBatchLoss pair_batch_loss(const ModelParams& model, std::span<const PairExample> pairs, const PenaltyConfig& penalty,
                              double temperature);

/// Pointwise scorer trained with a logistic loss on alpha plus the pair MinDiff term.
PairTrainResult train_pairwise(std::span<const PairExample> pairs, const PairTrainConfig& config);

}  // namespace mindiff
