#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mindiff/types.hpp"

namespace mindiff {

/// Decision 1 iff prediction > threshold (strict).
std::vector<int> classify(std::span<const double> predictions, double threshold);

/// Largest threshold t such that the fraction of positives with score > t is
/// at least `target_recall`. Throws MetricError when there are no positives.
double threshold_for_recall(std::span<const double> predictions, std::span<const int> labels, double target_recall);

/// Confusion counts split by group. Index with cell(group, label, decision);
/// group slot 2 holds rows whose group is unknown.
struct ConfusionCounts {
    std::array<std::size_t, 12> cells{};

    static constexpr std::size_t slot(Group g) {
        return g == Group::kZero ? 0 : (g == Group::kOne ? 1 : 2);
    }
    std::size_t& cell(Group g, int label, int decision) { return cells[slot(g) * 4 + label * 2 + decision]; }
    std::size_t cell(Group g, int label, int decision) const { return cells[slot(g) * 4 + label * 2 + decision]; }
    std::size_t total() const;
    bool operator==(const ConfusionCounts&) const = default;
};

struct EvalReport {
    double threshold = 0.5;
    std::size_t rows = 0;
    double accuracy = 0.0;
    std::optional<double> fpr_group0;  ///< empty when group 0 has no negatives
    std::optional<double> fpr_group1;
    std::optional<double> fpr_gap;     ///< |fpr_group1 - fpr_group0|
    std::optional<double> fpr_ratio;   ///< fpr_group1 / fpr_group0 (group 1 is the protected group)
    ConfusionCounts counts;

    bool operator==(const EvalReport&) const = default;
};

/// Rows with an unknown group count toward accuracy but not toward the FPR terms.
EvalReport evaluate(std::span<const double> predictions, std::span<const int> labels, std::span<const Group> groups,
                    double threshold);

/// Stable column order for EvalReport rows. Undefined values are written as "NA".
std::string eval_report_csv_header();
std::string eval_report_csv_row(const EvalReport& report);

}  // namespace mindiff
