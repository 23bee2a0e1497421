#include "mindiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "mindiff/csv.hpp"

namespace mindiff {

std::vector<int> classify(std::span<const double> predictions, double threshold) {
    std::vector<int> decisions(predictions.size());
    std::transform(predictions.begin(), predictions.end(), decisions.begin(),
                   [threshold](double p) { return p > threshold ? 1 : 0; });
    return decisions;
}

double threshold_for_recall(std::span<const double> predictions, std::span<const int> labels, double target_recall) {
    if (predictions.size() != labels.size()) throw DimensionError("predictions and labels differ in length");
    if (!(target_recall > 0.0 && target_recall <= 1.0)) throw ConfigError("target recall must lie in (0, 1]");
    std::vector<double> positives;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (labels[i] != 0) positives.push_back(predictions[i]);
    if (positives.empty()) throw MetricError("threshold_for_recall needs at least one positive label");

    std::sort(positives.begin(), positives.end(), std::greater<>());
    const double total = static_cast<double>(positives.size());
    // Any t >= positives[k-1] captures fewer than k positives, so the largest
    // admissible threshold sits just below the k-th highest positive score.
    std::size_t k = 1;
    while (static_cast<double>(k) / total < target_recall) ++k;
    return std::nextafter(positives[k - 1], -INFINITY);
}

std::size_t ConfusionCounts::total() const { return std::accumulate(cells.begin(), cells.end(), std::size_t{0}); }

EvalReport evaluate(std::span<const double> predictions, std::span<const int> labels, std::span<const Group> groups,
                    double threshold) {
    if (predictions.size() != labels.size() || predictions.size() != groups.size())
        throw DimensionError("predictions, labels and groups differ in length");
    if (predictions.empty()) throw MetricError("evaluate on empty input");

    EvalReport report;
    report.threshold = threshold;
    report.rows = predictions.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int label = labels[i] != 0 ? 1 : 0;
        const int decision = predictions[i] > threshold ? 1 : 0;
        report.counts.cell(groups[i], label, decision) += 1;
        if (label == decision) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.rows);

    auto fpr = [&](Group g) -> std::optional<double> {
        const std::size_t fp = report.counts.cell(g, 0, 1);
        const std::size_t negatives = fp + report.counts.cell(g, 0, 0);
        if (negatives == 0) return std::nullopt;
        return static_cast<double>(fp) / static_cast<double>(negatives);
    };
    report.fpr_group0 = fpr(Group::kZero);
    report.fpr_group1 = fpr(Group::kOne);
    if (report.fpr_group0 && report.fpr_group1) {
        report.fpr_gap = std::abs(*report.fpr_group1 - *report.fpr_group0);
        if (*report.fpr_group0 > 0.0) report.fpr_ratio = *report.fpr_group1 / *report.fpr_group0;
    }
    return report;
}

std::string eval_report_csv_header() {
    std::string header = "threshold,rows,accuracy,fpr_group0,fpr_group1,fpr_gap,fpr_ratio";
    for (const char* g : {"g0", "g1", "gNA"})
        for (const char* y : {"y0", "y1"})
            for (const char* d : {"d0", "d1"}) header += std::string(",n_") + g + "_" + y + "_" + d;
    return header;
}

std::string eval_report_csv_row(const EvalReport& report) {
    std::ostringstream row;
    row << format_double(report.threshold) << ',' << report.rows << ',' << format_double(report.accuracy) << ','
        << format_optional(report.fpr_group0) << ',' << format_optional(report.fpr_group1) << ','
        << format_optional(report.fpr_gap) << ',' << format_optional(report.fpr_ratio);
    for (std::size_t c : report.counts.cells) row << ',' << c;
    return row.str();
}

}  // namespace mindiff
