#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "mindiff/types.hpp"

namespace mindiff {

enum class ColumnKind { kNumeric, kCategorical };

/// How one raw Adult column maps onto feature columns. Built from the
/// training split only.
struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::kNumeric;
    std::vector<std::string> vocabulary;  ///< sorted; categorical only
    double mean = 0.0;                    ///< numeric only
    double stddev = 1.0;                  ///< numeric only, population stddev
    std::size_t offset = 0;               ///< first feature index
    std::size_t width() const { return kind == ColumnKind::kNumeric ? 1 : vocabulary.size(); }
};

struct AdultSchema {
    std::vector<ColumnSchema> columns;
    std::vector<std::string> feature_names;
    std::vector<std::string> dropped_columns;
    std::string sensitive_column;
    std::string protected_value;

    nlohmann::json to_json() const;
};

struct AdultOptions {
    /// Rows whose value in this column equals `protected_value` get A = 1.
    std::string sensitive_column = "sex";
    std::string protected_value = "Female";
    /// Raw columns excluded from the features. `fnlwgt` is a survey weight and
    /// `sex` is the group attribute, which the model does not see.
    std::vector<std::string> drop_columns = {"fnlwgt", "sex"};
};

struct IngestStats {
    std::size_t train_rows_read = 0;
    std::size_t train_rows_dropped = 0;  ///< rows with a missing ("?") value
    std::size_t test_rows_read = 0;
    std::size_t test_rows_dropped = 0;
    std::size_t unseen_test_categories = 0;  ///< test cells encoded as all-zero
};

struct AdultData {
    Dataset train;
    Dataset test;
    AdultSchema schema;
    IngestStats stats;
};

/// Reads `adult.data` / `adult.test` as distributed by UCI: comma separated
/// with leading spaces, `?` for missing values, a `|1x3 Cross validator`
/// header line and trailing periods on test labels. Label 1 iff income >50K.
/// Numeric columns are standardized and categorical columns one-hot encoded
/// with statistics from the training file.
AdultData load_adult(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                     const AdultOptions& options = {});

/// Names of the fifteen raw Adult columns, in file order.
const std::vector<std::string>& adult_column_names();

void write_schema_manifest(const AdultSchema& schema, const IngestStats& stats, const std::filesystem::path& path);

/// Keeps the group attribute on exactly floor(fraction * n) seeded-random rows
/// and marks the rest unknown. fraction must lie in (0, 1].
Dataset mask_group_labels(const Dataset& dataset, double fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic click pairs

/// Generator for clicked/unclicked item pairs.
///
/// Each item has a latent relevance r ~ N(0, 1) and a group g ~ Bernoulli(subgroup_rate).
/// Its click-relevant signal is
///     s = (signal_offset + r) * (1 - attenuation * bias_strength * g),
/// i.e. the subgroup's signal is scaled down, which lowers both its level and
/// its spread. Within a pair, item 1 is clicked with probability
/// sigmoid(click_sharpness * (s1 - s2)). Item features are
///     [s + observation_noise * e, g, nuisance...]
/// and the satisfaction bucket is the N(0, 1) quantile of the clicked item's
/// latent relevance, cut into n_buckets equal-width slices.
struct PairCorpusConfig {
    std::size_t n_pairs = 20000;
    double subgroup_rate = 0.3;
    double bias_strength = 1.0;
    std::size_t n_buckets = 4;
    std::uint64_t seed = 0;
    std::size_t n_features = 4;
    double observation_noise = 0.5;
    double click_sharpness = 2.0;
    double signal_offset = 1.0;
    double attenuation = 0.5;

    void validate() const;
};

struct PairExample {
    std::vector<double> clicked;
    std::vector<double> unclicked;
    Group clicked_group = Group::kZero;
    Group unclicked_group = Group::kZero;
    int bucket = 0;
};

std::vector<PairExample> generate_pair_corpus(const PairCorpusConfig& config);

}  // namespace mindiff
