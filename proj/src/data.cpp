#include "mindiff/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string_view>

#include "mindiff/error.hpp"
#include "mindiff/rng.hpp"

namespace mindiff {

void Dataset::validate() const {
    if (x.rows() != y.size() || a.size() != y.size()) throw DimensionError("dataset fields differ in row count");
    for (int label : y)
        if (label != 0 && label != 1) throw ConfigError("labels must be 0 or 1");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.x = x.gather_rows(rows);
    out.y.reserve(rows.size());
    out.a.reserve(rows.size());
    for (std::size_t r : rows) {
        out.y.push_back(y[r]);
        out.a.push_back(a[r]);
    }
    return out;
}

namespace {

enum class Split { kTrain, kTest };

struct RawRow {
    std::vector<std::string> fields;
    int label = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

constexpr std::size_t kAdultColumns = 15;

// Reads one Adult file. Returns kept rows; counts rows read and rows dropped for missing values.
std::vector<RawRow> read_adult_file(const std::filesystem::path& path, std::size_t& read, std::size_t& dropped) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path.string());
    std::vector<RawRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '|') continue;
        RawRow row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = view.find(',', start);
            row.fields.emplace_back(trim(view.substr(start, comma == std::string_view::npos ? view.npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (row.fields.size() != kAdultColumns)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": expected 15 fields, got " +
                                 std::to_string(row.fields.size()));
        ++read;
        std::string income = row.fields.back();
        if (!income.empty() && income.back() == '.') income.pop_back();
        if (income == ">50K") {
            row.label = 1;
        } else if (income == "<=50K") {
            row.label = 0;
        } else {
            throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": unknown income label '" + income + "'");
        }
        row.fields.pop_back();
        if (std::any_of(row.fields.begin(), row.fields.end(), [](const std::string& f) { return f == "?"; })) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_number(const std::string& text, const std::string& column) {
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc() || result.ptr != text.data() + text.size())
        throw IngestionError("column " + column + ": not a number: '" + text + "'");
    return value;
}

bool is_numeric_column(const std::string& name) {
    static const std::set<std::string> numeric = {"age", "fnlwgt", "education-num", "capital-gain", "capital-loss",
                                                  "hours-per-week"};
    return numeric.contains(name);
}

Dataset encode(const std::vector<RawRow>& rows, const AdultSchema& schema, std::size_t sensitive_index,
               std::size_t& unseen) {
    const auto& names = adult_column_names();
    std::map<std::string, std::size_t> raw_index;
    for (std::size_t i = 0; i < names.size(); ++i) raw_index[names[i]] = i;

    Dataset ds;
    ds.x = Matrix(rows.size(), schema.feature_names.size());
    ds.y.reserve(rows.size());
    ds.a.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const RawRow& raw = rows[r];
        auto out = ds.x.row(r);
        for (const ColumnSchema& col : schema.columns) {
            const std::string& cell = raw.fields[raw_index.at(col.name)];
            if (col.kind == ColumnKind::kNumeric) {
                out[col.offset] = (parse_number(cell, col.name) - col.mean) / col.stddev;
            } else {
                const auto it = std::lower_bound(col.vocabulary.begin(), col.vocabulary.end(), cell);
                if (it == col.vocabulary.end() || *it != cell) {
                    ++unseen;
                } else {
                    out[col.offset + static_cast<std::size_t>(it - col.vocabulary.begin())] = 1.0;
                }
            }
        }
        ds.y.push_back(raw.label);
        ds.a.push_back(raw.fields[sensitive_index] == schema.protected_value ? Group::kOne : Group::kZero);
    }
    return ds;
}

}  // namespace

const std::vector<std::string>& adult_column_names() {
    static const std::vector<std::string> names = {
        "age",          "workclass",    "fnlwgt",       "education",      "education-num",
        "marital-status", "occupation", "relationship", "race",           "sex",
        "capital-gain", "capital-loss", "hours-per-week", "native-country", "income"};
    return names;
}

AdultData load_adult(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                     const AdultOptions& options) {
    AdultData out;
    const std::vector<RawRow> train_rows = read_adult_file(train_path, out.stats.train_rows_read, out.stats.train_rows_dropped);
    const std::vector<RawRow> test_rows = read_adult_file(test_path, out.stats.test_rows_read, out.stats.test_rows_dropped);
    if (train_rows.empty()) throw IngestionError("no usable rows in " + train_path.string());
    if (test_rows.empty()) throw IngestionError("no usable rows in " + test_path.string());

    const auto& names = adult_column_names();
    const auto sensitive = std::find(names.begin(), names.end() - 1, options.sensitive_column);
    if (sensitive == names.end() - 1) throw ConfigError("unknown sensitive column '" + options.sensitive_column + "'");
    for (const std::string& dropped : options.drop_columns)
        if (std::find(names.begin(), names.end() - 1, dropped) == names.end() - 1)
            throw ConfigError("unknown column to drop '" + dropped + "'");

    AdultSchema& schema = out.schema;
    schema.sensitive_column = options.sensitive_column;
    schema.protected_value = options.protected_value;
    schema.dropped_columns = options.drop_columns;

    std::size_t offset = 0;
    for (std::size_t c = 0; c + 1 < names.size(); ++c) {
        const std::string& name = names[c];
        if (std::find(options.drop_columns.begin(), options.drop_columns.end(), name) != options.drop_columns.end())
            continue;
        ColumnSchema col;
        col.name = name;
        col.offset = offset;
        if (is_numeric_column(name)) {
            col.kind = ColumnKind::kNumeric;
            double sum = 0.0;
            for (const RawRow& row : train_rows) sum += parse_number(row.fields[c], name);
            col.mean = sum / static_cast<double>(train_rows.size());
            double ss = 0.0;
            for (const RawRow& row : train_rows) {
                const double d = parse_number(row.fields[c], name) - col.mean;
                ss += d * d;
            }
            col.stddev = std::sqrt(ss / static_cast<double>(train_rows.size()));
            if (!(col.stddev > 0.0)) {
                schema.dropped_columns.push_back(name);
                continue;
            }
            schema.feature_names.push_back(name);
        } else {
            col.kind = ColumnKind::kCategorical;
            std::set<std::string> vocab;
            for (const RawRow& row : train_rows) vocab.insert(row.fields[c]);
            col.vocabulary.assign(vocab.begin(), vocab.end());
            for (const std::string& v : col.vocabulary) schema.feature_names.push_back(name + "=" + v);
        }
        offset += col.width();
        schema.columns.push_back(std::move(col));
    }

    const auto sensitive_index = static_cast<std::size_t>(sensitive - names.begin());
    std::size_t unseen_train = 0;
    out.train = encode(train_rows, schema, sensitive_index, unseen_train);
    out.test = encode(test_rows, schema, sensitive_index, out.stats.unseen_test_categories);
    return out;
}

nlohmann::json AdultSchema::to_json() const {
    nlohmann::json doc;
    doc["sensitive_column"] = sensitive_column;
    doc["protected_value"] = protected_value;
    doc["dropped_columns"] = dropped_columns;
    doc["feature_names"] = feature_names;
    auto& cols = doc["columns"] = nlohmann::json::array();
    for (const ColumnSchema& c : columns) {
        nlohmann::json col;
        col["name"] = c.name;
        col["offset"] = c.offset;
        if (c.kind == ColumnKind::kNumeric) {
            col["kind"] = "numeric";
            col["mean"] = c.mean;
            col["stddev"] = c.stddev;
        } else {
            col["kind"] = "categorical";
            col["vocabulary"] = c.vocabulary;
        }
        cols.push_back(std::move(col));
    }
    return doc;
}

void write_schema_manifest(const AdultSchema& schema, const IngestStats& stats, const std::filesystem::path& path) {
    nlohmann::json doc = schema.to_json();
    doc["ingest"] = {{"train_rows_read", stats.train_rows_read},
                     {"train_rows_dropped_missing", stats.train_rows_dropped},
                     {"test_rows_read", stats.test_rows_read},
                     {"test_rows_dropped_missing", stats.test_rows_dropped},
                     {"unseen_test_categories", stats.unseen_test_categories}};
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

Dataset mask_group_labels(const Dataset& dataset, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("group-label fraction must lie in (0, 1]");
    const std::size_t n = dataset.size();
    // The epsilon keeps e.g. 0.29 * 100 from flooring to 28.
    const auto keep = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    Dataset out = dataset;
    if (keep >= n) return out;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i = keep; i < n; ++i) out.a[order[i]] = Group::kUnknown;
    return out;
}

void PairCorpusConfig::validate() const {
    if (n_pairs < 1) throw ConfigError("n_pairs must be >= 1");
    if (n_buckets < 1) throw ConfigError("n_buckets must be >= 1");
    if (n_features < 2) throw ConfigError("n_features must be >= 2");
    if (!(subgroup_rate > 0.0 && subgroup_rate < 1.0)) throw ConfigError("subgroup_rate must lie in (0, 1)");
    if (!std::isfinite(bias_strength) || bias_strength < 0.0) throw ConfigError("bias_strength must be >= 0");
    if (!std::isfinite(attenuation) || attenuation < 0.0 || attenuation * bias_strength > 1.0)
        throw ConfigError("attenuation * bias_strength must lie in [0, 1]");
    if (!std::isfinite(signal_offset)) throw ConfigError("signal_offset must be finite");
    if (!std::isfinite(observation_noise) || observation_noise < 0.0) throw ConfigError("observation_noise must be >= 0");
    if (!std::isfinite(click_sharpness) || click_sharpness <= 0.0) throw ConfigError("click_sharpness must be > 0");
}

std::vector<PairExample> generate_pair_corpus(const PairCorpusConfig& config) {
    config.validate();
    Rng rng(combine_seed(config.seed, 0x9a1e));

    struct Item {
        std::vector<double> features;
        Group group;
        double relevance;
        double signal;
    };
    auto make_item = [&]() {
        Item item;
        item.group = rng.bernoulli(config.subgroup_rate) ? Group::kOne : Group::kZero;
        item.relevance = rng.normal();
        const double scale = item.group == Group::kOne ? 1.0 - config.attenuation * config.bias_strength : 1.0;
        item.signal = scale * (config.signal_offset + item.relevance);
        item.features.resize(config.n_features);
        item.features[0] = item.signal + config.observation_noise * rng.normal();
        item.features[1] = item.group == Group::kOne ? 1.0 : 0.0;
        for (std::size_t f = 2; f < config.n_features; ++f) item.features[f] = rng.normal();
        return item;
    };

    std::vector<PairExample> pairs;
    pairs.reserve(config.n_pairs);
    const double buckets = static_cast<double>(config.n_buckets);
    for (std::size_t p = 0; p < config.n_pairs; ++p) {
        Item first = make_item();
        Item second = make_item();
        const double z = config.click_sharpness * (first.signal - second.signal);
        const double p_first = 1.0 / (1.0 + std::exp(-z));
        if (!rng.bernoulli(p_first)) std::swap(first, second);

        const double quantile = 0.5 * std::erfc(-first.relevance / std::sqrt(2.0));
        const auto bucket = std::min(static_cast<std::size_t>(quantile * buckets), config.n_buckets - 1);

        PairExample pair;
        pair.clicked = std::move(first.features);
        pair.unclicked = std::move(second.features);
        pair.clicked_group = first.group;
        pair.unclicked_group = second.group;
        pair.bucket = static_cast<int>(bucket);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace mindiff
