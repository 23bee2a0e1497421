#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "mindiff/data.hpp"
#include "mindiff/error.hpp"

using namespace mindiff;

namespace {

const std::filesystem::path kSource = MINDIFF_SOURCE_DIR;
const std::filesystem::path kTinyTrain = kSource / "tests/fixtures/adult_tiny.data";
const std::filesystem::path kTinyTest = kSource / "tests/fixtures/adult_tiny.test";
const std::filesystem::path kAdultTrain = kSource / "data/adult/adult.data";
const std::filesystem::path kAdultTest = kSource / "data/adult/adult.test";

const AdultData& full_adult() {
    static const AdultData data = load_adult(kAdultTrain, kAdultTest);
    return data;
}

std::size_t feature_index(const AdultSchema& schema, const std::string& name) {
    const auto it = std::find(schema.feature_names.begin(), schema.feature_names.end(), name);
    REQUIRE(it != schema.feature_names.end());
    return static_cast<std::size_t>(it - schema.feature_names.begin());
}

/// Kolmogorov-Smirnov statistic between two samples.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("tiny Adult fixture encodes to the hand-computed matrix") {
    const AdultData d = load_adult(kTinyTrain, kTinyTest);
    const std::vector<std::string> names = {
        "age", "workclass=Private", "workclass=Self-emp-not-inc", "workclass=State-gov", "education=Bachelors",
        "education=HS-grad", "education-num", "marital-status=Divorced", "marital-status=Married-civ-spouse",
        "marital-status=Never-married", "occupation=Adm-clerical", "occupation=Exec-managerial",
        "occupation=Handlers-cleaners", "relationship=Husband", "relationship=Not-in-family", "race=White",
        "capital-gain", "hours-per-week", "native-country=United-States"};
    CHECK(d.schema.feature_names == names);

    // Training-split statistics (population stddev):
    //   age [39, 50, 38]        mean 127/3, sd sqrt(266)/3
    //   education-num [13,13,9] mean 35/3,  sd sqrt(32)/3
    //   capital-gain [2174,0,0] mean 2174/3, sd 2174 sqrt(2)/3
    //   hours [40, 13, 40]      mean 31,    sd 9 sqrt(2)
    //   capital-loss is constant and dropped.
    const double age_sd = std::sqrt(266.0) / 3.0, edu_sd = std::sqrt(32.0) / 3.0;
    const double gain_sd = 2174.0 * std::sqrt(2.0) / 3.0, hours_sd = 9.0 * std::sqrt(2.0);
    auto age = [&](double v) { return (v - 127.0 / 3.0) / age_sd; };
    auto edu = [&](double v) { return (v - 35.0 / 3.0) / edu_sd; };
    auto gain = [&](double v) { return (v - 2174.0 / 3.0) / gain_sd; };
    auto hours = [&](double v) { return (v - 31.0) / hours_sd; };

    const std::vector<std::vector<double>> expected_train = {
        {age(39), 0, 0, 1, 1, 0, edu(13), 0, 0, 1, 1, 0, 0, 0, 1, 1, gain(2174), hours(40), 1},
        {age(50), 0, 1, 0, 1, 0, edu(13), 0, 1, 0, 0, 1, 0, 1, 0, 1, gain(0), hours(13), 1},
        {age(38), 1, 0, 0, 0, 1, edu(9), 1, 0, 0, 0, 0, 1, 0, 1, 1, gain(0), hours(40), 1},
    };
    // Test rows: the row with '?' is dropped; Federal-gov is unseen and encodes as zeros.
    const std::vector<std::vector<double>> expected_test = {
        {age(25), 1, 0, 0, 0, 1, edu(9), 0, 0, 1, 1, 0, 0, 1, 0, 1, gain(0), hours(40), 1},
        {age(44), 0, 0, 0, 1, 0, edu(13), 1, 0, 0, 0, 1, 0, 0, 1, 1, gain(7688), hours(50), 1},
    };
    REQUIRE(d.train.size() == 3);
    REQUIRE(d.test.size() == 2);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < names.size(); ++c)
            CHECK(d.train.x(r, c) == doctest::Approx(expected_train[r][c]).epsilon(1e-12));
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < names.size(); ++c)
            CHECK(d.test.x(r, c) == doctest::Approx(expected_test[r][c]).epsilon(1e-12));

    CHECK(d.train.y == std::vector<int>{0, 0, 1});
    CHECK(d.test.y == std::vector<int>{0, 1});
    CHECK(d.train.a == std::vector<Group>{Group::kZero, Group::kZero, Group::kOne});
    CHECK(d.test.a == std::vector<Group>{Group::kOne, Group::kZero});
    CHECK(d.stats.train_rows_read == 3);
    CHECK(d.stats.train_rows_dropped == 0);
    CHECK(d.stats.test_rows_read == 3);
    CHECK(d.stats.test_rows_dropped == 1);
    CHECK(d.stats.unseen_test_categories == 1);
    CHECK(d.schema.dropped_columns == std::vector<std::string>{"fnlwgt", "sex", "capital-loss"});
}

TEST_CASE("the group column can stay in the features when asked") {
    AdultOptions options;
    options.drop_columns = {"fnlwgt"};
    const AdultData d = load_adult(kTinyTrain, kTinyTest, options);
    const std::size_t female = feature_index(d.schema, "sex=Female");
    CHECK(d.train.x(2, female) == 1.0);
    CHECK(d.train.x(0, female) == 0.0);
}

TEST_CASE("ingestion errors") {
    CHECK_THROWS_AS(load_adult(kSource / "tests/fixtures/missing.data", kTinyTest), IngestionError);
    CHECK_THROWS_AS(load_adult(kTinyTrain, kSource / "tests/fixtures/missing.test"), IngestionError);
    const auto tmp = std::filesystem::temp_directory_path() / "mindiff_bad.data";
    {
        std::ofstream out(tmp);
        out << "39, State-gov, 77516\n";
    }
    CHECK_THROWS_AS(load_adult(tmp, kTinyTest), IngestionError);
    {
        std::ofstream out(tmp);
        out << "\n";
    }
    CHECK_THROWS_AS(load_adult(tmp, kTinyTest), IngestionError);
    std::filesystem::remove(tmp);
}

TEST_CASE("full Adult files give about 45,000 usable rows") {
    const AdultData& d = full_adult();
    const std::size_t total = d.train.size() + d.test.size();
    CHECK(total > 40000);
    CHECK(total == 45222);
    CHECK(d.train.size() == 30162);
    CHECK(d.stats.train_rows_dropped == 2399);
    CHECK(d.stats.test_rows_dropped == 1221);
}

TEST_CASE("standardized numeric columns have training mean 0 and stddev 1") {
    const AdultData& d = full_adult();
    for (const char* name : {"age", "education-num", "capital-gain", "capital-loss", "hours-per-week"}) {
        const std::size_t c = feature_index(d.schema, name);
        double sum = 0.0, sq = 0.0;
        const double n = static_cast<double>(d.train.size());
        for (std::size_t r = 0; r < d.train.size(); ++r) sum += d.train.x(r, c);
        const double mean = sum / n;
        for (std::size_t r = 0; r < d.train.size(); ++r) sq += (d.train.x(r, c) - mean) * (d.train.x(r, c) - mean);
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(std::fabs(std::sqrt(sq / n) - 1.0) < 1e-9);
    }
}

TEST_CASE("one-hot blocks sum to one per categorical column, or zero for unseen test values") {
    const AdultData& d = full_adult();
    for (const ColumnSchema& col : d.schema.columns) {
        if (col.kind != ColumnKind::kCategorical) continue;
        for (const Dataset* ds : {&d.train, &d.test}) {
            for (std::size_t r = 0; r < ds->size(); ++r) {
                double s = 0.0;
                for (std::size_t k = 0; k < col.width(); ++k) s += ds->x(r, col.offset + k);
                if (ds == &d.train) CHECK(s == 1.0);
                else CHECK((s == 1.0 || s == 0.0));
            }
        }
    }
}

TEST_CASE("ingestion is deterministic") {
    const AdultData a = load_adult(kAdultTrain, kAdultTest);
    CHECK(a.train == full_adult().train);
    CHECK(a.test == full_adult().test);
}

TEST_CASE("the test split does not influence the schema") {
    const AdultData a = load_adult(kTinyTrain, kTinyTest);
    const AdultData b = load_adult(kTinyTrain, kAdultTest);
    CHECK(a.schema.to_json() == b.schema.to_json());
    CHECK(a.train == b.train);
}

TEST_CASE("mask_group_labels keeps an exact seeded subset") {
    Dataset ds;
    ds.x = Matrix(100, 1);
    ds.y.assign(100, 0);
    for (int i = 0; i < 100; ++i) ds.a.push_back(i % 3 == 0 ? Group::kOne : Group::kZero);

    CHECK(mask_group_labels(ds, 1.0, 5) == ds);
    const Dataset half = mask_group_labels(ds, 0.5, 5);
    CHECK(std::count_if(half.a.begin(), half.a.end(), [](Group g) { return g != Group::kUnknown; }) == 50);
    for (std::size_t i = 0; i < 100; ++i)
        if (half.a[i] != Group::kUnknown) CHECK(half.a[i] == ds.a[i]);
    CHECK(mask_group_labels(ds, 0.5, 5) == half);
    CHECK_FALSE(mask_group_labels(ds, 0.5, 6) == half);
    const Dataset third = mask_group_labels(ds, 0.333, 1);
    CHECK(std::count_if(third.a.begin(), third.a.end(), [](Group g) { return g != Group::kUnknown; }) == 33);
    CHECK_THROWS_AS(mask_group_labels(ds, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(mask_group_labels(ds, -0.5, 1), ConfigError);
    CHECK_THROWS_AS(mask_group_labels(ds, 1.5, 1), ConfigError);
}

TEST_CASE("pair corpus is seeded and has one clicked item per pair") {
    PairCorpusConfig c;
    c.n_pairs = 500;
    const auto a = generate_pair_corpus(c);
    const auto b = generate_pair_corpus(c);
    REQUIRE(a.size() == 500);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].clicked == b[i].clicked);
        CHECK(a[i].unclicked == b[i].unclicked);
        CHECK(a[i].bucket == b[i].bucket);
        CHECK(a[i].clicked.size() == c.n_features);
        CHECK(a[i].bucket >= 0);
        CHECK(a[i].bucket < static_cast<int>(c.n_buckets));
        CHECK(a[i].clicked[1] == static_cast<double>(a[i].clicked_group));
    }
    c.seed = 1;
    CHECK(generate_pair_corpus(c)[0].clicked != a[0].clicked);
}

TEST_CASE("pair corpus without bias makes the clicked signal independent of the group") {
    PairCorpusConfig c;
    c.n_pairs = 10000;
    c.bias_strength = 0.0;
    auto split = [](const std::vector<PairExample>& pairs) {
        std::vector<double> in, out;
        for (const PairExample& p : pairs) (p.clicked_group == Group::kOne ? in : out).push_back(p.clicked[0]);
        return std::pair{in, out};
    };
    auto critical = [](std::size_t n, std::size_t m) {
        // Two-sample KS critical value at the 0.001 level.
        return 1.949 * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
    };
    const auto [in0, out0] = split(generate_pair_corpus(c));
    CHECK(ks_statistic(in0, out0) < critical(in0.size(), out0.size()));

    c.bias_strength = 1.0;
    const auto [in1, out1] = split(generate_pair_corpus(c));
    CHECK(ks_statistic(in1, out1) > critical(in1.size(), out1.size()));
}

TEST_CASE("pair corpus config validation") {
    PairCorpusConfig c;
    c.n_pairs = 0;
    CHECK_THROWS_AS(generate_pair_corpus(c), ConfigError);
    c = {};
    c.n_buckets = 0;
    CHECK_THROWS_AS(generate_pair_corpus(c), ConfigError);
    c = {};
    c.subgroup_rate = 1.5;
    CHECK_THROWS_AS(generate_pair_corpus(c), ConfigError);
    c = {};
    c.bias_strength = 3.0;
    CHECK_THROWS_AS(generate_pair_corpus(c), ConfigError);
}
