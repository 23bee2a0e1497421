#include "mindiff/experiments.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mindiff/csv.hpp"
#include "mindiff/error.hpp"
#include "mindiff/parallel.hpp"
#include "mindiff/rng.hpp"

namespace mindiff {

namespace {

std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t value = 0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc() || result.ptr != text.data() + text.size())
        throw ConfigError("not an unsigned integer: '" + std::string(text) + "'");
    return value;
}

bool parse_flag(std::string_view text) {
    if (text == "1") return true;
    if (text == "0") return false;
    throw ConfigError("not a 0/1 flag: '" + std::string(text) + "'");
}

bool is_mmd(Variant v) { return v != Variant::kCorr; }

struct Cell {
    Variant variant;
    SweepParameter parameter;
    double lambda;
    double kernel_length;
};

std::vector<ParetoPoint> run_cells(const Dataset& train_set, const Dataset& test_set, const SweepSpec& spec,
                                   const std::vector<Cell>& cells, std::size_t jobs) {
    std::vector<ParetoPoint> points(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const Cell& cell = cells[i];
        TrainConfig config = spec.base;
        config.penalty = variant_penalty(cell.variant, cell.lambda, cell.kernel_length);
        config.seed = cell_seed(spec.base.seed, cell.variant, cell.lambda, cell.kernel_length);
        const RepeatedResult repeated = run_repeated(train_set, test_set, config, spec.runs, 1);

        ParetoPoint& p = points[i];
        p.variant = cell.variant;
        p.parameter = cell.parameter;
        p.lambda = cell.lambda;
        p.kernel_length = cell.kernel_length;
        p.runs = spec.runs;
        p.failed_runs = repeated.failed_runs;
        p.single_run = repeated.single_run;
        const MetricSummary& acc = repeated.metric("accuracy");
        const MetricSummary& gap = repeated.metric("fpr_gap");
        if (acc.count > 0) p.accuracy_mean = acc.mean;
        p.accuracy_stderr = acc.stderr_;
        if (gap.count > 0) p.fpr_gap_mean = gap.mean;
        p.fpr_gap_stderr = gap.stderr_;
        p.seed_first = config.seed;
        p.seed_last = config.seed + spec.runs - 1;
        p.config_hash = config_hash(config);
        p.sweet_spot = cell.parameter == SweepParameter::kKernelLength && cell.kernel_length >= 0.1 &&
                       cell.kernel_length <= 0.5;
    });
    return points;
}

}  // namespace

std::string to_string(Variant variant) {
    switch (variant) {
        case Variant::kCorr: return "corr";
        case Variant::kMmdGaussian: return "mmd_gaussian";
        case Variant::kMmdLaplace: return "mmd_laplace";
    }
    throw ConfigError("unknown variant");
}

Variant parse_variant(std::string_view text) {
    if (text == "corr") return Variant::kCorr;
    if (text == "mmd_gaussian") return Variant::kMmdGaussian;
    if (text == "mmd_laplace") return Variant::kMmdLaplace;
    throw ConfigError("unknown variant '" + std::string(text) + "' (expected corr, mmd_gaussian or mmd_laplace)");
}

std::vector<Variant> parse_variant_list(std::string_view text) {
    std::vector<Variant> out;
    for (const std::string& item : split_csv_line(text)) {
        const Variant v = parse_variant(item);
        if (std::find(out.begin(), out.end(), v) != out.end())
            throw ConfigError("variant '" + item + "' listed twice");
        out.push_back(v);
    }
    return out;
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> variants = {Variant::kCorr, Variant::kMmdGaussian, Variant::kMmdLaplace};
    return variants;
}

PenaltyConfig variant_penalty(Variant variant, double lambda, double kernel_length) {
    switch (variant) {
        case Variant::kCorr: return PenaltyConfig::correlation(lambda);
        case Variant::kMmdGaussian: return PenaltyConfig::mmd({KernelFamily::kGaussian, kernel_length}, lambda);
        case Variant::kMmdLaplace: return PenaltyConfig::mmd({KernelFamily::kLaplace, kernel_length}, lambda);
    }
    throw ConfigError("unknown variant");
}

std::string to_string(SweepParameter parameter) {
    return parameter == SweepParameter::kLambda ? "lambda" : "kernel_length";
}

SweepParameter parse_sweep_parameter(std::string_view text) {
    if (text == "lambda") return SweepParameter::kLambda;
    if (text == "kernel_length") return SweepParameter::kKernelLength;
    throw ConfigError("unknown swept parameter '" + std::string(text) + "'");
}

std::vector<double> default_lambda_grid() { return {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}; }

std::vector<double> default_kernel_length_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 10; ++i) grid.push_back(std::pow(10.0, -3.0 + 4.0 * i / 9.0));
    grid.front() = 1e-3;
    grid.back() = 10.0;
    return grid;
}

std::vector<double> default_kernel_sweep_lambdas() { return {0.0, 0.1, 1.0, 5.0}; }

void SweepSpec::validate() const {
    base.validate();
    if (values.empty()) throw ConfigError("sweep value list is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw ConfigError("sweep values must be finite");
        if (i > 0 && !(values[i] > values[i - 1])) throw ConfigError("sweep values must be strictly increasing");
    }
    if (parameter == SweepParameter::kLambda && values.front() < 0.0)
        throw ConfigError("lambda values must be >= 0");
    if (parameter == SweepParameter::kKernelLength && !(values.front() > 0.0))
        throw ConfigError("kernel lengths must be > 0");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (variants.empty()) throw ConfigError("no variants to sweep");
    for (std::size_t i = 0; i < variants.size(); ++i)
        for (std::size_t j = i + 1; j < variants.size(); ++j)
            if (variants[i] == variants[j]) throw ConfigError("variant listed twice");
    if (!(kernel_length > 0.0) || !std::isfinite(kernel_length)) throw ConfigError("kernel length must be > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
}

std::uint64_t cell_seed(std::uint64_t base_seed, Variant variant, double lambda, double kernel_length) {
    std::uint64_t s = combine_seed(base_seed, static_cast<std::uint64_t>(variant) + 1);
    s = combine_seed(s, std::bit_cast<std::uint64_t>(lambda));
    s = combine_seed(s, std::bit_cast<std::uint64_t>(kernel_length));
    // Keep room for seed + run index without wrapping.
    return s >> 16;
}

std::string config_hash(const TrainConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : config.to_json().dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
    return buffer;
}

std::vector<ParetoPoint> sweep(const Dataset& train_set, const Dataset& test_set, const SweepSpec& spec,
                               std::size_t jobs) {
    spec.validate();
    std::vector<Cell> cells;
    for (Variant v : spec.variants) {
        for (double value : spec.values) {
            if (spec.parameter == SweepParameter::kLambda) {
                cells.push_back({v, spec.parameter, value, spec.kernel_length});
            } else {
                if (!is_mmd(v)) throw ConfigError("a kernel-length sweep needs an mmd variant");
                cells.push_back({v, spec.parameter, spec.lambda, value});
            }
        }
    }
    return run_cells(train_set, test_set, spec, cells, jobs);
}

std::vector<ParetoPoint> kernel_length_sweep(const Dataset& train_set, const Dataset& test_set, const SweepSpec& spec,
                                             std::span<const double> lambdas, std::size_t jobs) {
    SweepSpec checked = spec;
    checked.parameter = SweepParameter::kKernelLength;
    checked.validate();
    if (lambdas.empty()) throw ConfigError("no lambda curves given");
    std::vector<Cell> cells;
    for (Variant v : checked.variants) {
        if (!is_mmd(v)) throw ConfigError("a kernel-length sweep needs an mmd variant");
        for (double lambda : lambdas) {
            if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
            for (double length : checked.values) cells.push_back({v, SweepParameter::kKernelLength, lambda, length});
        }
    }
    return run_cells(train_set, test_set, checked, cells, jobs);
}

std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].accuracy_mean && points[i].fpr_gap_mean) candidates.push_back(i);

    auto dominates = [&](const ParetoPoint& q, const ParetoPoint& p) {
        const double qa = *q.accuracy_mean, qg = *q.fpr_gap_mean, pa = *p.accuracy_mean, pg = *p.fpr_gap_mean;
        return qa >= pa && qg <= pg && (qa > pa || qg < pg);
    };

    std::vector<ParetoPoint> front;
    for (std::size_t i : candidates) {
        const ParetoPoint& p = points[i];
        bool dominated = false;
        for (std::size_t j : candidates)
            if (dominates(points[j], p)) {
                dominated = true;
                break;
            }
        if (dominated) continue;
        auto same = std::find_if(front.begin(), front.end(), [&](const ParetoPoint& f) {
            return *f.accuracy_mean == *p.accuracy_mean && *f.fpr_gap_mean == *p.fpr_gap_mean;
        });
        if (same != front.end()) {
            same->duplicates += 1 + p.duplicates;
            continue;
        }
        front.push_back(p);
    }
    std::stable_sort(front.begin(), front.end(),
                     [](const ParetoPoint& a, const ParetoPoint& b) { return *a.fpr_gap_mean < *b.fpr_gap_mean; });
    return front;
}

std::string points_csv_header() {
    return "variant,parameter,lambda,kernel_length,runs,failed_runs,single_run,accuracy_mean,accuracy_stderr,"
           "fpr_gap_mean,fpr_gap_stderr,seed_first,seed_last,config_hash,sweet_spot,duplicates";
}

std::string points_to_csv(std::span<const ParetoPoint> points) {
    std::ostringstream out;
    out << points_csv_header() << '\n';
    for (const ParetoPoint& p : points) {
        out << to_string(p.variant) << ',' << to_string(p.parameter) << ',' << format_double(p.lambda) << ','
            << format_double(p.kernel_length) << ',' << p.runs << ',' << p.failed_runs << ','
            << (p.single_run ? 1 : 0) << ',' << format_optional(p.accuracy_mean) << ','
            << format_double(p.accuracy_stderr) << ',' << format_optional(p.fpr_gap_mean) << ','
            << format_double(p.fpr_gap_stderr) << ',' << p.seed_first << ',' << p.seed_last << ','
            << p.config_hash << ',' << (p.sweet_spot ? 1 : 0) << ',' << p.duplicates << '\n';
    }
    return out.str();
}

std::vector<ParetoPoint> points_from_csv(std::string_view text) {
    std::vector<ParetoPoint> points;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("points CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != points_csv_header()) throw ConfigError("unexpected points CSV header");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 16) throw ConfigError("points CSV line " + std::to_string(line_no) + " has wrong field count");
        ParetoPoint p;
        p.variant = parse_variant(f[0]);
        p.parameter = parse_sweep_parameter(f[1]);
        p.lambda = parse_double(f[2]);
        p.kernel_length = parse_double(f[3]);
        p.runs = parse_u64(f[4]);
        p.failed_runs = parse_u64(f[5]);
        p.single_run = parse_flag(f[6]);
        p.accuracy_mean = parse_optional(f[7]);
        p.accuracy_stderr = parse_double(f[8]);
        p.fpr_gap_mean = parse_optional(f[9]);
        p.fpr_gap_stderr = parse_double(f[10]);
        p.seed_first = parse_u64(f[11]);
        p.seed_last = parse_u64(f[12]);
        p.config_hash = f[13];
        p.sweet_spot = parse_flag(f[14]);
        p.duplicates = parse_u64(f[15]);
        points.push_back(std::move(p));
    }
    return points;
}

void PairSimConfig::validate() const {
    PairCorpusConfig c = corpus;
    c.validate();
    train.validate();
    if (!(corr_lambda >= 0.0) || !std::isfinite(corr_lambda)) throw ConfigError("corr lambda must be >= 0");
    if (!(mmd_lambda >= 0.0) || !std::isfinite(mmd_lambda)) throw ConfigError("mmd lambda must be >= 0");
    kernel.validate();
}

PairSimResult pairwise_simulation(const PairSimConfig& config, std::size_t jobs) {
    config.validate();
    PairCorpusConfig corpus = config.corpus;
    corpus.seed = combine_seed(config.seed, 0x7a11);
    const std::vector<PairExample> train_pairs = generate_pair_corpus(corpus);
    corpus.seed = combine_seed(config.seed, 0x7e57);
    const std::vector<PairExample> test_pairs = generate_pair_corpus(corpus);

    const PenaltyConfig penalties[3] = {PenaltyConfig::none(), PenaltyConfig::correlation(config.corr_lambda),
                                        PenaltyConfig::mmd(config.kernel, config.mmd_lambda)};
    PairwiseReport reports[3];
    double discarded = 0.0;
    parallel_for(3, jobs, [&](std::size_t i) {
        PairTrainConfig tc = config.train;
        tc.seed = config.seed;
        tc.penalty = penalties[i];
        const PairTrainResult trained = train_pairwise(train_pairs, tc);
        reports[i] = pairwise_metric(test_pairs, trained.params);
        if (i == 2) discarded = trained.discarded_pair_fraction;
    });

    PairSimResult result;
    result.baseline = reports[0];
    result.corr = reports[1];
    result.mmd = reports[2];
    result.discarded_pair_fraction = discarded;
    if (result.baseline.total_gap > 0.0) {
        result.corr_reduction = 1.0 - result.corr.total_gap / result.baseline.total_gap;
        result.mmd_reduction = 1.0 - result.mmd.total_gap / result.baseline.total_gap;
    }
    return result;
}

std::string pair_sim_summary_csv(const PairSimResult& result) {
    std::ostringstream out;
    out << "model,total_gap,overall_accuracy,complete,gap_reduction\n";
    auto row = [&](const char* name, const PairwiseReport& r, const std::optional<double>& reduction) {
        out << name << ',' << format_double(r.total_gap) << ',' << format_double(r.overall_accuracy) << ','
            << (r.complete ? 1 : 0) << ',' << format_optional(reduction) << '\n';
    };
    row("baseline", result.baseline, std::nullopt);
    row("corr", result.corr, result.corr_reduction);
    row("mmd", result.mmd, result.mmd_reduction);
    return out.str();
}

}  // namespace mindiff
