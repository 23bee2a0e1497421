#include <curl/curl.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mindiff/csv.hpp"
#include "mindiff/data.hpp"
#include "mindiff/error.hpp"
#include "mindiff/experiments.hpp"
#include "mindiff/rng.hpp"
#include "mindiff/training.hpp"

#ifndef MINDIFF_VERSION
#define MINDIFF_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mindiff;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIngestion = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitPartial = 4;

// ---------------------------------------------------------------- helpers

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    try {
        for (const std::string& item : split_csv_line(text)) out.push_back(parse_double(trim(item)));
    } catch (const ConfigError&) {
        throw ConfigError(std::string("bad ") + what + " list '" + text + "'");
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    for (const std::string& item : split_csv_line(text)) {
        std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buffer[1 << 16];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) EVP_DigestUpdate(ctx, buffer, in.gcount());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

/// Reads a flat `key = value` file. Blank lines and lines starting with
/// '#' or ';' are ignored.
std::vector<std::pair<std::string, std::string>> read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
        entries.emplace_back(std::move(key), std::move(value));
    }
    return entries;
}

/// Every option of `cmd` except help and config, as key=value lines in
/// declaration order, using the parsed value or the default.
std::vector<std::pair<std::string, std::string>> resolved_options(const CLI::App& cmd) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const CLI::Option* opt : cmd.get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "config") continue;
        std::string value = opt->get_default_str();
        if (opt->count() > 0) value = opt->results().back();
        out.emplace_back(name, value);
    }
    return out;
}

std::string to_config_text(const std::vector<std::pair<std::string, std::string>>& options) {
    std::string text;
    for (const auto& [k, v] : options) text += k + "=" + v + "\n";
    return text;
}

struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<fs::path> inputs;
    std::vector<std::string> outputs;

    /// Writes manifest.json and resolved.conf; the latter can be passed back
    /// with --config to repeat the run.
    void write(const fs::path& out_dir) const {
        json doc;
        doc["tool"] = "mindiff";
        doc["version"] = MINDIFF_VERSION;
        doc["command"] = command;
        doc["seed"] = seed;
        json cfg = json::object();
        for (const auto& [k, v] : config) cfg[k] = v;
        doc["config"] = cfg;
        doc["inputs"] = json::array();
        for (const fs::path& p : inputs) doc["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
        doc["outputs"] = outputs;
        write_text(out_dir / "manifest.json", doc.dump(2) + "\n");
        write_text(out_dir / "resolved.conf", to_config_text(config));
    }
};

// ---------------------------------------------------------------- shared options

struct DataOptions {
    std::string train_file = "data/adult/adult.data";
    std::string test_file = "data/adult/adult.test";
    std::string sensitive_column = "sex";
    std::string protected_value = "Female";
    std::string drop_columns = "fnlwgt,sex";
    double group_fraction = 1.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--train-file", train_file, "Adult training file")->capture_default_str();
        cmd->add_option("--test-file", test_file, "Adult test file")->capture_default_str();
        cmd->add_option("--sensitive-column", sensitive_column, "column defining the group")->capture_default_str();
        cmd->add_option("--protected-value", protected_value, "value of the sensitive column mapped to group 1")
            ->capture_default_str();
        cmd->add_option("--drop-columns", drop_columns, "comma-separated raw columns excluded from the features")
            ->capture_default_str();
        cmd->add_option("--group-fraction", group_fraction, "share of training rows whose group stays known")
            ->capture_default_str();
    }

    void check() const {
        if (!(group_fraction > 0.0 && group_fraction <= 1.0)) throw ConfigError("group-fraction must lie in (0, 1]");
    }

    AdultData load(std::uint64_t seed) const {
        AdultOptions options;
        options.sensitive_column = sensitive_column;
        options.protected_value = protected_value;
        options.drop_columns = parse_string_list(drop_columns);
        AdultData data = load_adult(train_file, test_file, options);
        if (group_fraction < 1.0) data.train = mask_group_labels(data.train, group_fraction, combine_seed(seed, 3));
        return data;
    }
};

struct ModelOptions {
    std::uint64_t seed = 0;
    std::size_t epochs = 15;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    std::size_t hidden_units = 64;
    std::size_t min_side = 2;
    std::string threshold_policy = "fixed";
    double threshold = 0.4;
    double target_recall = 0.9;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "base random seed")->capture_default_str();
        cmd->add_option("--epochs", epochs, "training epochs")->capture_default_str();
        cmd->add_option("--batch-size", batch_size, "mini-batch size")->capture_default_str();
        cmd->add_option("--learning-rate", learning_rate, "Adam learning rate")->capture_default_str();
        cmd->add_option("--hidden-units", hidden_units, "hidden layer width")->capture_default_str();
        cmd->add_option("--min-side", min_side, "rows needed in each group before the penalty applies")
            ->capture_default_str();
        cmd->add_option("--threshold-policy", threshold_policy, "fixed or target_recall")->capture_default_str();
        cmd->add_option("--threshold", threshold, "decision threshold for the fixed policy")->capture_default_str();
        cmd->add_option("--target-recall", target_recall, "training-split recall for the target_recall policy")
            ->capture_default_str();
    }

    TrainConfig config(const PenaltyConfig& penalty) const {
        TrainConfig c;
        c.seed = seed;
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.learning_rate = learning_rate;
        c.hidden_units = hidden_units;
        c.penalty = penalty;
        c.penalty.min_side = min_side;
        if (threshold_policy == "fixed")
            c.threshold = ThresholdPolicy::fixed(threshold);
        else if (threshold_policy == "target_recall")
            c.threshold = ThresholdPolicy::target_recall(target_recall);
        else
            throw ConfigError("unknown threshold policy '" + threshold_policy + "'");
        c.validate();
        return c;
    }
};

void add_common(CLI::App* cmd, std::string& config_file, std::string& out_dir, const std::string& default_out) {
    out_dir = default_out;
    cmd->add_option("--config", config_file, "flat key=value file; command-line flags take precedence");
    cmd->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
}

void print_points(const std::vector<ParetoPoint>& points) {
    std::printf("%-13s %10s %10s %9s %9s %7s\n", "variant", "lambda", "length", "accuracy", "fpr_gap", "failed");
    for (const ParetoPoint& p : points) {
        std::printf("%-13s %10g %10g %9s %9s %7zu\n", to_string(p.variant).c_str(), p.lambda, p.kernel_length,
                    p.accuracy_mean ? std::to_string(*p.accuracy_mean).substr(0, 6).c_str() : "NA",
                    p.fpr_gap_mean ? std::to_string(*p.fpr_gap_mean).substr(0, 6).c_str() : "NA", p.failed_runs);
    }
}

int partial_exit(const std::vector<ParetoPoint>& points) {
    for (const ParetoPoint& p : points)
        if (p.failed_runs > 0) {
            std::cerr << "some runs failed; see the failed_runs column\n";
            return kExitPartial;
        }
    return 0;
}

// ---------------------------------------------------------------- commands

struct TrainCommand {
    DataOptions data;
    ModelOptions model;
    std::string config_file;
    std::string out_dir;
    std::string penalty = "none";
    std::string kernel = "gaussian";
    double lambda = 0.0;
    double kernel_length = 0.1;
    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("train", "Train one model and evaluate it on the test split");
        add_common(cmd, config_file, out_dir, "out/train");
        data.add_to(cmd);
        model.add_to(cmd);
        cmd->add_option("--penalty", penalty, "none, corr or mmd")->capture_default_str();
        cmd->add_option("--kernel", kernel, "gaussian or laplace (mmd only)")->capture_default_str();
        cmd->add_option("--lambda", lambda, "MinDiff weight")->capture_default_str();
        cmd->add_option("--kernel-length", kernel_length, "kernel length l (mmd only)")->capture_default_str();
    }

    int run() {
        PenaltyConfig p;
        switch (parse_penalty_kind(penalty)) {
            case PenaltyKind::kNone: p = PenaltyConfig::none(); break;
            case PenaltyKind::kCorrelation: p = PenaltyConfig::correlation(lambda); break;
            case PenaltyKind::kMmd: p = PenaltyConfig::mmd({parse_kernel_family(kernel), kernel_length}, lambda); break;
        }
        const TrainConfig config = model.config(p);
        data.check();
        const AdultData adult = data.load(config.seed);

        const fs::path dir = out_dir;
        fs::create_directories(dir);
        Manifest manifest{"train", config.seed, resolved_options(*cmd), {data.train_file, data.test_file},
                          {"manifest.json", "resolved.conf", "schema.json", "run_record.json", "eval.csv"}};
        manifest.write(dir);
        write_schema_manifest(adult.schema, adult.stats, dir / "schema.json");

        const TrainResult result = train(adult.train, adult.test, config);
        write_text(dir / "run_record.json", run_record(config, result).dump(2) + "\n");
        write_text(dir / "eval.csv", "split," + eval_report_csv_header() + "\ntrain," +
                                         eval_report_csv_row(result.train_report) + "\ntest," +
                                         eval_report_csv_row(result.test_report) + "\n");

        const EvalReport& t = result.test_report;
        std::printf("test accuracy %.4f  fpr_group0 %s  fpr_group1 %s  fpr_gap %s  fpr_ratio %s  threshold %g\n",
                    t.accuracy, format_optional(t.fpr_group0).c_str(), format_optional(t.fpr_group1).c_str(),
                    format_optional(t.fpr_gap).c_str(), format_optional(t.fpr_ratio).c_str(), t.threshold);
        std::printf("penalty skipped on %zu of %zu batches\n", result.penalty_skipped_batches, result.batches);
        return 0;
    }
};

struct SweepCommand {
    DataOptions data;
    ModelOptions model;
    std::string config_file;
    std::string out_dir;
    std::string variants = "corr,mmd_gaussian,mmd_laplace";
    std::string lambdas = "0,0.25,0.5,1,2,4,8";
    double kernel_length = 0.1;
    std::size_t runs = 20;
    std::size_t jobs = 1;
    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("sweep", "Sweep the MinDiff weight for each penalty variant");
        add_common(cmd, config_file, out_dir, "out/sweep");
        data.add_to(cmd);
        model.add_to(cmd);
        cmd->add_option("--variants", variants, "comma-separated: corr, mmd_gaussian, mmd_laplace")
            ->capture_default_str();
        cmd->add_option("--lambdas", lambdas, "comma-separated, strictly increasing weights")->capture_default_str();
        cmd->add_option("--kernel-length", kernel_length, "kernel length for mmd variants")->capture_default_str();
        cmd->add_option("--runs", runs, "seeded runs per point")->capture_default_str();
        cmd->add_option("--jobs", jobs, "worker threads (results do not depend on it)")->capture_default_str();
    }

    int run() {
        SweepSpec spec;
        spec.base = model.config(PenaltyConfig::none());
        spec.parameter = SweepParameter::kLambda;
        spec.values = parse_double_list(lambdas, "lambda");
        spec.variants = parse_variant_list(variants);
        spec.kernel_length = kernel_length;
        spec.runs = runs;
        spec.validate();
        data.check();
        const AdultData adult = data.load(spec.base.seed);

        const fs::path dir = out_dir;
        fs::create_directories(dir);
        Manifest{"sweep", spec.base.seed, resolved_options(*cmd), {data.train_file, data.test_file},
                 {"manifest.json", "resolved.conf", "sweep.csv"}}
            .write(dir);
        const std::vector<ParetoPoint> points = sweep(adult.train, adult.test, spec, jobs);
        write_text(dir / "sweep.csv", points_to_csv(points));
        print_points(points);
        return partial_exit(points);
    }
};

struct KernelSweepCommand {
    DataOptions data;
    ModelOptions model;
    std::string config_file;
    std::string out_dir;
    std::string variants = "mmd_gaussian";
    std::string kernel_lengths;
    std::string lambdas = "0,0.1,1,5";
    std::size_t runs = 20;
    std::size_t jobs = 1;
    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        std::string grid;
        for (double l : default_kernel_length_grid()) grid += (grid.empty() ? "" : ",") + format_double(l);
        kernel_lengths = grid;
        cmd = app.add_subcommand("kernel-sweep", "Sweep the kernel length for fixed MinDiff weights");
        add_common(cmd, config_file, out_dir, "out/kernel-sweep");
        data.add_to(cmd);
        model.add_to(cmd);
        cmd->add_option("--variants", variants, "comma-separated: mmd_gaussian, mmd_laplace")->capture_default_str();
        cmd->add_option("--kernel-lengths", kernel_lengths, "comma-separated, strictly increasing lengths")
            ->capture_default_str();
        cmd->add_option("--lambdas", lambdas, "one curve per weight")->capture_default_str();
        cmd->add_option("--runs", runs, "seeded runs per point")->capture_default_str();
        cmd->add_option("--jobs", jobs, "worker threads (results do not depend on it)")->capture_default_str();
    }

    int run() {
        SweepSpec spec;
        spec.base = model.config(PenaltyConfig::none());
        spec.parameter = SweepParameter::kKernelLength;
        spec.values = parse_double_list(kernel_lengths, "kernel length");
        spec.variants = parse_variant_list(variants);
        spec.runs = runs;
        spec.validate();
        const std::vector<double> curves = parse_double_list(lambdas, "lambda");
        for (Variant v : spec.variants)
            if (v == Variant::kCorr) throw ConfigError("kernel-sweep accepts mmd variants only");
        if (curves.empty()) throw ConfigError("no lambda curves given");
        data.check();
        const AdultData adult = data.load(spec.base.seed);

        const fs::path dir = out_dir;
        fs::create_directories(dir);
        Manifest{"kernel-sweep", spec.base.seed, resolved_options(*cmd), {data.train_file, data.test_file},
                 {"manifest.json", "resolved.conf", "kernel_sweep.csv"}}
            .write(dir);
        const std::vector<ParetoPoint> points = kernel_length_sweep(adult.train, adult.test, spec, curves, jobs);
        write_text(dir / "kernel_sweep.csv", points_to_csv(points));
        print_points(points);
        return partial_exit(points);
    }
};

struct ParetoCommand {
    std::string input;
    std::string config_file;
    std::string out_dir;
    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("pareto", "Extract the accuracy / FPR-gap Pareto front from a sweep CSV");
        add_common(cmd, config_file, out_dir, "out/pareto");
        cmd->add_option("input,--input", input, "sweep.csv or kernel_sweep.csv")->required();
    }

    int run() {
        std::ifstream in(input, std::ios::binary);
        if (!in) throw IngestionError("cannot read " + input);
        std::stringstream buffer;
        buffer << in.rdbuf();
        std::vector<ParetoPoint> points;
        try {
            points = points_from_csv(buffer.str());
        } catch (const ConfigError& e) {
            throw IngestionError(input + ": " + e.what());
        }
        const std::vector<ParetoPoint> front = pareto_front(points);

        const fs::path dir = out_dir;
        fs::create_directories(dir);
        Manifest{"pareto", 0, resolved_options(*cmd), {input}, {"manifest.json", "resolved.conf", "pareto.csv"}}.write(
            dir);
        write_text(dir / "pareto.csv", points_to_csv(front));
        print_points(front);
        return 0;
    }
};

struct PairwiseSimCommand {
    PairSimConfig sim;
    std::string config_file;
    std::string out_dir;
    std::string kernel = "gaussian";
    std::size_t jobs = 1;
    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("pairwise-sim",
                                 "Train baseline, Corr and MMD pair rankers on a synthetic biased click corpus");
        add_common(cmd, config_file, out_dir, "out/pairwise-sim");
        cmd->add_option("--seed", sim.seed, "random seed")->capture_default_str();
        cmd->add_option("--n-pairs", sim.corpus.n_pairs, "pairs in each of the train and test corpora")
            ->capture_default_str();
        cmd->add_option("--subgroup-rate", sim.corpus.subgroup_rate, "probability that an item is in the subgroup")
            ->capture_default_str();
        cmd->add_option("--bias-strength", sim.corpus.bias_strength, "attenuation of subgroup relevance, 0 = none")
            ->capture_default_str();
        cmd->add_option("--n-buckets", sim.corpus.n_buckets, "satisfaction buckets")->capture_default_str();
        cmd->add_option("--epochs", sim.train.epochs, "training epochs")->capture_default_str();
        cmd->add_option("--batch-size", sim.train.batch_size, "pairs per mini-batch")->capture_default_str();
        cmd->add_option("--learning-rate", sim.train.learning_rate, "Adam learning rate")->capture_default_str();
        cmd->add_option("--hidden-units", sim.train.hidden_units, "hidden layer width")->capture_default_str();
        cmd->add_option("--temperature", sim.train.temperature, "ranking loss temperature")->capture_default_str();
        cmd->add_option("--corr-lambda", sim.corr_lambda, "weight of the correlation penalty")->capture_default_str();
        cmd->add_option("--mmd-lambda", sim.mmd_lambda, "weight of the MMD penalty")->capture_default_str();
        cmd->add_option("--kernel", kernel, "gaussian or laplace")->capture_default_str();
        cmd->add_option("--kernel-length", sim.kernel.length, "kernel length l")->capture_default_str();
        cmd->add_option("--jobs", jobs, "worker threads (results do not depend on it)")->capture_default_str();
    }

    int run() {
        sim.kernel.family = parse_kernel_family(kernel);
        sim.validate();
        const fs::path dir = out_dir;
        fs::create_directories(dir);
        Manifest{"pairwise-sim",
                 sim.seed,
                 resolved_options(*cmd),
                 {},
                 {"manifest.json", "resolved.conf", "pairwise_baseline.csv", "pairwise_corr.csv", "pairwise_mmd.csv",
                  "pairwise_summary.csv"}}
            .write(dir);
        const PairSimResult result = pairwise_simulation(sim, jobs);
        write_text(dir / "pairwise_baseline.csv", pairwise_report_csv(result.baseline));
        write_text(dir / "pairwise_corr.csv", pairwise_report_csv(result.corr));
        write_text(dir / "pairwise_mmd.csv", pairwise_report_csv(result.mmd));
        write_text(dir / "pairwise_summary.csv", pair_sim_summary_csv(result));
        std::cout << pair_sim_summary_csv(result);
        std::printf("mmd ignored %.1f%% of training pairs (same-group pairs)\n",
                    100.0 * result.discarded_pair_fraction);
        return 0;
    }
};

size_t curl_write(char* data, size_t size, size_t count, void* stream) {
    static_cast<std::ofstream*>(stream)->write(data, static_cast<std::streamsize>(size * count));
    return size * count;
}

void download(const std::string& url, const fs::path& target) {
    std::ofstream out(target, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + target.string());
    CURL* curl = curl_easy_init();
    if (!curl) throw IngestionError("cannot initialise the HTTP client");
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, curl_write);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &out);
    const CURLcode code = curl_easy_perform(curl);
    curl_easy_cleanup(curl);
    out.close();
    if (code != CURLE_OK) {
        fs::remove(target);
        throw IngestionError("download of " + url + " failed: " + curl_easy_strerror(code));
    }
}

struct FetchDataCommand {
    std::string source = "https://archive.ics.uci.edu/ml/machine-learning-databases/adult";
    std::string config_file;
    std::string out_dir;
    std::string files = "adult.data,adult.test,adult.names";
    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("fetch-data", "Download or copy the UCI Adult files and record their checksums");
        add_common(cmd, config_file, out_dir, "data/adult");
        cmd->add_option("--source", source, "base URL or local directory holding the files")->capture_default_str();
        cmd->add_option("--files", files, "comma-separated file names")->capture_default_str();
    }

    int run() {
        const std::vector<std::string> names = parse_string_list(files);
        if (names.empty()) throw ConfigError("no files to fetch");
        const bool remote = source.find("://") != std::string::npos;
        if (!remote)
            for (const std::string& name : names)
                if (!fs::is_regular_file(fs::path(source) / name))
                    throw IngestionError("missing " + (fs::path(source) / name).string());
        const fs::path dir = out_dir;
        fs::create_directories(dir);
        std::string sums;
        for (const std::string& name : names) {
            const fs::path target = dir / name;
            if (remote) {
                download(source + "/" + name, target);
            } else {
                const fs::path from = fs::path(source) / name;
                if (!fs::exists(target) || !fs::equivalent(from, target))
                    fs::copy_file(from, target, fs::copy_options::overwrite_existing);
            }
            sums += sha256_file(target) + "  " + name + "\n";
        }
        write_text(dir / "SHA256SUMS", sums);
        std::cout << sums;
        return 0;
    }
};

/// Arguments with the --config file of the chosen subcommand expanded in
/// front of the explicit flags, so explicit flags win.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
    if (args.empty()) return args;
    CLI::App* cmd = app.get_subcommand_no_throw(args[0]);
    if (!cmd) return args;
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    std::vector<std::string> expanded = {args[0]};
    for (const auto& [key, value] : read_config_file(config_path)) {
        const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt || key == "config" || key == "help")
            throw ConfigError("unknown key '" + key + "' in " + config_path);
        expanded.push_back("--" + key + "=" + value);
    }
    expanded.insert(expanded.end(), args.begin() + 1, args.end());
    return expanded;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MinDiff fairness regularization lab"};
    app.name("mindiff");
    app.set_version_flag("--version", MINDIFF_VERSION);
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    TrainCommand train_cmd;
    SweepCommand sweep_cmd;
    KernelSweepCommand kernel_cmd;
    ParetoCommand pareto_cmd;
    PairwiseSimCommand pair_cmd;
    FetchDataCommand fetch_cmd;
    train_cmd.attach(app);
    sweep_cmd.attach(app);
    kernel_cmd.attach(app);
    pareto_cmd.attach(app);
    pair_cmd.attach(app);
    fetch_cmd.attach(app);

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(app, args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (train_cmd.cmd->parsed()) return train_cmd.run();
        if (sweep_cmd.cmd->parsed()) return sweep_cmd.run();
        if (kernel_cmd.cmd->parsed()) return kernel_cmd.run();
        if (pareto_cmd.cmd->parsed()) return pareto_cmd.run();
        if (pair_cmd.cmd->parsed()) return pair_cmd.run();
        if (fetch_cmd.cmd->parsed()) return fetch_cmd.run();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IngestionError& e) {
        std::cerr << "ingestion error: " << e.what() << "\n";
        return kExitIngestion;
    } catch (const NumericError& e) {
        std::cerr << "numeric divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
