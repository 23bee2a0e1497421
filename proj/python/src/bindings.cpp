#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mindiff/data.hpp"
#include "mindiff/error.hpp"
#include "mindiff/experiments.hpp"
#include "mindiff/metrics.hpp"
#include "mindiff/penalties.hpp"
#include "mindiff/training.hpp"

namespace py = pybind11;
using namespace mindiff;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

py::object to_python(const nlohmann::json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

std::vector<double> to_vector(const DoubleArray& a) {
    if (a.ndim() != 1) throw DimensionError("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

std::vector<Group> to_groups(const IntArray& a) {
    if (a.ndim() != 1) throw DimensionError("expected a 1-d group array");
    std::vector<Group> out;
    for (py::ssize_t i = 0; i < a.size(); ++i) {
        const int g = a.data()[i];
        if (g < -1 || g > 1) throw ConfigError("groups must be -1 (unknown), 0 or 1");
        out.push_back(static_cast<Group>(g));
    }
    return out;
}

Dataset to_dataset(const DoubleArray& x, const IntArray& y, const IntArray& a) {
    if (x.ndim() != 2) throw DimensionError("x must be 2-d");
    Dataset d;
    d.x = Matrix(static_cast<std::size_t>(x.shape(0)), static_cast<std::size_t>(x.shape(1)),
                 std::vector<double>(x.data(), x.data() + x.size()));
    d.y.assign(y.data(), y.data() + y.size());
    d.a = to_groups(a);
    d.validate();
    return d;
}

py::dict from_dataset(const Dataset& d) {
    DoubleArray x({d.x.rows(), d.x.cols()});
    std::copy(d.x.data().begin(), d.x.data().end(), x.mutable_data());
    IntArray y(static_cast<py::ssize_t>(d.size())), a(static_cast<py::ssize_t>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
        y.mutable_data()[i] = d.y[i];
        a.mutable_data()[i] = static_cast<int>(d.a[i]);
    }
    py::dict out;
    out["x"] = x;
    out["y"] = y;
    out["a"] = a;
    return out;
}

PenaltyConfig make_penalty(const std::string& penalty, const std::string& kernel, double lambda, double length) {
    switch (parse_penalty_kind(penalty)) {
        case PenaltyKind::kNone: return PenaltyConfig::none();
        case PenaltyKind::kCorrelation: return PenaltyConfig::correlation(lambda);
        case PenaltyKind::kMmd: return PenaltyConfig::mmd({parse_kernel_family(kernel), length}, lambda);
    }
    return {};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MinDiff fairness regularization core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<IngestionError>(m, "IngestionError", PyExc_OSError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);

    m.def("gaussian_kernel", &gaussian_kernel, py::arg("x"), py::arg("y"), py::arg("length") = 0.1);
    m.def("laplace_kernel", &laplace_kernel, py::arg("x"), py::arg("y"), py::arg("length") = 0.1);

    m.def(
        "mmd_squared",
        [](const DoubleArray& s0, const DoubleArray& s1, const std::string& kernel, double length) {
            const MmdResult r = mmd_squared(to_vector(s0), to_vector(s1), {parse_kernel_family(kernel), length});
            return py::make_tuple(r.value, r.grad_first, r.grad_second);
        },
        py::arg("s0"), py::arg("s1"), py::arg("kernel") = "gaussian", py::arg("length") = 0.1,
        "Biased MMD^2 between two score samples; returns (value, grad_s0, grad_s1).");

    m.def(
        "correlation_penalty",
        [](const DoubleArray& x, const DoubleArray& z) {
            const PenaltyResult r = correlation_penalty(to_vector(x), to_vector(z));
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("x"), py::arg("z"), "|Pearson(x, z)| and its gradient w.r.t. x.");

    m.def(
        "evaluate",
        [](const DoubleArray& p, const IntArray& y, const IntArray& a, double threshold) {
            const std::vector<int> labels(y.data(), y.data() + y.size());
            return to_python(eval_report_json(evaluate(to_vector(p), labels, to_groups(a), threshold)));
        },
        py::arg("scores"), py::arg("labels"), py::arg("groups"), py::arg("threshold") = 0.4,
        "Accuracy and per-group false positive rates at a strict threshold.");

    m.def(
        "load_adult",
        [](const std::string& train_path, const std::string& test_path) {
            const AdultData data = load_adult(train_path, test_path, {});
            py::dict out;
            out["train"] = from_dataset(data.train);
            out["test"] = from_dataset(data.test);
            out["feature_names"] = data.schema.feature_names;
            return out;
        },
        py::arg("train_path"), py::arg("test_path"), "Encoded Adult splits as numpy arrays.");

    m.def(
        "train",
        [](const DoubleArray& x_train, const IntArray& y_train, const IntArray& a_train, const DoubleArray& x_test,
           const IntArray& y_test, const IntArray& a_test, const std::string& penalty, double lambda,
           const std::string& kernel, double kernel_length, std::uint64_t seed, std::size_t epochs,
           std::size_t batch_size, double learning_rate, std::size_t hidden_units, double threshold) {
            TrainConfig c;
            c.seed = seed;
            c.epochs = epochs;
            c.batch_size = batch_size;
            c.learning_rate = learning_rate;
            c.hidden_units = hidden_units;
            c.penalty = make_penalty(penalty, kernel, lambda, kernel_length);
            c.threshold = ThresholdPolicy::fixed(threshold);
            const Dataset tr = to_dataset(x_train, y_train, a_train);
            const Dataset te = to_dataset(x_test, y_test, a_test);
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(tr, te, c);
            }
            return to_python(run_record(c, r));
        },
        py::arg("x_train"), py::arg("y_train"), py::arg("a_train"), py::arg("x_test"), py::arg("y_test"),
        py::arg("a_test"), py::arg("penalty") = "none", py::arg("lam") = 0.0, py::arg("kernel") = "gaussian",
        py::arg("kernel_length") = 0.1, py::arg("seed") = 0, py::arg("epochs") = 15, py::arg("batch_size") = 256,
        py::arg("learning_rate") = 0.001, py::arg("hidden_units") = 64, py::arg("threshold") = 0.4,
        "Train one model and return its run record.");

    m.def(
        "pareto_front",
        [](const std::vector<double>& accuracy, const std::vector<double>& gap) {
            if (accuracy.size() != gap.size()) throw DimensionError("accuracy and gap differ in length");
            std::vector<ParetoPoint> pts(accuracy.size());
            for (std::size_t i = 0; i < pts.size(); ++i) {
                pts[i].accuracy_mean = accuracy[i];
                pts[i].fpr_gap_mean = gap[i];
                pts[i].seed_first = i;
            }
            std::vector<std::size_t> keep;
            for (const ParetoPoint& p : pareto_front(pts)) keep.push_back(p.seed_first);
            return keep;
        },
        py::arg("accuracy"), py::arg("gap"),
        "Indices of non-dominated (accuracy, gap) points, ordered by gap; ties keep the first index.");

    m.def(
        "pairwise_simulation",
        [](std::uint64_t seed, std::size_t n_pairs, double bias_strength, std::size_t epochs, double corr_lambda,
           double mmd_lambda) {
            PairSimConfig c;
            c.seed = seed;
            c.corpus.n_pairs = n_pairs;
            c.corpus.bias_strength = bias_strength;
            c.train.epochs = epochs;
            c.corr_lambda = corr_lambda;
            c.mmd_lambda = mmd_lambda;
            PairSimResult r;
            {
                py::gil_scoped_release release;
                r = pairwise_simulation(c);
            }
            py::dict out;
            out["baseline_gap"] = r.baseline.total_gap;
            out["corr_gap"] = r.corr.total_gap;
            out["mmd_gap"] = r.mmd.total_gap;
            out["baseline_accuracy"] = r.baseline.overall_accuracy;
            out["corr_accuracy"] = r.corr.overall_accuracy;
            out["mmd_accuracy"] = r.mmd.overall_accuracy;
            out["corr_reduction"] = r.corr_reduction;
            out["mmd_reduction"] = r.mmd_reduction;
            return out;
        },
        py::arg("seed") = 0, py::arg("n_pairs") = 20000, py::arg("bias_strength") = 1.0, py::arg("epochs") = 10,
        py::arg("corr_lambda") = 1.0, py::arg("mmd_lambda") = 1.0,
        "Baseline, Corr and MMD pair rankers on a synthetic biased click corpus.");
}
