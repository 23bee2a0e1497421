#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "mindiff/error.hpp"
#include "mindiff/penalties.hpp"
#include "mindiff/rng.hpp"

using namespace mindiff;

namespace {

std::vector<double> random_sample(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(0.001, 0.999);
    return v;
}

KernelSpec random_kernel(Rng& rng) {
    const KernelFamily family = rng.bernoulli(0.5) ? KernelFamily::kGaussian : KernelFamily::kLaplace;
    return {family, std::pow(10.0, rng.uniform(-1.5, 0.5))};
}

std::function<double(double, double)> oracle_kernel(const KernelSpec& k) {
    if (k.family == KernelFamily::kGaussian) return [l = k.length](double x, double y) { return oracle::gaussian(x, y, l); };
    return [l = k.length](double x, double y) { return oracle::laplace(x, y, l); };
}

}  // namespace

TEST_CASE("gaussian kernel examples") {
    CHECK(gaussian_kernel(0.3, 0.3, 0.1) == 1.0);
    CHECK(gaussian_kernel(0.3, 0.3, 7.0) == 1.0);
    CHECK(gaussian_kernel(0.0, 0.1, 0.1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(gaussian_kernel(0.0, 0.1, 0.1) == doctest::Approx(0.36788).epsilon(1e-5));
    const double far = gaussian_kernel(0.0, 1.0, 0.1);
    CHECK(far >= 0.0);
    CHECK(far == doctest::Approx(std::exp(-100.0)).epsilon(1e-9));
    CHECK(std::isfinite(gaussian_kernel(0.0, 1e6, 1e-3)));
    CHECK(gaussian_kernel(0.2, 0.9, 0.4) == gaussian_kernel(0.9, 0.2, 0.4));
}

TEST_CASE("laplace kernel examples") {
    CHECK(laplace_kernel(0.42, 0.42, 0.5) == 1.0);
    CHECK(laplace_kernel(0.0, 0.1, 0.1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(laplace_kernel(0.2, 0.7, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(laplace_kernel(0.2, 0.7, 0.5) == doctest::Approx(0.36788).epsilon(1e-5));
    CHECK(laplace_kernel(0.7, 0.2, 0.5) == laplace_kernel(0.2, 0.7, 0.5));
}

TEST_CASE("kernels reject non-positive lengths") {
    CHECK_THROWS_AS(gaussian_kernel(0.0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(gaussian_kernel(0.0, 1.0, -1.0), ConfigError);
    CHECK_THROWS_AS(laplace_kernel(0.0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS((KernelSpec{KernelFamily::kGaussian, std::nan("")}.validate()), ConfigError);
    CHECK_THROWS_AS((KernelSpec{KernelFamily::kLaplace, INFINITY}.validate()), ConfigError);
    const std::vector<double> a = {0.1}, b = {0.2};
    CHECK_THROWS_AS(mmd_squared(a, b, {KernelFamily::kGaussian, -0.1}), ConfigError);
}

TEST_CASE("mmd of identical samples is zero") {
    const std::vector<double> s = {0.2, 0.8};
    const MmdResult r = mmd_squared(s, s, {KernelFamily::kGaussian, 0.1});
    CHECK(r.applied);
    CHECK(r.value == 0.0);
}

TEST_CASE("mmd of two singletons follows the three-term formula") {
    const std::vector<double> a = {0.0}, b = {1.0};
    const MmdResult r = mmd_squared(a, b, {KernelFamily::kGaussian, 1.0});
    CHECK(r.value == doctest::Approx(2.0 - 2.0 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(1.26424).epsilon(1e-5));
}

TEST_CASE("mmd of [0, 1] vs [2] matches the brute-force oracle") {
    const std::vector<double> a = {0.0, 1.0}, b = {2.0};
    const KernelSpec k{KernelFamily::kGaussian, 1.0};
    CHECK(std::fabs(mmd_squared(a, b, k).value - oracle::mmd(a, b, oracle_kernel(k))) <= 1e-12);
}

TEST_CASE("mmd of an empty sample is skipped, not an error") {
    const std::vector<double> a = {0.1, 0.2}, empty;
    const MmdResult r = mmd_squared(a, empty, {});
    CHECK_FALSE(r.applied);
    CHECK(r.value == 0.0);
    CHECK(r.grad_first.size() == 2);
    for (double g : r.grad_first) CHECK(g == 0.0);
}

TEST_CASE("mmd matches the brute-force oracle on 1000 random sample pairs") {
    Rng rng(7);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_sample(rng, 1 + rng.below(12));
        const auto b = random_sample(rng, 1 + rng.below(12));
        const KernelSpec k = random_kernel(rng);
        const double got = mmd_squared(a, b, k).value;
        worst = std::max(worst, std::fabs(got - oracle::mmd(a, b, oracle_kernel(k))));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("mmd is symmetric, permutation invariant and non-negative") {
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        auto a = random_sample(rng, 1 + rng.below(10));
        auto b = random_sample(rng, 1 + rng.below(10));
        const KernelSpec k = random_kernel(rng);
        const double ab = mmd_squared(a, b, k).value;
        CHECK(ab == mmd_squared(b, a, k).value);
        CHECK(ab >= -1e-12);
        CHECK(mmd_squared(a, a, k).value == 0.0);
        rng.shuffle(std::span<double>(a));
        rng.shuffle(std::span<double>(b));
        CHECK(mmd_squared(a, b, k).value == ab);
    }
}

TEST_CASE("mmd gradients match central differences") {
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_sample(rng, 1 + rng.below(6));
        const auto b = random_sample(rng, 1 + rng.below(6));
        const KernelSpec k = random_kernel(rng);
        const MmdResult r = mmd_squared(a, b, k);
        auto fa = [&](const std::vector<double>& v) { return mmd_squared(v, b, k).value; };
        auto fb = [&](const std::vector<double>& v) { return mmd_squared(a, v, k).value; };
        for (std::size_t j = 0; j < a.size(); ++j)
            CHECK(oracle::relative_error(r.grad_first[j], oracle::central_difference(fa, a, j)) < 1e-5);
        for (std::size_t j = 0; j < b.size(); ++j)
            CHECK(oracle::relative_error(r.grad_second[j], oracle::central_difference(fb, b, j)) < 1e-5);
    }
}

TEST_CASE("correlation penalty examples") {
    const std::vector<double> group = {0, 0, 1, 1};
    const std::vector<double> constant = {0.4, 0.4, 0.4, 0.4};
    const PenaltyResult c = correlation_penalty(constant, group);
    CHECK(c.value == 0.0);
    for (double g : c.grad) CHECK(g == 0.0);

    CHECK(correlation_penalty(group, group).value == doctest::Approx(1.0).epsilon(1e-15));

    const std::vector<double> p = {0.1, 0.2, 0.8, 0.9};
    CHECK(std::fabs(correlation_penalty(p, group).value - std::fabs(*oracle::pearson(p, group))) <= 1e-12);
}

TEST_CASE("correlation penalty needs two values") {
    const std::vector<double> one = {0.3}, g = {1.0};
    const PenaltyResult r = correlation_penalty(one, g);
    CHECK_FALSE(r.applied);
    CHECK(r.value == 0.0);
}

TEST_CASE("correlation penalty is invariant to positive affine rescaling") {
    Rng rng(10);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + rng.below(10);
        std::vector<double> x = random_sample(rng, n), z(n), y(n);
        for (std::size_t j = 0; j < n; ++j) z[j] = static_cast<double>(rng.below(2));
        const double slope = rng.uniform(0.01, 50.0), shift = rng.uniform(-5.0, 5.0);
        for (std::size_t j = 0; j < n; ++j) y[j] = slope * x[j] + shift;
        CHECK(std::fabs(correlation_penalty(x, z).value - correlation_penalty(y, z).value) <= 1e-9);
    }
}

TEST_CASE("correlation gradients match central differences") {
    Rng rng(12);
    std::size_t checked = 0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 3 + rng.below(8);
        const std::vector<double> x = random_sample(rng, n);
        std::vector<double> z(n);
        for (std::size_t j = 0; j < n; ++j) z[j] = static_cast<double>(rng.below(2));
        if (!oracle::pearson(x, z)) continue;
        const PenaltyResult r = correlation_penalty(x, z);
        auto f = [&](const std::vector<double>& v) { return correlation_penalty(v, z).value; };
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(oracle::relative_error(r.grad[j], oracle::central_difference(f, x, j)) < 1e-5);
            ++checked;
        }
    }
    CHECK(checked > 500);
}

TEST_CASE("mindiff penalty with zero weight is zero") {
    const std::vector<double> p = {0.1, 0.9, 0.3, 0.7};
    const std::vector<int> y = {0, 0, 0, 0};
    const std::vector<Group> a = {Group::kZero, Group::kZero, Group::kOne, Group::kOne};
    const PenaltyResult r = mindiff_penalty(p, y, a, PenaltyConfig::mmd({}, 0.0));
    CHECK(r.value == 0.0);
    for (double g : r.grad) CHECK(g == 0.0);
    CHECK(mindiff_penalty(p, y, a, PenaltyConfig::correlation(0.0)).value == 0.0);
}

TEST_CASE("mindiff penalty skips a batch without negatives") {
    const std::vector<double> p = {0.1, 0.9, 0.3, 0.7};
    const std::vector<int> y = {1, 1, 1, 1};
    const std::vector<Group> a = {Group::kZero, Group::kZero, Group::kOne, Group::kOne};
    const PenaltyResult r = mindiff_penalty(p, y, a, PenaltyConfig::mmd({}, 1.0));
    CHECK_FALSE(r.applied);
    CHECK(r.value == 0.0);
}

TEST_CASE("mindiff penalty needs min_side rows per group") {
    const std::vector<double> p = {0.1, 0.9, 0.3};
    const std::vector<int> y = {0, 0, 0};
    const std::vector<Group> a = {Group::kZero, Group::kZero, Group::kOne};
    PenaltyConfig c = PenaltyConfig::mmd({}, 1.0);
    CHECK_FALSE(mindiff_penalty(p, y, a, c).applied);
    c.min_side = 1;
    CHECK(mindiff_penalty(p, y, a, c).applied);
}

TEST_CASE("mindiff mmd penalty equals manual filtering composed with the oracle") {
    const std::vector<double> p = {0.12, 0.85, 0.33, 0.47, 0.91, 0.05, 0.66, 0.29, 0.58};
    const std::vector<int> y = {0, 1, 0, 0, 0, 1, 0, 0, 0};
    const std::vector<Group> a = {Group::kZero, Group::kOne, Group::kOne,   Group::kZero, Group::kUnknown,
                                  Group::kZero, Group::kOne, Group::kZero, Group::kOne};
    std::vector<double> s0, s1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (y[i] != 0 || a[i] == Group::kUnknown) continue;
        (a[i] == Group::kZero ? s0 : s1).push_back(p[i]);
    }
    const double lambda = 1.7;
    const KernelSpec k{KernelFamily::kGaussian, 0.1};
    const PenaltyResult r = mindiff_penalty(p, y, a, PenaltyConfig::mmd(k, lambda));
    CHECK(r.applied);
    CHECK(std::fabs(r.value - lambda * oracle::mmd(s0, s1, oracle_kernel(k))) <= 1e-12);
    for (std::size_t i : {1, 4, 5}) CHECK(r.grad[i] == 0.0);

    const std::vector<double> z = [&] {
        std::vector<double> out(s0.size(), 0.0);
        out.insert(out.end(), s1.size(), 1.0);
        return out;
    }();
    std::vector<double> joined = s0;
    joined.insert(joined.end(), s1.begin(), s1.end());
    const PenaltyResult c = mindiff_penalty(p, y, a, PenaltyConfig::correlation(lambda));
    CHECK(std::fabs(c.value - lambda * std::fabs(*oracle::pearson(joined, z))) <= 1e-12);
}

TEST_CASE("mindiff penalty gradients match central differences") {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 4 + rng.below(12);
        const std::vector<double> p = random_sample(rng, n);
        std::vector<int> y(n);
        std::vector<Group> a(n);
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = rng.bernoulli(0.3) ? 1 : 0;
            a[j] = static_cast<Group>(static_cast<int>(rng.below(3)) - 1);
        }
        const PenaltyConfig c = i % 2 == 0 ? PenaltyConfig::correlation(rng.uniform(0.1, 4.0))
                                           : PenaltyConfig::mmd(random_kernel(rng), rng.uniform(0.1, 4.0));
        const PenaltyResult r = mindiff_penalty(p, y, a, c);
        auto f = [&](const std::vector<double>& v) { return mindiff_penalty(v, y, a, c).value; };
        for (std::size_t j = 0; j < n; ++j)
            CHECK(oracle::relative_error(r.grad[j], oracle::central_difference(f, p, j)) < 1e-5);
    }
}

TEST_CASE("penalty config validation") {
    CHECK_THROWS_AS(PenaltyConfig::correlation(-1.0).validate(), ConfigError);
    CHECK_THROWS_AS(PenaltyConfig::mmd({}, std::nan("")).validate(), ConfigError);
    PenaltyConfig missing_kernel{PenaltyKind::kMmd, std::nullopt, 1.0};
    CHECK_THROWS_AS(missing_kernel.validate(), ConfigError);
    PenaltyConfig stray_kernel{PenaltyKind::kCorrelation, KernelSpec{}, 1.0};
    CHECK_THROWS_AS(stray_kernel.validate(), ConfigError);
    CHECK_NOTHROW(PenaltyConfig::mmd({KernelFamily::kLaplace, 0.5}, 2.0).validate());
    CHECK(parse_penalty_kind("corr") == PenaltyKind::kCorrelation);
    CHECK(parse_penalty_kind("mmd") == PenaltyKind::kMmd);
    CHECK(parse_kernel_family("laplace") == KernelFamily::kLaplace);
    CHECK_THROWS_AS(parse_kernel_family("cosine"), ConfigError);
}
