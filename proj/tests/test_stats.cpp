#include "irof/error.hpp"
#include "irof/rng.hpp"
#include "irof/stats.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <doctest.h>

#include <cmath>
#include <vector>

using namespace irof;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

Big big_two_sided_p(const Big& t, const Big& df) {
    const Big x = df / (df + t * t);
    return boost::math::ibeta(df / 2, Big(0.5), x);
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

} // namespace

TEST_SUITE("stats") {

TEST_CASE("incomplete beta matches an extended-precision reference") {
    Pcg32 rng(31, 1);
    for (int i = 0; i < 300; ++i) {
        const double a = 0.05 + 60.0 * rng.uniform();
        const double b = 0.05 + 60.0 * rng.uniform();
        const double x = rng.uniform();
        const double want = static_cast<double>(boost::math::ibeta(Big(a), Big(b), Big(x)));
        const double got = incomplete_beta(a, b, x);
        if (want > 1e-280) {
            CHECK(std::abs(got - want) <= 1e-10 * std::max(want, 1e-300) + 1e-14);
        }
    }
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    CHECK(incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS((void)incomplete_beta(0.0, 1.0, 0.5), DataError);
    CHECK_THROWS_AS((void)incomplete_beta(1.0, 1.0, 1.5), DataError);
}

TEST_CASE("two-sided p at reference statistics with df = n - 1") {
    CHECK(rel_err(student_t_two_sided_p(5.44, 39.0), 3.1000541848005783e-06) < 1e-9);
    CHECK(rel_err(student_t_two_sided_p(2.10, 39.0), 4.224751177463834e-02) < 1e-9);
    CHECK(rel_err(student_t_two_sided_p(7.81, 49.0), 3.7335678255263007e-10) < 1e-9);
    CHECK(rel_err(student_t_two_sided_p(5.44, 37.0), 3.59961241410797e-06) < 1e-9);
    CHECK(rel_err(student_t_two_sided_p(7.81, 37.0), 2.4305499152604558e-09) < 1e-9);
}

TEST_CASE("student t tail matches the extended-precision reference") {
    for (double df : {1.0, 2.0, 5.0, 39.0, 49.0, 200.0}) {
        for (double t : {0.0, 0.01, 0.5, 1.0, 2.1, 5.44, 7.81, 12.0, 30.0}) {
            const double want = static_cast<double>(big_two_sided_p(Big(t), Big(df)));
            CHECK(rel_err(student_t_two_sided_p(t, df), want) < 1e-9);
        }
    }
    CHECK(student_t_two_sided_p(std::numeric_limits<double>::infinity(), 5.0) == 0.0);
    CHECK_THROWS_AS((void)student_t_two_sided_p(1.0, 0.0), DataError);
}

TEST_CASE("paired t-test matches an extended-precision oracle") {
    Pcg32 rng(44, 2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        const double shift = 2.0 * rng.uniform() - 1.0;
        const double scale = 0.01 + rng.uniform();
        std::vector<double> a(n);
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = rng.uniform();
            a[i] = b[i] + shift * scale + scale * (rng.uniform() - 0.5);
        }
        Big mean = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += Big(a[i]) - Big(b[i]);
        }
        mean /= n;
        Big ss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Big dev = Big(a[i]) - Big(b[i]) - mean;
            ss += dev * dev;
        }
        const Big t = mean / (sqrt(ss / (n - 1)) / sqrt(Big(n)));
        const Big p = big_two_sided_p(t, Big(n - 1));

        const PairedTTestResult r = paired_t_test(a, b);
        CHECK(r.n == n);
        CHECK(rel_err(r.t_statistic, static_cast<double>(t)) < 1e-6);
        if (p > Big(1e-300)) {
            CHECK(rel_err(r.p_value, static_cast<double>(p)) < 1e-6);
        }
    }
}

TEST_CASE("paired t-test is antisymmetric") {
    Pcg32 rng(3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(30);
        std::vector<double> b(30);
        for (std::size_t i = 0; i < 30; ++i) {
            a[i] = rng.uniform();
            b[i] = rng.uniform();
        }
        const auto ab = paired_t_test(a, b);
        const auto ba = paired_t_test(b, a);
        CHECK(ab.t_statistic == doctest::Approx(-ba.t_statistic).epsilon(1e-12));
        CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
        CHECK(ab.p_value >= 0.0);
        CHECK(ab.p_value <= 1.0);
    }
}

TEST_CASE("p is monotone decreasing in |t|") {
    for (double df : {3.0, 39.0}) {
        double previous = 1.0 + 1e-15;
        for (int i = 0; i <= 400; ++i) {
            const double p = student_t_two_sided_p(0.05 * i, df);
            CHECK(p <= previous);
            CHECK(student_t_two_sided_p(-0.05 * i, df) == p);
            previous = p;
        }
        CHECK(student_t_two_sided_p(0.0, df) == doctest::Approx(1.0));
    }
}

TEST_CASE("paired t-test preconditions") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK_THROWS_WITH_AS((void)paired_t_test(a, a), doctest::Contains("zero variance"), DataError);
    const std::vector<double> shifted{2.0, 3.0, 4.0};
    CHECK_THROWS_AS((void)paired_t_test(shifted, a), DataError);
    CHECK_THROWS_AS((void)paired_t_test(a, std::vector<double>{1.0, 2.0}), DataError);
    CHECK_THROWS_AS((void)paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), DataError);
}

TEST_CASE("mean and standard error") {
    const std::vector<double> v{0.2, 0.4};
    const MeanAndError m = mean_and_standard_error(v);
    CHECK(m.mean == doctest::Approx(0.3));
    CHECK(m.standard_error == doctest::Approx(0.1));
    CHECK(mean_and_standard_error(std::vector<double>{0.7}).standard_error == 0.0);
    const auto json = to_json(PairedTTestResult{2.0, 0.1, 10, 0.5});
    CHECK(json["t"] == 2.0);
    CHECK(json["n"] == 10);
}

} // TEST_SUITE
