#include "irof/stats.hpp"

#include "irof/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace irof {

namespace {

constexpr double kTolerance = 1e-12;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 10000;

// Continued fraction for I_x(a, b) * a * B(a, b) / (x^a (1-x)^b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        // Even step.
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kTolerance) {
            return h;
        }
    }
    throw Error("incomplete beta continued fraction did not converge (a=" + std::to_string(a) +
                ", b=" + std::to_string(b) + ", x=" + std::to_string(x) + ")");
}

// x and y = 1 - x passed separately so callers can supply y without cancellation.
double incomplete_beta_split(double a, double b, double x, double y) {
    if (x == 0.0) {
        return 0.0;
    }
    if (y == 0.0) {
        return 1.0;
    }
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw DataError("incomplete beta needs a > 0 and b > 0");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DataError("incomplete beta needs 0 <= x <= 1");
    }
    return incomplete_beta_split(a, b, x, 1.0 - x);
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) {
        throw DataError("Student t needs positive degrees of freedom");
    }
    if (std::isnan(t)) {
        throw DataError("Student t statistic is NaN");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    const double t2 = t * t;
    // P(|T| >= |t|) = I_x(df / 2, 1 / 2) with x = df / (df + t^2).
    const double x = df / (df + t2);
    const double y = t2 / (df + t2);
    return std::clamp(incomplete_beta_split(0.5 * df, 0.5, x, y), 0.0, 1.0);
}

PairedTTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DataError("paired t-test needs equal sample sizes (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw DataError("paired t-test needs at least two pairs");
    }
    double mean = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        if (!std::isfinite(d)) {
            throw DataError("paired t-test input is not finite");
        }
        mean += d;
        max_abs = std::max(max_abs, std::abs(d));
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = (a[i] - b[i]) - mean;
        ss += dev * dev;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    // Differences that agree up to rounding count as zero variance.
    if (sd <= 64.0 * std::numeric_limits<double>::epsilon() * max_abs || sd == 0.0) {
        throw DataError("paired t-test differences have zero variance");
    }
    PairedTTestResult r;
    r.n = n;
    r.mean_difference = mean;
    r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_two_sided_p(r.t_statistic, static_cast<double>(n - 1));
    return r;
}

nlohmann::json to_json(const PairedTTestResult& result) {
    return {{"t", result.t_statistic},
            {"p", result.p_value},
            {"n", result.n},
            {"mean_difference", result.mean_difference}};
}

MeanAndError mean_and_standard_error(std::span<const double> values) {
    MeanAndError out;
    if (values.empty()) {
        return out;
    }
    const double n = static_cast<double>(values.size());
    for (double v : values) {
        out.mean += v;
    }
    out.mean /= n;
    if (values.size() < 2) {
        return out;
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - out.mean) * (v - out.mean);
    }
    out.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return out;
}

} // namespace irof
