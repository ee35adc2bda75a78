#pragma once

#include <json.hpp>

#include <cstddef>
#include <span>

namespace irof {

/// Regularised incomplete beta I_x(a, b), evaluated with a modified-Lentz continued fraction
/// (switching to 1 - I_{1-x}(b, a) when x > (a + 1) / (a + b + 2)). Converges to 1e-12 relative.
[[nodiscard]] double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with `df` degrees of freedom.
[[nodiscard]] double student_t_two_sided_p(double t, double df);

struct PairedTTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    double mean_difference = 0.0;
};

/// Paired two-sided t-test on d_i = a_i - b_i with n - 1 degrees of freedom.
/// Throws DataError on length mismatch, n < 2, or zero variance of the differences.
[[nodiscard]] PairedTTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

[[nodiscard]] nlohmann::json to_json(const PairedTTestResult& result);

struct MeanAndError {
    double mean = 0.0;
    double standard_error = 0.0; // sample standard deviation / sqrt(n); 0 for n < 2
};

[[nodiscard]] MeanAndError mean_and_standard_error(std::span<const double> values);

} // namespace irof
