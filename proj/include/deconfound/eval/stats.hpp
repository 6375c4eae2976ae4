#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dcfd::eval {

// Sample Pearson correlation. Needs length >= 3 and nonzero variance on
// both sides (zero variance raises a numeric error).
double pearson_r(std::span<const double> x, std::span<const double> y);

// Two-sided p-value for a correlation via the t transform
// t = r * sqrt((n-2)/(1-r^2)) with df = n-2.
double pearson_p(double r, std::size_t n);

// Benjamini-Hochberg step-up adjustment. Returns adjusted p-values in the
// original input order; output is clipped to [0, 1].
std::vector<double> bh_adjust(std::span<const double> p_values);

struct TTestResult {
    double t = 0.0;
    std::size_t df = 0;
    double p = 1.0;  // two-sided
};

// Paired two-sided t-test on equal-length samples: d = a - b,
// t = mean(d) / (sd(d)/sqrt(n)), df = n-1. Zero-variance differences with a
// nonzero mean raise a numeric error; all-equal pairs (t undefined 0/0) too.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Survival helper: two-sided p for Student's t with df degrees of freedom,
// computed through the regularized incomplete beta function.
double student_t_two_sided_p(double t, double df);

// Regularized incomplete beta I_x(a, b); exposed for oracle tests.
double regularized_incomplete_beta(double a, double b, double x);

// Significance code per the reporting convention: "**" p < 0.01,
// "*" p < 0.05, "-" otherwise.
const char* significance_code(double p);

}  // namespace dcfd::eval
