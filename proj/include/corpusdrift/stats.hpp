#pragma once

#include <cstddef>
#include <span>

namespace corpusdrift::stats {

struct WelchResult {
    double t_stat;
    double df;           // Welch–Satterthwaite degrees of freedom
    double p_two_sided;
};

// Sample size, mean and unbiased variance; enough to run the t-test
// without materializing the sample.
struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;
};

SampleSummary summarize(std::span<const double> xs);

// Unpaired Welch's t-test (unequal variances), two-sided p-value.
// Both samples need n >= 2. When both variances are zero the test is
// degenerate: equal means give p = 1, unequal means p = 0.
WelchResult welch_t(const SampleSummary& a, const SampleSummary& b);
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

// Survival function P(T > t) of Student's t with df > 0 degrees of
// freedom, via the regularized incomplete beta function.
double student_t_sf(double t, double df);

// I_x(a, b), continued-fraction evaluation (modified Lentz), with the
// symmetry switch at x > (a+1)/(a+b+2). Converges to ~1e-14.
double regularized_incomplete_beta(double x, double a, double b);

}  // namespace corpusdrift::stats
