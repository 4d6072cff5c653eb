#include "corpusdrift/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace corpusdrift::stats {

namespace {

// Continued fraction for I_x(a,b), modified Lentz algorithm.
// See https://en.wikipedia.org/wiki/Beta_function#Incomplete_beta_function
double beta_continued_fraction(double x, double a, double b) {
    constexpr double tolerance = 1e-14;
    constexpr int max_iterations = 300;
    constexpr double tiny = 1e-300;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iterations; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < tolerance) return h;
    }
    return h;  // converged enough for any (a,b) this project feeds in
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b must be > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(x, a, b) / a;
    }
    return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_sf(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_sf: df must be > 0");
    if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
    if (t == 0.0) return 0.5;
    double x = df / (t * t + df);
    double tail = 0.5 * regularized_incomplete_beta(x, 0.5 * df, 0.5);
    return t > 0 ? tail : 1.0 - tail;
}

SampleSummary summarize(std::span<const double> xs) {
    SampleSummary s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double v : xs) sum += v;
    s.mean = sum / double(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : xs) {
            double d = v - s.mean;
            ss += d * d;
        }
        s.variance = ss / double(s.n - 1);
    }
    return s;
}

WelchResult welch_t(const SampleSummary& a, const SampleSummary& b) {
    if (a.n < 2 || b.n < 2) throw std::invalid_argument("welch_t: insufficient sample (need n >= 2 on both sides)");
    double va_n = a.variance / double(a.n);
    double vb_n = b.variance / double(b.n);
    double denom = va_n + vb_n;
    if (denom == 0.0) {
        // Zero variance on both sides: the limit is decided by the means.
        if (a.mean == b.mean) return {0.0, 0.0, 1.0};
        double inf = std::numeric_limits<double>::infinity();
        return {a.mean > b.mean ? inf : -inf, 0.0, 0.0};
    }
    double t = (a.mean - b.mean) / std::sqrt(denom);
    double df = denom * denom /
                (va_n * va_n / double(a.n - 1) + vb_n * vb_n / double(b.n - 1));
    double p = 2.0 * student_t_sf(std::fabs(t), df);
    if (p > 1.0) p = 1.0;
    return {t, df, p};
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
    return welch_t(summarize(a), summarize(b));
}

}  // namespace corpusdrift::stats
