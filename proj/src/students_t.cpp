#include "hlmgibbs/students_t.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "hlmgibbs/errors.hpp"

namespace hlm {

namespace {

// Continued fraction for I_x(a, b) (modified Lentz); converges fast for x < (a+1)/(a+b+2).
double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    return h;
}

// I_x(a, b) with y = 1 - x supplied separately so that neither tail loses digits.
double ibeta(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, y) / b;
}

double t_pdf(double df, double t) {
    const double log_c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                         0.5 * std::log(df * std::numbers::pi);
    return std::exp(log_c - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

// t > 0 with P(T > t) = q, q in (0, 0.5)
double upper_quantile(double df, double q) {
    if (df == 1.0) return 1.0 / std::tan(std::numbers::pi * q);
    if (df == 2.0) return (1.0 - 2.0 * q) / std::sqrt(2.0 * q * (1.0 - q));

    double lo = 0.0, hi = 1.0;
    while (t_upper_tail(df, hi) > q) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 500; ++it) {
        const double f = t_upper_tail(df, t) - q;  // decreasing in t
        if (f > 0) lo = t; else hi = t;
        const double slope = -t_pdf(df, t);
        double next = slope != 0.0 ? t - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) return next;
        t = next;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return t;
    }
    return t;
}

}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0) || !(b > 0)) throw DomainError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta: x must lie in [0, 1]");
    return ibeta(a, b, x, 1.0 - x);
}

double t_upper_tail(double df, double t) {
    if (!(df > 0)) throw DomainError("t distribution needs df > 0");
    if (t < 0) return 1.0 - t_upper_tail(df, -t);
    const double t2 = t * t;
    const double x = df / (df + t2);
    const double y = t2 / (df + t2);
    return 0.5 * ibeta(0.5 * df, 0.5, x, y);
}

double t_cdf(double df, double t) {
    return t >= 0 ? 1.0 - t_upper_tail(df, t) : t_upper_tail(df, -t);
}

double t_quantile(double df, double prob) {
    if (!(df > 0) || !std::isfinite(df)) throw DomainError("t_quantile: df must be positive");
    if (!(prob > 0.0 && prob < 1.0)) throw DomainError("t_quantile: prob must lie in (0, 1)");
    if (prob == 0.5) return 0.0;
    return prob > 0.5 ? upper_quantile(df, 1.0 - prob) : -upper_quantile(df, prob);
}

}
