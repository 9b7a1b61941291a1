#pragma once

// Test-only reference computations. Nothing here calls into the library's
// analytic code paths; each oracle is written from the defining equation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// Plain bisection; requires f(lo) < 0 < f(hi).
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Root of exp(-c r) + p r / lambda - 1 = 0 (deterministic packets of size c).
inline double deterministic_root(double lambda, double p, double c) {
    const auto f = [=](double r) { return std::exp(-c * r) + p * r / lambda - 1.0; };
    return bisect(f, 1e-7, lambda / p);
}

/// Root of r = (lambda/p)(1 - M_X(-r)) for X ~ U(0, 2m), M_X(-r) = (1 - exp(-2 m r)) / (2 m r).
inline double uniform_root(double lambda, double p, double m) {
    const auto g = [=](double r) { return r - lambda / p * (1.0 - (1.0 - std::exp(-2.0 * m * r)) / (2.0 * m * r)); };
    return bisect(g, 1e-7, lambda / p);
}

/// Root of r = (lambda/p)(1 - 1/(1 + m r)) for exponential packets.
inline double exponential_root(double lambda, double p, double m) {
    const auto g = [=](double r) { return r - lambda / p * (1.0 - 1.0 / (1.0 + m * r)); };
    return bisect(g, 1e-7, lambda / p);
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + static_cast<double>(i) * h);
    return acc * h / 3.0;
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace oracle
