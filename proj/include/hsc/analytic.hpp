#pragma once

// Closed-form and numeric analysis of the harvest-store-consume surplus
//
//   U(t) = u0 - p t + sum_{i : T_i <= t} X_i
//
// with Poisson packet arrivals of rate lambda. Z_i = p A_i - X_i is the net
// consumption over one inter-arrival; eventual outage is {sup_n S_n >= u0}
// for S_n = Z_1 + ... + Z_n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hsc/distributions.hpp"
#include "hsc/errors.hpp"

namespace hsc {

struct SystemParams {
    double lambda;            // packet arrival rate
    DistributionSpec packet;  // packet-size law
    double p;                 // consumption rate
    double u0 = 0.0;          // initial battery energy

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValueError("lambda must be positive and finite");
        if (!(p > 0.0) || !std::isfinite(p)) throw ValueError("consumption rate p must be positive and finite");
        if (!(u0 >= 0.0) || !std::isfinite(u0)) throw ValueError("initial energy u0 must be nonnegative and finite");
    }

    /// Parameters with lambda chosen so that lambda * mean / p == rho.
    static SystemParams from_utilization(double rho, DistributionSpec packet, double p, double u0 = 0.0) {
        if (!(rho > 0.0)) throw ValueError("utilization rho must be positive");
        SystemParams params{rho * p / packet.mean(), packet, p, u0};
        params.validate();
        return params;
    }
};

enum class Sustainability { UnsustainableCertain, SelfSustainablePossible };

inline std::string to_string(Sustainability s) {
    return s == Sustainability::SelfSustainablePossible ? "SelfSustainablePossible" : "UnsustainableCertain";
}

struct SustainabilityVerdict {
    double rho;
    Sustainability status;
};

/// rho = lambda X̄ / p. rho == 1 exactly is classed as certain outage.
inline SustainabilityVerdict utilization(const SystemParams& params) {
    params.validate();
    const double rho = params.lambda * params.packet.mean() / params.p;
    return {rho, rho > 1.0 ? Sustainability::SelfSustainablePossible : Sustainability::UnsustainableCertain};
}

inline double expected_surplus(const SystemParams& params, double t) {
    if (!(t >= 0.0)) throw ValueError("time must be nonnegative");
    return params.u0 + (params.lambda * params.packet.mean() - params.p) * t;
}

/// K_Z(r) = -log(1 - p r / lambda) + log M_X(-r).
inline double cgf_Z(const SystemParams& params, double r) {
    const double x = params.p * r / params.lambda;
    if (!(x < 1.0)) {
        throw DomainError("inter-arrival MGF diverges: p*r >= lambda (r=" + std::to_string(r) + ")");
    }
    return -std::log1p(-x) + std::log(mgf(params.packet, -r));
}

enum class SolveMethod { ClosedForm, Numeric };

inline std::string to_string(SolveMethod m) { return m == SolveMethod::ClosedForm ? "ClosedForm" : "Numeric"; }

struct AdjustmentResult {
    double r_star;
    SolveMethod method;
    double residual;  // |K_Z(r_star)|
    int iterations;
};

struct AdjustmentApprox {
    double quadratic_fixed_point;  // second-order expansion of M_X(-r) in the fixed-point equation
    double mean_variance_guess;    // -2 mu_Z / sigma_Z^2
};

namespace detail {

inline void require_sustainable(const SystemParams& params, const char* what) {
    const auto verdict = utilization(params);
    if (verdict.status != Sustainability::SelfSustainablePossible) {
        throw PreconditionError(std::string(what) + " requires rho > 1, got rho=" + std::to_string(verdict.rho));
    }
}

}  // namespace detail

inline AdjustmentApprox approx_adjustment_coefficient(const SystemParams& params) {
    detail::require_sustainable(params, "adjustment coefficient approximation");
    const Moments mx = moments(params.packet);
    const double rho = params.lambda * mx.mean / params.p;
    const double quadratic = 2.0 * params.p / (params.lambda * mx.second_moment) * (rho - 1.0);
    const double inv_lambda = 1.0 / params.lambda;
    const double mu_z = params.p * inv_lambda - mx.mean;
    const double var_z = params.p * params.p * inv_lambda * inv_lambda + mx.variance();
    return {quadratic, -2.0 * mu_z / var_z};
}

struct SolverOptions {
    double tol = 1e-12;
    bool force_numeric = false;
    int max_iterations = 500;
};

/// Unique positive root r* of K_Z.
///
/// Exponential packets use the closed form r* = (1/X̄)(rho - 1). Otherwise the
/// root is bracketed on (0, lambda/p), starting from the mean-variance guess,
/// and refined by Illinois regula falsi with a bisection safeguard. K_Z is
/// convex with K_Z(0) = 0 and K_Z'(0) < 0, so it is negative left of r* and
/// positive right of it.
inline AdjustmentResult solve_adjustment_coefficient(const SystemParams& params, const SolverOptions& opts = {}) {
    detail::require_sustainable(params, "adjustment coefficient");
    const auto K = [&](double r) { return cgf_Z(params, r); };

    if (params.packet.kind() == PacketLaw::Exponential && !opts.force_numeric) {
        const double m = params.packet.mean();
        const double r = (params.lambda * m / params.p - 1.0) / m;
        return {r, SolveMethod::ClosedForm, std::abs(K(r)), 0};
    }

    const double cap = params.lambda / params.p;
    double seed = approx_adjustment_coefficient(params).mean_variance_guess;
    if (!(seed < cap)) seed = 0.5 * cap;

    int evals = 0;
    double lo = seed / 10.0;
    double f_lo = K(lo);
    ++evals;
    for (int i = 0; f_lo >= 0.0; ++i) {
        if (i == 60) throw ConvergenceError("could not bracket r* from below");
        lo /= 10.0;
        f_lo = K(lo);
        ++evals;
    }
    double hi = seed;
    double f_hi = K(hi);
    ++evals;
    for (int i = 0; f_hi <= 0.0; ++i) {
        if (i == 200) throw ConvergenceError("could not bracket r* from above within the MGF domain");
        hi = (2.0 * hi < cap) ? 2.0 * hi : 0.5 * (hi + cap);
        f_hi = K(hi);
        ++evals;
    }
    if (hi <= lo) {
        lo = 0.5 * hi;
        f_lo = K(lo);
        ++evals;
        if (f_lo >= 0.0) throw ConvergenceError("inconsistent bracket for r*");
    }

    int side = 0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double fx = K(x);
        if (std::abs(fx) <= opts.tol) {
            return {x, SolveMethod::Numeric, std::abs(fx), it};
        }
        if (fx < 0.0) {
            lo = x;
            f_lo = fx;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if (side == +1) f_lo *= 0.5;
            side = +1;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            const double mid = 0.5 * (lo + hi);
            const double fm = std::abs(K(mid));
            if (fm <= opts.tol) return {mid, SolveMethod::Numeric, fm, it};
            throw ConvergenceError("bracket collapsed before |K_Z| <= tol (residual " + std::to_string(fm) + ")");
        }
    }
    throw ConvergenceError("root finder exceeded " + std::to_string(opts.max_iterations) + " iterations");
}

/// Exponential bound psi(u0) <= exp(-r* u0).
inline double outage_bound(double r_star, double u0) {
    if (!(r_star > 0.0)) throw ValueError("r* must be positive");
    if (!(u0 >= 0.0)) throw ValueError("u0 must be nonnegative");
    return std::exp(-r_star * u0);
}

/// Smallest u0 with exp(-r* u0) <= epsilon.
inline double required_initial_energy(double r_star, double epsilon) {
    if (!(r_star > 0.0)) throw ValueError("r* must be positive");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValueError("epsilon must lie in (0, 1]");
    return -std::log(epsilon) / r_star;
}

/// Mass of the defective ascending ladder-height law under Poisson arrivals: 1 - r* p / lambda.
inline double poisson_ladder_mass(const SystemParams& params, double r_star) {
    return 1.0 - r_star * params.p / params.lambda;
}

/// Mean of the exponentially tilted (proper) ladder-height law under Poisson arrivals.
inline double poisson_tilted_ladder_mean(const SystemParams& params, double r_star) {
    return 1.0 / (params.lambda / params.p - r_star);
}

/// Exact eventual outage probability for Poisson arrivals:
/// psi(u0) = (1 - r* p / lambda) exp(-r* u0).
inline double eventual_outage_poisson_exact(const SystemParams& params, double r_star) {
    detail::require_sustainable(params, "exact eventual outage");
    if (!(r_star > 0.0) || !(r_star < params.lambda / params.p)) {
        throw PreconditionError("r* must lie in (0, lambda/p)");
    }
    if (std::abs(cgf_Z(params, r_star)) > 1e-4) {
        throw PreconditionError("r*=" + std::to_string(r_star) + " is not a root of K_Z for these parameters");
    }
    return poisson_ladder_mass(params, r_star) * std::exp(-r_star * params.u0);
}

/// Cramér-Lundberg style asymptote ((1 - theta) / (r* mu_tilde)) exp(-r* u0),
/// where theta is the ladder-height mass and mu_tilde the tilted ladder mean.
inline double asymptotic_outage(double theta, double r_star, double mu_tilde, double u0) {
    if (!(theta > 0.0 && theta < 1.0)) throw ValueError("theta must lie in (0, 1)");
    if (!(r_star > 0.0)) throw ValueError("r* must be positive");
    if (!(mu_tilde > 0.0)) throw ValueError("tilted ladder mean must be positive");
    if (!(u0 >= 0.0)) throw ValueError("u0 must be nonnegative");
    return (1.0 - theta) / (r_star * mu_tilde) * std::exp(-r_star * u0);
}

/// Defective ladder-height density f_H(x) = (lambda/p - r*) exp(-lambda x / p).
inline double ladder_height_density_poisson(const SystemParams& params, double r_star, double x) {
    detail::require_sustainable(params, "ladder-height density");
    if (!(x >= 0.0)) throw ValueError("ladder height must be nonnegative");
    const double beta = params.lambda / params.p;
    return (beta - r_star) * std::exp(-beta * x);
}

/// Density of Z = p A - X for Poisson arrivals:
/// f_Z(z) = (lambda/p) exp(-lambda z / p) ∫_{max(0,-z)}^∞ exp(-lambda x / p) dF_X(x).
inline double density_Z(const SystemParams& params, double z) {
    params.validate();
    const double beta = params.lambda / params.p;
    const double a = std::max(0.0, -z);
    const double tail = discounted_tail(params.packet, beta, a);
    if (tail == 0.0) return 0.0;
    return beta * std::exp(-beta * z) * tail;
}

/// Battery empty fraction 1 - rho for Poisson arrivals in the stationary regime (rho < 1).
inline double stationary_outage(const SystemParams& params) {
    const auto verdict = utilization(params);
    if (!(verdict.rho < 1.0)) {
        throw PreconditionError("no stationary regime for rho >= 1 (rho=" + std::to_string(verdict.rho) + ")");
    }
    return 1.0 - verdict.rho;
}

/// Stationary outage-duration CDF: residual life of Exp(lambda) inter-arrivals.
inline double outage_duration_cdf(const SystemParams& params, double x) {
    params.validate();
    if (!(x >= 0.0)) throw ValueError("duration must be nonnegative");
    return -std::expm1(-params.lambda * x);
}

inline double outage_duration_quantile(const SystemParams& params, double q) {
    params.validate();
    if (!(q >= 0.0 && q < 1.0)) throw ValueError("quantile level must lie in [0, 1)");
    return -std::log1p(-q) / params.lambda;
}

/// Solves phi(u) = (1 - theta) + ∫_0^u phi(u - x) f_H(x) dx on the grid u_k = k * step.
///
/// `ladder_density[k]` is f_H(k * step). Trapezoidal convolution, marching
/// upward from phi(0) = 1 - theta; the implicit k = 0 term is solved for exactly.
inline std::vector<double> solve_renewal_equation(std::span<const double> ladder_density, double theta, double step) {
    if (!(step > 0.0)) throw GridError("step must be positive");
    if (ladder_density.empty()) throw GridError("density grid is empty");
    if (!(theta >= 0.0 && theta < 1.0)) throw PreconditionError("theta must lie in [0, 1)");

    double mass = 0.0;
    for (std::size_t k = 0; k < ladder_density.size(); ++k) {
        const double f = ladder_density[k];
        if (!(f >= 0.0)) throw PreconditionError("ladder density must be nonnegative");
        const double w = (k == 0 || k + 1 == ladder_density.size()) ? 0.5 : 1.0;
        mass += w * f * step;
    }
    if (mass > theta + step) {
        throw PreconditionError("ladder density mass " + std::to_string(mass) + " exceeds theta");
    }

    const std::size_t n = ladder_density.size();
    const double anchor = 1.0 - theta;
    const double diag = 1.0 - 0.5 * step * ladder_density[0];
    std::vector<double> phi(n);
    phi[0] = anchor;
    for (std::size_t i = 1; i < n; ++i) {
        double acc = 0.5 * phi[0] * ladder_density[i];
        for (std::size_t k = 1; k < i; ++k) acc += phi[i - k] * ladder_density[k];
        phi[i] = (anchor + step * acc) / diag;
    }
    return phi;
}

/// Samples `density` on [0, u_max] with spacing `step` and solves the renewal equation.
/// Throws GridError unless step divides u_max to within 1e-9.
template <class Density>
std::vector<double> solve_renewal_equation(Density&& density, double theta, double u_max, double step) {
    if (!(step > 0.0) || !(u_max > 0.0)) throw GridError("step and u_max must be positive");
    const double cells = std::round(u_max / step);
    if (std::abs(cells * step - u_max) > 1e-9) {
        throw GridError("step " + std::to_string(step) + " does not divide u_max " + std::to_string(u_max));
    }
    const auto n = static_cast<std::size_t>(cells) + 1;
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k) grid[k] = density(static_cast<double>(k) * step);
    return solve_renewal_equation(std::span<const double>(grid), theta, step);
}

}  // namespace hsc
