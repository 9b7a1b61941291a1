#pragma once

// Monte-Carlo engines for the surplus process, the ladder walk S_n and the
// Lindley battery recursion.
//
// Trial i of a run seeded with s always consumes stream make_stream(s, i), and
// aggregation only adds integer counts, so results do not depend on the number
// of worker threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hsc/analytic.hpp"
#include "hsc/errors.hpp"
#include "hsc/event_source.hpp"
#include "hsc/rng.hpp"

namespace hsc {

struct TrialOutcome {
    bool outage = false;
    std::optional<double> tau;  // exact ramp-crossing instant, present iff outage
    std::size_t arrivals_observed = 0;
};

/// Follows U(t) arrival to arrival up to `horizon`.
///
/// The packet of event 0 lands at t = 0 on top of u0. Between arrivals the
/// surplus ramps down at slope -p; if the trough before the next arrival is
/// <= 0, the outage instant is solved exactly on the ramp.
template <EventSource Source>
TrialOutcome simulate_first_passage(const SystemParams& params, double horizon, Source& events) {
    if (!(horizon > 0.0)) throw ValueError("horizon must be positive");
    TrialOutcome out;
    double level = params.u0;
    double t = 0.0;
    while (true) {
        const std::optional<Event> ev = events.next();
        if (!ev) {
            const double tau = t + level / params.p;
            if (tau <= horizon) {
                out.outage = true;
                out.tau = tau;
            }
            return out;
        }
        level += ev->energy;
        ++out.arrivals_observed;
        const double trough = level - params.p * ev->gap;
        if (trough <= 0.0) {
            const double tau = t + level / params.p;
            if (tau <= horizon) {
                out.outage = true;
                out.tau = tau;
            }
            return out;
        }
        t += ev->gap;
        if (t > horizon) return out;
        level = trough;
    }
}

enum class CiMethod { Normal, Wilson };

struct EstimateWithCI {
    double estimate = 0.0;
    double std_error = 0.0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const EstimateWithCI&, const EstimateWithCI&) = default;
};

/// Binomial summary: stderr = sqrt(p(1-p)/n) and a 95% interval clamped to [0, 1].
inline EstimateWithCI summarize_binomial(std::uint64_t successes, std::uint64_t trials, double horizon,
                                         std::uint64_t seed, CiMethod method = CiMethod::Normal) {
    if (trials == 0) throw ValueError("at least one trial is required");
    constexpr double z = 1.959963984540054;
    EstimateWithCI e;
    e.successes = successes;
    e.trials = trials;
    e.horizon = horizon;
    e.seed = seed;
    const double n = static_cast<double>(trials);
    e.estimate = static_cast<double>(successes) / n;
    e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / n);
    if (method == CiMethod::Normal) {
        e.ci95_lo = std::max(0.0, e.estimate - z * e.std_error);
        e.ci95_hi = std::min(1.0, e.estimate + z * e.std_error);
    } else {
        const double z2n = z * z / n;
        const double centre = (e.estimate + 0.5 * z2n) / (1.0 + z2n);
        const double half = z / (1.0 + z2n) * std::sqrt(e.estimate * (1.0 - e.estimate) / n + 0.25 * z2n / n);
        e.ci95_lo = std::clamp(centre - half, 0.0, e.estimate);
        e.ci95_hi = std::clamp(centre + half, e.estimate, 1.0);
    }
    return e;
}

struct RunOptions {
    unsigned workers = 0;  // 0: one per hardware thread
    CiMethod ci = CiMethod::Normal;
};

namespace detail {

inline unsigned resolve_workers(unsigned requested, std::uint64_t jobs) {
    unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (jobs < w) w = static_cast<unsigned>(std::max<std::uint64_t>(jobs, 1));
    return w;
}

/// Runs body(begin, end, worker) over contiguous slices of [0, jobs).
template <class Body>
void parallel_slices(std::uint64_t jobs, unsigned workers, Body&& body) {
    const unsigned w = resolve_workers(workers, jobs);
    if (w == 1) {
        body(std::uint64_t{0}, jobs, 0u);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (unsigned k = 0; k < w; ++k) {
        const std::uint64_t begin = jobs * k / w;
        const std::uint64_t end = jobs * (k + 1) / w;
        pool.emplace_back([&body, begin, end, k] { body(begin, end, k); });
    }
}

}  // namespace detail

/// Fraction of `trials` independent surplus paths that reach zero by `horizon`.
/// Downward-biased estimate of psi(u0) because of the finite horizon.
inline EstimateWithCI estimate_eventual_outage(const SystemParams& params, double horizon, std::uint64_t trials,
                                               std::uint64_t seed, const RunOptions& opts = {}) {
    params.validate();
    if (trials == 0) throw ValueError("trials must be >= 1");
    if (!(horizon > 0.0)) throw ValueError("horizon must be positive");
    const unsigned w = detail::resolve_workers(opts.workers, trials);
    std::vector<std::uint64_t> counts(w, 0);
    detail::parallel_slices(trials, w, [&](std::uint64_t begin, std::uint64_t end, unsigned k) {
        std::uint64_t hits = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            PoissonEventSource source(params.lambda, params.packet, make_stream(seed, i));
            hits += simulate_first_passage(params, horizon, source).outage ? 1 : 0;
        }
        counts[k] = hits;
    });
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    return summarize_binomial(total, trials, horizon, seed, opts.ci);
}

/// Lowest value of  sum_{T_i <= t} X_i - p t  over t in [0, horizon] along one path.
/// Returns early once the running minimum is <= -stop_below. The path reaches
/// outage from initial energy u0 exactly when u0 + (this minimum) <= 0.
template <EventSource Source>
double min_net_harvest(double p, double horizon, double stop_below, Source& events) {
    double level = 0.0;
    double t = 0.0;
    double lowest = std::numeric_limits<double>::infinity();
    while (true) {
        const std::optional<Event> ev = events.next();
        if (!ev) return std::min(lowest, level - p * (horizon - t));
        level += ev->energy;
        if (t + ev->gap > horizon) return std::min(lowest, level - p * (horizon - t));
        level -= p * ev->gap;
        t += ev->gap;
        lowest = std::min(lowest, level);
        if (lowest <= -stop_below) return lowest;
    }
}

/// Outage estimates for a whole grid of initial energies from one set of paths.
///
/// Path i uses the same stream as trial i of estimate_eventual_outage, so each
/// entry agrees with the per-point estimator on the same seed; sharing paths
/// across u0 makes the curve monotone in u0.
inline std::vector<EstimateWithCI> estimate_outage_curve(const SystemParams& params, std::span<const double> u0_grid,
                                                         double horizon, std::uint64_t trials, std::uint64_t seed,
                                                         const RunOptions& opts = {}) {
    params.validate();
    if (trials == 0) throw ValueError("trials must be >= 1");
    if (!(horizon > 0.0)) throw ValueError("horizon must be positive");
    if (u0_grid.empty()) return {};
    for (double u : u0_grid) {
        if (!(u >= 0.0)) throw ValueError("u0 grid values must be nonnegative");
    }
    const double top = *std::max_element(u0_grid.begin(), u0_grid.end());
    const unsigned w = detail::resolve_workers(opts.workers, trials);
    std::vector<std::vector<std::uint64_t>> counts(w, std::vector<std::uint64_t>(u0_grid.size(), 0));
    detail::parallel_slices(trials, w, [&](std::uint64_t begin, std::uint64_t end, unsigned k) {
        auto& mine = counts[k];
        for (std::uint64_t i = begin; i < end; ++i) {
            PoissonEventSource source(params.lambda, params.packet, make_stream(seed, i));
            const double lowest = min_net_harvest(params.p, horizon, top, source);
            for (std::size_t j = 0; j < u0_grid.size(); ++j) {
                if (u0_grid[j] + lowest <= 0.0) ++mine[j];
            }
        }
    });
    std::vector<EstimateWithCI> out;
    out.reserve(u0_grid.size());
    for (std::size_t j = 0; j < u0_grid.size(); ++j) {
        std::uint64_t total = 0;
        for (const auto& c : counts) total += c[j];
        out.push_back(summarize_binomial(total, trials, horizon, seed, opts.ci));
    }
    return out;
}

struct LadderSample {
    bool terminated = true;  // no strict ascending ladder epoch within max_steps
    double max_S = 0.0;      // max(0, S_1, ..., S_n) over the simulated steps
    std::optional<std::size_t> first_ladder_epoch;
    std::optional<double> first_ladder_height;
    std::size_t steps = 0;
};

/// Walks S_n = sum (p A_i - X_i) for up to max_steps steps.
template <EventSource Source>
LadderSample simulate_ladder(const SystemParams& params, std::size_t max_steps, Source& events) {
    if (max_steps < 1) throw ValueError("max_steps must be >= 1");
    LadderSample out;
    double s = 0.0;
    for (std::size_t n = 1; n <= max_steps; ++n) {
        const std::optional<Event> ev = events.next();
        if (!ev) break;
        s += params.p * ev->gap - ev->energy;
        out.steps = n;
        if (s > out.max_S) {
            out.max_S = s;
            if (!out.first_ladder_epoch) {
                out.first_ladder_epoch = n;
                out.first_ladder_height = s;
                out.terminated = false;
            }
        }
    }
    return out;
}

/// `walks` seeded ladder walks; walk i uses make_stream(seed, i).
inline std::vector<LadderSample> sample_ladder_walks(const SystemParams& params, std::size_t max_steps,
                                                     std::uint64_t walks, std::uint64_t seed,
                                                     const RunOptions& opts = {}) {
    params.validate();
    std::vector<LadderSample> out(walks);
    detail::parallel_slices(walks, opts.workers, [&](std::uint64_t begin, std::uint64_t end, unsigned) {
        for (std::uint64_t i = begin; i < end; ++i) {
            PoissonEventSource source(params.lambda, params.packet, make_stream(seed, i));
            out[i] = simulate_ladder(params, max_steps, source);
        }
    });
    return out;
}

/// Empirical F_M(u0): fraction of walks whose maximum stays <= u0.
inline double estimate_phi_from_max(std::span<const LadderSample> samples, double u0) {
    if (samples.empty()) throw ValueError("no ladder samples");
    std::size_t below = 0;
    for (const auto& s : samples) below += s.max_S <= u0 ? 1 : 0;
    return static_cast<double>(below) / static_cast<double>(samples.size());
}

struct LindleyStep {
    double next_level;  // W_{n+1}
    double empty_time;  // time the battery spends at zero during this inter-arrival
};

/// W_{n+1} = max(0, W_n + X_n - p A_n).
inline LindleyStep lindley_step(double level, const Event& ev, double p) noexcept {
    const double charged = level + ev.energy;
    const double drained = charged - p * ev.gap;
    if (drained > 0.0) return {drained, 0.0};
    return {0.0, ev.gap - charged / p};
}

struct LindleyStats {
    double time_empty_fraction = 0.0;
    double arrival_empty_fraction = 0.0;
    std::size_t steps = 0;
    std::size_t burn_in = 0;
    double final_level = 0.0;
};

struct LindleyOptions {
    bool require_stationary = true;  // refuse rho >= 1, where no stationary regime exists
};

/// Iterates the battery recursion from W_0 = u0 and reports the post-burn-in
/// fraction of time, and of arrival epochs, at which the battery is empty.
template <EventSource Source>
LindleyStats simulate_lindley(const SystemParams& params, std::size_t steps, std::size_t burn_in, Source& events,
                              const LindleyOptions& opts = {}) {
    params.validate();
    if (!(steps > burn_in)) throw PreconditionError("steps must exceed burn_in");
    if (opts.require_stationary) {
        const auto v = utilization(params);
        if (!(v.rho < 1.0)) {
            throw PreconditionError("stationary battery statistics need rho < 1, got rho=" + std::to_string(v.rho));
        }
    }
    LindleyStats out;
    out.burn_in = burn_in;
    double w = params.u0;
    double empty_time = 0.0;
    double total_time = 0.0;
    std::size_t empty_arrivals = 0;
    std::size_t n = 0;
    for (; n < steps; ++n) {
        const std::optional<Event> ev = events.next();
        if (!ev) break;
        const LindleyStep step = lindley_step(w, *ev, params.p);
        if (n >= burn_in) {
            empty_arrivals += w == 0.0 ? 1 : 0;
            empty_time += step.empty_time;
            total_time += ev->gap;
        }
        w = step.next_level;
    }
    out.steps = n;
    out.final_level = w;
    const std::size_t counted = n > burn_in ? n - burn_in : 0;
    if (counted > 0) {
        out.time_empty_fraction = empty_time / total_time;
        out.arrival_empty_fraction = static_cast<double>(empty_arrivals) / static_cast<double>(counted);
    }
    return out;
}

struct PathPoint {
    double t;
    double surplus;

    friend bool operator==(const PathPoint&, const PathPoint&) = default;
};

/// Breakpoints of the sawtooth U(t) on [0, horizon]: a vertical pair at each
/// arrival, linear ramps in between. Ends at (tau, 0) on outage, else at the horizon.
template <EventSource Source>
std::vector<PathPoint> record_path(const SystemParams& params, double horizon, Source& events) {
    if (!(horizon > 0.0)) throw ValueError("horizon must be positive");
    std::vector<PathPoint> path{{0.0, params.u0}};
    double level = params.u0;
    double t = 0.0;
    while (true) {
        const std::optional<Event> ev = events.next();
        const double gap = ev ? ev->gap : std::numeric_limits<double>::infinity();
        if (ev) {
            level += ev->energy;
            path.push_back({t, level});
        }
        const double tau = t + level / params.p;
        const double next_t = t + gap;
        if (tau <= horizon && tau <= next_t) {
            path.push_back({tau, 0.0});
            return path;
        }
        if (next_t > horizon) {
            path.push_back({horizon, level - params.p * (horizon - t)});
            return path;
        }
        level -= params.p * gap;
        t = next_t;
        path.push_back({t, level});
    }
}

}  // namespace hsc
