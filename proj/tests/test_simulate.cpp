#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "hsc/simulate.hpp"

namespace {

using hsc::DistributionSpec;
using hsc::Event;
using hsc::ScriptedEventSource;
using hsc::SystemParams;

SystemParams mm1(double lambda, double u0) { return {lambda, DistributionSpec::exponential(1.0), 1.0, u0}; }

TEST(FirstPassage, RampCrossingIsExact) {
    ScriptedEventSource events({{0.5, 2.0}});
    const auto out = hsc::simulate_first_passage(mm1(1.1, 1.0), 100.0, events);
    ASSERT_TRUE(out.outage);
    EXPECT_DOUBLE_EQ(*out.tau, 1.5);
    EXPECT_EQ(out.arrivals_observed, 1u);
}

TEST(FirstPassage, ZeroDriftNeverEmpties) {
    for (double horizon : {1.0, 10.0, 1000.0, 1e5}) {
        ScriptedEventSource events({{1.0, 1.0}}, ScriptedEventSource::WhenExhausted::Repeat);
        const auto out = hsc::simulate_first_passage(mm1(1.0, 10.0), horizon, events);
        EXPECT_FALSE(out.outage);
        EXPECT_FALSE(out.tau.has_value());
    }
}

TEST(FirstPassage, CrossingAfterHorizonIsNotCounted) {
    ScriptedEventSource events({{0.5, 2.0}});
    EXPECT_FALSE(hsc::simulate_first_passage(mm1(1.1, 1.0), 1.4, events).outage);
    ScriptedEventSource again({{0.5, 2.0}});
    EXPECT_TRUE(hsc::simulate_first_passage(mm1(1.1, 1.0), 1.5, again).outage);
}

TEST(FirstPassage, TroughExactlyZeroIsOutage) {
    // Level 2 after the second packet drains to exactly 0 at t = 3.
    ScriptedEventSource events({{1.0, 1.0}, {1.0, 2.0}});
    const auto out = hsc::simulate_first_passage(mm1(1.0, 1.0), 100.0, events);
    ASSERT_TRUE(out.outage);
    EXPECT_DOUBLE_EQ(*out.tau, 3.0);
}

TEST(FirstPassage, ExhaustedScriptRampsToZero) {
    ScriptedEventSource events({{1.0, 1.0}});
    const auto out = hsc::simulate_first_passage({1.0, DistributionSpec::deterministic(1.0), 0.5, 0.0}, 100.0, events);
    ASSERT_TRUE(out.outage);
    EXPECT_DOUBLE_EQ(*out.tau, 2.0);
}

// Trough before arrival n equals u0 - sum_{i<n}(p A_i - X_i).
TEST(FirstPassage, TroughRecursionProperty) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto rng = hsc::make_stream(seed, 777);
        std::vector<Event> script;
        for (int i = 0; i < 200; ++i) script.push_back({0.1 + 2.0 * rng.uniform(), 0.1 + 2.0 * rng.uniform()});
        const SystemParams params{1.0, DistributionSpec::exponential(1.0), 0.7, 3.0 + 5.0 * rng.uniform()};
        ScriptedEventSource events(script);
        const auto path = hsc::record_path(params, 1e9, events);
        double s = 0.0;
        double t = 0.0;
        std::size_t n = 0;
        for (std::size_t k = 2; k + 1 < path.size(); k += 2, ++n) {
            s += params.p * script[n].gap - script[n].energy;
            t += script[n].gap;
            EXPECT_NEAR(path[k].t, t, 1e-9);
            EXPECT_NEAR(path[k].surplus, params.u0 - s, 1e-9);
            ASSERT_GT(path[k].surplus, 0.0);
        }
    }
}

TEST(FirstPassage, ZeroInitialEnergyMatchesTheta) {
    const auto params = mm1(1.1, 0.0);
    const auto est = hsc::estimate_eventual_outage(params, 1000.0, 50000, 2024);
    const double theta = 1.0 / 1.1;
    EXPECT_NEAR(est.estimate, theta, 3.0 * est.std_error);
}

TEST(Estimate, SingleTrialHasZeroStderr) {
    const auto est = hsc::estimate_eventual_outage(mm1(1.1, 2.0), 1000.0, 1, 3);
    EXPECT_TRUE(est.estimate == 0.0 || est.estimate == 1.0);
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_LE(est.ci95_lo, est.estimate);
    EXPECT_GE(est.ci95_hi, est.estimate);
}

TEST(Estimate, DeterministicAcrossRunsAndWorkerCounts) {
    const auto params = SystemParams{1.2, DistributionSpec::uniform(1.0), 1.0, 4.0};
    const auto a = hsc::estimate_eventual_outage(params, 500.0, 3000, 99, {.workers = 1});
    const auto b = hsc::estimate_eventual_outage(params, 500.0, 3000, 99, {.workers = 1});
    const auto c = hsc::estimate_eventual_outage(params, 500.0, 3000, 99, {.workers = 4});
    const auto d = hsc::estimate_eventual_outage(params, 500.0, 3000, 99, {.workers = 7});
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a, d);
    const auto other = hsc::estimate_eventual_outage(params, 500.0, 3000, 100, {.workers = 1});
    EXPECT_NE(a.successes, other.successes);
}

TEST(Estimate, NondecreasingInHorizon) {
    const auto params = mm1(1.1, 8.0);
    std::uint64_t prev = 0;
    for (double h : {10.0, 50.0, 100.0, 300.0, 1000.0}) {
        const auto e = hsc::estimate_eventual_outage(params, h, 4000, 5);
        EXPECT_GE(e.successes, prev) << "horizon " << h;
        prev = e.successes;
    }
}

TEST(Estimate, ConfidenceIntervals) {
    const auto n = hsc::summarize_binomial(30, 100, 1.0, 0);
    EXPECT_DOUBLE_EQ(n.std_error, std::sqrt(0.3 * 0.7 / 100));
    EXPECT_NEAR(n.ci95_lo, 0.3 - 1.959963984540054 * n.std_error, 1e-15);
    const auto zero = hsc::summarize_binomial(0, 100, 1.0, 0);
    EXPECT_EQ(zero.ci95_lo, 0.0);
    EXPECT_EQ(zero.ci95_hi, 0.0);
    const auto w = hsc::summarize_binomial(0, 100, 1.0, 0, hsc::CiMethod::Wilson);
    EXPECT_EQ(w.ci95_lo, 0.0);
    EXPECT_GT(w.ci95_hi, 0.0);
    EXPECT_LT(w.ci95_hi, 0.05);
    for (std::uint64_t k = 0; k <= 20; ++k) {
        for (auto m : {hsc::CiMethod::Normal, hsc::CiMethod::Wilson}) {
            const auto e = hsc::summarize_binomial(k, 20, 1.0, 0, m);
            EXPECT_LE(e.ci95_lo, e.estimate);
            EXPECT_GE(e.ci95_hi, e.estimate);
            EXPECT_GE(e.ci95_lo, 0.0);
            EXPECT_LE(e.ci95_hi, 1.0);
        }
    }
}

TEST(Estimate, UnsustainableRegimeEmptiesEventually) {
    const auto e = hsc::estimate_eventual_outage(mm1(1.0, 5.0), 1e4, 2000, 8);
    EXPECT_GT(e.estimate, 0.95);
}

TEST(Curve, AgreesWithPerPointEstimator) {
    const std::vector<double> grid{0.0, 3.0, 6.5, 12.0};
    for (const auto& packet : {DistributionSpec::exponential(1.0), DistributionSpec::deterministic(1.0),
                               DistributionSpec::uniform(1.0)}) {
        const SystemParams base{1.2, packet, 1.0, 0.0};
        const auto curve = hsc::estimate_outage_curve(base, grid, 400.0, 4000, 17);
        ASSERT_EQ(curve.size(), grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            SystemParams p = base;
            p.u0 = grid[j];
            const auto point = hsc::estimate_eventual_outage(p, 400.0, 4000, 17);
            EXPECT_EQ(curve[j].successes, point.successes) << hsc::to_string(packet) << " u0=" << grid[j];
        }
        for (std::size_t j = 1; j < grid.size(); ++j) EXPECT_LE(curve[j].successes, curve[j - 1].successes);
    }
}

TEST(Curve, WorkerCountDoesNotMatter) {
    const std::vector<double> grid{0.0, 2.0, 4.0};
    const auto a = hsc::estimate_outage_curve(mm1(1.3, 0.0), grid, 300.0, 2500, 1, {.workers = 1});
    const auto b = hsc::estimate_outage_curve(mm1(1.3, 0.0), grid, 300.0, 2500, 1, {.workers = 5});
    EXPECT_EQ(a, b);
}

TEST(Ladder, FirstStrictAscent) {
    // Z = p A - X = (-1, 0.5, 2)
    ScriptedEventSource events({{2.0, 1.0}, {0.5, 1.0}, {1.0, 3.0}});
    const auto s = hsc::simulate_ladder(mm1(1.1, 0.0), 10, events);
    EXPECT_FALSE(s.terminated);
    ASSERT_TRUE(s.first_ladder_epoch);
    EXPECT_EQ(*s.first_ladder_epoch, 3u);
    EXPECT_DOUBLE_EQ(*s.first_ladder_height, 1.5);
    EXPECT_DOUBLE_EQ(s.max_S, 1.5);
}

TEST(Ladder, AllNegativeTerminates) {
    ScriptedEventSource events({{2.0, 1.0}, {3.0, 0.5}}, ScriptedEventSource::WhenExhausted::Repeat);
    const auto s = hsc::simulate_ladder(mm1(1.1, 0.0), 1000, events);
    EXPECT_TRUE(s.terminated);
    EXPECT_EQ(s.max_S, 0.0);
    EXPECT_FALSE(s.first_ladder_epoch);
    EXPECT_FALSE(s.first_ladder_height);
    EXPECT_EQ(s.steps, 1000u);
}

TEST(Ladder, FractionWithLadderPointMatchesTheta) {
    const auto walks = hsc::sample_ladder_walks(mm1(1.1, 0.0), 20000, 5000, 31);
    double with = 0;
    for (const auto& w : walks) {
        with += w.first_ladder_epoch ? 1 : 0;
        if (w.first_ladder_height) {
            EXPECT_GT(*w.first_ladder_height, 0.0);
        }
        EXPECT_GE(w.max_S, 0.0);
    }
    const double frac = with / walks.size();
    const double theta = 1.0 / 1.1;
    EXPECT_NEAR(frac, theta, 3.0 * std::sqrt(theta * (1 - theta) / walks.size()));
}

TEST(Ladder, PhiFromMaxCounting) {
    std::vector<hsc::LadderSample> samples(3);
    samples[0].max_S = 0.0;
    samples[1].max_S = 0.5;
    samples[2].max_S = 2.0;
    EXPECT_DOUBLE_EQ(hsc::estimate_phi_from_max(samples, 1.0), 2.0 / 3.0);
    EXPECT_EQ(hsc::estimate_phi_from_max(samples, std::numeric_limits<double>::infinity()), 1.0);
    EXPECT_THROW(hsc::estimate_phi_from_max(std::vector<hsc::LadderSample>{}, 1.0), hsc::ValueError);
}

TEST(Lindley, SingleSteps) {
    auto s = hsc::lindley_step(5.0, {2.0, 1.0}, 1.0);
    EXPECT_DOUBLE_EQ(s.next_level, 6.0);
    EXPECT_DOUBLE_EQ(s.empty_time, 0.0);
    s = hsc::lindley_step(0.0, {1.0, 3.0}, 1.0);
    EXPECT_DOUBLE_EQ(s.next_level, 0.0);
    EXPECT_DOUBLE_EQ(s.empty_time, 2.0);
}

TEST(Lindley, ScriptedRun) {
    ScriptedEventSource events({{2.0, 1.0}, {1.0, 9.0}});
    const auto stats = hsc::simulate_lindley({0.5, DistributionSpec::exponential(1.0), 1.0, 5.0}, 2, 0, events);
    // W: 5 -> 6 -> 0, empty for 9 - 7 = 2 of 10 time units.
    EXPECT_EQ(stats.steps, 2u);
    EXPECT_DOUBLE_EQ(stats.final_level, 0.0);
    EXPECT_DOUBLE_EQ(stats.time_empty_fraction, 0.2);
    EXPECT_DOUBLE_EQ(stats.arrival_empty_fraction, 0.0);
}

TEST(Lindley, Preconditions) {
    ScriptedEventSource events({{1.0, 1.0}});
    EXPECT_THROW(hsc::simulate_lindley(mm1(1.1, 0.0), 10, 1, events), hsc::PreconditionError);
    EXPECT_THROW(hsc::simulate_lindley(mm1(1.0, 0.0), 10, 1, events), hsc::PreconditionError);
    EXPECT_THROW(hsc::simulate_lindley(mm1(0.5, 0.0), 10, 10, events), hsc::PreconditionError);
    EXPECT_NO_THROW(hsc::simulate_lindley(mm1(1.1, 0.0), 10, 1, events, {.require_stationary = false}));
}

TEST(Lindley, StationaryEmptyFractionIsOneMinusRho) {
    for (const auto& packet : {DistributionSpec::exponential(1.0), DistributionSpec::deterministic(1.0)}) {
        const SystemParams params{0.9, packet, 1.0, 0.0};
        hsc::PoissonEventSource source(params.lambda, params.packet, hsc::make_stream(4, 0));
        const auto stats = hsc::simulate_lindley(params, 1'000'000, 100'000, source);
        EXPECT_NEAR(stats.time_empty_fraction, 0.1, 0.01) << hsc::to_string(packet);
        // Poisson arrivals see time averages.
        EXPECT_NEAR(stats.arrival_empty_fraction, 0.1, 0.01) << hsc::to_string(packet);
        EXPECT_GE(stats.final_level, 0.0);
    }
}

TEST(Lindley, LevelNeverNegative) {
    const SystemParams params{0.7, DistributionSpec::uniform(1.0), 1.0, 0.0};
    hsc::PoissonEventSource source(params.lambda, params.packet, hsc::make_stream(6, 0));
    double w = 0.0;
    int zeros = 0;
    for (int i = 0; i < 100000; ++i) {
        w = hsc::lindley_step(w, *source.next(), params.p).next_level;
        ASSERT_GE(w, 0.0);
        zeros += w == 0.0;
    }
    EXPECT_GT(zeros, 0);
}

TEST(Path, RampToOutage) {
    ScriptedEventSource events({{0.5, 2.0}});
    const auto path = hsc::record_path(mm1(1.1, 1.0), 100.0, events);
    const std::vector<hsc::PathPoint> expected{{0.0, 1.0}, {0.0, 1.5}, {1.5, 0.0}};
    EXPECT_EQ(path, expected);
}

TEST(Path, SingleRampToHorizon) {
    ScriptedEventSource events({{3.0, std::numeric_limits<double>::infinity()}});
    const auto path = hsc::record_path(mm1(1.1, 2.0), 4.0, events);
    ASSERT_EQ(path.size(), 3u);
    EXPECT_EQ(path.back().t, 4.0);
    EXPECT_DOUBLE_EQ(path.back().surplus, 1.0);
}

TEST(Path, ConsistentWithFirstPassageOnSharedSeed) {
    for (std::uint64_t i = 0; i < 300; ++i) {
        const auto params = SystemParams{1.1, DistributionSpec::uniform(1.0), 1.0, 2.0};
        hsc::PoissonEventSource a(params.lambda, params.packet, hsc::make_stream(12, i));
        hsc::PoissonEventSource b(params.lambda, params.packet, hsc::make_stream(12, i));
        const auto out = hsc::simulate_first_passage(params, 200.0, a);
        const auto path = hsc::record_path(params, 200.0, b);
        if (out.outage) {
            EXPECT_EQ(path.back().surplus, 0.0);
            EXPECT_NEAR(path.back().t, *out.tau, 1e-9);
        } else {
            EXPECT_EQ(path.back().t, 200.0);
            EXPECT_GT(path.back().surplus, 0.0);
        }
        for (const auto& pt : path) EXPECT_GE(pt.surplus, 0.0);
    }
}

}  // namespace
