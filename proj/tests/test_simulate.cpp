#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "zrp/metastability.hpp"
#include "zrp/simulate.hpp"
#include "zrp/stats.hpp"

using namespace zrp;

TEST(SplitMix64, ReferenceStream) {
    // first outputs for seed 0 of the reference implementation
    SplitMix64 r(0);
    EXPECT_EQ(r.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(r.next(), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(r.next(), 0x06c45d188009454fULL);
    SplitMix64 u(1234);
    for (int i = 0; i < 10000; ++i) {
        const double x = u.uniform();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
    }
}

TEST(Stats, ChiSquareTail) {
    EXPECT_NEAR(stats::chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
    EXPECT_NEAR(stats::chi_square_sf(2.0, 2), std::exp(-1.0), 1e-14);
    EXPECT_EQ(stats::chi_square_sf(0.0, 3), 1.0);
    const std::vector<double> obs{10, 20, 30}, p{1, 2, 3};
    const auto c = stats::goodness_of_fit(obs, p);
    EXPECT_NEAR(c.statistic, 0.0, 1e-12);
    EXPECT_EQ(c.dof, 2);
}

TEST(Stats, PoolingSmallCells) {
    const std::vector<double> obs{50, 48, 1, 0, 1};
    const std::vector<double> p{0.49, 0.49, 0.01, 0.005, 0.005};
    const auto c = stats::goodness_of_fit(obs, p);
    EXPECT_EQ(c.cells, 2);
    EXPECT_EQ(c.dof, 1);
}

TEST(Stats, WilsonInterval) {
    const auto i = stats::wilson_interval(90, 100);
    EXPECT_LT(i.lo, 0.9);
    EXPECT_GT(i.hi, 0.9);
    EXPECT_NEAR(i.lo, 0.8256, 1e-3);
    EXPECT_NEAR(i.hi, 0.9448, 1e-3);
    const auto all = stats::wilson_interval(50, 50);
    EXPECT_EQ(all.hi, 1.0);
}

TEST(Run, SingleParticlePoissonWalk) {
    SimConfig c;
    c.L = 4;
    c.N = 1;
    c.alpha = 3.0;
    c.ellN = 0;
    c.seed = 5;
    c.t_max = 1e9;
    c.max_events = 10000;
    struct Holds {
        double sum = 0, sq = 0;
        int n = 0;
        void hold(std::span<const int>, double, double dt) {
            sum += dt;
            sq += dt * dt;
            ++n;
        }
    } h;
    const auto tr = run(c, h);
    EXPECT_EQ(tr.events, 10000u);
    const double mean = h.sum / h.n;
    EXPECT_NEAR(mean, 1.0, 3.0 / std::sqrt(h.n));
    // every event moves to the next site: 10000 = 4 * 2500 laps
    EXPECT_EQ(tr.final_state, (Configuration{1, 0, 0, 0}));
}

TEST(Run, CondensateExitRate) {
    EXPECT_NEAR(jump_rate(1000, 2.0), 1.0, 3e-3);
    EXPECT_GT(jump_rate(10, 2.0), jump_rate(1000, 2.0));
}

TEST(Run, Deterministic) {
    SimConfig c;
    c.L = 3;
    c.N = 10;
    c.alpha = 2.0;
    c.ellN = 2;
    c.seed = 99;
    c.t_max = 5000.0;
    const auto a = run(c), b = run(c);
    EXPECT_TRUE(a == b);
    c.seed = 100;
    EXPECT_FALSE(run(c) == a);
}

TEST(Run, TimesAndLabels) {
    SimConfig c;
    c.L = 3;
    c.N = 9;
    c.alpha = 2.0;
    c.ellN = 2;
    c.seed = 3;
    c.t_max = 20000.0;
    const auto tr = run(c);
    ASSERT_FALSE(tr.segments.empty());
    EXPECT_EQ(tr.segments.front().start, 0.0);
    EXPECT_EQ(tr.segments.back().end, c.t_max);
    for (std::size_t k = 0; k < tr.segments.size(); ++k) {
        EXPECT_LT(tr.segments[k].start, tr.segments[k].end);
        EXPECT_TRUE(tr.segments[k].label == kDeltaLabel || (tr.segments[k].label >= 0 && tr.segments[k].label < 3));
        if (k > 0) {
            EXPECT_EQ(tr.segments[k].start, tr.segments[k - 1].end);
            EXPECT_NE(tr.segments[k].label, tr.segments[k - 1].label);
        }
    }
    EXPECT_NEAR(tr.well_occupation + tr.delta_occupation, tr.total_time, 1e-12 * tr.total_time);
}

TEST(Run, ValidatesConfig) {
    SimConfig c;
    c.t_max = -1.0;
    EXPECT_THROW(run(c), DomainError);
    c.t_max = 1.0;
    c.initial = Configuration{1, 2};
    EXPECT_THROW(run(c), DomainError);
    c.initial = 7;
    EXPECT_THROW(run(c), DomainError);
    c.initial = 0;
    c.ellN = 4;
    EXPECT_THROW(run(c), DomainError);
}

TEST(TraceStatistics, SyntheticSegments) {
    Trajectory tr;
    tr.segments = {{0, 2, 0}, {2, 3, kDeltaLabel}, {3, 5, 0}, {5, 6, kDeltaLabel}, {6, 10, 1}, {10, 11, 2}};
    tr.delta_occupation = 2;
    tr.well_occupation = 9;
    tr.total_time = 11;
    const auto s = trace_statistics(tr, 3, 2.0);
    ASSERT_EQ(s.transitions, 2u);
    EXPECT_DOUBLE_EQ(s.holding_times[0], 2.0);  // (2 + 2) / 2, Delta excursion excised
    EXPECT_DOUBLE_EQ(s.holding_times[1], 2.0);
    EXPECT_EQ(s.jumps[0][1], 1u);
    EXPECT_EQ(s.jumps[1][2], 1u);
    EXPECT_EQ(s.displacement_counts[1], 2u);
    EXPECT_DOUBLE_EQ(s.delta_fraction, 2.0 / 11.0);
    EXPECT_DOUBLE_EQ(s.censored_time, 0.5);
    EXPECT_FALSE(s.empty);
}

TEST(TraceStatistics, NeverLeavesWell) {
    SimConfig c;
    c.L = 3;
    c.N = 30;
    c.alpha = 4.0;
    c.ellN = 10;
    c.seed = 1;
    c.t_max = 2.0;
    c.initial = 2;
    auto tr = run(c);
    const auto s = trace_statistics(tr, 3, std::pow(30.0, 5.0));
    EXPECT_TRUE(s.empty);
    EXPECT_EQ(s.transitions, 0u);
    EXPECT_EQ(s.delta_fraction, 0.0);
}

TEST(LawExactness, JumpSitesFollowRates) {
    const auto space = enumerate(3, 6, 2.0);
    SimConfig c;
    c.L = 3;
    c.N = 6;
    c.alpha = 2.0;
    c.ellN = 1;
    c.seed = 77;
    c.t_max = 1e12;
    c.max_events = 100000;
    JumpCounter counter(space);
    run(c, counter);
    const auto chi = jump_law_test(space, counter);
    EXPECT_GT(chi.dof, 10);
    EXPECT_GT(chi.p_value, 0.001) << chi.statistic << " on " << chi.dof;
}

TEST(Stationarity, OccupationTimeAndThinnedSamples) {
    const auto space = enumerate(3, 6, 2.0);
    SimConfig c;
    c.L = 3;
    c.N = 6;
    c.alpha = 2.0;
    c.ellN = 1;
    c.seed = 21;
    c.t_max = 2e5;
    OccupationTimer timer(space);
    const auto tr = run(c, timer);
    double total = 0.0;
    for (double t : timer.times()) total += t;
    EXPECT_NEAR(total, tr.total_time, 1e-9 * tr.total_time);
    for (std::size_t i = 0; i < space.size(); ++i) EXPECT_NEAR(timer.times()[i] / total, space.mu(i), 0.02);
    const auto st = stationarity_test(space, c, 50.0);
    EXPECT_GT(st.chi2.p_value, 0.001);
    EXPECT_EQ(st.samples, 4000u);
}

TEST(Replicas, OrderAndSeeds) {
    SimConfig c;
    c.L = 3;
    c.N = 8;
    c.alpha = 2.0;
    c.ellN = 2;
    c.seed = 4;
    c.t_max = 1000.0;
    const auto reps = run_replicas(c, 4);
    const auto seeds = replica_seeds(4, 4);
    ASSERT_EQ(reps.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
        SimConfig ck = c;
        ck.seed = seeds[k];
        EXPECT_TRUE(run(ck) == reps[k]);
    }
}

TEST(JumpTargets, MatchExactTraceRates) {
    const Model m(enumerate(3, 12, 4.0));
    const auto w = partition_wells(*m.space, 2);
    const auto t = trace_mean_rates(m, w);
    SimConfig c;
    c.L = 3;
    c.N = 12;
    c.alpha = 4.0;
    c.ellN = 2;
    c.seed = 2718;
    c.t_max = 2e5;
    const auto s = trace_statistics(run(c), 3, std::pow(12.0, 5.0));
    const double p1 = t.rates[0][1] / t.exit_rates[0];
    const double n = static_cast<double>(s.transitions);
    ASSERT_GT(n, 300.0);
    EXPECT_NEAR(s.displacement_counts[1] / n, p1, 3.0 * std::sqrt(p1 * (1 - p1) / n));
}

TEST(M1, SuccessFraction) {
    double prev = 0.0;
    for (int N : {8, 12, 16}) {
        const auto space = enumerate(3, N, 4.0);
        const auto w = partition_wells(space, 2);
        const auto r = m1_check(space, w, 1000, 31 + N);
        EXPECT_EQ(r.unresolved, 0u);
        EXPECT_GE(r.fraction, prev - 0.01);
        prev = r.fraction;
        if (N == 12) EXPECT_GE(r.fraction, 0.9);
    }
    const auto r = m1_check(enumerate(3, 12, 4.0), partition_wells(enumerate(3, 12, 4.0), 2), 1000, 43);
    EXPECT_LE(r.ci.lo, r.fraction);
    EXPECT_GE(r.ci.hi, r.fraction);
}

TEST(SegmentsCsv, Format) {
    Trajectory tr;
    tr.segments = {{0, 1.5, 0}, {1.5, 2, kDeltaLabel}};
    std::ostringstream os;
    write_segments_csv(os, tr);
    EXPECT_EQ(os.str(), "start,end,label\n0,1.5,0\n1.5,2,delta\n");
}
