#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "zrp/generator.hpp"

using namespace zrp;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Dense rate matrix rebuilt from configurations.
std::vector<std::vector<double>> dense_rates(const StateSpace& s, int step) {
    const int L = s.sites();
    std::vector<std::vector<double>> q(s.size(), std::vector<double>(s.size(), 0.0));
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto o = s.occupations(i);
        for (int x = 0; x < L; ++x) {
            if (o[x] == 0) continue;
            std::vector<int> t(o.begin(), o.end());
            --t[x];
            ++t[torus_mod(x + step, L)];
            const double k = o[x];
            q[i][s.index_of(t)] += k == 1 ? 1.0 : std::pow(k / (k - 1.0), s.alpha());
        }
    }
    return q;
}

double entry(const RateOperator& op, std::size_t i, std::size_t j) {
    auto t = op.targets(i);
    auto r = op.rates(i);
    double v = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] == j) v += r[k];
    return v;
}

}  // namespace

TEST(JumpRate, Values) {
    EXPECT_EQ(jump_rate(1, 2.0), 1.0);
    EXPECT_EQ(jump_rate(1, 4.0), 1.0);
    EXPECT_DOUBLE_EQ(jump_rate(2, 4.0), 16.0);
    EXPECT_LT(jump_rate(10, 2.0), jump_rate(5, 2.0));
    EXPECT_EQ(jump_rate(0, 2.0), 0.0);
}

TEST(RateOperator, TwoSiteSwap) {
    const Model m(enumerate(2, 1, 3.0));
    EXPECT_DOUBLE_EQ(entry(m.forward, 0, 1), 1.0);
    EXPECT_DOUBLE_EQ(entry(m.forward, 1, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.forward.diagonal(0), -1.0);
}

TEST(RateOperator, EntriesMatchConfigurations) {
    const Model m(enumerate(4, 6, 2.5));
    const auto fwd = dense_rates(*m.space, +1), adj = dense_rates(*m.space, -1);
    for (std::size_t i = 0; i < m.space->size(); ++i)
        for (std::size_t j = 0; j < m.space->size(); ++j) {
            if (i == j) continue;
            EXPECT_NEAR(entry(m.forward, i, j), fwd[i][j], 1e-13);
            EXPECT_NEAR(entry(m.adjoint, i, j), adj[i][j], 1e-13);
            EXPECT_NEAR(entry(m.symmetric, i, j), 0.5 * (fwd[i][j] + adj[i][j]), 1e-13);
        }
}

TEST(RateOperator, RowSumsAndGlobalBalance) {
    for (auto [L, N, a] : {std::tuple{3, 7, 2.0}, {4, 5, 4.0}, {2, 6, 1.5}, {5, 4, 3.0}}) {
        const Model m(enumerate(L, N, a));
        for (auto k : {OperatorKind::forward, OperatorKind::adjoint, OperatorKind::symmetric}) {
            const auto& op = m.op(k);
            std::vector<double> inflow(op.size(), 0.0);
            for (std::size_t i = 0; i < op.size(); ++i) {
                double row = op.diagonal(i);
                auto t = op.targets(i);
                auto r = op.rates(i);
                for (std::size_t e = 0; e < t.size(); ++e) {
                    row += r[e];
                    inflow[t[e]] += m.space->mu(i) * r[e];
                }
                EXPECT_NEAR(row, 0.0, 1e-12);
            }
            for (std::size_t j = 0; j < op.size(); ++j)
                EXPECT_NEAR(inflow[j], -m.space->mu(j) * op.diagonal(j), 1e-10);
        }
    }
}

TEST(RateOperator, ApplyIdentities) {
    const Model m(enumerate(3, 5, 2.0));
    const std::size_t n = m.space->size();
    std::mt19937_64 rng(7);
    const std::vector<double> one(n, 1.0);
    for (double v : m.forward.apply(one)) EXPECT_NEAR(v, 0.0, 1e-14);
    for (int k = 0; k < 50; ++k) {
        const auto f = random_vector(n, rng), g = random_vector(n, rng);
        const double lhs = inner(*m.space, m.forward.apply(f), g);
        const double rhs = inner(*m.space, f, m.adjoint.apply(g));
        EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(lhs)));
        const auto lf = m.forward.apply(f), af = m.adjoint.apply(f), sf = m.symmetric.apply(f);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(sf[i], 0.5 * (lf[i] + af[i]), 1e-14 * (1 + std::abs(sf[i])));
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> e(n, 0.0);
        e[i] = 1.0;
        double total = 0.0;
        for (int v : m.space->occupations(i)) total += jump_rate(v, 2.0);
        EXPECT_NEAR(m.forward.apply(e)[i], -total, 1e-13);
    }
}

TEST(RateOperator, GeneratorIntegratesToZero) {
    const Model m(enumerate(3, 3, 2.0));
    std::mt19937_64 rng(3);
    const std::vector<double> one(m.space->size(), 1.0);
    for (int k = 0; k < 20; ++k) {
        const auto f = random_vector(m.space->size(), rng);
        const auto lf = m.forward.apply(f);
        double s = 0.0;
        for (std::size_t i = 0; i < lf.size(); ++i) s += m.space->mu(i) * lf[i];
        EXPECT_NEAR(s, 0.0, 1e-14);
        EXPECT_NEAR(inner(*m.space, lf, one), 0.0, 1e-14);
    }
}

TEST(DirichletForm, Identities) {
    const Model m(enumerate(3, 6, 3.0));
    std::mt19937_64 rng(11);
    const std::vector<double> c(m.space->size(), 2.5);
    EXPECT_NEAR(dirichlet_form(*m.space, c), 0.0, 1e-15);
    for (int k = 0; k < 20; ++k) {
        auto f = random_vector(m.space->size(), rng);
        const double d = dirichlet_form(*m.space, f);
        EXPECT_NEAR(d, quadratic_form(m.symmetric, f), 1e-12 * d);
        EXPECT_NEAR(d, quadratic_form(m.forward, f), 1e-12 * d);
        for (auto& v : f) v *= -3.0;
        EXPECT_NEAR(dirichlet_form(*m.space, f), 9.0 * d, 1e-12 * d);
    }
}

TEST(CycleForm, SumsToDirichletForm) {
    const auto s = enumerate(3, 4, 2.0);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        const auto f = random_vector(s.size(), rng);
        double sum = 0.0;
        for (const auto& c : cycle_decomposition(s)) sum += cycle_form(s, c.xi, f);
        const double d = dirichlet_form(s, f);
        EXPECT_NEAR(sum, d, 1e-12 * d);
    }
    const std::vector<double> one(s.size(), 1.0);
    for (const auto& c : cycle_decomposition(s)) EXPECT_EQ(cycle_form(s, c.xi, one), 0.0);
}

TEST(CycleForm, SingleCycleTwoSites) {
    const auto s = enumerate(2, 2, 2.0);
    std::vector<double> f(s.size(), 0.0);
    f[s.index_of(std::vector<int>{1, 1})] = 0.7;
    f[s.index_of(std::vector<int>{2, 0})] = -0.4;
    const double d = 0.7 + 0.4;
    const double weight = std::pow(2.0, 2.0) / (2.0 * s.Z());  // 1/a(1,0) = 1
    EXPECT_NEAR(cycle_form(s, Configuration{1, 0}, f), weight * 2.0 * d * d, 1e-15);
}

TEST(CycleDecomposition, ReproducesForwardOperator) {
    const Model m(enumerate(3, 5, 2.0));
    const auto& s = *m.space;
    const std::size_t n = s.size();
    std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
    const auto cycles = cycle_decomposition(s);
    EXPECT_EQ(cycles.size(), enumerate(3, 4, 2.0).size());
    for (const auto& c : cycles) {
        ASSERT_EQ(c.touched.size(), 3u);
        for (int z = 0; z < 3; ++z) {
            const double r = occupancy_weight_a(c.xi[z] + 1, 2.0) / occupancy_weight_a(c.xi[z], 2.0);
            q[c.touched[z]][c.touched[torus_mod(z + 1, 3)]] += r;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) EXPECT_NEAR(q[i][j], entry(m.forward, i, j), 1e-13);
}

TEST(SectorCondition, RandomPairs) {
    const Model m(enumerate(3, 6, 2.0));
    std::mt19937_64 rng(42);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto f = random_vector(m.space->size(), rng), h = random_vector(m.space->size(), rng);
        worst = std::max(worst, sector_ratio(m, f, h));
    }
    EXPECT_LE(worst, 4.0 * 9.0);
    RecordProperty("worst_sector_ratio", std::to_string(worst));
}

TEST(TwoSiteTorus, ForwardEqualsAdjoint) {
    const Model m(enumerate(2, 7, 2.0));
    for (std::size_t i = 0; i < m.space->size(); ++i)
        for (std::size_t j = 0; j < m.space->size(); ++j) {
            EXPECT_DOUBLE_EQ(entry(m.forward, i, j), entry(m.adjoint, i, j));
            EXPECT_DOUBLE_EQ(entry(m.forward, i, j), entry(m.symmetric, i, j));
        }
}

TEST(OperatorCsv, Header) {
    const Model m(enumerate(2, 1, 1.0));
    std::ostringstream os;
    write_operator_csv(os, m.forward);
    EXPECT_EQ(os.str(), "row,col,rate\n0,0,-1\n0,1,1\n1,0,1\n1,1,-1\n");
}
