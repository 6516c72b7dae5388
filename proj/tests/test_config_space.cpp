#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "zrp/config_space.hpp"

using namespace zrp;

namespace {

void all_configs(int L, int N, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == L - 1) {
        cur.push_back(N);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= N; ++k) {
        cur.push_back(k);
        all_configs(L, N - k, cur, out);
        cur.pop_back();
    }
}

double inv_a(int n, double alpha) { return n == 0 ? 1.0 : std::pow(n, -alpha); }

}  // namespace

TEST(Enumerate, SmallCounts) {
    EXPECT_EQ(enumerate(3, 2, 2.0).size(), 6u);
    const auto s = enumerate(2, 1, 1.0);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.state(0), (Configuration{0, 1}));
    EXPECT_EQ(s.state(1), (Configuration{1, 0}));
    EXPECT_DOUBLE_EQ(s.mu(0), 0.5);
    EXPECT_DOUBLE_EQ(s.mu(1), 0.5);
}

TEST(Enumerate, EveryConfigurationOnceAndIndexInverts) {
    for (int L = 2; L <= 5; ++L)
        for (int N = 1; N <= 12; ++N) {
            std::vector<std::vector<int>> ref;
            std::vector<int> cur;
            all_configs(L, N, cur, ref);
            const auto s = enumerate(L, N, 2.0);
            ASSERT_EQ(s.size(), ref.size());
            std::set<std::vector<int>> seen;
            for (std::size_t i = 0; i < s.size(); ++i) {
                auto occ = s.occupations(i);
                std::vector<int> v(occ.begin(), occ.end());
                EXPECT_TRUE(seen.insert(v).second);
                EXPECT_EQ(s.index_of(occ), i);
            }
            // recursion emits ascending lexicographic order
            for (std::size_t i = 0; i < ref.size(); ++i) {
                auto occ = s.occupations(i);
                ASSERT_TRUE(std::equal(occ.begin(), occ.end(), ref[i].begin()));
            }
        }
}

TEST(Enumerate, MeasureMatchesBruteForce) {
    const int L = 3, N = 10;
    const double alpha = 4.0;
    const auto s = enumerate(L, N, alpha);
    ASSERT_EQ(s.size(), 66u);
    double w = 0.0;
    for (int a = 0; a <= N; ++a)
        for (int b = 0; a + b <= N; ++b) w += inv_a(a, alpha) * inv_a(b, alpha) * inv_a(N - a - b, alpha);
    const double Z = std::pow(N, alpha) * w;
    EXPECT_NEAR(s.Z(), Z, 1e-13 * Z);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto o = s.occupations(i);
        const double mu = std::pow(N, alpha) / Z * inv_a(o[0], alpha) * inv_a(o[1], alpha) * inv_a(o[2], alpha);
        EXPECT_NEAR(s.mu(i), mu, 1e-14);
        sum += s.mu(i);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Enumerate, RotationInvariantMeasure) {
    const auto s = enumerate(4, 9, 2.5);
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto o = s.occupations(i);
        std::vector<int> r(o.size());
        for (std::size_t x = 0; x < o.size(); ++x) r[(x + 1) % o.size()] = o[x];
        EXPECT_NEAR(s.mu(s.index_of(r)), s.mu(i), 1e-15);
    }
}

TEST(Enumerate, Errors) {
    EXPECT_THROW(enumerate(1, 3, 2.0), DomainError);
    EXPECT_THROW(enumerate(3, 0, 2.0), DomainError);
    EXPECT_THROW(enumerate(3, 3, 0.0), DomainError);
    try {
        enumerate(3, 100, 2.0, 1000);
        FAIL();
    } catch (const SizeError& e) {
        EXPECT_EQ(e.cardinality(), 5151u);
    }
    const auto s = enumerate(3, 4, 2.0);
    EXPECT_THROW(s.index_of(std::vector<int>{1, 1, 1}), DomainError);
    EXPECT_FALSE(s.contains(std::vector<int>{4, 0}));
    EXPECT_TRUE(enumerate(2, 3, 2.0).reversible_torus());
}

TEST(ZLimit, Values) {
    const double g4 = 1.0 + std::pow(std::numbers::pi, 4) / 90.0;
    EXPECT_NEAR(z_limit(3, 4.0), 3.0 * g4 * g4, 1e-11);
    EXPECT_NEAR(z_limit(3, 4.0), 13.0082, 1e-4);
    EXPECT_NEAR(z_limit(2, 2.0), 2.0 * (1.0 + std::numbers::pi * std::numbers::pi / 6.0), 1e-11);
    EXPECT_NEAR(z_limit(2, 50.0), 4.0, 1e-14);
    EXPECT_THROW(z_limit(3, 1.0), DivergenceError);
}

TEST(ZLimit, FiniteNApproach) {
    const double lim = z_limit(3, 4.0);
    double prev = 1e300;
    for (int N : {10, 20, 40}) {
        const double d = std::abs(enumerate(3, N, 4.0).Z() - lim);
        EXPECT_LT(d, prev) << N;
        prev = d;
    }
}

TEST(Wells, ExplicitSets) {
    const auto s = enumerate(3, 10, 2.0);
    const auto w = partition_wells(s, 2);
    std::set<std::vector<int>> got;
    for (auto i : w.wells[0]) {
        auto o = s.occupations(i);
        got.insert({o.begin(), o.end()});
    }
    const std::set<std::vector<int>> want{{10, 0, 0}, {9, 1, 0}, {9, 0, 1}, {8, 2, 0}, {8, 1, 1}, {8, 0, 2}};
    EXPECT_EQ(got, want);

    const auto s2 = enumerate(2, 5, 2.0);
    const auto w2 = partition_wells(s2, 2);
    EXPECT_TRUE(w2.delta.empty());
    EXPECT_EQ(w2.wells[0].size(), 3u);
    EXPECT_EQ(w2.wells[1].size(), 3u);
}

TEST(Wells, PartitionInvariants) {
    const auto s = enumerate(4, 12, 3.0);
    for (int ell = 1; 2 * ell < 12; ++ell) {
        const auto w = partition_wells(s, ell);
        std::vector<int> hits(s.size(), 0);
        for (const auto& well : w.wells)
            for (auto i : well) ++hits[i];
        for (auto i : w.delta) ++hits[i];
        for (int h : hits) EXPECT_EQ(h, 1);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const int lab = w.label[i];
            if (lab >= 0) EXPECT_GE(s.occupations(i)[static_cast<std::size_t>(lab)], 12 - ell);
        }
    }
    EXPECT_THROW(partition_wells(s, 6), DomainError);
    EXPECT_THROW(partition_wells(s, 0), DomainError);
    EXPECT_THROW(enlarged_wells(s, 2), DomainError);
    EXPECT_EQ(enlarged_wells(enumerate(3, 20, 2.0), 3).depth, 9);
}

TEST(Wells, MassesEqualAndDeltaShrinks) {
    for (int N : {9, 14}) {
        const auto s = enumerate(3, N, 2.0);
        const auto m = well_mass_report(s, partition_wells(s, 2));
        EXPECT_NEAR(m.well_masses[0], m.well_masses[1], 1e-14);
        EXPECT_NEAR(m.well_masses[0], m.well_masses[2], 1e-14);
    }
    {
        const auto s = enumerate(3, 30, 4.0);
        const auto m = well_mass_report(s, partition_wells(s, 3));
        EXPECT_LT(m.delta_mass, m.well_masses[0]);
    }
    {
        const auto s = enumerate(3, 40, 4.0);
        const auto m = well_mass_report(s, partition_wells(s, 6));
        for (double v : m.well_masses) EXPECT_NEAR(v, 1.0 / 3.0, 0.05);
    }
    double prev = 1.0;
    for (int N : {20, 30, 40}) {
        const auto s = enumerate(3, N, 4.0);
        const int ell = static_cast<int>(std::sqrt(N));
        const double d = well_mass_report(s, partition_wells(s, ell)).delta_mass;
        EXPECT_LT(d, prev) << N;
        prev = d;
    }
}

TEST(Wells, DefaultEll) {
    // gamma = (1+alpha)/(1+alpha(L-1))
    EXPECT_EQ(default_ell(3, 20, 4.0), static_cast<int>(std::floor(std::pow(20.0, 5.0 / 18.0))));
    EXPECT_EQ(default_ell(2, 100, 2.0), 10);
}
