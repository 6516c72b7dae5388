#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "zrp/errors.hpp"
#include "zrp/numerics.hpp"

namespace zrp {

/// Torus site arithmetic with non-negative modulo.
inline int torus_mod(int x, int L) noexcept {
    const int r = x % L;
    return r < 0 ? r + L : r;
}

/// Occupation numbers on the torus T_L.
class Configuration {
public:
    Configuration() = default;
    explicit Configuration(std::vector<int> occupations) : occ_(std::move(occupations)) {}
    Configuration(std::initializer_list<int> occupations) : occ_(occupations) {}

    int sites() const noexcept { return static_cast<int>(occ_.size()); }
    int total() const noexcept { return std::accumulate(occ_.begin(), occ_.end(), 0); }

    int operator[](int x) const { return occ_[static_cast<std::size_t>(x)]; }
    int& operator[](int x) { return occ_[static_cast<std::size_t>(x)]; }

    std::span<const int> occupations() const noexcept { return occ_; }

    /// sigma^{x,y} eta: one particle moved from x to y. Requires eta_x > 0.
    Configuration moved(int from, int to) const {
        Configuration c = *this;
        --c[from];
        ++c[to];
        return c;
    }

    friend bool operator==(const Configuration&, const Configuration&) = default;
    friend auto operator<=>(const Configuration&, const Configuration&) = default;

    std::string to_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < occ_.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(occ_[i]);
        }
        return s + ")";
    }

private:
    std::vector<int> occ_;
};

/// a(0) = 1, a(n) = n^alpha.
inline double occupancy_weight_a(int n, double alpha) {
    return n == 0 ? 1.0 : std::pow(static_cast<double>(n), alpha);
}

inline constexpr std::uint64_t kDefaultStateCap = 5'000'000;

/// Calls fn(span<const int>) for every composition of `total` into L parts,
/// in ascending lexicographic order.
template <class Fn>
void for_each_composition(int L, int total, Fn&& fn) {
    std::vector<int> occ(static_cast<std::size_t>(L), 0);
    // Recursive fill expressed iteratively: position i takes values 0..rem.
    auto rec = [&](auto&& self, int pos, int rem) -> void {
        if (pos == L - 1) {
            occ[static_cast<std::size_t>(pos)] = rem;
            fn(std::span<const int>(occ));
            return;
        }
        for (int v = 0; v <= rem; ++v) {
            occ[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, rem - v);
        }
    };
    rec(rec, 0, total);
}

/// Enumerated E_N with the conditioned stationary measure.
///
/// States are stored flat (L ints per state) in ascending lexicographic
/// order; `index_of` is the inverse map, computed by ranking in O(L).
class StateSpace {
public:
    int sites() const noexcept { return L_; }
    int particles() const noexcept { return N_; }
    double alpha() const noexcept { return alpha_; }
    std::size_t size() const noexcept { return weights_.size(); }

    std::span<const int> occupations(std::size_t i) const {
        return {occ_.data() + i * static_cast<std::size_t>(L_), static_cast<std::size_t>(L_)};
    }
    Configuration state(std::size_t i) const {
        auto o = occupations(i);
        return Configuration(std::vector<int>(o.begin(), o.end()));
    }

    /// Unnormalized weights 1/a(eta) = prod_x 1/a(eta_x).
    std::span<const double> weights() const noexcept { return weights_; }
    /// Normalizing constant Z_N = N^alpha * sum_zeta 1/a(zeta).
    double Z() const noexcept { return Z_; }
    /// sum_zeta 1/a(zeta), i.e. Z_N / N^alpha.
    double weight_total() const noexcept { return weight_total_; }
    std::span<const double> mu() const noexcept { return mu_; }
    double mu(std::size_t i) const { return mu_[i]; }

    /// Ordinal of a configuration in E_N, by lexicographic ranking.
    std::size_t index_of(std::span<const int> occ) const {
        if (static_cast<int>(occ.size()) != L_) throw DomainError("configuration has wrong number of sites");
        std::uint64_t rank = 0;
        int rem = N_;
        for (int i = 0; i + 1 < L_; ++i) {
            const int v = occ[static_cast<std::size_t>(i)];
            if (v < 0 || v > rem) throw DomainError("configuration is not in E_N");
            const auto parts = static_cast<std::uint64_t>(L_ - i);
            rank += numerics::compositions_count(static_cast<std::uint64_t>(rem), parts) -
                    numerics::compositions_count(static_cast<std::uint64_t>(rem - v), parts);
            rem -= v;
        }
        if (occ[static_cast<std::size_t>(L_ - 1)] != rem) throw DomainError("configuration is not in E_N");
        return static_cast<std::size_t>(rank);
    }
    std::size_t index_of(const Configuration& c) const { return index_of(c.occupations()); }

    bool contains(std::span<const int> occ) const {
        if (static_cast<int>(occ.size()) != L_) return false;
        int s = 0;
        for (int v : occ) {
            if (v < 0) return false;
            s += v;
        }
        return s == N_;
    }

    /// On T_2 right and left jumps coincide and the dynamics is reversible.
    bool reversible_torus() const noexcept { return L_ == 2; }

    friend StateSpace enumerate(int L, int N, double alpha, std::uint64_t cap);

private:
    int L_ = 0;
    int N_ = 0;
    double alpha_ = 0.0;
    std::vector<int> occ_;
    std::vector<double> weights_;
    std::vector<double> mu_;
    double Z_ = 0.0;
    double weight_total_ = 0.0;
};

/// Enumerates E_N = {eta : sum eta_x = N} on T_L.
inline StateSpace enumerate(int L, int N, double alpha, std::uint64_t cap = kDefaultStateCap) {
    if (L < 2) throw DomainError("torus needs L >= 2 sites (got " + std::to_string(L) + ")");
    if (N < 1) throw DomainError("need N >= 1 particles (got " + std::to_string(N) + ")");
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    const std::uint64_t card =
        numerics::compositions_count(static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(L));
    if (card > cap)
        throw SizeError("|E_N| = " + std::to_string(card) + " exceeds the enumeration cap " +
                            std::to_string(cap),
                        card);

    StateSpace s;
    s.L_ = L;
    s.N_ = N;
    s.alpha_ = alpha;
    s.occ_.reserve(static_cast<std::size_t>(card) * static_cast<std::size_t>(L));
    s.weights_.reserve(static_cast<std::size_t>(card));

    std::vector<double> inv_a(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n) inv_a[static_cast<std::size_t>(n)] = 1.0 / occupancy_weight_a(n, alpha);

    for_each_composition(L, N, [&](std::span<const int> occ) {
        double w = 1.0;
        for (int v : occ) w *= inv_a[static_cast<std::size_t>(v)];
        s.occ_.insert(s.occ_.end(), occ.begin(), occ.end());
        s.weights_.push_back(w);
    });

    s.weight_total_ = numerics::compensated_sum(s.weights_);
    s.Z_ = std::pow(static_cast<double>(N), alpha) * s.weight_total_;
    s.mu_.resize(s.weights_.size());
    std::transform(s.weights_.begin(), s.weights_.end(), s.mu_.begin(),
                   [&](double w) { return w / s.weight_total_; });
    return s;
}

/// lim_N Z_N = L * Gamma(alpha)^{L-1}, with Gamma(alpha) = sum_{j>=0} 1/a(j).
inline double z_limit(int L, double alpha) {
    if (L < 1) throw DomainError("z_limit needs L >= 1");
    return L * std::pow(numerics::gamma_series(alpha), L - 1);
}

/// Metastable wells E^x = {eta : eta_x >= N - depth} and the remainder Delta.
///
/// `ellN` is the well parameter l_N. The standard wells use depth = l_N; the
/// enlarged wells D^x used for test-function bounds use depth = 3 l_N.
struct WellPartition {
    int ellN = 0;
    int depth = 0;
    std::vector<std::vector<std::size_t>> wells;  // per site, ascending ordinals
    std::vector<std::size_t> delta;
    std::vector<int> label;  // per state: site index or -1 for Delta

    int sites() const noexcept { return static_cast<int>(wells.size()); }

    std::vector<std::size_t> union_of(std::span<const int> sites_in) const {
        std::vector<std::size_t> out;
        for (int x : sites_in) out.insert(out.end(), wells[static_cast<std::size_t>(x)].begin(),
                                          wells[static_cast<std::size_t>(x)].end());
        std::sort(out.begin(), out.end());
        return out;
    }
    /// Union of all wells except the one at x (the set E-breve^x).
    std::vector<std::size_t> others(int x) const {
        std::vector<int> s;
        for (int y = 0; y < sites(); ++y)
            if (y != x) s.push_back(y);
        return union_of(s);
    }
};

namespace detail {
inline WellPartition partition_by_depth(const StateSpace& space, int ellN, int depth) {
    const int L = space.sites(), N = space.particles();
    WellPartition p;
    p.ellN = ellN;
    p.depth = depth;
    p.wells.assign(static_cast<std::size_t>(L), {});
    p.label.assign(space.size(), -1);
    const int threshold = N - depth;
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto occ = space.occupations(i);
        for (int x = 0; x < L; ++x) {
            if (occ[static_cast<std::size_t>(x)] >= threshold) {
                p.label[i] = x;
                p.wells[static_cast<std::size_t>(x)].push_back(i);
                break;
            }
        }
        if (p.label[i] < 0) p.delta.push_back(i);
    }
    return p;
}
}  // namespace detail

/// Wells E^x_N with threshold N - l_N. Requires 1 <= l_N and 2 l_N < N.
inline WellPartition partition_wells(const StateSpace& space, int ellN) {
    if (ellN < 1) throw DomainError("l_N must be at least 1");
    if (2 * ellN >= space.particles())
        throw DomainError("wells overlap: need 2*l_N < N (l_N = " + std::to_string(ellN) +
                          ", N = " + std::to_string(space.particles()) + ")");
    return detail::partition_by_depth(space, ellN, ellN);
}

/// Enlarged wells D^x_N = {eta_x >= N - 3 l_N}. Requires 6 l_N < N.
inline WellPartition enlarged_wells(const StateSpace& space, int ellN) {
    if (ellN < 1) throw DomainError("l_N must be at least 1");
    if (6 * ellN >= space.particles())
        throw DomainError("enlarged wells overlap: need 6*l_N < N (l_N = " + std::to_string(ellN) +
                          ", N = " + std::to_string(space.particles()) + ")");
    return detail::partition_by_depth(space, ellN, 3 * ellN);
}

struct WellMassReport {
    std::vector<double> well_masses;
    double delta_mass = 0.0;
};

inline WellMassReport well_mass_report(const StateSpace& space, const WellPartition& p) {
    WellMassReport r;
    for (const auto& w : p.wells) {
        numerics::CompensatedSum s;
        for (auto i : w) s.add(space.mu(i));
        r.well_masses.push_back(s.value());
    }
    numerics::CompensatedSum d;
    for (auto i : p.delta) d.add(space.mu(i));
    r.delta_mass = d.value();
    return r;
}

/// Default finite-N well parameter floor(N^{min(1/2, gamma/2)}),
/// gamma = (1+alpha)/(1+alpha(L-1)).
inline int default_ell(int L, int N, double alpha) {
    const double gamma = (1.0 + alpha) / (1.0 + alpha * (L - 1));
    const double e = std::min(0.5, 0.5 * gamma);
    return std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(N), e) + 1e-12)));
}

}  // namespace zrp
