#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zrp/config_space.hpp"
#include "zrp/errors.hpp"
#include "zrp/generator.hpp"
#include "zrp/linear_solve.hpp"
#include "zrp/numerics.hpp"
#include "zrp/potential.hpp"

namespace zrp {

/// Gamma(alpha) = sum_{j>=0} 1/a(j), I_alpha = int_0^1 u^alpha (1-u)^alpha du
/// and the limiting hop rate 1/(Gamma(alpha) I_alpha).
struct LimitConstants {
    double alpha = 0.0;
    double i_alpha = 0.0;
    std::optional<double> gamma_alpha;  // empty when the series diverges (alpha <= 1)
    std::optional<double> hop_rate;
    std::string gamma_error;

    double gamma() const {
        if (!gamma_alpha) throw DivergenceError(gamma_error);
        return *gamma_alpha;
    }
    double hop() const {
        if (!hop_rate) throw DivergenceError(gamma_error);
        return *hop_rate;
    }
};

inline LimitConstants limit_constants(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    LimitConstants c;
    c.alpha = alpha;
    c.i_alpha = numerics::beta_kernel_integral(alpha, 1.0);
    try {
        c.gamma_alpha = numerics::gamma_series(alpha);
        c.hop_rate = 1.0 / (*c.gamma_alpha * c.i_alpha);
    } catch (const DivergenceError& e) {
        c.gamma_error = e.what();
    }
    return c;
}

namespace detail {
inline std::vector<char> site_mask(int L, std::span<const int> A) {
    if (L < 2) throw DomainError("need L >= 2");
    std::vector<char> in(static_cast<std::size_t>(L), 0);
    for (int x : A) {
        if (x < 0 || x >= L) throw DomainError("site " + std::to_string(x) + " is not on the torus");
        if (in[static_cast<std::size_t>(x)]) throw DomainError("site " + std::to_string(x) + " listed twice");
        in[static_cast<std::size_t>(x)] = 1;
    }
    const auto k = static_cast<int>(A.size());
    if (k == 0 || k == L) throw DomainError("A must be a nonempty proper subset of the torus");
    return in;
}
}  // namespace detail

inline std::vector<int> complement_sites(int L, std::span<const int> A) {
    const auto in = detail::site_mask(L, A);
    std::vector<int> out;
    for (int x = 0; x < L; ++x)
        if (!in[static_cast<std::size_t>(x)]) out.push_back(x);
    return out;
}

/// lim N^{1+alpha} Cap_N(E(A), E(A^c)) = |A| (L - |A|) / (L Gamma(alpha) I_alpha).
inline double limit_prediction(int L, double alpha, std::span<const int> A) {
    detail::site_mask(L, A);
    const auto c = limit_constants(alpha);
    const double k = static_cast<double>(A.size());
    return k * (L - k) / (L * c.gamma() * c.i_alpha);
}

/// Ordinal of the single-particle state d_z in E_1.
inline std::size_t walk_state(const StateSpace& e1, int z) {
    std::vector<int> occ(static_cast<std::size_t>(e1.sites()), 0);
    occ[static_cast<std::size_t>(z)] = 1;
    return e1.index_of(occ);
}

/// Capacities of the underlying single-particle walks on T_L (the process
/// with N = 1): the rate-1 clockwise walk and its symmetrization.
struct WalkCapacities {
    std::vector<std::vector<double>> cap;      // Cap(x, y)
    std::vector<std::vector<double>> cap_sym;  // Cap^s(x, y)
};

inline WalkCapacities walk_capacities(int L) {
    const Model m(enumerate(L, 1, 1.0));
    WalkCapacities w;
    w.cap.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(L), 0.0));
    w.cap_sym = w.cap;
    for (int x = 0; x < L; ++x)
        for (int y = 0; y < L; ++y) {
            if (x == y) continue;
            const StateSet A{walk_state(*m.space, x)}, B{walk_state(*m.space, y)};
            const auto v = equilibrium_potential(m, OperatorKind::forward, A, B);
            w.cap[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = dirichlet_form(*m.space, v.values);
            w.cap_sym[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = capacity_sym(m, A, B);
        }
    return w;
}

/// C_alpha(A, A^c) = (1/(Gamma I_alpha)) sum_{x in A, y not in A} Cap^s(x,y),
/// the limit of N^{1+alpha} Cap^s_N(E(A), E(A^c)).
inline double reversible_limit(int L, double alpha, std::span<const int> A) {
    const auto in = detail::site_mask(L, A);
    const auto c = limit_constants(alpha);
    const auto w = walk_capacities(L);
    double s = 0.0;
    for (int x = 0; x < L; ++x)
        for (int y = 0; y < L; ++y)
            if (in[static_cast<std::size_t>(x)] && !in[static_cast<std::size_t>(y)])
                s += w.cap_sym[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
    return s / (c.gamma() * c.i_alpha);
}

/// N^{-(2 alpha + 1)} sum_{i=1}^{N-1} i^alpha (N - i)^alpha.
inline double discrete_ialpha(int N, double alpha) {
    if (N < 2) throw DomainError("discrete_ialpha needs N >= 2");
    numerics::CompensatedSum s;
    const double n = N;
    for (int i = 1; i < N; ++i) {
        const double u = i / n;
        s.add(std::pow(u, alpha) * std::pow(1.0 - u, alpha));
    }
    return s.value() / n;
}

/// Mean jump rates r_N(E^x, E^y) of the trace process on the wells.
struct TraceRateTable {
    std::vector<std::vector<double>> rates;  // zero diagonal
    std::vector<double> exit_rates;
    std::vector<double> well_masses;

    int sites() const noexcept { return static_cast<int>(rates.size()); }

    /// Max relative deviation of r(x,y) from r(0, y-x mod L).
    double rotation_defect() const {
        const int L = sites();
        double d = 0.0;
        for (int x = 0; x < L; ++x)
            for (int y = 0; y < L; ++y) {
                if (x == y) continue;
                const double ref = rates[0][static_cast<std::size_t>(torus_mod(y - x, L))];
                d = std::max(d, std::abs(rates[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] - ref) / ref);
            }
        return d;
    }
};

/// Trace rates from the absorbing problems on Delta: for each target well y,
/// u_y(zeta) = P_zeta[first well visited is E^y], then
/// R(eta, E^y) = sum_xi r(eta,xi) [1{xi in E^y} + 1{xi in Delta} u_y(xi)]
/// aggregated with mu_N over E^x.
inline TraceRateTable trace_mean_rates(const Model& m, const WellPartition& w) {
    const auto& space = *m.space;
    const auto& op = m.forward;
    const int L = w.sites();
    const std::size_t n = space.size();

    std::vector<int> dvar(n, -1);
    for (std::size_t k = 0; k < w.delta.size(); ++k) dvar[w.delta[k]] = static_cast<int>(k);
    const auto nd = static_cast<Eigen::Index>(w.delta.size());

    // u(k, y) for the k-th Delta state.
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(nd, L);
    if (nd > 0) {
        std::vector<linalg::Triplet> t;
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nd, L);
        for (Eigen::Index k = 0; k < nd; ++k) {
            const std::size_t i = w.delta[static_cast<std::size_t>(k)];
            t.emplace_back(static_cast<int>(k), static_cast<int>(k), -op.diagonal(i));
            auto tg = op.targets(i);
            auto rt = op.rates(i);
            for (std::size_t e = 0; e < tg.size(); ++e) {
                const int q = dvar[tg[e]];
                if (q >= 0)
                    t.emplace_back(static_cast<int>(k), q, -rt[e]);
                else
                    rhs(k, w.label[tg[e]]) += rt[e];
            }
        }
        const linalg::Solver solver(linalg::from_triplets(nd, nd, t), linalg::Structure::general);
        for (int y = 0; y < L; ++y) u.col(y) = solver.solve(rhs.col(y));
    }

    TraceRateTable tab;
    tab.rates.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(L), 0.0));
    tab.exit_rates.assign(static_cast<std::size_t>(L), 0.0);
    const auto masses = well_mass_report(space, w);
    tab.well_masses = masses.well_masses;
    for (int x = 0; x < L; ++x) {
        std::vector<numerics::CompensatedSum> acc(static_cast<std::size_t>(L));
        for (auto i : w.wells[static_cast<std::size_t>(x)]) {
            auto tg = op.targets(i);
            auto rt = op.rates(i);
            for (std::size_t e = 0; e < tg.size(); ++e) {
                const std::size_t j = tg[e];
                const int lj = w.label[j];
                if (lj >= 0) {
                    if (lj != x) acc[static_cast<std::size_t>(lj)].add(space.mu(i) * rt[e]);
                } else {
                    for (int y = 0; y < L; ++y)
                        if (y != x) acc[static_cast<std::size_t>(y)].add(space.mu(i) * rt[e] * u(dvar[j], y));
                }
            }
        }
        for (int y = 0; y < L; ++y) {
            if (y == x) continue;
            const double r = acc[static_cast<std::size_t>(y)].value() / tab.well_masses[static_cast<std::size_t>(x)];
            tab.rates[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = r;
            tab.exit_rates[static_cast<std::size_t>(x)] += r;
        }
    }
    return tab;
}

/// Configuration with all N particles at x.
inline std::size_t condensate_state(const StateSpace& space, int x) {
    std::vector<int> occ(static_cast<std::size_t>(space.sites()), 0);
    occ[static_cast<std::size_t>(x)] = space.particles();
    return space.index_of(occ);
}

struct H1Diagnostic {
    int site = 0;
    bool exact = true;             // scanned all of E^x (else boundary estimate)
    double cap_sym_well = 0.0;     // Cap^s(E^x, E-breve^x)
    std::size_t worst_state = 0;   // argmin_eta Cap^s(eta, xi^x)
    double cap_sym_worst = 0.0;
    double mu_worst = 0.0;
    double sandwich_bound = 0.0;   // 4 L^2 Cap^s(E^x, E-breve^x) / Cap^s(worst, xi^x)
    double cap_worst = 0.0;        // non-reversible Cap(worst, xi^x)
    double cap_well = 0.0;         // non-reversible Cap(E^x, E-breve^x)
    double exact_ratio_at_worst = 0.0;
};

struct HConditions {
    std::vector<double> h2;                   // mu(Delta)/mu(E^x)
    std::vector<H1Diagnostic> h1;
    std::vector<std::vector<double>> h0_scaled;  // N^{1+alpha} r_N(E^x, E^y)
    std::optional<double> hop_rate;
    double h0_max_ratio_defect = 0.0;         // max |scaled/hop - 1|
    TraceRateTable rates;
};

inline constexpr std::size_t kH1ExactScanLimit = 1000;

namespace detail {
// Q_g^{-1} e_eta on the mu-weighted symmetric Laplacian grounded at one state:
// its eta-entry is the effective resistance 1/Cap^s(eta, ground).
class GroundedLaplacian {
public:
    GroundedLaplacian(const Model& m, std::size_t ground) : ground_(ground) {
        const auto& space = *m.space;
        const auto& sym = m.symmetric;
        const std::size_t n = space.size();
        std::vector<linalg::Triplet> t;
        for (std::size_t i = 0; i < n; ++i) {
            auto tg = sym.targets(i);
            auto rt = sym.rates(i);
            for (std::size_t k = 0; k < tg.size(); ++k) {
                const double c = space.mu(i) * rt[k];  // equals mu(j) s(j,i)
                const int p = var(i), q = var(tg[k]);
                if (p >= 0) t.emplace_back(p, p, c);
                if (p >= 0 && q >= 0) t.emplace_back(p, q, -c);
            }
        }
        const auto dim = static_cast<Eigen::Index>(n - 1);
        solver_ = std::make_unique<linalg::Solver>(linalg::from_triplets(dim, dim, t), linalg::Structure::spd);
        dim_ = dim;
    }
    double resistance(std::size_t eta) const {
        linalg::Vector e = linalg::Vector::Zero(dim_);
        e[var(eta)] = 1.0;
        return solver_->solve(e)[var(eta)];
    }

private:
    int var(std::size_t i) const {
        if (i == ground_) return -1;
        return static_cast<int>(i < ground_ ? i : i - 1);
    }
    std::size_t ground_;
    Eigen::Index dim_ = 0;
    std::unique_ptr<linalg::Solver> solver_;
};

inline std::size_t spread_boundary_state(const StateSpace& space, int x, int ell) {
    const int L = space.sites();
    std::vector<int> occ(static_cast<std::size_t>(L), 0);
    occ[static_cast<std::size_t>(x)] = space.particles() - ell;
    for (int k = 0; k < ell; ++k) ++occ[static_cast<std::size_t>(torus_mod(x + 1 + k % (L - 1), L))];
    return space.index_of(occ);
}
}  // namespace detail

/// (H0), (H1), (H2) diagnostics at finite N.
inline HConditions h_conditions_report(const Model& m, const WellPartition& w) {
    const auto& space = *m.space;
    const int L = w.sites();
    const double scale = std::pow(static_cast<double>(space.particles()), 1.0 + space.alpha());
    HConditions h;
    const auto masses = well_mass_report(space, w);
    for (int x = 0; x < L; ++x) h.h2.push_back(masses.delta_mass / masses.well_masses[static_cast<std::size_t>(x)]);

    for (int x = 0; x < L; ++x) {
        H1Diagnostic d;
        d.site = x;
        const auto& wx = w.wells[static_cast<std::size_t>(x)];
        const auto others = w.others(x);
        const std::size_t xi = condensate_state(space, x);
        d.cap_sym_well = capacity_sym(m, wx, others);
        const detail::GroundedLaplacian lap(m, xi);
        d.exact = wx.size() <= kH1ExactScanLimit;
        std::vector<std::size_t> candidates;
        if (d.exact) {
            for (auto i : wx)
                if (i != xi) candidates.push_back(i);
        } else {
            candidates.push_back(detail::spread_boundary_state(space, x, w.ellN));
        }
        d.cap_sym_worst = std::numeric_limits<double>::infinity();
        for (auto i : candidates) {
            const double c = 1.0 / lap.resistance(i);
            if (c < d.cap_sym_worst) {
                d.cap_sym_worst = c;
                d.worst_state = i;
            }
        }
        d.mu_worst = space.mu(d.worst_state);
        d.sandwich_bound = 4.0 * L * L * d.cap_sym_well / d.cap_sym_worst;
        d.cap_worst = dirichlet_form(space, equilibrium_potential(m, OperatorKind::forward, {d.worst_state}, {xi}).values);
        d.cap_well = dirichlet_form(space, equilibrium_potential(m, OperatorKind::forward, wx, others).values);
        d.exact_ratio_at_worst = d.cap_well / d.cap_worst;
        h.h1.push_back(d);
    }

    h.rates = trace_mean_rates(m, w);
    const auto c = limit_constants(space.alpha());
    h.hop_rate = c.hop_rate;
    h.h0_scaled.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(L), 0.0));
    for (int x = 0; x < L; ++x)
        for (int y = 0; y < L; ++y) {
            if (x == y) continue;
            const double s = scale * h.rates.rates[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
            h.h0_scaled[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = s;
            if (h.hop_rate) h.h0_max_ratio_defect = std::max(h.h0_max_ratio_defect, std::abs(s / *h.hop_rate - 1.0));
        }
    return h;
}

/// Non-decreasing C^2 cutoff with phi = 0 on [0, 3 eps], phi = 1 on
/// [1 - 3 eps, 1] and phi(t) + phi(1 - t) = 1: the quintic smoothstep
/// 6s^5 - 15s^4 + 10s^3 on s = (t - 3 eps)/(1 - 6 eps).
inline double cutoff(double t, double eps) {
    const double lo = 3.0 * eps, hi = 1.0 - 3.0 * eps;
    if (t <= lo) return 0.0;
    if (t >= hi) return 1.0;
    const double s = (t - lo) / (hi - lo);
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

/// Test functions F_x(eta) = W_x(eta/N), one per site.
///
/// W_x is prescribed on the strips {u_x + u_y >= 1 - eps} and on {u_x <= eps};
/// off those regions it is the McShane extension over the prescribed lattice
/// points, min_q (W(q) + K |eta - q|_1) clipped to 1, where K is the exact
/// Lipschitz constant of the prescribed values in the l1 lattice metric. A
/// single jump moves l1 distance 2, so |F_x(sigma eta) - F_x(eta)| <= C_eps/N
/// with C_eps = 2 N K.
struct TestFunctions {
    double eps = 0.0;
    std::vector<std::vector<double>> F;  // F[x][state]
    std::vector<double> lipschitz;       // K per site, lattice units
    std::vector<double> c_eps;           // 2 N K per site
};

inline TestFunctions build_test_functions(const StateSpace& space, double eps) {
    if (!(eps > 0.0 && eps < 1.0 / 6.0))
        throw DomainError("eps must lie in (0, 1/6) so that the cutoff ramp is nonempty");
    const int L = space.sites(), N = space.particles();
    const double alpha = space.alpha();
    const double i_alpha = numerics::beta_kernel_integral(alpha, 1.0);
    std::vector<double> W(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k)
        W[static_cast<std::size_t>(k)] =
            std::clamp(numerics::beta_kernel_integral(alpha, cutoff(static_cast<double>(k) / N, eps)) / i_alpha, 0.0, 1.0);

    TestFunctions tf;
    tf.eps = eps;
    const std::size_t n = space.size();
    const double strip = (1.0 - eps) * N, floor_region = eps * N;
    for (int x = 0; x < L; ++x) {
        std::vector<double> f(n, 0.0);
        std::vector<std::size_t> defined;
        std::vector<char> is_defined(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto occ = space.occupations(i);
            const int ex = occ[static_cast<std::size_t>(x)];
            bool hit = false;
            double val = 0.0;
            if (ex <= floor_region + 1e-9) {
                hit = true;
                val = 0.0;
            } else {
                for (int y = 0; y < L; ++y) {
                    if (y == x) continue;
                    const int ey = occ[static_cast<std::size_t>(y)];
                    if (ex + ey >= strip - 1e-9) {
                        hit = true;
                        val = 0.5 * (W[static_cast<std::size_t>(ex)] + 1.0 - W[static_cast<std::size_t>(ey)]);
                        break;
                    }
                }
            }
            if (hit) {
                f[i] = val;
                is_defined[i] = 1;
                defined.push_back(i);
            }
        }
        auto l1 = [&](std::size_t a, std::size_t b) {
            auto oa = space.occupations(a), ob = space.occupations(b);
            int d = 0;
            for (int z = 0; z < L; ++z) d += std::abs(oa[static_cast<std::size_t>(z)] - ob[static_cast<std::size_t>(z)]);
            return d;
        };
        double K = 0.0;
        for (std::size_t a = 0; a < defined.size(); ++a)
            for (std::size_t b = a + 1; b < defined.size(); ++b) {
                const double df = std::abs(f[defined[a]] - f[defined[b]]);
                if (df > 0.0) K = std::max(K, df / l1(defined[a], defined[b]));
            }
        for (std::size_t i = 0; i < n; ++i) {
            if (is_defined[i]) continue;
            double best = 1.0;
            for (auto q : defined) best = std::min(best, f[q] + K * l1(i, q));
            f[i] = best;
        }
        tf.F.push_back(std::move(f));
        tf.lipschitz.push_back(K);
        tf.c_eps.push_back(2.0 * N * K);
    }
    return tf;
}

/// Largest |F(sigma^{z,z+1} eta) - F(eta)| over all transitions.
inline double max_jump_increment(const Model& m, std::span<const double> f) {
    double d = 0.0;
    const auto& op = m.forward;
    for (std::size_t i = 0; i < op.size(); ++i)
        for (auto j : op.targets(i)) d = std::max(d, std::abs(f[j] - f[i]));
    return d;
}

struct TestFunctionBound {
    double bound = 0.0;         // upper bound on Cap_N(E(A), E(A^c))
    double scaled_bound = 0.0;  // N^{1+alpha} * bound
    std::vector<double> F;      // F_A as used (after pinning on D(A), D(A^c))
    std::size_t pinned_changes = 0;  // states where F_A had to be overwritten
    std::vector<double> c_eps;
};

/// sup over H in C(D(A), D(A^c)) of the inf-sup objective at F = F_A, where
/// D^x = {eta_x >= N - 3 l_N}. F_A is pinned to 1 on D(A) and 0 on D(A^c);
/// for N large this pinning changes nothing. By monotonicity of the capacity
/// the value bounds Cap_N(E(A), E(A^c)) from above.
inline TestFunctionBound test_function_bound(const Model& m, int ellN, std::span<const int> A, double eps) {
    const auto& space = *m.space;
    const int L = space.sites();
    const auto Ac = complement_sites(L, A);
    const auto d = enlarged_wells(space, ellN);
    const auto tf = build_test_functions(space, eps);
    TestFunctionBound out;
    out.c_eps = tf.c_eps;
    out.F.assign(space.size(), 0.0);
    for (int x : A)
        for (std::size_t i = 0; i < space.size(); ++i) out.F[i] += tf.F[static_cast<std::size_t>(x)][i];
    const auto dA = d.union_of(A), dAc = d.union_of(Ac);
    for (auto i : dA) {
        if (std::abs(out.F[i] - 1.0) > 1e-15) ++out.pinned_changes;
        out.F[i] = 1.0;
    }
    for (auto i : dAc) {
        if (std::abs(out.F[i]) > 1e-15) ++out.pinned_changes;
        out.F[i] = 0.0;
    }
    out.bound = sup_functional(m, out.F, {free_constant(dA), free_constant(dAc)}).value;
    out.scaled_bound = std::pow(static_cast<double>(space.particles()), 1.0 + space.alpha()) * out.bound;
    return out;
}

struct FamilyScan {
    double beta = 0.0;
    double value = 0.0;
};

/// Minimizes G^{x,y}(F_x + beta F_y) over beta in [0,1] by golden-section
/// search. The family is pinned to 1, beta, 0 on E^x, E^y and the other wells.
inline FamilyScan mean_rate_family_scan(const Model& m, const WellPartition& w, int x, int y, double eps,
                                        double tol = 1e-5) {
    const auto& space = *m.space;
    const int L = w.sites();
    const auto tf = build_test_functions(space, eps);
    auto eval = [&](double beta) {
        std::vector<double> f(space.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = tf.F[static_cast<std::size_t>(x)][i] + beta * tf.F[static_cast<std::size_t>(y)][i];
        for (int z = 0; z < L; ++z) {
            const double v = z == x ? 1.0 : (z == y ? beta : 0.0);
            for (auto i : w.wells[static_cast<std::size_t>(z)]) f[i] = v;
        }
        return mean_rate_functional(m, w, x, y, f);
    };
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = 1.0;
    double c = b - phi * (b - a), dd = a + phi * (b - a);
    double fc = eval(c), fd = eval(dd);
    while (b - a > tol) {
        if (fc < fd) {
            b = dd;
            dd = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = dd;
            fc = fd;
            dd = a + phi * (b - a);
            fd = eval(dd);
        }
    }
    const double beta = 0.5 * (a + b);
    return {beta, eval(beta)};
}

}  // namespace zrp
