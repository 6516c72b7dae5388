#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zrp/config_space.hpp"
#include "zrp/errors.hpp"
#include "zrp/generator.hpp"
#include "zrp/linear_solve.hpp"

namespace zrp {

using StateSet = std::vector<std::size_t>;

/// A set of states on which a function is pinned to `value`, or, when
/// `value` is empty, required to be constant with the constant left free.
struct SetConstraint {
    StateSet states;
    std::optional<double> value;
};

inline SetConstraint fixed(StateSet s, double v) { return {std::move(s), v}; }
inline SetConstraint free_constant(StateSet s) { return {std::move(s), std::nullopt}; }

namespace detail {

inline void check_set(const StateSpace& space, const StateSet& s, const char* name) {
    if (s.empty()) throw DomainError(std::string(name) + " must be nonempty");
    for (auto i : s)
        if (i >= space.size()) throw DomainError(std::string(name) + " contains an invalid ordinal");
}

inline std::vector<char> membership(std::size_t n, const StateSet& s) {
    std::vector<char> m(n, 0);
    for (auto i : s) m[i] = 1;
    return m;
}

inline void check_disjoint(std::size_t n, const StateSet& a, const StateSet& b) {
    const auto ma = membership(n, a);
    for (auto i : b)
        if (ma[i]) throw DomainError("sets must be disjoint");
}

// Variable layout for a function restricted by set constraints: every state
// maps either to an unknown (free state, or one unknown per free-constant
// set) or to a fixed value.
struct Reduction {
    std::vector<int> var;           // per state; -1 when fixed
    std::vector<double> fixed_val;  // per state; meaningful when var < 0
    int unknowns = 0;

    std::vector<double> expand(const linalg::Vector& x) const {
        std::vector<double> f(var.size());
        for (std::size_t i = 0; i < var.size(); ++i)
            f[i] = var[i] >= 0 ? x[var[i]] : fixed_val[i];
        return f;
    }
};

inline Reduction reduce(std::size_t n, const std::vector<SetConstraint>& cs) {
    Reduction r;
    r.var.assign(n, -2);
    r.fixed_val.assign(n, 0.0);
    for (const auto& c : cs) {
        if (c.states.empty()) throw DomainError("constraint set must be nonempty");
        const int v = c.value ? -1 : r.unknowns++;
        for (auto i : c.states) {
            if (i >= n) throw DomainError("constraint set contains an invalid ordinal");
            if (r.var[i] != -2) throw DomainError("constraint sets must be pairwise disjoint");
            r.var[i] = v;
            if (c.value) r.fixed_val[i] = *c.value;
        }
    }
    for (auto& v : r.var)
        if (v == -2) v = r.unknowns++;
    return r;
}

// With no pinned set the quadratic problems are invariant under additive
// constants. The gauge is fixed by pinning the first constraint set (or, with
// no constraints, state 0) at zero.
inline std::vector<SetConstraint> with_gauge(std::vector<SetConstraint> cs) {
    const bool any_fixed = std::any_of(cs.begin(), cs.end(), [](const auto& c) { return c.value.has_value(); });
    if (any_fixed) return cs;
    if (cs.empty())
        cs.push_back(fixed({0}, 0.0));
    else
        cs.front().value = 0.0;
    return cs;
}

// Reduced matrix of the form H -> <H, (-S) H>_{mu_N} and the linear term it
// contributes through pinned values.
struct ReducedForm {
    std::vector<linalg::Triplet> q;
    linalg::Vector d;
};

inline ReducedForm reduced_dirichlet(const Model& m, const Reduction& r) {
    const auto& sym = m.symmetric;
    const auto& space = *m.space;
    ReducedForm out;
    out.d = linalg::Vector::Zero(r.unknowns);
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto t = sym.targets(i);
        auto rates = sym.rates(i);
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double c = 0.5 * space.mu(i) * rates[k];
            const int p = r.var[i], q = r.var[t[k]];
            if (p >= 0 && q >= 0) {
                if (p == q) continue;
                out.q.emplace_back(p, p, c);
                out.q.emplace_back(q, q, c);
                out.q.emplace_back(p, q, -c);
                out.q.emplace_back(q, p, -c);
            } else if (p >= 0) {
                out.q.emplace_back(p, p, c);
                out.d[p] += c * r.fixed_val[t[k]];
            } else if (q >= 0) {
                out.q.emplace_back(q, q, c);
                out.d[q] += c * r.fixed_val[i];
            }
        }
    }
    return out;
}

}  // namespace detail

/// Solution of the Dirichlet problem op V = 0 off A u B, V = 1 on A, V = 0 on B.
struct HarmonicSolution {
    std::vector<double> values;
    double residual = 0.0;  // max |(op V)(eta)| over eta outside A u B
    bool direct = true;
};

inline HarmonicSolution solve_harmonic(const RateOperator& op, const StateSet& A, const StateSet& B) {
    const auto& space = op.space();
    detail::check_set(space, A, "A");
    detail::check_set(space, B, "B");
    detail::check_disjoint(space.size(), A, B);
    const std::size_t n = space.size();
    std::vector<int> var(n, -1);
    std::vector<double> boundary(n, 0.0);
    for (auto i : A) boundary[i] = 1.0, var[i] = -2;
    for (auto i : B) var[i] = -2;
    int unknowns = 0;
    for (auto& v : var) v = (v == -2) ? -1 : unknowns++;

    std::vector<linalg::Triplet> t;
    t.reserve(static_cast<std::size_t>(unknowns) * 4);
    linalg::Vector rhs = linalg::Vector::Zero(unknowns);
    for (std::size_t i = 0; i < n; ++i) {
        const int p = var[i];
        if (p < 0) continue;
        t.emplace_back(p, p, -op.diagonal(i));
        auto tg = op.targets(i);
        auto rt = op.rates(i);
        for (std::size_t k = 0; k < tg.size(); ++k) {
            const int q = var[tg[k]];
            if (q >= 0)
                t.emplace_back(p, q, -rt[k]);
            else
                rhs[p] += rt[k] * boundary[tg[k]];
        }
    }
    HarmonicSolution sol;
    sol.values = boundary;
    if (unknowns > 0) {
        const linalg::Solver solver(linalg::from_triplets(unknowns, unknowns, t), linalg::Structure::general);
        sol.direct = solver.direct();
        const linalg::Vector x = solver.solve(rhs);
        for (std::size_t i = 0; i < n; ++i)
            if (var[i] >= 0) sol.values[i] = x[var[i]];
        const auto lv = op.apply(sol.values);
        for (std::size_t i = 0; i < n; ++i)
            if (var[i] >= 0) sol.residual = std::max(sol.residual, std::abs(lv[i]));
    }
    return sol;
}

/// Equilibrium potential V_{A,B} = P[H_A < H_B] for the forward or adjoint
/// chain (or the symmetrized chain).
inline HarmonicSolution equilibrium_potential(const Model& m, OperatorKind kind, const StateSet& A,
                                              const StateSet& B) {
    return solve_harmonic(m.op(kind), A, B);
}

struct PotentialSolution {
    StateSet A, B;
    std::vector<double> V;
    std::vector<double> Vstar;
    double residual = 0.0;
    double residual_star = 0.0;
};

inline PotentialSolution potentials(const Model& m, const StateSet& A, const StateSet& B) {
    auto v = equilibrium_potential(m, OperatorKind::forward, A, B);
    auto vs = equilibrium_potential(m, OperatorKind::adjoint, A, B);
    return {A, B, std::move(v.values), std::move(vs.values), v.residual, vs.residual};
}

/// Capacity of the reversible chain generated by S (Dirichlet principle).
inline double capacity_sym(const Model& m, const StateSet& A, const StateSet& B) {
    const auto vs = equilibrium_potential(m, OperatorKind::symmetric, A, B);
    return dirichlet_form(*m.space, vs.values);
}

struct SupResult {
    double value = 0.0;
    std::vector<double> H;
};

/// sup_H { 2 <L* F, H>_{mu_N} - <H, (-S) H>_{mu_N} } over H obeying the set
/// constraints (pinned values or free constants on each set, unconstrained
/// elsewhere). Each free-constant set is glued to one unknown; the maximizer
/// solves the reduced system Q_red h = b_red. If nothing is pinned, the first
/// set (or state 0) is pinned at 0; the objective is invariant under constant
/// shifts of H, so the value is unaffected.
inline SupResult sup_functional(const Model& m, std::span<const double> F,
                                std::vector<SetConstraint> constraints) {
    const auto& space = *m.space;
    if (F.size() != space.size()) throw DomainError("sup_functional: dimension mismatch");
    const auto r = detail::reduce(space.size(), detail::with_gauge(std::move(constraints)));
    auto form = detail::reduced_dirichlet(m, r);

    const auto lsf = m.adjoint.apply(F);
    linalg::Vector b = form.d;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (r.var[i] >= 0) b[r.var[i]] += space.mu(i) * lsf[i];

    SupResult out;
    if (r.unknowns > 0) {
        const linalg::Solver solver(linalg::from_triplets(r.unknowns, r.unknowns, form.q), linalg::Structure::spd);
        out.H = r.expand(solver.solve(b));
    } else {
        out.H = r.expand(linalg::Vector());
    }
    out.value = 2.0 * inner(space, lsf, out.H) - quadratic_form(m.symmetric, out.H);
    return out;
}

struct SaddleResult {
    double value = 0.0;
    std::vector<double> F;
    std::vector<double> H;
};

/// inf_F sup_H { 2 <L* F, H> - <H, (-S) H> } with set constraints on both F
/// and H, solved jointly. The inner maximizer satisfies Q h = K f + c_h and
/// stationarity in F gives K^T h = c_f, one sparse saddle-point system.
inline SaddleResult infsup_saddle(const Model& m, const std::vector<SetConstraint>& f_constraints,
                                  std::vector<SetConstraint> h_constraints) {
    const auto& space = *m.space;
    const auto& adj = m.adjoint;
    const auto rf = detail::reduce(space.size(), f_constraints);
    const auto rh = detail::reduce(space.size(), detail::with_gauge(std::move(h_constraints)));
    auto form = detail::reduced_dirichlet(m, rh);

    const int nh = rh.unknowns, nf = rf.unknowns;
    std::vector<linalg::Triplet> t = std::move(form.q);
    linalg::Vector rhs = linalg::Vector::Zero(nh + nf);
    rhs.head(nh) = form.d;

    // B = mu * L* as a matrix, B[eta, zeta].
    auto visit_row = [&](std::size_t i, auto&& fn) {
        fn(i, space.mu(i) * adj.diagonal(i));
        auto tg = adj.targets(i);
        auto rt = adj.rates(i);
        for (std::size_t k = 0; k < tg.size(); ++k) fn(tg[k], space.mu(i) * rt[k]);
    };
    for (std::size_t i = 0; i < space.size(); ++i) {
        const int p = rh.var[i];
        visit_row(i, [&](std::size_t j, double beta) {
            const int q = rf.var[j];
            if (p >= 0 && q >= 0) {
                t.emplace_back(p, nh + q, -beta);  // -K
                t.emplace_back(nh + q, p, beta);   // K^T
            } else if (p >= 0) {
                rhs[p] += beta * rf.fixed_val[j];
            } else if (q >= 0) {
                rhs[nh + q] -= beta * rh.fixed_val[i];
            }
        });
    }
    SaddleResult out;
    const int n = nh + nf;
    linalg::Vector sol = linalg::Vector::Zero(n);
    if (n > 0) {
        const linalg::Solver solver(linalg::from_triplets(n, n, t), linalg::Structure::general);
        sol = solver.solve(rhs);
    }
    out.H = rh.expand(sol.head(nh));
    out.F = rf.expand(sol.tail(nf));
    const auto lsf = adj.apply(out.F);
    out.value = 2.0 * inner(space, lsf, out.H) - quadratic_form(m.symmetric, out.H);
    return out;
}

struct CapacityResiduals {
    double harmonic_forward = 0.0;
    double harmonic_adjoint = 0.0;
    double infsup_gap = 0.0;   // |cap - value_infsup| / cap
    double adjoint_gap = 0.0;  // |D(V*) - D(V)| / cap
};

struct CapacityReport {
    double cap = 0.0;
    double cap_sym = 0.0;
    double value_infsup = 0.0;
    double cap_adjoint = 0.0;
    bool sandwich_ok = false;
    bool infsup_ok = false;
    CapacityResiduals residuals;
    PotentialSolution potentials;
};

inline constexpr double kInfsupTolerance = 1e-8;

/// Non-reversible capacity Cap_N(A,B) = D_N(V_{A,B}), with the symmetric
/// capacity and the inf-sup value at F = (V + V*)/2 as certificates.
inline CapacityReport capacity(const Model& m, const StateSet& A, const StateSet& B, bool with_infsup = true) {
    const int L = m.space->sites();
    CapacityReport rep;
    rep.potentials = potentials(m, A, B);
    const auto& ps = rep.potentials;
    rep.cap = dirichlet_form(*m.space, ps.V);
    rep.cap_adjoint = dirichlet_form(*m.space, ps.Vstar);
    rep.cap_sym = capacity_sym(m, A, B);
    rep.residuals.harmonic_forward = ps.residual;
    rep.residuals.harmonic_adjoint = ps.residual_star;
    rep.residuals.adjoint_gap = std::abs(rep.cap_adjoint - rep.cap) / rep.cap;
    constexpr double slack = 1e-10;
    rep.sandwich_ok = rep.cap_sym <= rep.cap * (1 + slack) && rep.cap <= 4.0 * L * L * rep.cap_sym * (1 + slack);
    if (with_infsup) {
        std::vector<double> F(ps.V.size());
        for (std::size_t i = 0; i < F.size(); ++i) F[i] = 0.5 * (ps.V[i] + ps.Vstar[i]);
        rep.value_infsup = sup_functional(m, F, {free_constant(A), free_constant(B)}).value;
        rep.residuals.infsup_gap = std::abs(rep.cap - rep.value_infsup) / rep.cap;
        rep.infsup_ok = rep.residuals.infsup_gap <= kInfsupTolerance;
    }
    return rep;
}

/// G^{x,y}(f): sup over h constant on E^x and on E^y, zero on the other wells.
inline double mean_rate_functional(const Model& m, const WellPartition& w, int x, int y,
                                   std::span<const double> f) {
    const int L = w.sites();
    if (x == y || x < 0 || y < 0 || x >= L || y >= L) throw DomainError("mean_rate_functional: need x != y");
    if (f.size() != m.space->size()) throw DomainError("mean_rate_functional: dimension mismatch");
    constexpr double tol = 1e-12;
    for (auto i : w.wells[static_cast<std::size_t>(x)])
        if (std::abs(f[i] - 1.0) > tol) throw DomainError("f must equal 1 on E^x");
    const auto& wy = w.wells[static_cast<std::size_t>(y)];
    for (auto i : wy)
        if (std::abs(f[i] - f[wy.front()]) > tol) throw DomainError("f must be constant on E^y");
    std::vector<SetConstraint> cs{free_constant(w.wells[static_cast<std::size_t>(x)]), free_constant(wy)};
    StateSet rest;
    for (int z = 0; z < L; ++z) {
        if (z == x || z == y) continue;
        for (auto i : w.wells[static_cast<std::size_t>(z)]) {
            if (std::abs(f[i]) > tol) throw DomainError("f must vanish on the wells other than x and y");
            rest.push_back(i);
        }
    }
    if (!rest.empty()) cs.push_back(fixed(rest, 0.0));
    return sup_functional(m, f, std::move(cs)).value;
}

struct MeanRateInfimum {
    double value = 0.0;
    double beta = 0.0;  // optimal constant value of f on E^y
    std::vector<double> f;
};

/// inf_f G^{x,y}(f) over f = 1 on E^x, 0 on the other wells, constant on E^y.
inline MeanRateInfimum mean_rate_infimum(const Model& m, const WellPartition& w, int x, int y) {
    const int L = w.sites();
    if (x == y || x < 0 || y < 0 || x >= L || y >= L) throw DomainError("mean_rate_infimum: need x != y");
    StateSet rest;
    for (int z = 0; z < L; ++z)
        if (z != x && z != y)
            rest.insert(rest.end(), w.wells[static_cast<std::size_t>(z)].begin(), w.wells[static_cast<std::size_t>(z)].end());
    const auto& ex = w.wells[static_cast<std::size_t>(x)];
    const auto& ey = w.wells[static_cast<std::size_t>(y)];
    std::vector<SetConstraint> fc{fixed(ex, 1.0), free_constant(ey)};
    std::vector<SetConstraint> hc{free_constant(ex), free_constant(ey)};
    if (!rest.empty()) {
        fc.push_back(fixed(rest, 0.0));
        hc.push_back(fixed(rest, 0.0));
    }
    auto s = infsup_saddle(m, fc, std::move(hc));
    return {s.value, s.F[ey.front()], std::move(s.F)};
}

struct MonotonicityResult {
    double cap_inner = 0.0;
    double cap_outer = 0.0;
    bool holds = false;
};

/// Checks Cap(A,B) <= Cap(A',B') for A subset A', B subset B'.
inline MonotonicityResult monotonicity_check(const Model& m, const StateSet& A, const StateSet& A2,
                                             const StateSet& B, const StateSet& B2) {
    const std::size_t n = m.space->size();
    const auto ma2 = detail::membership(n, A2), mb2 = detail::membership(n, B2);
    for (auto i : A)
        if (i >= n || !ma2[i]) throw DomainError("monotonicity_check: A is not contained in A'");
    for (auto i : B)
        if (i >= n || !mb2[i]) throw DomainError("monotonicity_check: B is not contained in B'");
    detail::check_disjoint(n, A2, B2);
    MonotonicityResult r;
    r.cap_inner = dirichlet_form(*m.space, equilibrium_potential(m, OperatorKind::forward, A, B).values);
    r.cap_outer = dirichlet_form(*m.space, equilibrium_potential(m, OperatorKind::forward, A2, B2).values);
    r.holds = r.cap_inner <= r.cap_outer * (1.0 + 1e-10);
    return r;
}

}  // namespace zrp
