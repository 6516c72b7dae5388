#pragma once

#include <cmath>
#include <memory>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "zrp/config_space.hpp"
#include "zrp/errors.hpp"
#include "zrp/numerics.hpp"

namespace zrp {

/// g(0) = 0, g(k) = a(k)/a(k-1), so g(1) = 1 and g(k) = (k/(k-1))^alpha.
inline double jump_rate(int k, double alpha) {
    if (k < 0) throw DomainError("jump_rate: negative occupation");
    if (k == 0) return 0.0;
    if (k == 1) return 1.0;
    return std::pow(static_cast<double>(k) / static_cast<double>(k - 1), alpha);
}

/// Table of g(0..N).
inline std::vector<double> jump_rate_table(int N, double alpha) {
    std::vector<double> g(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k) g[static_cast<std::size_t>(k)] = jump_rate(k, alpha);
    return g;
}

enum class OperatorKind { forward, adjoint, symmetric };

inline std::string_view to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::forward: return "forward";
        case OperatorKind::adjoint: return "adjoint";
        case OperatorKind::symmetric: return "symmetric";
    }
    return "?";
}

/// Sparse generator on functions over E_N: (LF)(eta) = sum_xi r(eta,xi) [F(xi) - F(eta)].
///
/// Off-diagonal rates are stored row-wise (at most 2L per row); the diagonal
/// is -sum_xi r(eta,xi).
class RateOperator {
public:
    OperatorKind kind() const noexcept { return kind_; }
    const StateSpace& space() const noexcept { return *space_; }
    std::size_t size() const noexcept { return diag_.size(); }

    std::span<const std::size_t> targets(std::size_t row) const {
        return {col_.data() + row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]};
    }
    std::span<const double> rates(std::size_t row) const {
        return {rate_.data() + row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]};
    }
    double diagonal(std::size_t row) const { return diag_[row]; }
    std::size_t nonzeros() const noexcept { return col_.size(); }

    /// (op F)(eta), evaluated as sum of rate * difference.
    std::vector<double> apply(std::span<const double> f) const {
        if (f.size() != size()) throw DomainError("apply: dimension mismatch");
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            double s = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                s += rate_[k] * (f[col_[k]] - f[i]);
            out[i] = s;
        }
        return out;
    }

    friend RateOperator build(std::shared_ptr<const StateSpace> space, OperatorKind kind);

private:
    OperatorKind kind_ = OperatorKind::forward;
    std::shared_ptr<const StateSpace> space_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_;
    std::vector<double> rate_;
    std::vector<double> diag_;
};

inline RateOperator build(std::shared_ptr<const StateSpace> space, OperatorKind kind) {
    const StateSpace& s = *space;
    const int L = s.sites();
    const auto g = jump_rate_table(s.particles(), s.alpha());
    RateOperator op;
    op.kind_ = kind;
    op.space_ = std::move(space);
    op.col_.reserve(s.size() * static_cast<std::size_t>(L) * (kind == OperatorKind::symmetric ? 2 : 1));
    op.rate_.reserve(op.col_.capacity());
    op.row_ptr_.reserve(s.size() + 1);
    op.diag_.reserve(s.size());

    std::vector<int> work(static_cast<std::size_t>(L));
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto occ = s.occupations(i);
        row.clear();
        auto add_move = [&](int from, int to, double r) {
            std::copy(occ.begin(), occ.end(), work.begin());
            --work[static_cast<std::size_t>(from)];
            ++work[static_cast<std::size_t>(to)];
            const std::size_t j = s.index_of(work);
            for (auto& e : row)
                if (e.first == j) {
                    e.second += r;
                    return;
                }
            row.emplace_back(j, r);
        };
        for (int x = 0; x < L; ++x) {
            const int n = occ[static_cast<std::size_t>(x)];
            if (n == 0) continue;
            const double r = g[static_cast<std::size_t>(n)];
            switch (kind) {
                case OperatorKind::forward: add_move(x, torus_mod(x + 1, L), r); break;
                case OperatorKind::adjoint: add_move(x, torus_mod(x - 1, L), r); break;
                case OperatorKind::symmetric:
                    add_move(x, torus_mod(x + 1, L), 0.5 * r);
                    add_move(x, torus_mod(x - 1, L), 0.5 * r);
                    break;
            }
        }
        std::sort(row.begin(), row.end());
        double total = 0.0;
        for (auto [j, r] : row) {
            op.col_.push_back(j);
            op.rate_.push_back(r);
            total += r;
        }
        op.row_ptr_.push_back(op.col_.size());
        op.diag_.push_back(-total);
    }
    return op;
}

/// The three generators on one shared state space.
struct Model {
    std::shared_ptr<const StateSpace> space;
    RateOperator forward;
    RateOperator adjoint;
    RateOperator symmetric;

    explicit Model(StateSpace s)
        : space(std::make_shared<const StateSpace>(std::move(s))),
          forward(build(space, OperatorKind::forward)),
          adjoint(build(space, OperatorKind::adjoint)),
          symmetric(build(space, OperatorKind::symmetric)) {}

    const RateOperator& op(OperatorKind k) const {
        switch (k) {
            case OperatorKind::forward: return forward;
            case OperatorKind::adjoint: return adjoint;
            case OperatorKind::symmetric: return symmetric;
        }
        return forward;
    }
};

/// <F,G> in L^2(mu_N).
inline double inner(const StateSpace& space, std::span<const double> f, std::span<const double> g) {
    if (f.size() != space.size() || g.size() != space.size()) throw DomainError("inner: dimension mismatch");
    numerics::CompensatedSum s;
    for (std::size_t i = 0; i < f.size(); ++i) s.add(space.mu(i) * f[i] * g[i]);
    return s.value();
}

/// <F, (-op) F>_{mu_N}.
inline double quadratic_form(const RateOperator& op, std::span<const double> f) {
    const auto lf = op.apply(f);
    return -inner(op.space(), f, lf);
}

/// D_N(F) = (1/2) sum_eta mu(eta) sum_x g(eta_x) {F(sigma^{x,x+1} eta) - F(eta)}^2,
/// evaluated bond by bond from the configurations.
inline double dirichlet_form(const StateSpace& space, std::span<const double> f) {
    if (f.size() != space.size()) throw DomainError("dirichlet_form: dimension mismatch");
    const int L = space.sites();
    const auto g = jump_rate_table(space.particles(), space.alpha());
    std::vector<int> work(static_cast<std::size_t>(L));
    numerics::CompensatedSum s;
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto occ = space.occupations(i);
        for (int x = 0; x < L; ++x) {
            const int n = occ[static_cast<std::size_t>(x)];
            if (n == 0) continue;
            std::copy(occ.begin(), occ.end(), work.begin());
            --work[static_cast<std::size_t>(x)];
            ++work[static_cast<std::size_t>(torus_mod(x + 1, L))];
            const double d = f[space.index_of(work)] - f[i];
            s.add(space.mu(i) * g[static_cast<std::size_t>(n)] * d * d);
        }
    }
    return 0.5 * s.value();
}

/// The cycle generator L_xi for xi in E_{N-1}: it touches the L states xi + d_z.
struct CycleGenerator {
    Configuration xi;
    std::vector<std::size_t> touched;  // touched[z] = ordinal of xi + d_z
};

inline CycleGenerator cycle_generator(const StateSpace& space, const Configuration& xi) {
    if (xi.sites() != space.sites() || xi.total() != space.particles() - 1)
        throw DomainError("cycle generator needs xi in E_{N-1}");
    CycleGenerator c;
    c.xi = xi;
    Configuration eta = xi;
    for (int z = 0; z < space.sites(); ++z) {
        ++eta[z];
        c.touched.push_back(space.index_of(eta));
        --eta[z];
    }
    return c;
}

/// All cycle generators, xi ranging over E_{N-1} in lexicographic order.
inline std::vector<CycleGenerator> cycle_decomposition(const StateSpace& space) {
    std::vector<CycleGenerator> out;
    for_each_composition(space.sites(), space.particles() - 1, [&](std::span<const int> occ) {
        out.push_back(cycle_generator(space, Configuration(std::vector<int>(occ.begin(), occ.end()))));
    });
    return out;
}

/// D_xi(F) = (N^alpha / 2 Z_N) (1/a(xi)) sum_x {F(xi + d_{x+1}) - F(xi + d_x)}^2.
inline double cycle_form(const StateSpace& space, const Configuration& xi, std::span<const double> f) {
    if (f.size() != space.size()) throw DomainError("cycle_form: dimension mismatch");
    const auto c = cycle_generator(space, xi);
    const int L = space.sites();
    double inv_a = 1.0;
    for (int x = 0; x < L; ++x) inv_a /= occupancy_weight_a(xi[x], space.alpha());
    double s = 0.0;
    for (int x = 0; x < L; ++x) {
        const double d = f[c.touched[static_cast<std::size_t>(torus_mod(x + 1, L))]] -
                         f[c.touched[static_cast<std::size_t>(x)]];
        s += d * d;
    }
    return 0.5 * inv_a / space.weight_total() * s;
}

/// <L F, H>^2 / (D_N(F) D_N(H)); the sector condition bounds this by 4 L^2.
inline double sector_ratio(const Model& m, std::span<const double> f, std::span<const double> h) {
    const auto lf = m.forward.apply(f);
    const double c = inner(*m.space, lf, h);
    return c * c / (dirichlet_form(*m.space, f) * dirichlet_form(*m.space, h));
}

/// Coordinate-format dump "row,col,rate" including the diagonal.
inline void write_operator_csv(std::ostream& os, const RateOperator& op) {
    os << "row,col,rate\n";
    os.precision(17);
    for (std::size_t i = 0; i < op.size(); ++i) {
        auto t = op.targets(i);
        auto r = op.rates(i);
        bool diag_done = false;
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (!diag_done && t[k] > i) {
                os << i << ',' << i << ',' << op.diagonal(i) << '\n';
                diag_done = true;
            }
            os << i << ',' << t[k] << ',' << r[k] << '\n';
        }
        if (!diag_done) os << i << ',' << i << ',' << op.diagonal(i) << '\n';
    }
}

}  // namespace zrp
