#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

#include "zrp/errors.hpp"

namespace zrp::numerics {

/// Compensated (Neumaier) accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

/// Number of compositions of n into k non-negative parts, C(n+k-1, k-1).
/// Saturates at UINT64_MAX.
inline std::uint64_t compositions_count(std::uint64_t n, std::uint64_t k) noexcept {
    if (k == 0) return n == 0 ? 1 : 0;
    unsigned __int128 c = 1;
    constexpr auto cap = static_cast<unsigned __int128>(std::numeric_limits<std::uint64_t>::max());
    for (std::uint64_t i = 1; i < k; ++i) {
        c = c * (n + i) / i;  // exact: c == C(n+i, i) after this step
        if (c > cap) return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(c);
}

/// Series sum_{j>=0} 1/a(j) with a(0)=1, a(j)=j^alpha, i.e. 1 + zeta(alpha).
///
/// Sums j = M..1 (smallest terms first) with M = 10^6, or fewer terms once
/// they drop below 1e-18, then adds the integral tail with Euler-Maclaurin
/// corrections. Absolute error is far below 1e-12 for every alpha > 1.
inline double gamma_series(double alpha) {
    if (!(alpha > 1.0))
        throw DivergenceError("sum_j 1/a(j) diverges for alpha <= 1 (alpha = " +
                              std::to_string(alpha) + ")");
    constexpr double max_terms = 1.0e6;
    const double cutoff = std::ceil(std::pow(10.0, 18.0 / alpha)) + 1.0;
    const auto m = static_cast<std::int64_t>(std::min(max_terms, cutoff));
    CompensatedSum s;
    for (std::int64_t j = m; j >= 1; --j) s.add(std::pow(static_cast<double>(j), -alpha));
    const double md = static_cast<double>(m);
    const double fm = std::pow(md, -alpha);
    const double tail = md * fm / (alpha - 1.0) - 0.5 * fm + alpha * fm / (12.0 * md) -
                        alpha * (alpha + 1.0) * (alpha + 2.0) * fm / (720.0 * md * md * md);
    s.add(tail);
    s.add(1.0);  // j = 0, a(0) = 1
    return s.value();
}

namespace detail {

struct GaussLegendre20 {
    std::array<double, 20> nodes{};
    std::array<double, 20> weights{};

    GaussLegendre20() {
        constexpr int n = 20;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) {
                    nodes[i] = x;
                    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
                    break;
                }
            }
        }
    }
};

inline const GaussLegendre20& gauss_legendre() {
    static const GaussLegendre20 rule;
    return rule;
}

template <class F>
double gl_panel(F&& f, double a, double b) {
    const auto& r = gauss_legendre();
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    return half * s;
}

// Integral of u^alpha (1-u)^alpha over [0, t] for t <= 1/2, on panels
// geometrically graded toward the endpoint singularity at 0.
inline double beta_kernel_lower(double alpha, double t) {
    if (t <= 0.0) return 0.0;
    auto f = [alpha](double u) { return std::pow(u, alpha) * std::pow(1.0 - u, alpha); };
    double s = 0.0;
    double hi = t;
    for (int k = 0; k < 60; ++k) {
        const double lo = 0.5 * hi;
        s += gl_panel(f, lo, hi);
        hi = lo;
    }
    s += gl_panel(f, 0.0, hi);
    return s;
}

}  // namespace detail

/// Incomplete integral int_0^t u^alpha (1-u)^alpha du, by graded Gauss-Legendre
/// quadrature and the u <-> 1-u symmetry of the integrand.
inline double beta_kernel_integral(double alpha, double t) {
    if (!(alpha > 0.0)) throw DomainError("beta kernel requires alpha > 0");
    if (t <= 0.0) return 0.0;
    if (t > 1.0) t = 1.0;
    if (t <= 0.5) return detail::beta_kernel_lower(alpha, t);
    const double half = detail::beta_kernel_lower(alpha, 0.5);
    return 2.0 * half - detail::beta_kernel_lower(alpha, 1.0 - t);
}

}  // namespace zrp::numerics
