#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "zrp/errors.hpp"

namespace zrp::stats {

/// Upper tail P[chi^2_df >= stat].
inline double chi_square_sf(double stat, double df) {
    if (!(df > 0.0)) throw DomainError("chi-square needs positive degrees of freedom");
    if (stat <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * stat);
}

struct ChiSquare {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int cells = 0;  // after pooling
};

/// Goodness of fit of counts against probabilities. Cells with expected count
/// below min_expected are pooled into one cell; if that cell is still too
/// small it is merged with the smallest remaining cell.
inline ChiSquare goodness_of_fit(std::span<const double> observed, std::span<const double> probs,
                                 double min_expected = 5.0) {
    if (observed.size() != probs.size() || observed.empty()) throw DomainError("observed/probability size mismatch");
    const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
    const double psum = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (n <= 0.0) throw DomainError("no observations");
    std::vector<std::pair<double, double>> cells;  // (observed, expected)
    double pool_o = 0.0, pool_e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = n * probs[i] / psum;
        if (e < min_expected) {
            pool_o += observed[i];
            pool_e += e;
        } else {
            cells.emplace_back(observed[i], e);
        }
    }
    if (pool_e > 0.0) {
        if (pool_e < min_expected && !cells.empty()) {
            auto it = std::min_element(cells.begin(), cells.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
            it->first += pool_o;
            it->second += pool_e;
        } else {
            cells.emplace_back(pool_o, pool_e);
        }
    }
    ChiSquare r;
    r.cells = static_cast<int>(cells.size());
    for (const auto& [o, e] : cells) r.statistic += (o - e) * (o - e) / e;
    r.dof = r.cells - 1;
    r.p_value = r.dof > 0 ? chi_square_sf(r.statistic, r.dof) : 1.0;
    return r;
}

struct Interval {
    double lo = 0.0, hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
    if (trials == 0) return {};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace zrp::stats
