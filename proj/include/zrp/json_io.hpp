#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "zrp/config_space.hpp"
#include "zrp/metastability.hpp"
#include "zrp/potential.hpp"
#include "zrp/simulate.hpp"

namespace zrp::io {

using nlohmann::json;

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const LimitConstants& c) {
    json j{{"schema", "zrp.constants/1"}, {"alpha", c.alpha}, {"i_alpha", c.i_alpha},
           {"gamma_alpha", optional_number(c.gamma_alpha)}, {"hop_rate", optional_number(c.hop_rate)}};
    if (!c.gamma_alpha) j["gamma_error"] = c.gamma_error;
    return j;
}

inline json to_json(const StateSpace& s) {
    return {{"L", s.sites()}, {"N", s.particles()}, {"alpha", s.alpha()}, {"states", s.size()},
            {"Z", s.Z()}, {"weight_total", s.weight_total()}};
}

inline json to_json(const CapacityReport& r) {
    return {{"cap", r.cap},
            {"cap_sym", r.cap_sym},
            {"cap_adjoint", r.cap_adjoint},
            {"value_infsup", r.value_infsup},
            {"sandwich_ok", r.sandwich_ok},
            {"infsup_ok", r.infsup_ok},
            {"residuals",
             {{"harmonic_forward", r.residuals.harmonic_forward},
              {"harmonic_adjoint", r.residuals.harmonic_adjoint},
              {"infsup_gap", r.residuals.infsup_gap},
              {"adjoint_gap", r.residuals.adjoint_gap}}}};
}

inline json to_json(const TraceRateTable& t) {
    return {{"rates", t.rates}, {"exit_rates", t.exit_rates}, {"well_masses", t.well_masses},
            {"rotation_defect", t.rotation_defect()}};
}

inline json to_json(const HConditions& h) {
    json h1 = json::array();
    for (const auto& d : h.h1)
        h1.push_back({{"site", d.site},
                      {"exact_scan", d.exact},
                      {"cap_sym_well", d.cap_sym_well},
                      {"worst_state", d.worst_state},
                      {"cap_sym_worst", d.cap_sym_worst},
                      {"mu_worst", d.mu_worst},
                      {"sandwich_bound", d.sandwich_bound},
                      {"cap_worst", d.cap_worst},
                      {"cap_well", d.cap_well},
                      {"exact_ratio_at_worst", d.exact_ratio_at_worst}});
    return {{"h2_delta_over_well", h.h2},
            {"h1", h1},
            {"h0", {{"scaled_rates", h.h0_scaled}, {"hop_rate", optional_number(h.hop_rate)},
                    {"max_ratio_defect", h.hop_rate ? json(h.h0_max_ratio_defect) : json(nullptr)}}}};
}

inline json to_json(const TraceStatistics& s) {
    json targets = json::object();
    for (std::size_t x = 0; x < s.jumps.size(); ++x)
        for (std::size_t y = 0; y < s.jumps.size(); ++y)
            if (x != y) targets[std::to_string(x) + "->" + std::to_string(y)] = s.jumps[x][y];
    double mean = 0.0;
    for (double h : s.holding_times) mean += h;
    if (!s.holding_times.empty()) mean /= static_cast<double>(s.holding_times.size());
    return {{"scale", s.scale},
            {"transitions", s.transitions},
            {"empty", s.empty},
            {"holding_times", s.holding_times},
            {"mean_holding_time", s.holding_times.empty() ? json(nullptr) : json(mean)},
            {"jump_targets", targets},
            {"displacement_counts", s.displacement_counts},
            {"delta_fraction", s.delta_fraction},
            {"trace_time", s.trace_time},
            {"censored_time", s.censored_time}};
}

inline json to_json(const stats::ChiSquare& c) {
    return {{"statistic", c.statistic}, {"dof", c.dof}, {"p_value", c.p_value}, {"cells", c.cells}};
}

inline json to_json(const M1Result& r) {
    return {{"trials", r.trials}, {"successes", r.successes}, {"fraction", r.fraction},
            {"ci", {r.ci.lo, r.ci.hi}}, {"unresolved", r.unresolved}};
}

}  // namespace zrp::io
