#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "zrp/config_space.hpp"
#include "zrp/dense_oracle.hpp"
#include "zrp/errors.hpp"
#include "zrp/generator.hpp"
#include "zrp/json_io.hpp"
#include "zrp/metastability.hpp"
#include "zrp/potential.hpp"
#include "zrp/simulate.hpp"

namespace zrp::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestSchema = "zrp.manifest/1";

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

/// Well-parameter rules: "sqrt", "pow:<gamma>", "const:<k>", "default".
class EllRule {
public:
    explicit EllRule(const std::string& spec) : spec_(spec) {
        if (spec == "sqrt") {
            fn_ = [](int, int N, double) { return static_cast<int>(std::floor(std::sqrt(static_cast<double>(N)) + 1e-12)); };
        } else if (spec == "default") {
            fn_ = [](int L, int N, double a) { return default_ell(L, N, a); };
        } else if (spec.rfind("pow:", 0) == 0) {
            const double g = parse_number(spec.substr(4));
            if (!(g > 0.0 && g < 1.0)) throw DomainError("pow:<gamma> needs 0 < gamma < 1");
            fn_ = [g](int, int N, double) { return static_cast<int>(std::floor(std::pow(static_cast<double>(N), g) + 1e-12)); };
        } else if (spec.rfind("const:", 0) == 0) {
            const double k = parse_number(spec.substr(6));
            if (k < 1 || k != std::floor(k)) throw DomainError("const:<k> needs a positive integer");
            fn_ = [k](int, int, double) { return static_cast<int>(k); };
        } else {
            throw DomainError("unknown ellN rule '" + spec + "'");
        }
    }
    int operator()(int L, int N, double alpha) const { return std::max(1, fn_(L, N, alpha)); }
    const std::string& spec() const noexcept { return spec_; }

private:
    static double parse_number(const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw DomainError("malformed number '" + s + "' in ellN rule");
        }
        if (used != s.size()) throw DomainError("malformed number '" + s + "' in ellN rule");
        return v;
    }
    std::string spec_;
    std::function<int(int, int, double)> fn_;
};

/// "0,2" -> {0, 2}.
inline std::vector<int> parse_sites(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw DomainError("malformed site list '" + s + "'");
        }
    }
    return out;
}

struct Artifact {
    std::string path;  // empty for the primary stream
    std::string content;
};

struct CommandOutput {
    std::string primary;
    std::vector<Artifact> files;
};

namespace detail {
inline int ell_of(const json& p, int L, int N, double alpha) {
    if (p.contains("ellN") && !p["ellN"].is_null()) return p["ellN"].get<int>();
    return default_ell(L, N, alpha);
}
inline std::uint64_t state_cap(const json& p) { return p.value("state_cap", kDefaultStateCap); }
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::vector<Eigen::Index> oracle_indices(const StateSpace& s, const oracle::DenseChain& d, const StateSet& set) {
    std::vector<Eigen::Index> out;
    for (auto i : set) {
        auto occ = s.occupations(i);
        out.push_back(d.index(std::vector<int>(occ.begin(), occ.end())));
    }
    return out;
}
}  // namespace detail

inline CommandOutput cmd_constants(const json& p) {
    return {detail::dump(io::to_json(limit_constants(p.at("alpha").get<double>()))), {}};
}

inline CommandOutput cmd_space(const json& p) {
    const int L = p.at("L"), N = p.at("N");
    const double alpha = p.at("alpha");
    const auto space = enumerate(L, N, alpha, detail::state_cap(p));
    json j = io::to_json(space);
    j["schema"] = "zrp.space/1";
    j["z_limit"] = alpha > 1.0 ? json(z_limit(L, alpha)) : json(nullptr);
    const int ell = detail::ell_of(p, L, N, alpha);
    j["ellN"] = ell;
    if (2 * ell < N) {
        const auto w = partition_wells(space, ell);
        const auto m = well_mass_report(space, w);
        j["well_masses"] = m.well_masses;
        j["delta_mass"] = m.delta_mass;
        j["delta_states"] = w.delta.size();
    }
    return {detail::dump(j), {}};
}

inline CommandOutput cmd_operator(const json& p) {
    const int L = p.at("L"), N = p.at("N");
    const double alpha = p.at("alpha");
    const std::string kind = p.value("kind", "forward");
    OperatorKind k;
    if (kind == "forward")
        k = OperatorKind::forward;
    else if (kind == "adjoint")
        k = OperatorKind::adjoint;
    else if (kind == "symmetric")
        k = OperatorKind::symmetric;
    else
        throw DomainError("operator kind must be forward, adjoint or symmetric");
    const Model m(enumerate(L, N, alpha, detail::state_cap(p)));
    std::ostringstream os;
    write_operator_csv(os, m.op(k));
    return {os.str(), {}};
}

inline json capacity_json(const json& p) {
    const int L = p.at("L"), N = p.at("N");
    const double alpha = p.at("alpha");
    const auto A = p.at("A").get<std::vector<int>>();
    const auto Ac = complement_sites(L, A);
    const int ell = detail::ell_of(p, L, N, alpha);
    const Model m(enumerate(L, N, alpha, detail::state_cap(p)));
    const auto w = partition_wells(*m.space, ell);
    const auto EA = w.union_of(A), EB = w.union_of(Ac);
    const auto rep = capacity(m, EA, EB, p.value("infsup", true));
    const double scale = std::pow(static_cast<double>(N), 1.0 + alpha);
    json j = io::to_json(rep);
    j["schema"] = "zrp.capacity/1";
    j["space"] = io::to_json(*m.space);
    j["ellN"] = ell;
    j["A"] = A;
    j["B"] = Ac;
    j["scaled_cap"] = scale * rep.cap;
    j["scaled_cap_sym"] = scale * rep.cap_sym;
    if (alpha > 1.0) {
        const double pred = limit_prediction(L, alpha, A);
        j["prediction"] = pred;
        j["ratio"] = scale * rep.cap / pred;
        j["reversible_limit"] = reversible_limit(L, alpha, A);
    } else {
        j["prediction"] = nullptr;
        j["ratio"] = nullptr;
        j["reversible_limit"] = nullptr;
    }
    if (p.value("dense_oracle", false)) {
        if (m.space->size() > 20000) throw DomainError("dense oracle is limited to 20000 states");
        const oracle::DenseChain d(L, N, alpha);
        const double c = d.capacity(detail::oracle_indices(*m.space, d, EA), detail::oracle_indices(*m.space, d, EB));
        const double rel = std::abs(c - rep.cap) / rep.cap;
        j["dense_oracle"] = {{"cap", c}, {"rel_error", rel}, {"ok", rel <= 1e-9}};
    }
    return j;
}

inline CommandOutput cmd_capacity(const json& p) { return {detail::dump(capacity_json(p)), {}}; }

inline CommandOutput cmd_sweep(const json& p) {
    const int L = p.at("L");
    const double alpha = p.at("alpha");
    const EllRule rule(p.value("ell_rule", std::string("default")));
    const auto Ns = p.at("N_list").get<std::vector<int>>();
    const auto A = p.value("A", std::vector<int>{0});
    complement_sites(L, A);
    const double i_alpha = limit_constants(alpha).i_alpha;
    const std::optional<double> pred = alpha > 1.0 ? std::optional(limit_prediction(L, alpha, A)) : std::nullopt;

    struct Row {
        int N = 0;
        int ell = 0;
        std::size_t states = 0;
        double sc = 0, scs = 0;
        bool band = false;
        std::string error;
    };
    std::vector<std::future<Row>> jobs;
    for (int N : Ns) {
        jobs.push_back(std::async(std::launch::async, [&, N] {
            Row r;
            r.N = N;
            try {
                r.ell = rule(L, N, alpha);
                const Model m(enumerate(L, N, alpha, detail::state_cap(p)));
                r.states = m.space->size();
                const auto w = partition_wells(*m.space, r.ell);
                const auto rep = capacity(m, w.union_of(A), w.union_of(complement_sites(L, A)), false);
                const double s = std::pow(static_cast<double>(N), 1.0 + alpha);
                r.sc = s * rep.cap;
                r.scs = s * rep.cap_sym;
                r.band = rep.sandwich_ok;
            } catch (const std::exception& e) {
                r.error = e.what();
                for (auto& ch : r.error)
                    if (ch == ',' || ch == '\n') ch = ';';
            }
            return r;
        }));
    }
    std::ostringstream os;
    os.precision(12);
    os << "N,ellN,states,scaled_cap,scaled_cap_sym,prediction,ratio,ratio_sym,band_ok,discrete_ialpha,i_alpha,error\n";
    std::vector<double> ratios;
    for (auto& j : jobs) {
        const Row r = j.get();
        os << r.N << ',' << r.ell << ',' << r.states << ',';
        if (!r.error.empty()) {
            os << ",,,,,," << (r.N >= 2 ? discrete_ialpha(r.N, alpha) : 0.0) << ',' << i_alpha << ',' << r.error << '\n';
            continue;
        }
        os << r.sc << ',' << r.scs << ',';
        if (pred) {
            os << *pred << ',' << r.sc / *pred << ',' << r.scs / *pred << ',';
            ratios.push_back(r.sc / *pred);
        } else {
            os << ",,,";
        }
        os << (r.band ? "true" : "false") << ',' << discrete_ialpha(r.N, alpha) << ',' << i_alpha << ",\n";
    }
    bool decreasing = ratios.size() >= 2;
    for (std::size_t k = 1; k < ratios.size(); ++k) decreasing = decreasing && ratios[k] < ratios[k - 1];
    os << "# ratio_monotone_decreasing=" << (decreasing ? "true" : "false") << '\n';
    return {os.str(), {}};
}

inline CommandOutput cmd_trace(const json& p) {
    const int L = p.at("L"), N = p.at("N");
    const double alpha = p.at("alpha");
    const int ell = detail::ell_of(p, L, N, alpha);
    const Model m(enumerate(L, N, alpha, detail::state_cap(p)));
    const auto w = partition_wells(*m.space, ell);
    const auto h = h_conditions_report(m, w);
    const double scale = std::pow(static_cast<double>(N), 1.0 + alpha);
    json ident = json::array();
    double worst = 0.0;
    for (int y = 0; y < L; ++y) {
        const double cap = capacity(m, w.wells[static_cast<std::size_t>(y)], w.others(y), false).cap;
        const double lhs = h.rates.exit_rates[static_cast<std::size_t>(y)] * h.rates.well_masses[static_cast<std::size_t>(y)];
        const double rel = std::abs(lhs - cap) / cap;
        worst = std::max(worst, rel);
        ident.push_back({{"well", y}, {"rate_times_mass", lhs}, {"capacity", cap}, {"rel_error", rel}});
    }
    json j{{"schema", "zrp.trace/1"},
           {"space", io::to_json(*m.space)},
           {"ellN", ell},
           {"trace", io::to_json(h.rates)},
           {"scaled_rates", h.h0_scaled},
           {"scale", scale},
           {"rotation_invariant", h.rates.rotation_defect() <= 1e-10},
           {"identity", ident},
           {"identity_ok", worst <= 1e-8},
           {"h_conditions", io::to_json(h)}};
    return {detail::dump(j), {}};
}

inline SimConfig sim_config(const json& p) {
    SimConfig c;
    c.L = p.at("L");
    c.N = p.at("N");
    c.alpha = p.at("alpha");
    c.ellN = detail::ell_of(p, c.L, c.N, c.alpha);
    c.seed = p.value("seed", std::uint64_t{0});
    c.t_max = p.at("tmax");
    c.initial = p.value("initial_well", 0);
    if (p.contains("max_events") && !p["max_events"].is_null()) c.max_events = p["max_events"].get<std::uint64_t>();
    return c;
}

inline CommandOutput cmd_simulate(const json& p) {
    const SimConfig cfg = sim_config(p);
    validate(cfg);
    const std::size_t replicas = p.value("replicas", std::size_t{1});
    if (replicas < 1) throw DomainError("need at least one replica");
    const double spacing = p.value("sample_spacing", 50.0);
    const double scale = std::pow(static_cast<double>(cfg.N), 1.0 + cfg.alpha);
    const auto seeds = replica_seeds(cfg.seed, replicas);

    std::optional<StateSpace> space;
    if (p.value("stationarity", true)) {
        try {
            space = enumerate(cfg.L, cfg.N, cfg.alpha, 200'000);
        } catch (const SizeError&) {
        }
    }
    struct Rep {
        Trajectory traj;
        std::optional<stats::ChiSquare> chi2;
        std::uint64_t samples = 0;
    };
    std::vector<std::future<Rep>> jobs;
    for (auto seed : seeds) {
        SimConfig c = cfg;
        c.seed = seed;
        jobs.push_back(std::async(std::launch::async, [&space, c, spacing] {
            Rep r;
            if (space) {
                auto st = stationarity_test(*space, c, spacing);
                r.traj = std::move(st.trajectory);
                r.chi2 = st.chi2;
                r.samples = st.samples;
            } else {
                r.traj = run(c);
            }
            return r;
        }));
    }
    json reps = json::array();
    CommandOutput out;
    std::size_t k = 0;
    for (auto& job : jobs) {
        const Rep r = job.get();
        json j = io::to_json(trace_statistics(r.traj, cfg.L, scale));
        j["seed"] = seeds[k];
        j["events"] = r.traj.events;
        j["total_time"] = r.traj.total_time;
        if (r.chi2) {
            j["stationarity"] = io::to_json(*r.chi2);
            j["stationarity"]["samples"] = r.samples;
            j["stationarity"]["spacing"] = spacing;
        }
        reps.push_back(std::move(j));
        if (k == 0 && p.contains("trajectory_csv") && !p["trajectory_csv"].is_null()) {
            std::ostringstream os;
            write_segments_csv(os, r.traj);
            out.files.push_back({p["trajectory_csv"].get<std::string>(), os.str()});
        }
        ++k;
    }
    json j{{"schema", "zrp.simulate/1"},
           {"L", cfg.L},
           {"N", cfg.N},
           {"alpha", cfg.alpha},
           {"ellN", cfg.ellN},
           {"scale", scale},
           {"replicas", reps}};
    const auto c = limit_constants(cfg.alpha);
    if (c.hop_rate) {
        j["limit_hop_rate"] = *c.hop_rate;
        j["limit_mean_holding_time"] = 1.0 / ((cfg.L - 1) * *c.hop_rate);
    }
    out.primary = detail::dump(j);
    return out;
}

using Command = CommandOutput (*)(const json&);

inline const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table{
        {"constants", &cmd_constants}, {"capacity", &cmd_capacity}, {"sweep", &cmd_sweep},
        {"trace", &cmd_trace},         {"simulate", &cmd_simulate}, {"space", &cmd_space},
        {"operator", &cmd_operator}};
    return table;
}

inline CommandOutput dispatch(const std::string& name, const json& params) {
    const auto it = commands().find(name);
    if (it == commands().end()) throw DomainError("unknown subcommand '" + name + "'");
    return it->second(params);
}

/// Manifest for one run; outputs list the primary stream first.
inline json manifest(const std::string& name, const json& params, const CommandOutput& out, const std::string& primary_path) {
    json outputs = json::array();
    outputs.push_back({{"path", primary_path.empty() ? json("-") : json(primary_path)}, {"sha256", sha256_hex(out.primary)}});
    for (const auto& f : out.files) outputs.push_back({{"path", f.path}, {"sha256", sha256_hex(f.content)}});
    return {{"schema", kManifestSchema},
            {"subcommand", name},
            {"parameters", params},
            {"seed", params.contains("seed") ? params["seed"] : json(nullptr)},
            {"tool_version", kToolVersion},
            {"outputs", outputs}};
}

struct ReplayResult {
    bool match = true;
    json detail = json::array();
};

/// Re-runs a manifest and compares checksums of every output.
inline ReplayResult replay(const json& m) {
    if (m.value("schema", "") != kManifestSchema) throw DomainError("not a run manifest");
    const auto out = dispatch(m.at("subcommand").get<std::string>(), m.at("parameters"));
    std::vector<std::string> sums{sha256_hex(out.primary)};
    for (const auto& f : out.files) sums.push_back(sha256_hex(f.content));
    ReplayResult r;
    const auto& recorded = m.at("outputs");
    if (recorded.size() != sums.size()) r.match = false;
    for (std::size_t i = 0; i < std::min(sums.size(), recorded.size()); ++i) {
        const bool ok = recorded[i].at("sha256").get<std::string>() == sums[i];
        r.match = r.match && ok;
        r.detail.push_back({{"path", recorded[i].at("path")}, {"sha256", sums[i]}, {"match", ok}});
    }
    return r;
}

}  // namespace zrp::cli
