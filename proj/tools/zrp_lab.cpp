// zrp_lab: command-line front end for the zero-range metastability library.
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "zrp/cli.hpp"

namespace {

using nlohmann::json;

enum Exit { ok = 0, failure = 1, domain = 2, size = 3, mismatch = 4 };

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw zrp::DomainError("cannot open '" + path + "' for writing");
    f << content;
}

struct Common {
    int L = 3;
    int N = 8;
    double alpha = 2.0;
    std::optional<int> ellN;
};

void add_model(CLI::App* sub, Common& c) {
    sub->add_option("--L", c.L, "number of sites")->required();
    sub->add_option("--N", c.N, "number of particles")->required();
    sub->add_option("--alpha", c.alpha, "interaction exponent")->required();
}

json model_params(const Common& c) {
    json p{{"L", c.L}, {"N", c.N}, {"alpha", c.alpha}};
    p["ellN"] = c.ellN ? json(*c.ellN) : json(nullptr);
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-range process metastability lab"};
    app.require_subcommand(1);
    std::string out_path;
    app.add_option("--out", out_path, "write the primary output here (manifest goes to <out>.manifest.json)");

    json params;
    std::string name;
    Common c;
    std::string sites = "0";

    auto* constants = app.add_subcommand("constants", "limiting constants Gamma(alpha), I_alpha, hop rate");
    double alpha_only = 2.0;
    constants->add_option("--alpha", alpha_only)->required();

    auto* capacity = app.add_subcommand("capacity", "capacity report for wells E(A), E(A^c)");
    add_model(capacity, c);
    capacity->add_option("--ellN", c.ellN, "well parameter");
    capacity->add_option("--A", sites, "comma-separated sites of A");
    bool dense = false, no_infsup = false;
    capacity->add_flag("--dense-oracle", dense, "cross-check with the dense oracle");
    capacity->add_flag("--no-infsup", no_infsup, "skip the inf-sup certificate");

    auto* sweep = app.add_subcommand("sweep", "convergence table over N");
    int sweep_L = 3;
    double sweep_alpha = 2.0;
    std::string ell_rule = "default", n_list;
    sweep->add_option("--L", sweep_L)->required();
    sweep->add_option("--alpha", sweep_alpha)->required();
    sweep->add_option("--ellN-rule", ell_rule, "sqrt | pow:<gamma> | const:<k> | default");
    sweep->add_option("--N-list", n_list, "comma-separated N values")->required();
    sweep->add_option("--A", sites);

    auto* trace = app.add_subcommand("trace", "trace-process rates and (H0)-(H2) diagnostics");
    add_model(trace, c);
    trace->add_option("--ellN", c.ellN);

    auto* simulate = app.add_subcommand("simulate", "event-driven simulation and trace statistics");
    add_model(simulate, c);
    simulate->add_option("--ellN", c.ellN);
    std::uint64_t seed = 0;
    double tmax = 1e4, spacing = 50.0;
    std::size_t replicas = 1;
    std::optional<std::uint64_t> max_events;
    std::optional<std::string> traj_csv;
    int initial_well = 0;
    simulate->add_option("--seed", seed);
    simulate->add_option("--tmax", tmax, "process time horizon");
    simulate->add_option("--replicas", replicas);
    simulate->add_option("--max-events", max_events);
    simulate->add_option("--sample-spacing", spacing, "time between stationarity samples");
    simulate->add_option("--initial-well", initial_well);
    simulate->add_option("--trajectory-csv", traj_csv, "write the first replica's segments");

    auto* space = app.add_subcommand("space", "state-space summary and well masses");
    add_model(space, c);
    space->add_option("--ellN", c.ellN);

    auto* op = app.add_subcommand("operator", "rate matrix as CSV");
    add_model(op, c);
    std::string kind = "forward";
    op->add_option("--kind", kind, "forward | adjoint | symmetric");

    auto* replay = app.add_subcommand("replay", "re-run a manifest and compare checksums");
    std::string manifest_path;
    replay->add_option("manifest", manifest_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return domain;
    }

    try {
        if (*replay) {
            std::ifstream f(manifest_path);
            if (!f) throw zrp::DomainError("cannot read manifest '" + manifest_path + "'");
            const auto r = zrp::cli::replay(json::parse(f));
            std::cout << json{{"match", r.match}, {"outputs", r.detail}}.dump(2) << '\n';
            return r.match ? ok : mismatch;
        }
        if (*constants) {
            name = "constants";
            params = {{"alpha", alpha_only}};
        } else if (*capacity) {
            name = "capacity";
            params = model_params(c);
            params["A"] = zrp::cli::parse_sites(sites);
            params["dense_oracle"] = dense;
            params["infsup"] = !no_infsup;
        } else if (*sweep) {
            name = "sweep";
            params = {{"L", sweep_L}, {"alpha", sweep_alpha}, {"ell_rule", ell_rule},
                      {"N_list", zrp::cli::parse_sites(n_list)}, {"A", zrp::cli::parse_sites(sites)}};
        } else if (*trace) {
            name = "trace";
            params = model_params(c);
        } else if (*simulate) {
            name = "simulate";
            params = model_params(c);
            params["seed"] = seed;
            params["tmax"] = tmax;
            params["replicas"] = replicas;
            params["max_events"] = max_events ? json(*max_events) : json(nullptr);
            params["sample_spacing"] = spacing;
            params["initial_well"] = initial_well;
            params["trajectory_csv"] = traj_csv ? json(*traj_csv) : json(nullptr);
        } else if (*space) {
            name = "space";
            params = model_params(c);
        } else if (*op) {
            name = "operator";
            params = model_params(c);
            params.erase("ellN");
            params["kind"] = kind;
        }

        const auto result = zrp::cli::dispatch(name, params);
        for (const auto& f : result.files) write_file(f.path, f.content);
        const auto man = zrp::cli::manifest(name, params, result, out_path).dump(2) + "\n";
        if (out_path.empty()) {
            std::cout << result.primary;
            std::cerr << man;
        } else {
            write_file(out_path, result.primary);
            write_file(out_path + ".manifest.json", man);
        }
        return ok;
    } catch (const zrp::SizeError& e) {
        std::cerr << "size error: " << e.what() << '\n';
        return size;
    } catch (const zrp::DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return domain;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return domain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
}
