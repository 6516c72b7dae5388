#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "zrp/config_space.hpp"
#include "zrp/errors.hpp"
#include "zrp/generator.hpp"
#include "zrp/stats.hpp"

namespace zrp {

/// SplitMix64 (Steele, Lea, Flood 2014). Uniforms use the top 53 bits.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }
    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) noexcept { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

private:
    std::uint64_t state_;
};

inline constexpr int kDeltaLabel = -1;

struct SimConfig {
    int L = 3;
    int N = 8;
    double alpha = 2.0;
    int ellN = 1;
    std::uint64_t seed = 0;
    double t_max = 1.0;
    std::variant<Configuration, int> initial = 0;  // configuration, or a well label (condensate)
    std::optional<std::uint64_t> max_events;

    int well_threshold() const noexcept { return N - ellN; }
};

inline void validate(const SimConfig& c) {
    if (c.L < 2) throw DomainError("need L >= 2");
    if (c.N < 1) throw DomainError("need N >= 1");
    if (!(c.alpha > 0.0)) throw DomainError("alpha must be positive");
    if (c.ellN < 0 || 2 * c.ellN >= c.N) throw DomainError("need 0 <= ellN and 2 ellN < N");
    if (!(c.t_max > 0.0)) throw DomainError("t_max must be positive");
    if (const auto* cfg = std::get_if<Configuration>(&c.initial)) {
        if (cfg->sites() != c.L || cfg->total() != c.N) throw DomainError("initial configuration must have L sites and N particles");
        for (int v : cfg->occupations())
            if (v < 0) throw DomainError("negative occupation in initial configuration");
    } else if (const int x = std::get<int>(c.initial); x < 0 || x >= c.L) {
        throw DomainError("initial well label is not on the torus");
    }
}

inline Configuration initial_configuration(const SimConfig& c) {
    if (const auto* cfg = std::get_if<Configuration>(&c.initial)) return *cfg;
    std::vector<int> occ(static_cast<std::size_t>(c.L), 0);
    occ[static_cast<std::size_t>(std::get<int>(c.initial))] = c.N;
    return Configuration(std::move(occ));
}

/// Label of a configuration: the well x with eta_x >= N - ellN, else Delta.
inline int well_label(std::span<const int> occ, int threshold) noexcept {
    for (std::size_t x = 0; x < occ.size(); ++x)
        if (occ[x] >= threshold) return static_cast<int>(x);
    return kDeltaLabel;
}

/// Maximal time interval spent in one well or in Delta.
struct Segment {
    double start = 0.0;
    double end = 0.0;
    int label = kDeltaLabel;
};

struct Trajectory {
    std::vector<Segment> segments;  // consecutive labels differ
    double delta_occupation = 0.0;
    double well_occupation = 0.0;
    double total_time = 0.0;
    std::uint64_t events = 0;
    Configuration final_state;
};

inline bool operator==(const Segment& a, const Segment& b) {
    return a.start == b.start && a.end == b.end && a.label == b.label;
}
inline bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.segments == b.segments && a.delta_occupation == b.delta_occupation &&
           a.well_occupation == b.well_occupation && a.total_time == b.total_time && a.events == b.events &&
           a.final_state == b.final_state;
}

/// Observers may provide hold(occ, t, dt) for each sojourn and
/// jump(occ_before, site) for each event.
struct NullObserver {};

/// Gillespie simulation of the clockwise zero-range process.
template <class Observer>
Trajectory run(const SimConfig& cfg, Observer&& obs) {
    validate(cfg);
    const auto g = jump_rate_table(cfg.N, cfg.alpha);
    const int threshold = cfg.well_threshold();
    const auto start = initial_configuration(cfg);
    std::vector<int> occ(start.occupations().begin(), start.occupations().end());
    SplitMix64 rng(cfg.seed);
    const std::uint64_t max_events = cfg.max_events.value_or(std::numeric_limits<std::uint64_t>::max());

    Trajectory tr;
    double t = 0.0;
    int label = well_label(occ, threshold);
    tr.segments.push_back({0.0, 0.0, label});
    auto credit = [&](double dt) {
        if (label == kDeltaLabel)
            tr.delta_occupation += dt;
        else
            tr.well_occupation += dt;
    };

    while (tr.events < max_events) {
        double total = 0.0;
        for (int v : occ) total += g[static_cast<std::size_t>(v)];
        const double dt = rng.exponential(total);
        if (t + dt >= cfg.t_max) {
            const double rest = cfg.t_max - t;
            if constexpr (requires { obs.hold(std::span<const int>(occ), t, rest); }) obs.hold(std::span<const int>(occ), t, rest);
            credit(rest);
            t = cfg.t_max;
            break;
        }
        if constexpr (requires { obs.hold(std::span<const int>(occ), t, dt); }) obs.hold(std::span<const int>(occ), t, dt);
        credit(dt);
        t += dt;

        double u = rng.uniform() * total;
        int site = -1;
        for (int x = 0; x < cfg.L; ++x) {
            const double r = g[static_cast<std::size_t>(occ[static_cast<std::size_t>(x)])];
            if (r <= 0.0) continue;
            site = x;
            if (u < r) break;
            u -= r;
        }
        if constexpr (requires { obs.jump(std::span<const int>(occ), site); }) obs.jump(std::span<const int>(occ), site);
        --occ[static_cast<std::size_t>(site)];
        ++occ[static_cast<std::size_t>(torus_mod(site + 1, cfg.L))];
        ++tr.events;

        const int next = well_label(occ, threshold);
        if (next != label) {
            tr.segments.back().end = t;
            tr.segments.push_back({t, t, next});
            label = next;
        }
    }
    tr.segments.back().end = t;
    tr.total_time = t;
    tr.final_state = Configuration(std::move(occ));
    return tr;
}

inline Trajectory run(const SimConfig& cfg) { return run(cfg, NullObserver{}); }

/// Seeds for independent replicas, drawn from a SplitMix64 stream on the base seed.
inline std::vector<std::uint64_t> replica_seeds(std::uint64_t base, std::size_t count) {
    SplitMix64 rng(base);
    std::vector<std::uint64_t> s(count);
    for (auto& v : s) v = rng.next();
    return s;
}

/// Runs replicas concurrently; result order follows replica index.
inline std::vector<Trajectory> run_replicas(const SimConfig& cfg, std::size_t count) {
    std::vector<std::future<Trajectory>> jobs;
    for (auto seed : replica_seeds(cfg.seed, count)) {
        SimConfig c = cfg;
        c.seed = seed;
        jobs.push_back(std::async(std::launch::async, [c] { return run(c); }));
    }
    std::vector<Trajectory> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

struct TraceStatistics {
    double scale = 1.0;
    std::vector<double> holding_times;             // completed visits, rescaled
    std::vector<int> holding_wells;                // well of each completed visit
    std::vector<std::vector<std::uint64_t>> jumps; // jumps[x][y]
    std::vector<std::uint64_t> displacement_counts; // by (y - x) mod L
    std::uint64_t transitions = 0;
    double delta_fraction = 0.0;
    double trace_time = 0.0;      // T^E at the end, rescaled
    double censored_time = 0.0;   // last, unfinished visit, rescaled
    bool empty = true;            // no well transition observed
};

/// Statistics of the trace process X^N on the time scale N^{1+alpha}: Delta
/// time is excised, excursions through Delta that return to the same well
/// extend the current visit.
inline TraceStatistics trace_statistics(const Trajectory& tr, int L, double scale) {
    if (!(scale > 0.0)) throw DomainError("scale must be positive");
    TraceStatistics s;
    s.scale = scale;
    s.jumps.assign(static_cast<std::size_t>(L), std::vector<std::uint64_t>(static_cast<std::size_t>(L), 0));
    s.displacement_counts.assign(static_cast<std::size_t>(L), 0);
    int current = kDeltaLabel;
    double visit = 0.0;
    for (const auto& seg : tr.segments) {
        if (seg.label == kDeltaLabel) continue;
        if (seg.label >= L) throw DomainError("segment label outside the torus");
        const double len = seg.end - seg.start;
        if (current == kDeltaLabel || seg.label == current) {
            current = seg.label;
            visit += len;
            continue;
        }
        s.holding_times.push_back(visit / scale);
        s.holding_wells.push_back(current);
        ++s.jumps[static_cast<std::size_t>(current)][static_cast<std::size_t>(seg.label)];
        ++s.displacement_counts[static_cast<std::size_t>(torus_mod(seg.label - current, L))];
        ++s.transitions;
        current = seg.label;
        visit = len;
    }
    s.censored_time = visit / scale;
    s.trace_time = tr.well_occupation / scale;
    s.delta_fraction = tr.total_time > 0.0 ? tr.delta_occupation / tr.total_time : 0.0;
    s.empty = s.transitions == 0;
    return s;
}

/// Occupation counts of E_N at the grid times k * spacing, k >= 0.
class GridSampler {
public:
    GridSampler(const StateSpace& space, double spacing) : space_(&space), spacing_(spacing), counts_(space.size(), 0.0) {
        if (!(spacing > 0.0)) throw DomainError("sampling spacing must be positive");
    }
    void hold(std::span<const int> occ, double t, double dt) {
        const double end = t + dt;
        std::size_t hits = 0;
        while (next_ * spacing_ < end) {
            ++next_;
            ++hits;
        }
        if (hits) counts_[space_->index_of(occ)] += static_cast<double>(hits);
    }
    std::span<const double> counts() const noexcept { return counts_; }

private:
    const StateSpace* space_;
    double spacing_;
    std::uint64_t next_ = 0;
    std::vector<double> counts_;
};

/// Time spent in each state of E_N.
class OccupationTimer {
public:
    explicit OccupationTimer(const StateSpace& space) : space_(&space), time_(space.size(), 0.0) {}
    void hold(std::span<const int> occ, double, double dt) { time_[space_->index_of(occ)] += dt; }
    std::span<const double> times() const noexcept { return time_; }

private:
    const StateSpace* space_;
    std::vector<double> time_;
};

/// Counts (state, jump site) pairs.
class JumpCounter {
public:
    explicit JumpCounter(const StateSpace& space)
        : space_(&space), counts_(space.size() * static_cast<std::size_t>(space.sites()), 0.0) {}
    void jump(std::span<const int> occ, int site) {
        counts_[space_->index_of(occ) * static_cast<std::size_t>(space_->sites()) + static_cast<std::size_t>(site)] += 1.0;
    }
    std::span<const double> row(std::size_t state) const {
        return std::span<const double>(counts_).subspan(state * static_cast<std::size_t>(space_->sites()),
                                                         static_cast<std::size_t>(space_->sites()));
    }

private:
    const StateSpace* space_;
    std::vector<double> counts_;
};

struct StationarityTest {
    stats::ChiSquare chi2;
    std::uint64_t samples = 0;
    double spacing = 0.0;
    Trajectory trajectory;
};

/// Chi-square test of time-thinned samples against mu_N.
inline StationarityTest stationarity_test(const StateSpace& space, const SimConfig& cfg, double spacing) {
    if (space.sites() != cfg.L || space.particles() != cfg.N || space.alpha() != cfg.alpha)
        throw DomainError("state space does not match the simulation configuration");
    GridSampler sampler(space, spacing);
    StationarityTest out;
    out.trajectory = run(cfg, sampler);
    out.spacing = spacing;
    const auto c = sampler.counts();
    for (double v : c) out.samples += static_cast<std::uint64_t>(v);
    out.chi2 = stats::goodness_of_fit(c, space.mu());
    return out;
}

/// Pooled chi-square of jump sites against g-proportional probabilities, one
/// multinomial per visited state.
inline stats::ChiSquare jump_law_test(const StateSpace& space, const JumpCounter& counter, double min_expected = 5.0) {
    const auto g = jump_rate_table(space.particles(), space.alpha());
    stats::ChiSquare total;
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto occ = space.occupations(i);
        std::vector<double> obs, p;
        for (std::size_t x = 0; x < occ.size(); ++x)
            if (occ[x] > 0) {
                obs.push_back(counter.row(i)[x]);
                p.push_back(g[static_cast<std::size_t>(occ[x])]);
            }
        double n = 0.0;
        for (double v : obs) n += v;
        if (obs.size() < 2 || n == 0.0) continue;
        const auto r = stats::goodness_of_fit(obs, p, min_expected);
        if (r.dof == 0) continue;
        total.statistic += r.statistic;
        total.dof += r.dof;
        total.cells += r.cells;
    }
    total.p_value = total.dof > 0 ? stats::chi_square_sf(total.statistic, total.dof) : 1.0;
    return total;
}

struct M1Result {
    std::size_t trials = 0;
    std::size_t successes = 0;
    double fraction = 0.0;
    stats::Interval ci;
    std::size_t unresolved = 0;  // hit neither target within the time budget
};

/// Fraction of runs started at eta that reach xi before any other well, with
/// (eta, xi) drawn uniformly from a uniformly chosen well.
inline M1Result m1_check(const StateSpace& space, const WellPartition& wells, std::size_t trials, std::uint64_t seed,
                         double t_budget = 1e9) {
    const int L = space.sites();
    const int threshold = space.particles() - wells.depth;
    const auto g = jump_rate_table(space.particles(), space.alpha());
    SplitMix64 pick(seed);
    M1Result r;
    r.trials = trials;
    for (std::size_t k = 0; k < trials; ++k) {
        const int x = static_cast<int>(pick.below(static_cast<std::uint64_t>(L)));
        const auto& wx = wells.wells[static_cast<std::size_t>(x)];
        const std::size_t eta = wx[pick.below(wx.size())];
        const std::size_t xi = wx[pick.below(wx.size())];
        if (eta == xi) {
            ++r.successes;
            continue;
        }
        SplitMix64 rng(pick.next());
        auto start = space.occupations(eta);
        auto target = space.occupations(xi);
        std::vector<int> occ(start.begin(), start.end());
        double t = 0.0;
        bool resolved = false;
        while (t < t_budget) {
            double total = 0.0;
            for (int v : occ) total += g[static_cast<std::size_t>(v)];
            t += rng.exponential(total);
            double u = rng.uniform() * total;
            int site = -1;
            for (int z = 0; z < L; ++z) {
                const double rate = g[static_cast<std::size_t>(occ[static_cast<std::size_t>(z)])];
                if (rate <= 0.0) continue;
                site = z;
                if (u < rate) break;
                u -= rate;
            }
            --occ[static_cast<std::size_t>(site)];
            ++occ[static_cast<std::size_t>(torus_mod(site + 1, L))];
            if (std::equal(occ.begin(), occ.end(), target.begin())) {
                ++r.successes;
                resolved = true;
                break;
            }
            const int lab = well_label(occ, threshold);
            if (lab != kDeltaLabel && lab != x) {
                resolved = true;
                break;
            }
        }
        if (!resolved) ++r.unresolved;
    }
    r.fraction = trials ? static_cast<double>(r.successes) / static_cast<double>(trials) : 0.0;
    r.ci = stats::wilson_interval(r.successes, r.trials);
    return r;
}

/// CSV of (start, end, label) segments; Delta is written as "delta".
inline void write_segments_csv(std::ostream& os, const Trajectory& tr) {
    os << "start,end,label\n";
    os.precision(17);
    for (const auto& s : tr.segments) {
        os << s.start << ',' << s.end << ',';
        if (s.label == kDeltaLabel)
            os << "delta";
        else
            os << s.label;
        os << '\n';
    }
}

}  // namespace zrp
