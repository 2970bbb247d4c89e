#pragma once

// Cycle-by-cycle Monte Carlo of a heralded pair source feeding a switchable
// delay loop, with tallies and the estimators derived from them.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "analytics.hpp"
#include "mux_controller.hpp"
#include "photon_stats.hpp"

namespace loopmux {

enum class SimMode { Multiplexed, Simplex };

inline std::string to_string(SimMode m)
{
    return m == SimMode::Multiplexed ? "multiplexed" : "simplex";
}

struct MuxSpec
{
    int depth = 4;
    double eta_loop = analytics::db_to_efficiency(1.0);     // per pass, switch + loop
    double eta_simplex = analytics::db_to_efficiency(1.0);  // one static pass in Bar
    double eta_gate = 1.0;                                  // 2x1 noise gate
    std::vector<double> herald_windows = std::vector<double>(4, 1.0);
    OverwritePolicy policy = OverwritePolicy::KeepLast;
    bool include_offtarget = false;  // diagnostics: count dumped clicks in p_bin

    void validate() const
    {
        auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
        if (depth < 1)
            throw std::invalid_argument("depth must be >= 1");
        if (!in_unit(eta_loop))
            throw std::invalid_argument("eta_loop must lie in (0,1]");
        if (!in_unit(eta_simplex))
            throw std::invalid_argument("eta_simplex must lie in (0,1]");
        if (!in_unit(eta_gate))
            throw std::invalid_argument("eta_gate must lie in (0,1]");
        if (static_cast<int>(herald_windows.size()) != depth)
            throw std::invalid_argument("herald_windows must have one entry per bin");
        for (double w : herald_windows)
            if (!in_unit(w))
                throw std::invalid_argument("herald windows must lie in (0,1]");
    }
};

struct SimConfig
{
    PairSourceSpec source;
    MuxSpec mux;
    DetectorSpec herald_detector;
    DetectorSpec output_detector;
    std::uint64_t n_cycles = 1'000'000;
    std::uint64_t seed = 1;
    SimMode mode = SimMode::Multiplexed;
    double rep_rate_hz = 5e6;

    void validate() const
    {
        source.validate();
        mux.validate();
        herald_detector.validate();
        output_detector.validate();
        if (n_cycles < 1)
            throw std::invalid_argument("n_cycles must be >= 1");
        if (!(rep_rate_hz > 0.0) || !std::isfinite(rep_rate_hz))
            throw std::invalid_argument("rep_rate_hz must be > 0");
    }
};

/// Raw event counts from one run.
///
/// `herald_singles` follows the output-bin convention of each mode: in
/// Simplex every bin is an output bin and it counts herald clicks; in
/// Multiplexed the output bin is the cycle and it counts cycles with at
/// least one herald (the re-timed herald). `coincidences` likewise pairs a
/// herald with a target-bin output click of the same output bin.
struct TallyCounters
{
    SimMode mode = SimMode::Multiplexed;
    int depth = 1;
    std::uint64_t cycles = 0;
    std::vector<std::uint64_t> heralds_by_bin;
    std::uint64_t herald_clicks = 0;
    std::uint64_t herald_singles = 0;
    std::uint64_t idler_singles_target = 0;
    std::uint64_t idler_singles_offtarget = 0;
    std::uint64_t coincidences = 0;
    std::uint64_t captures = 0;
    std::uint64_t deliveries = 0;
    std::uint64_t dumps = 0;
    std::vector<std::uint64_t> target_clicks_by_origin;  // Multiplexed
    std::vector<std::uint64_t> coincidences_by_bin;      // Simplex

    static TallyCounters zero(SimMode mode, int depth)
    {
        TallyCounters t;
        t.mode = mode;
        t.depth = depth;
        auto const m = static_cast<std::size_t>(depth);
        t.heralds_by_bin.assign(m, 0);
        t.target_clicks_by_origin.assign(m, 0);
        t.coincidences_by_bin.assign(m, 0);
        return t;
    }

    std::uint64_t output_bins() const
    {
        return mode == SimMode::Multiplexed ? cycles : cycles * static_cast<std::uint64_t>(depth);
    }

    friend bool operator==(TallyCounters const&, TallyCounters const&) = default;
};

/// Field-wise sum. All inputs must share mode and depth.
inline TallyCounters merge(std::span<TallyCounters const> tallies)
{
    if (tallies.empty())
        throw std::invalid_argument("merge: nothing to merge");
    auto out = TallyCounters::zero(tallies.front().mode, tallies.front().depth);
    for (auto const& t : tallies)
    {
        if (t.mode != out.mode || t.depth != out.depth)
            throw std::invalid_argument("merge: tallies come from different configurations");
        out.cycles += t.cycles;
        out.herald_clicks += t.herald_clicks;
        out.herald_singles += t.herald_singles;
        out.idler_singles_target += t.idler_singles_target;
        out.idler_singles_offtarget += t.idler_singles_offtarget;
        out.coincidences += t.coincidences;
        out.captures += t.captures;
        out.deliveries += t.deliveries;
        out.dumps += t.dumps;
        for (std::size_t b = 0; b < out.heralds_by_bin.size(); ++b)
        {
            out.heralds_by_bin[b] += t.heralds_by_bin.at(b);
            out.target_clicks_by_origin[b] += t.target_clicks_by_origin.at(b);
            out.coincidences_by_bin[b] += t.coincidences_by_bin.at(b);
        }
    }
    return out;
}

inline TallyCounters merge(TallyCounters const& a, TallyCounters const& b)
{
    TallyCounters const both[] = {a, b};
    return merge(both);
}

namespace detail {

inline Rng make_rng(std::uint64_t seed, SimMode mode, std::uint64_t replica)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mode),
                      static_cast<std::uint32_t>(replica),
                      static_cast<std::uint32_t>(replica >> 32)};
    return Rng(seq);
}

inline TallyCounters run_replica(SimConfig const& cfg, std::uint64_t cycles, std::uint64_t replica)
{
    Rng rng = make_rng(cfg.seed, cfg.mode, replica);
    int const m = cfg.mux.depth;
    auto t = TallyCounters::zero(cfg.mode, m);
    t.cycles = cycles;

    std::vector<double> herald_eta(static_cast<std::size_t>(m));
    for (int b = 0; b < m; ++b)
        herald_eta[static_cast<std::size_t>(b)] =
            cfg.source.herald_efficiency * cfg.mux.herald_windows[static_cast<std::size_t>(b)];
    std::vector<double> loop_eta(static_cast<std::size_t>(m) + 1, 1.0);
    for (int k = 1; k <= m; ++k)
        loop_eta[static_cast<std::size_t>(k)] = loop_eta[static_cast<std::size_t>(k - 1)] * cfg.mux.eta_loop;

    double const idler_eta = cfg.source.idler_efficiency * cfg.mux.eta_gate;
    double const simplex_eta = idler_eta * cfg.mux.eta_simplex;
    bool const herald_dark = cfg.herald_detector.dark_click_probability > 0.0;

    if (cfg.mode == SimMode::Simplex)
    {
        bool const output_dark = cfg.output_detector.dark_click_probability > 0.0;
        for (std::uint64_t c = 0; c < cycles; ++c)
        {
            for (int b = 0; b < m; ++b)
            {
                unsigned const n = sample_pair_number(cfg.source, rng);
                if (n == 0 && !herald_dark && !output_dark)
                    continue;
                auto const ub = static_cast<std::size_t>(b);
                bool const herald =
                    click(thin(n, herald_eta[ub], rng), cfg.herald_detector, rng);
                bool const out = click(thin(n, simplex_eta, rng), cfg.output_detector, rng);
                if (herald)
                {
                    ++t.heralds_by_bin[ub];
                    ++t.herald_clicks;
                    ++t.herald_singles;
                }
                if (out)
                    ++t.idler_singles_target;
                if (herald && out)
                {
                    ++t.coincidences;
                    ++t.coincidences_by_bin[ub];
                }
            }
        }
        return t;
    }

    MuxController ctrl(m, cfg.mux.policy);
    unsigned loop_photons = 0;
    int loop_origin = 0;
    for (std::uint64_t c = 0; c < cycles; ++c)
    {
        bool herald_in_cycle = false;
        bool target_click = false;
        bool delivered = false;
        for (int b = 1; b <= m; ++b)
        {
            auto const ub = static_cast<std::size_t>(b - 1);
            unsigned const n = sample_pair_number(cfg.source, rng);
            bool herald = false;
            if (n > 0 || herald_dark)
                herald = click(thin(n, herald_eta[ub], rng), cfg.herald_detector, rng);
            if (herald)
            {
                ++t.heralds_by_bin[ub];
                ++t.herald_clicks;
                herald_in_cycle = true;
            }

            auto const out = ctrl.step(herald);
            if (out.dump)
            {
                ++t.dumps;
                auto const passes = static_cast<std::size_t>(b - loop_origin);
                if (click(thin(loop_photons, loop_eta[passes], rng), cfg.output_detector, rng))
                    ++t.idler_singles_offtarget;
            }
            if (out.capture)
            {
                ++t.captures;
                loop_photons = thin(n, idler_eta, rng);
                loop_origin = b;
            }
            if (out.deliver)
            {
                ++t.deliveries;
                delivered = true;
                auto const passes = static_cast<std::size_t>(passes_for_origin(loop_origin, m));
                target_click =
                    click(thin(loop_photons, loop_eta[passes], rng), cfg.output_detector, rng);
                if (target_click)
                    ++t.target_clicks_by_origin[static_cast<std::size_t>(loop_origin - 1)];
                loop_photons = 0;
            }
        }
        // the target bin is open every cycle, loaded or not
        if (!delivered)
            target_click = click(0, cfg.output_detector, rng);
        if (target_click)
            ++t.idler_singles_target;
        if (herald_in_cycle)
            ++t.herald_singles;
        if (herald_in_cycle && target_click)
            ++t.coincidences;
    }
    return t;
}

}  // namespace detail

/// Run `config.n_cycles` cycles. Deterministic in the seed.
inline TallyCounters simulate(SimConfig const& config)
{
    config.validate();
    return detail::run_replica(config, config.n_cycles, 0);
}

/// Split the run across `workers` independent replicas (own rng stream and
/// controller each) and merge. With one worker this equals `simulate`.
inline TallyCounters simulate_parallel(SimConfig const& config, unsigned workers)
{
    config.validate();
    if (workers <= 1 || config.n_cycles < workers)
        return detail::run_replica(config, config.n_cycles, 0);

    std::vector<TallyCounters> parts(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::uint64_t const base = config.n_cycles / workers;
    std::uint64_t const extra = config.n_cycles % workers;
    for (unsigned r = 0; r < workers; ++r)
    {
        std::uint64_t const cycles = base + (r < extra ? 1 : 0);
        threads.emplace_back(
            [&parts, &config, cycles, r] { parts[r] = detail::run_replica(config, cycles, r); });
    }
    for (auto& th : threads)
        th.join();
    return merge(parts);
}

struct Estimate
{
    double value = 0.0;
    double std_error = 0.0;

    friend bool operator==(Estimate const&, Estimate const&) = default;
};

struct Estimates
{
    std::optional<Estimate> p_bin;    // detection probability per output bin
    std::optional<Estimate> klyshko;  // heralding efficiency
    std::optional<Estimate> g_hi;     // herald/idler cross-correlation
    std::optional<double> herald_rate_hz;
    std::vector<Estimate> contributions;  // per herald bin, empty if no events

    friend bool operator==(Estimates const&, Estimates const&) = default;
};

namespace detail {

inline Estimate binomial_estimate(double successes, double trials)
{
    double const p = successes / trials;
    return {p, std::sqrt(p * (1.0 - p) / trials)};
}

}  // namespace detail

/// Estimators from raw counts. Absent entries mean a zero denominator.
inline Estimates estimate(TallyCounters const& t, SimConfig const& config)
{
    Estimates e;
    auto const bins = static_cast<double>(t.output_bins());
    if (bins <= 0.0)
        return e;

    double target = static_cast<double>(t.idler_singles_target);
    if (config.mux.include_offtarget && t.mode == SimMode::Multiplexed)
        target += static_cast<double>(t.idler_singles_offtarget);
    e.p_bin = detail::binomial_estimate(target, bins);

    auto const source_bins = static_cast<double>(t.cycles) * t.depth;
    e.herald_rate_hz = config.rep_rate_hz * static_cast<double>(t.herald_clicks) / source_bins;

    auto const nh = static_cast<double>(t.herald_singles);
    auto const ni = static_cast<double>(t.idler_singles_target);
    auto const nc = static_cast<double>(t.coincidences);
    if (nh > 0.0)
    {
        auto k = detail::binomial_estimate(nc, nh);
        k.value = analytics::klyshko_efficiency(nc, nh);
        e.klyshko = k;
    }
    if (nh > 0.0 && ni > 0.0)
    {
        double const g = analytics::cross_correlation_counts(bins, nc, nh, ni);
        double const rel = nc > 0.0 ? std::sqrt(1.0 / nc + 1.0 / nh + 1.0 / ni) : 0.0;
        e.g_hi = Estimate{g, g * rel};
    }

    auto const& by_bin = t.mode == SimMode::Multiplexed ? t.target_clicks_by_origin
                                                        : t.coincidences_by_bin;
    double total = 0.0;
    for (auto c : by_bin)
        total += static_cast<double>(c);
    if (total > 0.0)
        for (auto c : by_bin)
            e.contributions.push_back(detail::binomial_estimate(static_cast<double>(c), total));
    return e;
}

struct ModeComparison
{
    double mean_pairs = 0.0;
    TallyCounters multiplexed_tally;
    TallyCounters simplex_tally;
    Estimates multiplexed;
    Estimates simplex;
};

/// Run both modes at every mean pair number in the grid. Grid point i uses
/// seed `base.seed + i`; the two modes draw from distinct streams.
inline std::vector<ModeComparison> compare_modes(SimConfig const& base,
                                                 std::span<double const> mu_grid,
                                                 unsigned workers = 1)
{
    if (mu_grid.empty())
        throw std::invalid_argument("compare_modes: empty grid");
    std::vector<ModeComparison> out;
    out.reserve(mu_grid.size());
    for (std::size_t i = 0; i < mu_grid.size(); ++i)
    {
        SimConfig cfg = base;
        cfg.source.mean_pairs = mu_grid[i];
        cfg.seed = base.seed + i;
        cfg.validate();

        ModeComparison row;
        row.mean_pairs = mu_grid[i];
        cfg.mode = SimMode::Multiplexed;
        row.multiplexed_tally = simulate_parallel(cfg, workers);
        row.multiplexed = estimate(row.multiplexed_tally, cfg);
        cfg.mode = SimMode::Simplex;
        row.simplex_tally = simulate_parallel(cfg, workers);
        row.simplex = estimate(row.simplex_tally, cfg);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace loopmux
