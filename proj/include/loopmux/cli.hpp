#pragma once

// Subcommands of the `loopmux` tool. Each cmd_* writes a CSV document to a
// stream; run_cli parses arguments, maps failures to exit codes and only
// writes the --out file once the whole document has been produced.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "analytics.hpp"
#include "config.hpp"
#include "loop_sim.hpp"

namespace loopmux::cli {

enum ExitCode : int {
    kOk = 0,
    kParseError = 2,
    kValidationError = 3,
    kRuntimeError = 4,
};

/// Fixed 9-significant-digit formatting.
inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string fmt(std::optional<double> const& v)
{
    return v ? fmt(*v) : std::string{};
}

inline void write_analytic_csv(std::ostream& os, analytics::AnalyticParams const& params, int m_max)
{
    auto const report = analytics::analytic_report(params, m_max);
    os << "m,p1m,f_p1,f_C1,f_N\n";
    for (auto const& r : report)
        os << r.depth << ',' << fmt(r.p1m) << ',' << fmt(r.f_p1) << ',' << fmt(r.f_c1) << ','
           << fmt(r.f_n) << '\n';
}

inline void write_optimal_m_csv(std::ostream& os, double p1, double eta_loop, int n_max, int m_max)
{
    if (!(p1 > 0.0 && p1 <= 1.0))
        throw std::invalid_argument("p1 must lie in (0,1]");
    if (!(eta_loop > 0.0 && eta_loop <= 1.0))
        throw std::invalid_argument("eta_loop must lie in (0,1]");
    if (n_max < 1 || m_max < 1)
        throw std::invalid_argument("n_max and m_max must be >= 1");
    os << "N,optimal_m,f_N_at_optimum,break_even\n";
    for (int n = 1; n <= n_max; ++n)
    {
        int const m = analytics::optimal_depth(p1, eta_loop, n, m_max);
        double const f = analytics::n_source_speedup(p1, eta_loop, m, n);
        os << n << ',' << m << ',' << fmt(f) << ',' << (f >= 1.0 ? 1 : 0) << '\n';
    }
}

namespace detail {

inline void write_estimate(std::ostream& os, std::optional<Estimate> const& e)
{
    if (e)
        os << fmt(e->value) << ',' << fmt(e->std_error);
    else
        os << ',';
}

}  // namespace detail

inline void write_simulation_csv(std::ostream& os,
                                 SimConfig const& cfg,
                                 TallyCounters const& t,
                                 Estimates const& e)
{
    int const m = cfg.mux.depth;
    os << "mode,depth,cycles,herald_rate_hz,p_bin,p_bin_se,klyshko,klyshko_se,g_hi,g_hi_se,"
          "offtarget_clicks";
    for (int b = 1; b <= m; ++b)
        os << ",contrib_" << b;
    os << '\n';
    os << to_string(t.mode) << ',' << m << ',' << t.cycles << ',' << fmt(e.herald_rate_hz) << ',';
    detail::write_estimate(os, e.p_bin);
    os << ',';
    detail::write_estimate(os, e.klyshko);
    os << ',';
    detail::write_estimate(os, e.g_hi);
    os << ',' << t.idler_singles_offtarget;
    for (int b = 0; b < m; ++b)
    {
        os << ',';
        if (!e.contributions.empty())
            os << fmt(e.contributions[static_cast<std::size_t>(b)].value);
    }
    os << '\n';
}

inline void write_summary(std::ostream& os, TallyCounters const& t, Estimates const& e)
{
    auto line = [&os](char const* name, std::optional<Estimate> const& v) {
        os << "  " << name << ": ";
        if (v)
            os << fmt(v->value) << " +/- " << fmt(v->std_error) << '\n';
        else
            os << "n/a\n";
    };
    os << to_string(t.mode) << " run, depth " << t.depth << ", " << t.cycles << " cycles\n";
    os << "  herald rate: " << fmt(e.herald_rate_hz) << " /s\n";
    line("p_bin", e.p_bin);
    line("klyshko", e.klyshko);
    line("g_hi", e.g_hi);
    if (t.mode == SimMode::Multiplexed)
        os << "  captures " << t.captures << ", deliveries " << t.deliveries << ", dumps " << t.dumps
           << '\n';
}

inline void run_simulate(std::ostream& os, std::ostream* summary, SimConfig const& cfg, unsigned workers)
{
    cfg.validate();
    auto const t = simulate_parallel(cfg, workers);
    auto const e = estimate(t, cfg);
    write_simulation_csv(os, cfg, t, e);
    if (summary)
        write_summary(*summary, t, e);
}

/// Both modes at every grid point. Grid point i runs with seed + i, so a
/// single-point grid reproduces `simulate` for each mode.
inline void run_sweep(std::ostream& os, config::SweepSpec const& spec, unsigned workers)
{
    os << "key,value,mode,herald_rate_hz,p_bin,p_bin_se,p_bin_backed_out,klyshko,klyshko_se,"
          "g_hi,g_hi_se\n";
    for (std::size_t i = 0; i < spec.values.size(); ++i)
    {
        SimConfig cfg = config::apply_sweep_value(spec.fixed, spec.key, spec.values[i]);
        cfg.seed = spec.fixed.sim.seed + i;
        for (SimMode mode : {SimMode::Multiplexed, SimMode::Simplex})
        {
            cfg.mode = mode;
            cfg.validate();
            auto const t = simulate_parallel(cfg, workers);
            auto const e = estimate(t, cfg);
            std::optional<double> backed_out;
            if (e.p_bin)
                backed_out = mode == SimMode::Simplex ? e.p_bin->value / cfg.mux.eta_simplex
                                                      : e.p_bin->value;
            os << to_string(spec.key) << ',' << fmt(spec.values[i]) << ',' << to_string(mode) << ','
               << fmt(e.herald_rate_hz) << ',';
            detail::write_estimate(os, e.p_bin);
            os << ',' << fmt(backed_out) << ',';
            detail::write_estimate(os, e.klyshko);
            os << ',';
            detail::write_estimate(os, e.g_hi);
            os << '\n';
        }
    }
}

/// p1 implied by a run config: herald click and an idler photon that would
/// reach the output detector, neglecting loop loss.
inline double p1_from_config(SimConfig const& c)
{
    return heralded_delivery_probability(
        c.source,
        c.source.herald_efficiency * c.herald_detector.efficiency,
        c.source.idler_efficiency * c.mux.eta_gate * c.output_detector.efficiency);
}

/// Entry point. `args` excludes the program name.
inline int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Temporal loop multiplexing: closed-form model and Monte Carlo"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::optional<double> p1;
    std::optional<double> eta_loop;
    std::optional<double> loss_db;
    std::optional<double> rep_rate;
    int m_max = 20;
    int n_sources = 10;
    int n_max = 40;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Run configuration file");
        sub->add_option("--seed", seed, "Override run.seed");
        sub->add_option("--out", out_path, "Write CSV here instead of stdout");
        sub->add_option("--workers", workers, "Parallel replicas")->check(CLI::Range(1u, 1024u));
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--p1", p1, "Single-pulse heralded delivery probability");
        auto* e = sub->add_option("--eta-loop", eta_loop, "Loop pass efficiency");
        auto* l = sub->add_option("--loss-db", loss_db, "Loop pass loss in dB");
        e->excludes(l);
        sub->add_option("--m-max", m_max, "Largest depth");
    };

    auto* analytic = app.add_subcommand("analytic", "Closed-form table for m = 1..m_max");
    add_common(analytic);
    add_model(analytic);
    analytic->add_option("--rep-rate", rep_rate, "Pump repetition rate in Hz");
    analytic->add_option("--n-sources", n_sources, "Number of simultaneous sources N");

    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo run from a config file");
    add_common(simulate_cmd);
    simulate_cmd->get_option("--config")->required();

    auto* sweep = app.add_subcommand("sweep", "Parameter sweep in both modes");
    add_common(sweep);
    sweep->get_option("--config")->required();

    auto* optimal = app.add_subcommand("optimal-m", "Optimal depth for N = 1..n_max");
    add_common(optimal);
    add_model(optimal);
    optimal->add_option("--n-max", n_max, "Largest number of sources");

    std::vector<char const*> argv;
    argv.push_back("loopmux");
    for (auto const& a : args)
        argv.push_back(a.c_str());
    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e, out, err);
        return code == 0 ? kOk : kParseError;
    }

    std::ostringstream doc;
    try
    {
        if (analytic->parsed() || optimal->parsed())
        {
            analytics::AnalyticParams params;
            params.eta_loop = analytics::db_to_efficiency(1.0);
            if (!config_path.empty())
            {
                auto const rc = config::load_run_config(config_path);
                params.p1 = p1_from_config(rc.sim);
                params.eta_loop = rc.sim.mux.eta_loop;
                params.rep_rate = rc.sim.rep_rate_hz;
            }
            if (p1)
                params.p1 = *p1;
            if (eta_loop)
                params.eta_loop = *eta_loop;
            if (loss_db)
            {
                if (!(*loss_db >= 0.0))
                    throw std::invalid_argument("--loss-db must be >= 0");
                params.eta_loop = analytics::db_to_efficiency(*loss_db);
            }
            if (rep_rate)
                params.rep_rate = *rep_rate;
            params.n_sources = n_sources;
            if (analytic->parsed())
                write_analytic_csv(doc, params, m_max);
            else
                write_optimal_m_csv(doc, params.p1, params.eta_loop, n_max, m_max);
        }
        else if (simulate_cmd->parsed())
        {
            auto rc = config::load_run_config(config_path);
            if (seed)
                rc.sim.seed = *seed;
            run_simulate(doc, &err, rc.sim, workers);
        }
        else if (sweep->parsed())
        {
            auto spec = config::load_sweep_spec(config_path);
            if (seed)
                spec.fixed.sim.seed = *seed;
            run_sweep(doc, spec, workers);
        }

        if (out_path.empty())
        {
            out << doc.str();
        }
        else
        {
            std::ofstream f(out_path);
            if (!(f << doc.str()))
                throw config::IoError("cannot write '" + out_path + "'");
        }
    }
    catch (config::ParseError const& e)
    {
        err << "config parse error: " << e.what() << '\n';
        return kParseError;
    }
    catch (config::ValidationError const& e)
    {
        err << "invalid configuration: " << e.what() << '\n';
        return kValidationError;
    }
    catch (config::IoError const& e)
    {
        err << "i/o error: " << e.what() << '\n';
        return kRuntimeError;
    }
    catch (std::invalid_argument const& e)
    {
        err << "invalid parameters: " << e.what() << '\n';
        return kValidationError;
    }
    catch (std::domain_error const& e)
    {
        err << "invalid parameters: " << e.what() << '\n';
        return kValidationError;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

}  // namespace loopmux::cli
