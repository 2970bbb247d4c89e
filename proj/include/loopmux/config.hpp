#pragma once

// Run configuration files: sectioned key = value text (INI). Unknown
// sections and keys are rejected. See README.md for the schema.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "loop_sim.hpp"

namespace loopmux::config {

/// Malformed text or a value of the wrong type.
struct ParseError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Well-formed but semantically invalid (range, unknown key, conflict).
struct ValidationError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Config file could not be read.
struct IoError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Defaults: the 5 MHz, depth 4, 1 dB operating point, with source and
/// detector figures typical of a low-gain fibre pair source.
inline SimConfig default_sim_config()
{
    SimConfig cfg;
    cfg.source.mean_pairs = 0.01;
    cfg.source.herald_efficiency = 0.1;
    cfg.source.idler_efficiency = 0.3;
    cfg.source.distribution = PairDistribution::Thermal;
    cfg.mux = MuxSpec{};
    cfg.herald_detector = DetectorSpec{1.0, 0.0};
    cfg.output_detector = DetectorSpec{1.0, 0.0};
    cfg.n_cycles = 1'000'000;
    cfg.seed = 1;
    cfg.mode = SimMode::Multiplexed;
    cfg.rep_rate_hz = 5e6;
    return cfg;
}

struct RunConfig
{
    SimConfig sim = default_sim_config();
    bool windows_explicit = false;
};

enum class SweepKey { MeanPairs, EtaLoop, Depth };

inline std::string to_string(SweepKey k)
{
    switch (k)
    {
    case SweepKey::MeanPairs: return "mean_pairs";
    case SweepKey::EtaLoop: return "eta_loop";
    case SweepKey::Depth: return "depth";
    }
    return {};
}

struct SweepSpec
{
    SweepKey key = SweepKey::MeanPairs;
    std::vector<double> values;
    RunConfig fixed;
};

namespace detail {

namespace pt = boost::property_tree;

inline double parse_double(std::string const& key, std::string const& text)
{
    double v = 0.0;
    auto const* first = text.data();
    auto const* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("'" + key + "': expected a number, got '" + text + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string const& key, std::string const& text)
{
    std::uint64_t v = 0;
    auto const* first = text.data();
    auto const* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("'" + key + "': expected a non-negative integer, got '" + text + "'");
    return v;
}

inline bool parse_bool(std::string const& key, std::string const& text)
{
    if (text == "true" || text == "1")
        return true;
    if (text == "false" || text == "0")
        return false;
    throw ParseError("'" + key + "': expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_list(std::string const& key, std::string const& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        auto const b = item.find_first_not_of(" \t");
        auto const e = item.find_last_not_of(" \t");
        if (b == std::string::npos)
            throw ParseError("'" + key + "': empty list element");
        out.push_back(parse_double(key, item.substr(b, e - b + 1)));
    }
    if (out.empty())
        throw ParseError("'" + key + "': empty list");
    return out;
}

inline void check_keys(pt::ptree const& tree,
                       std::set<std::string> const& allowed_sections,
                       std::string const& allowed_keys_spec)
{
    std::set<std::string> allowed;
    std::stringstream ss(allowed_keys_spec);
    std::string k;
    while (ss >> k)
        allowed.insert(k);
    for (auto const& [section, body] : tree)
    {
        if (body.empty() && !body.data().empty())
            throw ValidationError("key '" + section + "' outside of any section");
        if (!allowed_sections.count(section))
            throw ValidationError("unknown section [" + section + "]");
        for (auto const& [key, value] : body)
            if (!allowed.count(section + "." + key))
                throw ValidationError("unknown key '" + key + "' in [" + section + "]");
    }
}

inline constexpr char const* kRunKeys =
    "source.mean_pairs source.herald_efficiency source.idler_efficiency source.distribution "
    "mux.depth mux.eta_loop mux.loss_db mux.eta_simplex mux.eta_gate mux.herald_windows "
    "mux.policy mux.include_offtarget "
    "detectors.herald_efficiency detectors.herald_dark detectors.output_efficiency "
    "detectors.output_dark "
    "run.n_cycles run.seed run.mode "
    "clock.rep_rate_hz";

inline pt::ptree read_tree(std::istream& in)
{
    pt::ptree tree;
    try
    {
        pt::read_ini(in, tree);
    }
    catch (pt::ini_parser_error const& e)
    {
        throw ParseError(e.what());
    }
    return tree;
}

inline RunConfig run_config_from_tree(pt::ptree const& tree)
{
    RunConfig rc;
    SimConfig& c = rc.sim;

    auto get = [&](char const* path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.')))
            return *v;
        return std::nullopt;
    };
    auto num = [&](char const* path, double& target) {
        if (auto v = get(path))
            target = parse_double(path, *v);
    };

    num("source.mean_pairs", c.source.mean_pairs);
    num("source.herald_efficiency", c.source.herald_efficiency);
    num("source.idler_efficiency", c.source.idler_efficiency);
    if (auto v = get("source.distribution"))
    {
        if (*v == "thermal")
            c.source.distribution = PairDistribution::Thermal;
        else if (*v == "poisson")
            c.source.distribution = PairDistribution::Poisson;
        else
            throw ValidationError("source.distribution must be thermal or poisson");
    }

    if (auto v = get("mux.depth"))
    {
        auto const d = parse_uint("mux.depth", *v);
        if (d < 1 || d > 1000)
            throw ValidationError("mux.depth must lie in 1..1000");
        c.mux.depth = static_cast<int>(d);
    }
    auto const eta_loop = get("mux.eta_loop");
    auto const loss_db = get("mux.loss_db");
    if (eta_loop && loss_db)
        throw ValidationError("mux.eta_loop and mux.loss_db are mutually exclusive");
    if (eta_loop)
        c.mux.eta_loop = parse_double("mux.eta_loop", *eta_loop);
    if (loss_db)
    {
        double const db = parse_double("mux.loss_db", *loss_db);
        if (!(db >= 0.0))
            throw ValidationError("mux.loss_db must be >= 0");
        c.mux.eta_loop = analytics::db_to_efficiency(db);
    }
    num("mux.eta_simplex", c.mux.eta_simplex);
    num("mux.eta_gate", c.mux.eta_gate);
    if (auto v = get("mux.herald_windows"))
    {
        c.mux.herald_windows = parse_list("mux.herald_windows", *v);
        rc.windows_explicit = true;
    }
    else
    {
        c.mux.herald_windows.assign(static_cast<std::size_t>(c.mux.depth), 1.0);
    }
    if (auto v = get("mux.policy"))
    {
        if (*v == "keep_last")
            c.mux.policy = OverwritePolicy::KeepLast;
        else if (*v == "keep_first")
            c.mux.policy = OverwritePolicy::KeepFirst;
        else
            throw ValidationError("mux.policy must be keep_last or keep_first");
    }
    if (auto v = get("mux.include_offtarget"))
        c.mux.include_offtarget = parse_bool("mux.include_offtarget", *v);

    num("detectors.herald_efficiency", c.herald_detector.efficiency);
    num("detectors.herald_dark", c.herald_detector.dark_click_probability);
    num("detectors.output_efficiency", c.output_detector.efficiency);
    num("detectors.output_dark", c.output_detector.dark_click_probability);

    if (auto v = get("run.n_cycles"))
        c.n_cycles = parse_uint("run.n_cycles", *v);
    if (auto v = get("run.seed"))
        c.seed = parse_uint("run.seed", *v);
    if (auto v = get("run.mode"))
    {
        if (*v == "multiplexed")
            c.mode = SimMode::Multiplexed;
        else if (*v == "simplex")
            c.mode = SimMode::Simplex;
        else
            throw ValidationError("run.mode must be multiplexed or simplex");
    }
    num("clock.rep_rate_hz", c.rep_rate_hz);

    try
    {
        c.validate();
    }
    catch (std::invalid_argument const& e)
    {
        throw ValidationError(e.what());
    }
    return rc;
}

inline std::string slurp(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

inline RunConfig parse_run_config(std::string const& text)
{
    std::istringstream in(text);
    auto const tree = detail::read_tree(in);
    detail::check_keys(tree, {"source", "mux", "detectors", "run", "clock"}, detail::kRunKeys);
    return detail::run_config_from_tree(tree);
}

inline RunConfig load_run_config(std::string const& path)
{
    return parse_run_config(detail::slurp(path));
}

/// A run config plus a [sweep] section with `key` and a comma-separated
/// `values` grid.
inline SweepSpec parse_sweep_spec(std::string const& text)
{
    std::istringstream in(text);
    auto tree = detail::read_tree(in);
    detail::check_keys(tree,
                       {"source", "mux", "detectors", "run", "clock", "sweep"},
                       std::string(detail::kRunKeys) + " sweep.key sweep.values");

    SweepSpec spec;
    auto const key = tree.get_optional<std::string>("sweep.key");
    auto const values = tree.get_optional<std::string>("sweep.values");
    if (!key || !values)
        throw ValidationError("[sweep] needs both 'key' and 'values'");
    if (*key == "mean_pairs")
        spec.key = SweepKey::MeanPairs;
    else if (*key == "eta_loop")
        spec.key = SweepKey::EtaLoop;
    else if (*key == "depth")
        spec.key = SweepKey::Depth;
    else
        throw ValidationError("sweep.key must be mean_pairs, eta_loop or depth");
    spec.values = detail::parse_list("sweep.values", *values);
    tree.erase("sweep");

    spec.fixed = detail::run_config_from_tree(tree);
    if (spec.key == SweepKey::Depth && spec.fixed.windows_explicit)
        throw ValidationError("a depth sweep cannot use explicit herald_windows");
    for (double v : spec.values)
    {
        bool ok = true;
        switch (spec.key)
        {
        case SweepKey::MeanPairs: ok = v >= 0.0 && std::isfinite(v); break;
        case SweepKey::EtaLoop: ok = v > 0.0 && v <= 1.0; break;
        case SweepKey::Depth: ok = v >= 1.0 && v <= 1000.0 && v == std::floor(v); break;
        }
        if (!ok)
            throw ValidationError("sweep value out of range for " + to_string(spec.key));
    }
    return spec;
}

inline SweepSpec load_sweep_spec(std::string const& path)
{
    return parse_sweep_spec(detail::slurp(path));
}

/// The config with one swept parameter replaced.
inline SimConfig apply_sweep_value(RunConfig const& rc, SweepKey key, double value)
{
    SimConfig cfg = rc.sim;
    switch (key)
    {
    case SweepKey::MeanPairs: cfg.source.mean_pairs = value; break;
    case SweepKey::EtaLoop: cfg.mux.eta_loop = value; break;
    case SweepKey::Depth:
        cfg.mux.depth = static_cast<int>(value);
        cfg.mux.herald_windows.assign(static_cast<std::size_t>(cfg.mux.depth), 1.0);
        break;
    }
    return cfg;
}

}  // namespace loopmux::config
