// Acceptance suite: one numbered criterion per check, one PASS/FAIL line
// each. Usage: acceptance [criterion ...]; no arguments runs all of them.
// Exit status is nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "loopmux/cli.hpp"
#include "loopmux/loopmux.hpp"
#include "oracles.hpp"

using namespace loopmux;

namespace {

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, std::string const& what)
    {
        if (!ok)
        {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::vector<std::uint64_t> histogram(std::vector<unsigned> const& s)
{
    std::vector<std::uint64_t> h;
    for (auto v : s)
    {
        if (v >= h.size())
            h.resize(v + 1, 0);
        ++h[v];
    }
    return h;
}

SimConfig lossless_source(double mu, double eta_loop, std::uint64_t cycles, SimMode mode)
{
    SimConfig c;
    c.source.mean_pairs = mu;
    c.source.herald_efficiency = 1.0;
    c.source.idler_efficiency = 1.0;
    c.mux.depth = 4;
    c.mux.eta_loop = eta_loop;
    c.mux.eta_simplex = 1.0;
    c.mux.eta_gate = 1.0;
    c.mux.herald_windows.assign(4, 1.0);
    c.n_cycles = cycles;
    c.seed = 314159;
    c.mode = mode;
    return c;
}

// 1. Closed-form delivery probability against Monte Carlo.
void closed_form_vs_monte_carlo(Outcome& o)
{
    // herald iff >= 1 pair, so P(herald and idler) = mu/(1+mu) = 0.01
    auto const cfg = lossless_source(1.0 / 99.0, 0.8, 1'000'000, SimMode::Multiplexed);
    double const p1 = heralded_delivery_probability(cfg.source, 1.0, 1.0);
    o.check(std::abs(p1 - 0.01) < 1e-15, "p1 = 0.01");
    double const target = analytics::p1_multiplexed(0.01, 0.8, 4);
    o.check(std::abs(target - 0.0234117) <= 5e-7, "closed form 0.0234117 to quoted digits");

    auto const t0 = std::chrono::steady_clock::now();
    auto const e = estimate(simulate(cfg), cfg);
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    double const tol = std::max(4.0 * e.p_bin->std_error, 0.02 * target);
    double const diff = std::abs(e.p_bin->value - target);
    o.detail << "p_bin=" << e.p_bin->value << " se=" << e.p_bin->std_error << " |diff|=" << diff
             << " tol=" << tol << " runtime=" << secs << "s";
    o.check(diff <= tol, "|p_bin - 0.0234117| <= max(4 SE, 2%)");
    o.check(secs < 30.0, "runtime < 30 s");
}

// 2. Per-bin enhancement claims at eta = 0.8.
void enhancement_claims(Outcome& o)
{
    for (double p1 : {1e-6, 1e-4, 1e-3, 1e-2})
    {
        double const f4 = analytics::improvement_per_bin(p1, 0.8, 4);
        double const f20 = analytics::improvement_per_bin(p1, 0.8, 20);
        o.detail << "p1=" << p1 << ": f4=" << f4 << " f20=" << f20 << "; ";
        o.check(f4 > 2.0, "f_p1(m=4) > 2 at p1=" + std::to_string(p1));
        o.check(f20 >= 3.90 && f20 <= 3.96, "f_p1(m=20) in [3.90,3.96] at p1=" + std::to_string(p1));
    }
    o.check(std::abs(analytics::improvement_per_bin(1e-6, 0.8, 4) - 2.3616) <= 1e-3, "limit 2.3616");
    o.check(std::abs(analytics::improvement_per_bin(1e-6, 0.8, 20) - 3.9539) <= 1e-3, "limit 3.9539");
}

// 3. Exact reductions of the closed form.
void analytic_reductions(Outcome& o)
{
    double worst = 0.0;
    for (double p1 : {1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9})
        for (int m = 1; m <= 50; ++m)
        {
            double const ref = -std::expm1(m * std::log1p(-p1));
            worst = std::max(worst, std::abs(analytics::p1_multiplexed(p1, 1.0, m) - ref) / ref);
        }
    o.detail << "lossless max rel dev=" << worst << "; ";
    o.check(worst < 1e-13, "p1m(p1,1,m) = 1-(1-p1)^m");

    bool exact = true;
    for (double eta : {0.1, 0.5, 0.7943282347242815, 0.8, 0.95, 1.0})
        for (double p1 : {1e-4, 0.01, 0.3})
            for (int n = 1; n <= 40; ++n)
                exact = exact && analytics::n_source_speedup(p1, eta, 1, n) == std::pow(eta, n);
    o.check(exact, "f_N(m=1) = eta^N");

    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int combos = 0;
    double max_ratio = 0.0;
    for (; combos < 100; ++combos)
    {
        double const p1 = 1e-6 + u(rng) * (1.0 - 1e-6);
        double const eta = 0.05 + u(rng) * 0.95;
        int const m = 1 + static_cast<int>(u(rng) * 40);
        max_ratio = std::max(max_ratio, analytics::rate_ratio(p1, eta, m));
    }
    o.detail << "max rate_ratio over " << combos << " combos=" << max_ratio;
    o.check(max_ratio <= 1.0, "rate_ratio <= 1");
}

// 4. Controller golden traces and exactly-one-fate.
void controller_traces(Outcome& o)
{
    auto text = [](std::vector<bool> const& h, OverwritePolicy p) {
        std::ostringstream os;
        write_trace(os, h, run_trace(h, 4, p), 4);
        return os.str();
    };
    auto fixture = [](char const* name) {
        return oracle::read_file(std::string(LOOPMUX_FIXTURE_DIR) + "/" + name);
    };
    o.check(text(std::vector<bool>(8, false), OverwritePolicy::KeepLast) == fixture("empty_m4.trace"),
            "empty trace");
    o.check(text({false, true, false, false}, OverwritePolicy::KeepLast)
                == fixture("single_herald_bin2_m4.trace"),
            "single herald trace");
    o.check(text({true, false, true, false}, OverwritePolicy::KeepLast)
                == fixture("overwrite_keep_last_m4.trace"),
            "overwrite trace");

    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> depth(1, 8);
    std::uniform_int_distribution<int> cycles(1, 12);
    std::uniform_real_distribution<double> rate(0.0, 1.0);
    for (auto policy : {OverwritePolicy::KeepLast, OverwritePolicy::KeepFirst})
    {
        int violations = 0;
        for (int i = 0; i < 10'000; ++i)
        {
            int const m = depth(rng);
            std::bernoulli_distribution herald(rate(rng));
            std::vector<bool> h(static_cast<std::size_t>(m * cycles(rng)));
            for (std::size_t k = 0; k < h.size(); ++k)
                h[k] = herald(rng);
            MuxController ctrl(m, policy);
            int cap = 0;
            int del = 0;
            int dump = 0;
            for (bool b : h)
            {
                auto const out = ctrl.step(b);
                cap += out.capture;
                del += out.deliver;
                dump += out.dump;
            }
            violations += cap != del + dump + (ctrl.state().occupied ? 1 : 0);
        }
        o.detail << to_string(policy) << " fate violations=" << violations << "; ";
        o.check(violations == 0, "exactly-one-fate " + to_string(policy));
    }
}

// 5. Per-bin contribution structure.
void bin_contributions(Outcome& o)
{
    auto const cfg = lossless_source(0.002, 0.8, 2'000'000, SimMode::Multiplexed);
    auto const e = estimate(simulate(cfg), cfg);
    auto const expected = analytics::expected_bin_contributions(0.002, 0.8, 4, {1, 1, 1, 1});
    double const frozen[] = {0.1734, 0.2168, 0.2710, 0.3388};
    if (e.contributions.size() != 4)
    {
        o.check(false, "contributions present");
        return;
    }
    for (std::size_t b = 0; b < 4; ++b)
    {
        auto const& c = e.contributions[b];
        o.detail << "bin" << b + 1 << "=" << c.value << "+/-" << c.std_error << " ";
        o.check(std::abs(expected[b] - frozen[b]) < 5e-5, "closed form matches frozen values");
        o.check(std::abs(c.value - expected[b]) <= 4.0 * c.std_error,
                "bin " + std::to_string(b + 1) + " within 4 SE");
    }
    o.check(e.contributions[3].value >= e.contributions[2].value
                && e.contributions[2].value >= e.contributions[1].value
                && e.contributions[1].value >= e.contributions[0].value,
            "ordering bin4 >= bin3 >= bin2 >= bin1");
}

// 6. Cross-correlation contrast between the modes.
void cross_correlation_contrast(Outcome& o)
{
    SimConfig cfg = config::default_sim_config();
    cfg.herald_detector.dark_click_probability = 1e-5;
    cfg.output_detector.dark_click_probability = 1e-5;
    cfg.n_cycles = 2'500'000;  // 1e7 time bins per mode
    double const grid[] = {cfg.source.mean_pairs};
    auto const row = compare_modes(cfg, grid).front();
    auto const& gm = *row.multiplexed.g_hi;
    auto const& gs = *row.simplex.g_hi;
    double const sigma = (gm.value - gs.value) / std::hypot(gm.std_error, gs.std_error);
    double const hm = *row.multiplexed.herald_rate_hz;
    double const hs = *row.simplex.herald_rate_hz;
    o.detail << "dark: g_mux=" << gm.value << "+/-" << gm.std_error << " g_simplex=" << gs.value
             << "+/-" << gs.std_error << " (" << sigma << " sigma), herald rates " << hm << "/" << hs
             << "; ";
    o.check(sigma >= 5.0, "g_mux > g_simplex at >= 5 sigma");
    o.check(std::abs(hm - hs) <= 0.05 * hs, "matched herald rate");

    // dark = 0, single-pair regime: g ~ 1/p with p the herald probability of
    // the output bin (one cycle for the loop, the pair probability for the
    // bypass where unheralded idlers also reach the output)
    SimConfig clean = config::default_sim_config();
    clean.source.mean_pairs = 0.005;
    clean.n_cycles = 2'500'000;
    double const clean_grid[] = {clean.source.mean_pairs};
    auto const r2 = compare_modes(clean, clean_grid).front();
    double const h = herald_probability(clean.source, clean.source.herald_efficiency);
    double const p_mux = 1.0 - std::pow(1.0 - h, clean.mux.depth);
    double const p_simplex = clean.source.mean_pairs;
    double const dev_m = std::abs(r2.multiplexed.g_hi->value * p_mux - 1.0);
    double const dev_s = std::abs(r2.simplex.g_hi->value * p_simplex - 1.0);
    o.detail << "no dark: g_mux*p=" << r2.multiplexed.g_hi->value * p_mux
             << " g_simplex*p=" << r2.simplex.g_hi->value * p_simplex;
    o.check(dev_m <= 0.10, "g_mux ~ 1/p within 10%");
    o.check(dev_s <= 0.10, "g_simplex ~ 1/p within 10%");
}

// 7. Thinning closure.
void thinning_closure(Outcome& o)
{
    Rng rng(99991);
    PairSourceSpec src;
    src.mean_pairs = 0.1;
    PairSourceSpec direct;
    direct.mean_pairs = 0.05;
    std::vector<unsigned> thinned;
    std::vector<unsigned> reference;
    thinned.reserve(1'000'000);
    reference.reserve(1'000'000);
    for (int i = 0; i < 1'000'000; ++i)
    {
        thinned.push_back(thin(sample_pair_number(src, rng), 0.5, rng));
        reference.push_back(sample_pair_number(direct, rng));
    }
    auto const hom = oracle::homogeneity(histogram(thinned), histogram(reference));
    auto const gof = oracle::goodness_of_fit(histogram(thinned),
                                             [](int k) { return oracle::thermal_pmf(0.05, k); });
    o.detail << "two-sample chi2=" << hom.statistic << " (crit " << hom.critical_1pct << ", dof "
             << hom.dof << "); exact-pmf chi2=" << gof.statistic << " (crit " << gof.critical_1pct
             << ", dof " << gof.dof << ")";
    o.check(hom.pass(), "two-sample chi-square at 1%");
    o.check(gof.pass(), "goodness of fit at 1%");
}

// 8. Optimal depth against exhaustive evaluation.
void optimal_depth_scan(Outcome& o)
{
    int mismatches = 0;
    bool monotone = true;
    for (double eta : {0.7, 0.8, 0.9})
    {
        int prev = 0;
        for (int n = 1; n <= 40; ++n)
        {
            int const m = analytics::optimal_depth(1e-4, eta, n, 20);
            mismatches += m != oracle::optimal_depth(1e-4, eta, n, 20);
            monotone = monotone && m >= prev;
            prev = m;
        }
    }
    o.detail << "mismatches=" << mismatches;
    o.check(mismatches == 0, "agrees with brute force");
    o.check(monotone, "nondecreasing in N");
}

// 9. Determinism and merge identity.
void determinism_and_merge(Outcome& o)
{
    auto const dir = std::filesystem::temp_directory_path() / "loopmux_acceptance";
    std::filesystem::create_directories(dir);
    auto const cfg_path = (dir / "run.ini").string();
    auto const sweep_path = (dir / "sweep.ini").string();
    std::string const run_text =
        "[source]\nmean_pairs = 0.02\n[detectors]\noutput_dark = 1e-5\n[run]\nn_cycles = 100000\nseed = 5\n";
    std::ofstream(cfg_path) << run_text;
    std::ofstream(sweep_path) << run_text << "[sweep]\nkey = mean_pairs\nvalues = 0.005, 0.02\n";

    auto csv = [](std::vector<std::string> const& args) {
        std::ostringstream out;
        std::ostringstream err;
        int const code = cli::run_cli(args, out, err);
        return std::make_pair(code, out.str());
    };
    for (auto const& args : std::vector<std::vector<std::string>>{
             {"simulate", "--config", cfg_path},
             {"simulate", "--config", cfg_path, "--workers", "4"},
             {"sweep", "--config", sweep_path},
             {"analytic"},
             {"optimal-m"}})
    {
        auto const a = csv(args);
        auto const b = csv(args);
        o.check(a.first == 0 && a == b, "byte-identical CSV for " + args[0]);
    }
    std::filesystem::remove_all(dir);

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::uint64_t> u(0, 100000);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial)
    {
        auto const mode = trial % 2 ? SimMode::Multiplexed : SimMode::Simplex;
        int const m = 1 + trial % 6;
        std::vector<TallyCounters> parts;
        auto summed = TallyCounters::zero(mode, m);
        for (int k = 0; k < 3; ++k)
        {
            auto t = TallyCounters::zero(mode, m);
            t.cycles = 100001 + u(rng);
            t.herald_clicks = u(rng);
            t.herald_singles = u(rng);
            t.idler_singles_target = u(rng);
            t.coincidences = std::min(t.herald_singles, t.idler_singles_target) / 3;
            for (int b = 0; b < m; ++b)
            {
                t.target_clicks_by_origin[static_cast<std::size_t>(b)] = u(rng);
                t.coincidences_by_bin[static_cast<std::size_t>(b)] = u(rng);
            }
            summed.cycles += t.cycles;
            summed.herald_clicks += t.herald_clicks;
            summed.herald_singles += t.herald_singles;
            summed.idler_singles_target += t.idler_singles_target;
            summed.coincidences += t.coincidences;
            for (std::size_t b = 0; b < static_cast<std::size_t>(m); ++b)
            {
                summed.target_clicks_by_origin[b] += t.target_clicks_by_origin[b];
                summed.coincidences_by_bin[b] += t.coincidences_by_bin[b];
            }
            parts.push_back(t);
        }
        SimConfig cfg;
        cfg.mux.depth = m;
        mismatches += !(estimate(merge(parts), cfg) == estimate(summed, cfg));
    }
    o.detail << "merge/estimate mismatches=" << mismatches;
    o.check(mismatches == 0, "merge-then-estimate == estimate of summed counts");
}

struct Criterion
{
    int id;
    char const* title;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv)
{
    std::vector<Criterion> const criteria = {
        {1, "closed form vs Monte Carlo (p1=0.01, eta=0.8, m=4, 1e6 cycles)", closed_form_vs_monte_carlo},
        {2, "per-bin enhancement claims at eta=0.8", enhancement_claims},
        {3, "exact analytic reductions", analytic_reductions},
        {4, "controller golden traces and exactly-one-fate", controller_traces},
        {5, "bin contribution structure", bin_contributions},
        {6, "cross-correlation contrast between modes", cross_correlation_contrast},
        {7, "thinning closure chi-square", thinning_closure},
        {8, "optimal depth vs exhaustive scan", optimal_depth_scan},
        {9, "determinism and merge identity", determinism_and_merge},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.push_back(std::stoi(argv[i]));

    int failures = 0;
    for (auto const& c : criteria)
    {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end())
            continue;
        Outcome o;
        try
        {
            c.run(o);
        }
        catch (std::exception const& e)
        {
            o.check(false, std::string("exception: ") + e.what());
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  AC" << c.id << "  " << c.title << "  | "
                  << o.detail.str() << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
