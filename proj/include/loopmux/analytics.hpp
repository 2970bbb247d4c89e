#pragma once

// Closed-form performance model of loop multiplexing over m pump pulses,
// plus the design tools built on it (optimal depth, break-even source
// count, per-bin contribution prediction) and the count-based estimators
// used on measured or simulated data.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "photon_stats.hpp"

namespace loopmux::analytics {

struct AnalyticParams
{
    double p1 = 1e-4;        // single-pulse heralded delivery probability
    double eta_loop = 0.8;   // single loop-pass efficiency
    double rep_rate = 5e6;   // pump pulses per second
    int depth = 4;
    int n_sources = 10;

    void validate() const
    {
        if (!is_probability(p1))
            throw std::invalid_argument("p1 must lie in [0,1]");
        if (!(eta_loop > 0.0 && eta_loop <= 1.0))
            throw std::invalid_argument("eta_loop must lie in (0,1]");
        if (!(rep_rate > 0.0) || !std::isfinite(rep_rate))
            throw std::invalid_argument("rep_rate must be > 0");
        if (depth < 1)
            throw std::invalid_argument("depth must be >= 1");
        if (n_sources < 1)
            throw std::invalid_argument("n_sources must be >= 1");
    }
};

namespace detail {

inline void check_inputs(double p1, double eta_loop, int m)
{
    if (!is_probability(p1) || !is_probability(eta_loop))
        throw std::domain_error("probabilities must lie in [0,1]");
    if (m < 1)
        throw std::domain_error("multiplexing depth must be >= 1");
}

inline void require_positive_p1(double p1)
{
    if (!(p1 > 0.0))
        throw std::domain_error("improvement ratios are undefined for p1 = 0");
}

}  // namespace detail

/// Probability of delivering a heralded photon when multiplexing over m
/// pulses: 1 - prod_{t=1..m} (1 - p1 eta^t).
///
/// Accumulated as P_t = P_{t-1} + (1 - P_{t-1}) p1 eta^t, which equals the
/// product form and avoids cancellation at small p1.
inline double p1_multiplexed(double p1, double eta_loop, int m)
{
    detail::check_inputs(p1, eta_loop, m);
    double p = 0.0;
    double eta_t = 1.0;
    for (int t = 1; t <= m; ++t)
    {
        eta_t *= eta_loop;
        p += (1.0 - p) * p1 * eta_t;
    }
    return p;
}

/// Per-output-bin enhancement p1^(m) / p1.
inline double improvement_per_bin(double p1, double eta_loop, int m)
{
    detail::check_inputs(p1, eta_loop, m);
    detail::require_positive_p1(p1);
    // Q_t = P_t / p1 evaluated directly so that m = 1 gives exactly eta.
    double q = 0.0;
    double eta_t = 1.0;
    for (int t = 1; t <= m; ++t)
    {
        eta_t *= eta_loop;
        q += (1.0 - p1 * q) * eta_t;
    }
    return q;
}

/// Single-photon count rate per second, R p1^(m) / m.
inline double count_rate_multiplexed(double rep_rate, double p1, double eta_loop, int m)
{
    if (!(rep_rate > 0.0))
        throw std::domain_error("rep_rate must be > 0");
    return rep_rate * p1_multiplexed(p1, eta_loop, m) / m;
}

/// Count-rate change relative to the simplex source, p1^(m) / (m p1).
inline double rate_ratio(double p1, double eta_loop, int m)
{
    return improvement_per_bin(p1, eta_loop, m) / m;
}

/// Rate of N-fold coincidences from N independent multiplexed sources,
/// (R/m) [p1^(m)]^N.
inline double n_source_rate(double rep_rate, double p1, double eta_loop, int m, int n_sources)
{
    if (n_sources < 1)
        throw std::domain_error("n_sources must be >= 1");
    if (!(rep_rate > 0.0))
        throw std::domain_error("rep_rate must be > 0");
    return rep_rate / m * std::pow(p1_multiplexed(p1, eta_loop, m), n_sources);
}

/// N-source speed-up from a per-bin improvement factor: f^N / m.
inline double n_source_speedup_from_factor(double f_p1, int m, int n_sources)
{
    if (m < 1 || n_sources < 1)
        throw std::domain_error("m and n_sources must be >= 1");
    return std::pow(f_p1, n_sources) / m;
}

/// N-source speed-up (1/m) (p1^(m)/p1)^N.
inline double n_source_speedup(double p1, double eta_loop, int m, int n_sources)
{
    return n_source_speedup_from_factor(improvement_per_bin(p1, eta_loop, m), m, n_sources);
}

/// Depth in 1..m_max maximising the N-source speed-up. Ties go to the
/// smaller depth.
inline int optimal_depth(double p1, double eta_loop, int n_sources, int m_max)
{
    if (m_max < 1)
        throw std::domain_error("m_max must be >= 1");
    int best_m = 1;
    double best = n_source_speedup(p1, eta_loop, 1, n_sources);
    for (int m = 2; m <= m_max; ++m)
    {
        double const f = n_source_speedup(p1, eta_loop, m, n_sources);
        if (f > best)
        {
            best = f;
            best_m = m;
        }
    }
    return best_m;
}

/// Smallest N with f_p1^N / m >= 1; empty when no N qualifies.
inline std::optional<int> break_even_sources_from_factor(double f_p1, int m)
{
    if (m < 1)
        throw std::domain_error("m must be >= 1");
    if (!(f_p1 >= 0.0))
        throw std::domain_error("improvement factor must be >= 0");
    if (n_source_speedup_from_factor(f_p1, m, 1) >= 1.0)
        return 1;
    if (f_p1 <= 1.0)
        return std::nullopt;
    auto n = static_cast<long>(std::ceil(std::log(static_cast<double>(m)) / std::log(f_p1)));
    n = std::max(n, 1L);
    // log rounding can land one step off in either direction
    while (n > 1 && n_source_speedup_from_factor(f_p1, m, static_cast<int>(n - 1)) >= 1.0)
        --n;
    while (n_source_speedup_from_factor(f_p1, m, static_cast<int>(n)) < 1.0)
        ++n;
    return static_cast<int>(n);
}

inline std::optional<int> break_even_sources(double p1, double eta_loop, int m)
{
    return break_even_sources_from_factor(improvement_per_bin(p1, eta_loop, m), m);
}

/// Insertion loss in dB to transmission.
inline double db_to_efficiency(double loss_db)
{
    if (!(loss_db >= 0.0))
        throw std::domain_error("loss in dB must be >= 0");
    return std::pow(10.0, -loss_db / 10.0);
}

/// Predicted fraction of output photons originating from each herald bin
/// (index 0 is bin 1). A photon heralded in bin b makes m - b + 1 loop
/// passes. Low-p1 limit: overwrites by later heralds are neglected, so p1
/// only enters through validation.
inline std::vector<double> expected_bin_contributions(double p1,
                                                      double eta_loop,
                                                      int m,
                                                      std::vector<double> const& herald_windows)
{
    detail::check_inputs(p1, eta_loop, m);
    if (static_cast<int>(herald_windows.size()) != m)
        throw std::domain_error("need one herald window per bin");
    std::vector<double> w(static_cast<std::size_t>(m));
    double total = 0.0;
    for (int b = 1; b <= m; ++b)
    {
        double const window = herald_windows[static_cast<std::size_t>(b - 1)];
        if (!(window > 0.0 && window <= 1.0))
            throw std::domain_error("herald windows must lie in (0,1]");
        w[static_cast<std::size_t>(b - 1)] = window * std::pow(eta_loop, m - b + 1);
        total += w[static_cast<std::size_t>(b - 1)];
    }
    for (auto& x : w)
        x /= total;
    return w;
}

/// Herald/idler cross-correlation g(0) = R C / (S_h S_i) from rates.
inline double cross_correlation(double bin_rate,
                                double coincidences,
                                double herald_singles,
                                double idler_singles)
{
    if (!(herald_singles > 0.0) || !(idler_singles > 0.0))
        throw std::domain_error("cross_correlation: singles must be > 0");
    return bin_rate * coincidences / (herald_singles * idler_singles);
}

/// Same estimator from raw counts accumulated over `bins` time bins.
inline double cross_correlation_counts(double bins,
                                       double coincidences,
                                       double herald_singles,
                                       double idler_singles)
{
    return cross_correlation(bins, coincidences, herald_singles, idler_singles);
}

/// Heralding (Klyshko) efficiency: coincidences per herald.
inline double klyshko_efficiency(double coincidences, double herald_singles)
{
    if (!(herald_singles > 0.0))
        throw std::domain_error("klyshko_efficiency: herald singles must be > 0");
    return coincidences / herald_singles;
}

struct AnalyticRow
{
    int depth = 1;
    double p1m = 0.0;        // p1^(m)
    double f_p1 = 0.0;       // per-bin enhancement
    double c1m = 0.0;        // single-photon rate, 1/s
    double f_c1 = 0.0;       // rate change vs simplex
    double cnm = 0.0;        // N-fold rate, 1/s
    double f_n = 0.0;        // N-source speed-up
};

using AnalyticReport = std::vector<AnalyticRow>;

/// One row per depth 1..m_max at the given p1, eta, R and N. The ratio
/// columns are NaN when p1 = 0.
inline AnalyticReport analytic_report(AnalyticParams const& params, int m_max)
{
    params.validate();
    if (m_max < 1)
        throw std::invalid_argument("m_max must be >= 1");
    AnalyticReport report;
    report.reserve(static_cast<std::size_t>(m_max));
    for (int m = 1; m <= m_max; ++m)
    {
        AnalyticRow row;
        row.depth = m;
        row.p1m = p1_multiplexed(params.p1, params.eta_loop, m);
        row.c1m = params.rep_rate * row.p1m / m;
        row.cnm = params.rep_rate / m * std::pow(row.p1m, params.n_sources);
        if (params.p1 > 0.0)
        {
            row.f_p1 = improvement_per_bin(params.p1, params.eta_loop, m);
            row.f_c1 = row.f_p1 / m;
            row.f_n = n_source_speedup_from_factor(row.f_p1, m, params.n_sources);
        }
        else
        {
            row.f_p1 = row.f_c1 = row.f_n = std::nan("");
        }
        report.push_back(row);
    }
    return report;
}

}  // namespace loopmux::analytics
