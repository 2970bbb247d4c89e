#pragma once

// Photon-number statistics of a pulsed pair source, binomial loss channels
// and threshold detectors.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace loopmux {

using Rng = std::mt19937_64;

enum class PairDistribution { Thermal, Poisson };

inline bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

struct PairSourceSpec
{
    double mean_pairs = 0.0;         // mu, pairs per pump pulse
    double herald_efficiency = 1.0;  // eta_h
    double idler_efficiency = 1.0;   // eta_i, source output to multiplexer input
    PairDistribution distribution = PairDistribution::Thermal;

    void validate() const
    {
        if (!(mean_pairs >= 0.0) || !std::isfinite(mean_pairs))
            throw std::invalid_argument("mean_pairs must be finite and >= 0");
        if (!is_probability(herald_efficiency))
            throw std::invalid_argument("herald_efficiency must lie in [0,1]");
        if (!is_probability(idler_efficiency))
            throw std::invalid_argument("idler_efficiency must lie in [0,1]");
    }
};

/// Threshold (non photon-number-resolving) detector.
struct DetectorSpec
{
    double efficiency = 1.0;
    double dark_click_probability = 0.0;  // per bin

    void validate() const
    {
        if (!is_probability(efficiency))
            throw std::invalid_argument("detector efficiency must lie in [0,1]");
        if (!is_probability(dark_click_probability))
            throw std::invalid_argument("dark_click_probability must lie in [0,1]");
    }
};

/// Single-mode thermal pmf mu^n / (1+mu)^(n+1).
inline double thermal_pmf(double mu, long n)
{
    if (mu < 0.0 || n < 0)
        throw std::domain_error("thermal_pmf: mu and n must be non-negative");
    if (mu == 0.0)
        return n == 0 ? 1.0 : 0.0;
    // log form keeps large n finite
    auto const log_p = static_cast<double>(n) * std::log(mu)
                       - static_cast<double>(n + 1) * std::log1p(mu);
    return std::exp(log_p);
}

inline double poisson_pmf(double mu, long n)
{
    if (mu < 0.0 || n < 0)
        throw std::domain_error("poisson_pmf: mu and n must be non-negative");
    if (mu == 0.0)
        return n == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(n) * std::log(mu) - mu
                    - std::lgamma(static_cast<double>(n) + 1.0));
}

inline double pair_pmf(PairSourceSpec const& spec, long n)
{
    return spec.distribution == PairDistribution::Thermal
               ? thermal_pmf(spec.mean_pairs, n)
               : poisson_pmf(spec.mean_pairs, n);
}

/// Probability generating function E[z^n] of the pair-number distribution.
inline double pair_pgf(PairSourceSpec const& spec, double z)
{
    double const mu = spec.mean_pairs;
    if (spec.distribution == PairDistribution::Thermal)
        return 1.0 / (1.0 + mu * (1.0 - z));
    return std::exp(-mu * (1.0 - z));
}

inline unsigned sample_pair_number(PairSourceSpec const& spec, Rng& rng)
{
    double const mu = spec.mean_pairs;
    if (mu == 0.0)
        return 0;
    if (spec.distribution == PairDistribution::Thermal)
    {
        // failures before first success with p = 1/(1+mu) is thermal(mu)
        std::geometric_distribution<unsigned> geo(1.0 / (1.0 + mu));
        return geo(rng);
    }
    std::poisson_distribution<unsigned> poi(mu);
    return poi(rng);
}

/// Binomial loss channel.
inline unsigned thin(unsigned n, double eta, Rng& rng)
{
    if (!is_probability(eta))
        throw std::domain_error("thin: efficiency must lie in [0,1]");
    if (n == 0 || eta == 0.0)
        return 0;
    if (eta == 1.0)
        return n;
    std::binomial_distribution<unsigned> bin(n, eta);
    return bin(rng);
}

inline double click_probability(unsigned n, DetectorSpec const& det)
{
    double const miss = std::pow(1.0 - det.efficiency, static_cast<double>(n));
    return det.dark_click_probability + (1.0 - det.dark_click_probability) * (1.0 - miss);
}

inline bool click(unsigned n, DetectorSpec const& det, Rng& rng)
{
    double const p = click_probability(n, det);
    if (p <= 0.0)
        return false;
    if (p >= 1.0)
        return true;
    std::bernoulli_distribution b(p);
    return b(rng);
}

// Closed forms for the per-bin herald/idler joint statistics. Each pair's
// signal photon survives to a herald click with probability `herald_eta`
// and its idler photon survives with `idler_eta`, independently.

/// P(herald click) in one bin.
inline double herald_probability(PairSourceSpec const& spec,
                                 double herald_eta,
                                 double herald_dark = 0.0)
{
    return 1.0 - pair_pgf(spec, 1.0 - herald_eta) * (1.0 - herald_dark);
}

/// P(herald click and at least one idler photon survives) in one bin,
/// without dark counts. This is the heralded single-photon delivery
/// probability p1 that drives the closed-form multiplexing model.
inline double heralded_delivery_probability(PairSourceSpec const& spec,
                                            double herald_eta,
                                            double idler_eta)
{
    return 1.0 - pair_pgf(spec, 1.0 - herald_eta) - pair_pgf(spec, 1.0 - idler_eta)
           + pair_pgf(spec, (1.0 - herald_eta) * (1.0 - idler_eta));
}

inline std::string to_string(PairDistribution d)
{
    return d == PairDistribution::Thermal ? "thermal" : "poisson";
}

}  // namespace loopmux
