/**
 * @file toy_model.hpp
 * @brief Two-asset model of when explicit shorts beat an index hedge.
 *
 * Asset returns are normalized so that both assets have unit market beta
 * and Asset 1 has unit factor loading:
 *
 *   R1 = M + F + e1
 *   R2 = M - alpha2 * F + e2
 *
 * with F, e1, e2 independent, E(e_i) = 0 and E(F) > 0. The long-short
 * book is {1, -1, 0} and the hedged long-only book is {1, 0, -1} in
 * (Asset 1, Asset 2, Market) weights. Sharpe ratios here are per period;
 * annualization lives in analytics.
 */
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lsf/panel.hpp"

namespace lsf {

class DegenerateVarianceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ToyModelParams {
    double mean_f = 1.0;  ///< E(F) per period, > 0
    double var_f = 1.0;   ///< Var(F) per period, > 0
    double alpha2 = 0.0;  ///< short-asset factor loading magnitude, >= 0
    double gamma = 0.0;   ///< Var(e1) / Var(F), >= 0
    double kappa = 1.0;   ///< Var(e2) / Var(e1), >= 0

    double var_eps1() const noexcept { return gamma * var_f; }
    double var_eps2() const noexcept { return kappa * gamma * var_f; }

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;
};

/// Market moments used only by the simulator; the Sharpe formulas do not depend on them.
struct ToyMarket {
    double mean = 0.0;
    double vol = 1.0;
};

/// Weights on (Asset 1, Asset 2, Market).
struct ToyPortfolio {
    std::array<double, 3> weights{};

    static constexpr ToyPortfolio long_short() noexcept { return {{1.0, -1.0, 0.0}}; }
    static constexpr ToyPortfolio hedged_long() noexcept { return {{1.0, 0.0, -1.0}}; }
};

double sr_long_short(const ToyModelParams& p);
double sr_hedged_long(const ToyModelParams& p);

/// Closed-form SR(LS) / SR(LH); independent of mean_f and var_f.
double sr_ratio(const ToyModelParams& p);

/// Smallest alpha2 for which the long-short book wins: sqrt(1 + kappa) - 1.
double shorts_threshold(double kappa);

/// Per-period draws. f, eps1, eps2 are kept so tests can check independence.
struct ToySample {
    std::vector<double> r1, r2, market, f, eps1, eps2;

    std::size_t size() const noexcept { return r1.size(); }
    /// Per-period P&L of a (w1, w2, wM) book.
    std::vector<double> pnl(const ToyPortfolio& book) const;
};

/// Samples per RNG substream. Substream k covers periods [k*kToyChunk, (k+1)*kToyChunk).
inline constexpr std::size_t kToyChunk = 4096;

/**
 * Gaussian draws of (F, e1, e2, M) in that order for each period. Chunks of
 * kToyChunk periods use independent substreams keyed by (seed, chunk) and
 * may be generated concurrently; the output does not depend on the thread count.
 */
ToySample simulate_toy_returns(const ToyModelParams& p, std::size_t n, std::uint64_t seed,
                               const ToyMarket& market = {}, unsigned threads = 0);

/// Sample Sharpe ratio (mean / sample std); nullopt for fewer than 2 points or zero variance.
std::optional<double> sample_sharpe(const std::vector<double>& x);

// ---------------------------------------------------------------------------
// N-asset generalization used as the backtest oracle.

struct SyntheticUniverseSpec {
    std::size_t n_assets = 200;
    std::size_t n_periods = 1000;
    double loading_long = 1.0;         ///< factor loading of the first half
    double loading_short_scale = 0.8;  ///< the second half loads -loading_short_scale * loading_long
    double resid_vol_long = 0.01;
    double resid_vol_short = 0.01;
    double market_mean = 0.0;
    double market_vol = 0.01;
    double factor_mean = 0.0005;
    double factor_vol = 0.003;
    std::uint64_t seed = 1;

    // Plumbing for the generated panel.
    Date start_date = Date{std::chrono::year{2000} / 1 / 3};
    double adv = 5.0e7;          ///< currency per day, same for every asset
    double initial_price = 100.0;
    double shares = 1.0e7;
    std::string region = "SYN";

    void validate() const;
};

struct UniverseTruth {
    std::vector<double> loadings;     ///< per-asset factor loading
    std::vector<double> market_beta;  ///< per-asset market beta (all 1)
    Series market;                    ///< M_t
    Series factor;                    ///< F_t
};

struct SyntheticUniverse {
    ReturnsPanel panel;
    UniverseTruth truth;
};

/**
 * Asset i return = M_t + l_i F_t + e_{i,t}; l_i = +loading_long for the
 * first half and -loading_short_scale * loading_long for the second.
 * Draw order per period is F, e_0 .. e_{n-1}, M with the same chunked
 * substreams as simulate_toy_returns, so n_assets = 2 reproduces its layout.
 * The panel also carries price, adv, mcap and smooth fundamentals so every
 * descriptor is computable.
 */
SyntheticUniverse generate_universe(const SyntheticUniverseSpec& spec);

/// Universe spec whose first two assets reproduce `p` (Asset 1, Asset 2).
SyntheticUniverseSpec toy_universe_spec(const ToyModelParams& p, std::size_t n_periods, std::uint64_t seed,
                                        const ToyMarket& market = {});

}  // namespace lsf
