#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsf/famafrench.hpp"
#include "lsf/portfolio.hpp"

namespace lsf {

/// Annualized Sharpe of pnl / base; nullopt for fewer than 2 points or zero variance.
std::optional<double> sharpe(std::span<const double> pnl, double base = 1.0, double periods_per_year = 252.0);

/// Pearson correlation over pairs where both sides are valid; nullopt when either side is constant.
std::optional<double> correlation(std::span<const double> x, std::span<const double> y);

/// OLS slope of y on x over valid pairs; nullopt when x is constant.
std::optional<double> ols_beta(std::span<const double> y, std::span<const double> x);

struct DrawdownStats {
    std::vector<double> drawdown;  ///< (equity - running peak) / aum, <= 0
    double mean_depth = 0.0;
    double max_depth = 0.0;
};

/// Running peak starts at the first point of the curve.
DrawdownStats drawdown_stats(std::span<const double> equity, double aum);

/// Cumulative sum of a P&L series (equity relative to start).
std::vector<double> equity_curve(std::span<const double> pnl);

struct CorrelationSummary {
    double mean = kMissing;  ///< mean of the unmasked off-diagonal correlations
    std::size_t n_pairs = 0;
    std::size_t n_masked = 0;
};

CorrelationSummary leg_correlation_summary(const std::vector<std::vector<double>>& streams);

struct AllocationResult {
    std::vector<double> weights;  ///< sum to 1
    double long_weight = 0.0;     ///< aggregate weight on streams flagged long
    double short_weight = 0.0;
};

class SingularCovarianceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MaxSharpeOptions {
    bool long_only = false;
    /// Minimum-norm solve instead of an error on a singular covariance (duplicated streams split evenly).
    bool allow_singular = false;
    /// Clip the stream correlation matrix before solving.
    bool clean_correlation = false;
};

/**
 * w proportional to inverse(covariance) * mean, normalized to sum 1. With
 * long_only the most negative weight is dropped and the rest re-solved until
 * all are >= 0. Streams are the columns of `returns`.
 */
AllocationResult max_sharpe_weights(const Eigen::MatrixXd& returns, const std::vector<bool>& is_long,
                                    const MaxSharpeOptions& options = {});

struct SmbDiagnostic {
    std::string factor;
    std::vector<double> delta;  ///< (L - bL I) - (bS I - S)
    std::optional<double> correlation_with_smb;
};

/**
 * delta = (longs - beta_long * index) - (beta_short * index - shorts) and its
 * correlation with SMB. Betas are fitted in-sample when not given.
 */
SmbDiagnostic smb_diagnostic(const std::string& factor, std::span<const double> longs,
                             std::span<const double> shorts, std::span<const double> index,
                             std::span<const double> smb, std::optional<double> beta_long = std::nullopt,
                             std::optional<double> beta_short = std::nullopt);

struct HedgedLeg {
    std::string name;  ///< e.g. HML_long
    bool is_long = true;
    double beta = 1.0;            ///< raw leg beta to the hedge index
    std::vector<double> returns;  ///< beta-neutral excess returns
};

/**
 * Beta-neutral legs: excess returns rescaled to beta one against the index,
 * then the index removed. Long legs are long/beta - index; short legs are
 * bets against the shorts, index - short/beta. `index_excess` empty uses each
 * factor's own six-block blend.
 */
std::vector<HedgedLeg> hedge_legs(const LegPanel& legs, std::span<const double> index_excess = {});

struct PerfSummary {
    double sharpe = kMissing;     ///< annualized, NaN if undefined
    double annual_return = 0.0;   ///< fraction of aum
    double annual_vol = 0.0;
    double mean_drawdown = 0.0;
    double max_drawdown = 0.0;
    double returns_pnl = 0.0;     ///< annualized components, fraction of aum
    double trading_cost = 0.0;
    double financing_cost = 0.0;
    double borrow_cost = 0.0;
    double mean_turnover = 0.0;
    double mean_gmv = 0.0;        ///< fraction of aum
    std::size_t n_days = 0;
};

PerfSummary cost_attribution(const BacktestResult& result, double periods_per_year = 252.0);

}  // namespace lsf
