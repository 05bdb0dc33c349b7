#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsf/costs.hpp"
#include "lsf/panel.hpp"
#include "lsf/risk.hpp"
#include "lsf/signals.hpp"

namespace lsf {

enum class StrategyMode { LH, LS };

std::string_view strategy_name(StrategyMode m);
StrategyMode strategy_from_name(std::string_view name);

struct Portfolio {
    Date date{};
    std::vector<double> positions;  ///< signed currency notional per asset
    double hedge_notional = 0.0;    ///< signed notional on the index future
    double aum = 0.0;

    double gross() const;
    double net() const;
    double cash() const { return aum - net(); }
};

struct OptimizerConstraints {
    double aum = 1.0e8;
    double cap = 0.03;             ///< per-asset position limit as a fraction of aum
    double min_investment = 0.0;   ///< lower bound on sum of positions, currency

    void validate() const;
};

/// Objective: sum_i mu_i w_i - cost_aversion * sum_i TradeCost(|w_i - p_i|), mu_i = signal_scale * s_i.
struct OptimizerSettings {
    double signal_scale = 1.0e-2;  ///< expected return per unit score; top scores carry 50 bps
    double cost_aversion = 1.0;
    double tolerance = 1.0e-12;  ///< relative width of the final budget multiplier bracket
};

struct OptimizerResult {
    std::vector<double> positions;
    double objective = 0.0;
    double budget_multiplier = 0.0;
    std::size_t iterations = 0;
};

/**
 * Objective of the long-only problem at w. Assets with a missing signal
 * contribute only their trade cost. `adv` and `sigma_daily` price the trades.
 */
double long_only_objective(std::span<const double> w, std::span<const double> signal,
                           std::span<const double> current, std::span<const double> adv,
                           std::span<const double> sigma_daily, const CostModelParams& costs,
                           const OptimizerSettings& settings);

/**
 * Exact maximizer of long_only_objective subject to 0 <= w_i <= cap*aum and
 * min_investment <= sum w <= aum. Assets with a missing signal are liquidated.
 *
 * Each coordinate has a closed-form response to a budget multiplier nu; nu is
 * found by bisection and the two bracketing responses are mixed so that the
 * budget holds exactly. With zero trading costs this reproduces the greedy
 * fill of the linear program, ties sharing equally.
 */
OptimizerResult optimize_long_only(std::span<const double> signal, std::span<const double> current,
                                   std::span<const double> adv, std::span<const double> sigma_daily,
                                   const CostModelParams& costs, const OptimizerConstraints& constraints,
                                   const OptimizerSettings& settings = {});

enum class TieBreak { Low, Stay, High };

/**
 * Best position for one asset: maximize a*w - lambda*(lin*|w-p| + k*|w-p|^1.5)
 * over [lo, hi]. The maximizer is a whole interval only when k = 0 (or
 * lambda = 0) and a = +-lambda*lin; `tie` then picks its low end, the point
 * nearest p, or its high end.
 */
double coordinate_response(double a, double p, double lo, double hi, double lin, double k, double lambda,
                           TieBreak tie);

/// Missing beta on a held asset.
class MissingBetaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sets hedge_notional = -sum_i beta_i * position_i. Throws MissingBetaError for a held asset without beta.
Portfolio hedge_with_index(Portfolio long_portfolio, std::span<const double> betas);

enum class LsNeutrality { IndexBeta, MarketMode };

struct LongShortInputs {
    std::span<const double> signal;        ///< missing = not in the book
    std::span<const double> current;
    std::span<const double> adv;
    std::span<const double> sigma_daily;
    /// Second neutrality direction (index betas or leading eigenvector), missing = excluded.
    std::span<const double> exposure;
    /// Daily covariance over `covariance_assets` (indices into the asset list).
    const Eigen::MatrixXd* covariance = nullptr;
    std::span<const std::size_t> covariance_assets;
};

struct LongShortSettings {
    double aum = 1.0e8;
    double cap = 0.03;
    double vol_target = 0.10;  ///< annualized, fraction of aum
    double periods_per_year = 252.0;
    bool neutralize_exposure = true;
    OptimizerSettings optimizer;
};

struct LongShortResult {
    std::vector<double> positions;
    double predicted_vol = 0.0;  ///< annualized, currency
    double target_vol = 0.0;     ///< annualized, currency
    bool cap_binding = false;    ///< vol target unreachable under caps; book scaled down
    double step = 0.0;           ///< fraction of the way moved from the current book to the desired one
    double dollar_residual = 0.0;
    double exposure_residual = 0.0;
};

/**
 * Vol-targeted long-short book: scores projected onto {sum w = 0, e.w = 0},
 * scaled to the target with the covariance (the desired book). The traded
 * book is current + eta * (desired - current), eta in [0, 1] maximizing
 * signal overlap minus trading cost along that segment (closed form); it is
 * then re-projected and re-scaled. Zero costs give eta = 1. When caps prevent
 * the target the whole book is scaled down and cap_binding is set.
 */
LongShortResult build_long_short(const LongShortInputs& in, const CostModelParams& costs,
                                 const LongShortSettings& settings);

struct StrategyConfig {
    StrategyMode mode = StrategyMode::LH;
    double aum = 1.0e8;
    double cap = 0.03;
    CostModelParams costs;
    OptimizerSettings optimizer;
    double vol_target = 0.10;  ///< LS annualized target, fraction of aum
    LsNeutrality neutrality = LsNeutrality::IndexBeta;
    std::size_t warmup = 250;        ///< rows before the first trade
    std::size_t beta_window = 250;
    std::size_t vol_window = 250;
    std::size_t corr_window = 250;
    std::size_t corr_refresh = 21;
    std::size_t execution_lag = 0;   ///< 0: trade on the same close as the signal; 1: next close
    double max_calendar_gap_days = 10.0;

    void validate() const;
};

struct BacktestDay {
    Date date{};
    double stock_pnl = 0.0;
    double hedge_pnl = 0.0;
    double returns_pnl = 0.0;  ///< stock_pnl + hedge_pnl
    double trading_cost = 0.0;
    double financing_cost = 0.0;
    double borrow_cost = 0.0;
    double total = 0.0;
    double traded_notional = 0.0;
    double turnover = 0.0;  ///< traded / aum (LH) or traded / gmv (LS)
    double long_exposure = 0.0;
    double short_exposure = 0.0;
    double hedge_notional = 0.0;
    double predicted_vol = kMissing;  ///< LS, annualized fraction of aum
    double target_vol = kMissing;
    double dollar_residual = 0.0;  ///< |sum w| / gmv of the post-trade book
    bool cap_binding = false;

    double gmv() const { return long_exposure + short_exposure; }
};

/// Fixed-order sum used for every day's total.
inline double sum_components(double returns_pnl, double trading, double financing, double borrow) {
    return ((returns_pnl + trading) + financing) + borrow;
}

struct BacktestResult {
    StrategyMode mode = StrategyMode::LH;
    double aum = 0.0;
    std::size_t first_row = 0;           ///< panel row of days[0]
    std::vector<std::string> assets;
    std::vector<BacktestDay> days;
    PanelMatrix positions;               ///< post-trade book, days x assets
    std::vector<double> index_returns;   ///< index return of each day

    std::vector<double> total_pnl() const;
};

/**
 * Daily close-to-close loop. Each row: mark the book held since the previous
 * close, accrue financing and borrow on it, then trade to the new target at
 * the close with costs booked. `index` is aligned with the panel dates.
 * `vol_target_path` (LS only, annualized fraction of aum per row) overrides
 * config.vol_target where valid.
 */
BacktestResult run_backtest(const ReturnsPanel& panel, const SignalPanel& signal, std::span<const double> index,
                            const StrategyConfig& config, std::span<const double> vol_target_path = {});

/**
 * Per panel row, the trailing realized vol of a run's P&L strictly before that
 * row (annualized fraction of aum), refreshed every `refresh` rows. Missing
 * until 60 days are available.
 */
std::vector<double> trailing_vol_target(const BacktestResult& result, std::size_t n_rows, std::size_t window = 250, std::size_t refresh = 21,
                                        double periods_per_year = 252.0);

}  // namespace lsf
