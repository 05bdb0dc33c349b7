#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>

namespace lsf {

/**
 * Cost parameters. Defaults are placeholders for a desk calibration:
 * 5 bps one-way linear cost, square-root impact coefficient 1, 2%/yr
 * financing spread on leverage and 25 bps/yr general-collateral borrow.
 */
struct CostModelParams {
    double linear_bps = 5.0e-4;         ///< one-way, as a fraction of traded notional
    double impact_coeff = 1.0;          ///< Y in  Y * sigma * sqrt(q / ADV)
    double financing_spread = 0.02;     ///< annualized, on gross exposure above AUM
    double default_borrow_fee = 0.0025; ///< annualized, on short notional
    std::map<std::string, double> borrow_fee_override;  ///< per asset id, annualized
    double trading_days_per_year = 252.0;

    void validate() const;
    double borrow_fee(const std::string& asset_id) const;
    bool zero_trading_cost() const noexcept { return linear_bps == 0.0 && impact_coeff == 0.0; }
};

/// P&L contributions (all <= 0).
struct CostBreakdown {
    double trading = 0.0;
    double financing = 0.0;
    double borrow = 0.0;

    double total() const noexcept { return trading + financing + borrow; }
};

/// Linear part: linear_bps * q.
double linear_cost(double q, const CostModelParams& params);
/// Square-root impact part: impact_coeff * sigma_daily * sqrt(q / adv) * q.
double impact_cost(double q, double adv, double sigma_daily, const CostModelParams& params);

/// Cost of trading |q| notional; throws std::domain_error for adv <= 0 or q < 0.
double trade_cost(double q, double adv, double sigma_daily, const CostModelParams& params);

/// rate * max(gross - aum, 0) * dt_days / trading_days_per_year.
double financing_cost(double gross_exposure, double aum, double rate, double dt_days,
                      double trading_days_per_year = 252.0);

/**
 * Sum over short positions of fee * |position| * dt_days / trading_days_per_year,
 * fee from the per-asset override else the default. Positive entries are
 * ignored. `asset_ids` is parallel to `positions`.
 */
double borrow_cost(std::span<const double> positions, std::span<const std::string> asset_ids,
                   const CostModelParams& params, double dt_days);

}  // namespace lsf
