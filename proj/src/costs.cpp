#include "lsf/costs.hpp"

#include <cmath>

namespace lsf {

void CostModelParams::validate() const {
    auto nonneg = [](double v, const char* what) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("costs: ") + what + " must be >= 0");
    };
    nonneg(linear_bps, "linear_bps");
    nonneg(impact_coeff, "impact_coeff");
    nonneg(financing_spread, "financing_spread");
    nonneg(default_borrow_fee, "default_borrow_fee");
    for (const auto& [id, fee] : borrow_fee_override) {
        if (!(fee >= 0.0)) throw std::invalid_argument("costs: negative borrow fee for " + id);
    }
    if (!(trading_days_per_year >= 200.0 && trading_days_per_year <= 260.0)) {
        throw std::invalid_argument("costs: trading_days_per_year must lie in [200, 260]");
    }
}

double CostModelParams::borrow_fee(const std::string& asset_id) const {
    auto it = borrow_fee_override.find(asset_id);
    return it != borrow_fee_override.end() ? it->second : default_borrow_fee;
}

double linear_cost(double q, const CostModelParams& params) { return params.linear_bps * q; }

double impact_cost(double q, double adv, double sigma_daily, const CostModelParams& params) {
    if (!(adv > 0.0)) throw std::domain_error("trade_cost: adv must be > 0");
    return params.impact_coeff * sigma_daily * std::sqrt(q / adv) * q;
}

double trade_cost(double q, double adv, double sigma_daily, const CostModelParams& params) {
    if (!(q >= 0.0)) throw std::domain_error("trade_cost: traded notional must be >= 0");
    if (!(adv > 0.0)) throw std::domain_error("trade_cost: adv must be > 0 (unpriceable trade)");
    if (q == 0.0) return 0.0;
    return linear_cost(q, params) + impact_cost(q, adv, sigma_daily, params);
}

double financing_cost(double gross_exposure, double aum, double rate, double dt_days, double trading_days_per_year) {
    if (!(gross_exposure >= 0.0)) throw std::domain_error("financing_cost: gross exposure must be >= 0");
    return rate * std::max(gross_exposure - aum, 0.0) * dt_days / trading_days_per_year;
}

double borrow_cost(std::span<const double> positions, std::span<const std::string> asset_ids,
                   const CostModelParams& params, double dt_days) {
    if (positions.size() != asset_ids.size()) throw std::invalid_argument("borrow_cost: ids must match positions");
    double total = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!(positions[i] < 0.0)) continue;
        const double fee = params.borrow_fee(asset_ids[i]);
        if (fee < 0.0) throw std::invalid_argument("borrow_cost: negative fee for " + asset_ids[i]);
        total += fee * -positions[i] * dt_days / params.trading_days_per_year;
    }
    return total;
}

}  // namespace lsf
