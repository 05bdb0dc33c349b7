#include "lsf/portfolio.hpp"

#include <cmath>
#include <optional>

namespace lsf {

void StrategyConfig::validate() const {
    if (!(aum > 0.0)) throw std::invalid_argument("backtest: aum must be > 0");
    if (!(cap > 0.0 && cap <= 1.0)) throw std::invalid_argument("backtest: cap must lie in (0, 1]");
    if (!(vol_target > 0.0)) throw std::invalid_argument("backtest: vol_target must be > 0");
    if (beta_window < 2 || vol_window < 2 || corr_window < kMinCleaningObservations) {
        throw std::invalid_argument("backtest: estimation windows too short (corr_window needs >= 60)");
    }
    if (corr_refresh == 0) throw std::invalid_argument("backtest: corr_refresh must be >= 1");
    if (execution_lag > 1) throw std::invalid_argument("backtest: execution_lag must be 0 or 1");
    if (!(optimizer.cost_aversion >= 0.0)) throw std::invalid_argument("backtest: cost_aversion must be >= 0");
    costs.validate();
}

std::vector<double> BacktestResult::total_pnl() const {
    std::vector<double> out;
    out.reserve(days.size());
    for (const auto& d : days) out.push_back(d.total);
    return out;
}

namespace {

double cell(const PanelMatrix& m, std::size_t t, std::size_t i) {
    return m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
}

struct RiskModel {
    std::vector<std::size_t> assets;
    Eigen::MatrixXd covariance;
    std::vector<double> leading;  ///< per asset, NaN outside the model
};

std::optional<RiskModel> fit_risk_model(const PanelMatrix& ret, std::size_t t, std::size_t window,
                                        const std::vector<bool>& candidate) {
    const std::size_t rows = std::min(window, t + 1);
    if (rows < kMinCleaningObservations) return std::nullopt;
    const std::size_t first = t + 1 - rows;
    const std::size_t N = static_cast<std::size_t>(ret.cols());
    RiskModel model;
    for (std::size_t i = 0; i < N; ++i) {
        if (!candidate[i]) continue;
        std::size_t n = 0;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t s = first; s <= t; ++s) {
            const double r = cell(ret, s, i);
            if (!is_valid(r)) continue;
            ++n;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        if (n >= kMinCleaningObservations && hi > lo) model.assets.push_back(i);
    }
    if (model.assets.size() < 2) return std::nullopt;
    Eigen::MatrixXd window_returns(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(model.assets.size()));
    for (std::size_t k = 0; k < model.assets.size(); ++k) {
        for (std::size_t s = first; s <= t; ++s) {
            window_returns(static_cast<Eigen::Index>(s - first), static_cast<Eigen::Index>(k)) =
                cell(ret, s, model.assets[k]);
        }
    }
    const auto corr = clean_correlation(window_returns);
    model.covariance = corr.covariance();
    const Eigen::VectorXd v = corr.leading_eigenvector();
    model.leading.assign(N, kMissing);
    for (std::size_t k = 0; k < model.assets.size(); ++k) model.leading[model.assets[k]] = v(static_cast<Eigen::Index>(k));
    return model;
}

}  // namespace

BacktestResult run_backtest(const ReturnsPanel& panel, const SignalPanel& signal, std::span<const double> index,
                            const StrategyConfig& config, std::span<const double> vol_target_path) {
    config.validate();
    const std::size_t T = panel.n_dates();
    const std::size_t N = panel.n_assets();
    if (signal.dates != panel.dates() || static_cast<std::size_t>(signal.scores.cols()) != N) {
        throw std::invalid_argument("run_backtest: signal calendar/assets differ from the panel");
    }
    if (index.size() != T) throw std::invalid_argument("run_backtest: index series not aligned with the panel");
    if (!vol_target_path.empty() && vol_target_path.size() != T) {
        throw std::invalid_argument("run_backtest: vol target path not aligned with the panel");
    }
    const auto& dates = panel.dates();
    for (std::size_t t = 1; t < T; ++t) {
        const auto gap = (dates[t] - dates[t - 1]).count();
        if (gap <= 0) throw std::invalid_argument("run_backtest: dates not strictly increasing at " + format_iso_date(dates[t]));
        if (static_cast<double>(gap) > config.max_calendar_gap_days) {
            throw std::invalid_argument("run_backtest: calendar gap of " + std::to_string(gap) + " days before " +
                                        format_iso_date(dates[t]));
        }
    }
    const bool costly = !config.costs.zero_trading_cost();
    if (costly && !panel.has(Field::Adv)) throw std::invalid_argument("run_backtest: trading costs need field 'adv'");

    const PanelMatrix& ret = panel.field(Field::Ret);
    const PanelMatrix betas = rolling_betas(ret, index, config.beta_window, config.beta_window / 2);
    const PanelMatrix vols = rolling_vol(ret, config.vol_window, std::min<std::size_t>(60, config.vol_window));
    const PanelMatrix* adv_field = panel.has(Field::Adv) ? &panel.field(Field::Adv) : nullptr;

    const std::size_t first_row = std::max(config.warmup, config.execution_lag);
    if (first_row >= T) throw std::invalid_argument("run_backtest: warmup leaves no rows to trade");

    BacktestResult result;
    result.mode = config.mode;
    result.aum = config.aum;
    result.first_row = first_row;
    for (const auto& a : panel.assets()) result.assets.push_back(a.id);
    result.positions = PanelMatrix::Zero(static_cast<Eigen::Index>(T - first_row), static_cast<Eigen::Index>(N));
    result.days.reserve(T - first_row);

    const double days_per_year = config.costs.trading_days_per_year;
    const PanelMatrix* fee_field = panel.has(Field::BorrowFee) ? &panel.field(Field::BorrowFee) : nullptr;
    std::vector<double> base_fee(N);
    for (std::size_t i = 0; i < N; ++i) {
        base_fee[i] = config.costs.borrow_fee(result.assets[i]);
        if (fee_field) {
            for (Eigen::Index t = 0; t < fee_field->rows(); ++t) {
                if ((*fee_field)(t, static_cast<Eigen::Index>(i)) < 0.0) {
                    throw std::invalid_argument("run_backtest: negative borrow fee for " + result.assets[i]);
                }
            }
        }
    }
    std::vector<double> p(N, 0.0), last_adv(N, kMissing), last_sigma(N, kMissing);
    std::vector<double> sig(N), adv_now(N), sigma_now(N), exposure(N);
    double hedge = 0.0;
    std::optional<RiskModel> risk;

    for (std::size_t t = first_row; t < T; ++t) {
        BacktestDay day;
        day.date = dates[t];
        const std::size_t d = t - first_row;

        // Mark the book held since the previous close.
        const double idx = is_valid(index[t]) ? index[t] : 0.0;
        double stock = 0.0, gross_held = std::abs(hedge);
        for (std::size_t i = 0; i < N; ++i) {
            gross_held += std::abs(p[i]);
            if (p[i] == 0.0) continue;
            const double r = cell(ret, t, i);
            if (is_valid(r)) {
                stock += p[i] * r;
            }
        }
        day.stock_pnl = stock;
        day.hedge_pnl = hedge * idx;
        day.returns_pnl = stock + day.hedge_pnl;
        day.financing_cost = -financing_cost(gross_held, config.aum, config.costs.financing_spread, 1.0, days_per_year);
        if (fee_field) {
            // Per-day fees from the panel where present, else the configured schedule.
            double borrow = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                if (!(p[i] < 0.0)) continue;
                const double f = cell(*fee_field, t, i);
                borrow += (is_valid(f) ? f : base_fee[i]) * -p[i] / days_per_year;
            }
            day.borrow_cost = -borrow;
        } else {
            day.borrow_cost = -borrow_cost(p, result.assets, config.costs, 1.0);
        }
        for (std::size_t i = 0; i < N; ++i) {
            const double r = cell(ret, t, i);
            if (p[i] != 0.0 && is_valid(r)) p[i] *= 1.0 + r;
        }
        hedge *= 1.0 + idx;

        // Inputs at the close.
        const std::size_t s_row = t - config.execution_lag;
        for (std::size_t i = 0; i < N; ++i) {
            const double a = adv_field ? cell(*adv_field, t, i) : 1.0;
            if (is_valid(a) && a > 0.0) last_adv[i] = a;
            const double v = cell(vols, t, i);
            if (is_valid(v)) last_sigma[i] = v;
            adv_now[i] = is_valid(a) && a > 0.0 ? a : kMissing;
            sigma_now[i] = v;
            sig[i] = cell(signal.scores, s_row, i);
        }
        auto tradeable = [&](std::size_t i) {
            return is_valid(adv_now[i]) && (config.costs.impact_coeff == 0.0 || is_valid(sigma_now[i]));
        };

        std::vector<double> target;
        if (config.mode == StrategyMode::LH) {
            std::vector<double> s_use(N);
            for (std::size_t i = 0; i < N; ++i) {
                const bool ok = is_valid(sig[i]) && is_valid(cell(betas, t, i)) && tradeable(i);
                s_use[i] = ok ? sig[i] : kMissing;
            }
            OptimizerConstraints oc;
            oc.aum = config.aum;
            oc.cap = config.cap;
            auto opt = optimize_long_only(s_use, p, last_adv, last_sigma, config.costs, oc, config.optimizer);
            Portfolio book;
            book.positions = std::move(opt.positions);
            std::vector<double> beta_row(N);
            for (std::size_t i = 0; i < N; ++i) beta_row[i] = cell(betas, t, i);
            book = hedge_with_index(std::move(book), beta_row);
            target = std::move(book.positions);
            hedge = book.hedge_notional;
        } else {
            if (d % config.corr_refresh == 0 || !risk) {
                std::vector<bool> candidate(N);
                for (std::size_t i = 0; i < N; ++i) candidate[i] = is_valid(sig[i]);
                risk = fit_risk_model(ret, t, config.corr_window, candidate);
            }
            std::vector<double> s_use(N, kMissing);
            for (std::size_t i = 0; i < N; ++i) {
                exposure[i] = config.neutrality == LsNeutrality::IndexBeta ? cell(betas, t, i)
                              : risk                                      ? risk->leading[i]
                                                                          : kMissing;
                if (is_valid(sig[i]) && tradeable(i)) s_use[i] = sig[i];
            }
            LongShortSettings ls;
            ls.aum = config.aum;
            ls.cap = config.cap;
            ls.vol_target = config.vol_target;
            if (!vol_target_path.empty() && is_valid(vol_target_path[t]) && vol_target_path[t] > 0.0) {
                ls.vol_target = vol_target_path[t];
            }
            ls.periods_per_year = days_per_year;
            ls.optimizer = config.optimizer;
            if (risk) {
                LongShortInputs in;
                in.signal = s_use;
                in.current = p;
                in.adv = adv_now;
                in.sigma_daily = sigma_now;
                in.exposure = exposure;
                in.covariance = &risk->covariance;
                in.covariance_assets = risk->assets;
                auto built = build_long_short(in, config.costs, ls);
                target = std::move(built.positions);
                day.predicted_vol = built.predicted_vol / config.aum;
                day.cap_binding = built.cap_binding;
            } else {
                target.assign(N, 0.0);
            }
            day.target_vol = ls.vol_target;
            hedge = 0.0;
        }

        // Trade at the close.
        double traded = 0.0, trading = 0.0, net = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double q = std::abs(target[i] - p[i]);
            if (q > 0.0) {
                if (!is_valid(last_adv[i])) {
                    throw std::runtime_error("run_backtest: unpriceable trade in " + result.assets[i] + " on " +
                                             format_iso_date(dates[t]));
                }
                const double sigma = config.costs.impact_coeff == 0.0 ? 0.0 : last_sigma[i];
                trading += trade_cost(q, last_adv[i], sigma, config.costs);
                traded += q;
            }
            p[i] = target[i];
            if (p[i] > 0.0) day.long_exposure += p[i];
            if (p[i] < 0.0) day.short_exposure -= p[i];
            net += p[i];
            result.positions(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)) = p[i];
        }
        day.trading_cost = -trading;
        day.traded_notional = traded;
        day.hedge_notional = hedge;
        const double base = config.mode == StrategyMode::LH ? config.aum : day.gmv();
        day.turnover = base > 0.0 ? traded / base : 0.0;
        day.dollar_residual = day.gmv() > 0.0 ? std::abs(net) / day.gmv() : 0.0;
        day.total = sum_components(day.returns_pnl, day.trading_cost, day.financing_cost, day.borrow_cost);
        if (!std::isfinite(day.total)) {
            throw std::runtime_error("run_backtest: non-finite P&L on " + format_iso_date(dates[t]));
        }
        result.days.push_back(day);
        result.index_returns.push_back(idx);
    }
    return result;
}

std::vector<double> trailing_vol_target(const BacktestResult& result, std::size_t n_rows, std::size_t window,
                                        std::size_t refresh, double periods_per_year) {
    if (refresh == 0) throw std::invalid_argument("trailing_vol_target: refresh must be >= 1");
    std::vector<double> out(n_rows, kMissing);
    double current = kMissing;
    for (std::size_t t = result.first_row; t < n_rows; ++t) {
        const std::size_t d = t - result.first_row;
        if (d % refresh == 0) {
            const std::size_t first = d > window ? d - window : 0;
            const std::size_t n = std::min(d, result.days.size()) - std::min(first, result.days.size());
            if (n >= 60) {
                double mean = 0.0;
                for (std::size_t k = first; k < first + n; ++k) mean += result.days[k].total;
                mean /= static_cast<double>(n);
                double ss = 0.0;
                for (std::size_t k = first; k < first + n; ++k) {
                    ss += (result.days[k].total - mean) * (result.days[k].total - mean);
                }
                current = std::sqrt(ss / static_cast<double>(n - 1) * periods_per_year) / result.aum;
            }
        }
        out[t] = current;
    }
    return out;
}

}  // namespace lsf
