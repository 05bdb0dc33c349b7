#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "lsf/analytics.hpp"
#include "lsf/portfolio.hpp"
#include "lsf/toy_model.hpp"

using namespace lsf;

namespace {

SyntheticUniverse small_universe(std::uint64_t seed = 3, std::size_t n = 30, std::size_t T = 500) {
    SyntheticUniverseSpec spec;
    spec.n_assets = n;
    spec.n_periods = T;
    spec.factor_vol = 0.003 * std::sqrt(static_cast<double>(n) / 2.0);
    spec.seed = seed;
    return generate_universe(spec);
}

SignalPanel loading_signal(const SyntheticUniverse& u) {
    DescriptorConfig dc;
    for (std::size_t i = 0; i < u.panel.n_assets(); ++i) dc.static_values[u.panel.assets()[i].id] = u.truth.loadings[i];
    return compute_signal(u.panel, PoolMask::all(u.panel.n_dates(), u.panel.n_assets()), Factor::Static, dc);
}

SignalPanel zero_signal(const ReturnsPanel& panel) {
    SignalPanel s;
    s.dates = panel.dates();
    s.scores = PanelMatrix::Zero(static_cast<Eigen::Index>(panel.n_dates()), static_cast<Eigen::Index>(panel.n_assets()));
    return s;
}

bool bit_identical(const BacktestResult& a, const BacktestResult& b) {
    if (a.days.size() != b.days.size() || a.positions.size() != b.positions.size()) return false;
    for (std::size_t d = 0; d < a.days.size(); ++d) {
        const auto& x = a.days[d];
        const auto& y = b.days[d];
        for (auto [u, v] : {std::pair{x.total, y.total}, {x.trading_cost, y.trading_cost}, {x.borrow_cost, y.borrow_cost},
                            {x.financing_cost, y.financing_cost}, {x.returns_pnl, y.returns_pnl}}) {
            if (std::memcmp(&u, &v, sizeof u) != 0) return false;
        }
    }
    return std::memcmp(a.positions.data(), b.positions.data(), sizeof(double) * a.positions.size()) == 0;
}

}  // namespace

TEST(Backtest, ZeroSignalIsFlat) {
    const auto u = small_universe();
    for (auto mode : {StrategyMode::LH, StrategyMode::LS}) {
        StrategyConfig cfg;
        cfg.mode = mode;
        const auto r = run_backtest(u.panel, zero_signal(u.panel), u.truth.market.values, cfg);
        ASSERT_EQ(r.days.size(), 250u);
        for (const auto& d : r.days) {
            EXPECT_EQ(d.total, 0.0);
            EXPECT_EQ(d.gmv(), 0.0);
            EXPECT_EQ(d.hedge_notional, 0.0);
        }
    }
}

TEST(Backtest, TotalsAreTheComponentSumAndDeterministic) {
    auto u = small_universe(4);
    auto& fee = u.panel.ensure_field(Field::BorrowFee);
    fee.col(20).setConstant(0.08);
    const auto sig = smooth_ema(loading_signal(u), 10.0);
    for (auto mode : {StrategyMode::LH, StrategyMode::LS}) {
        StrategyConfig cfg;
        cfg.mode = mode;
        cfg.cap = 0.1;
        const auto a = run_backtest(u.panel, sig, u.truth.market.values, cfg);
        const auto b = run_backtest(u.panel, sig, u.truth.market.values, cfg);
        EXPECT_TRUE(bit_identical(a, b));
        double traded = 0.0;
        for (const auto& d : a.days) {
            EXPECT_EQ(d.total, sum_components(d.returns_pnl, d.trading_cost, d.financing_cost, d.borrow_cost));
            EXPECT_LE(d.trading_cost, 0.0);
            EXPECT_LE(d.financing_cost, 0.0);
            EXPECT_LE(d.borrow_cost, 0.0);
            EXPECT_GE(d.turnover, 0.0);
            traded += d.traded_notional;
        }
        EXPECT_GT(traded, 0.0);
        const auto s = cost_attribution(a);
        EXPECT_NEAR(s.returns_pnl + s.trading_cost + s.financing_cost + s.borrow_cost, s.annual_return,
                    1e-10 * std::max(1.0, std::abs(s.annual_return)));
    }
}

TEST(Backtest, LhBookIsFeasibleAndHedged) {
    const auto u = small_universe(5);
    StrategyConfig cfg;
    cfg.cap = 0.05;
    const auto r = run_backtest(u.panel, loading_signal(u), u.truth.market.values, cfg);
    for (Eigen::Index d = 0; d < r.positions.rows(); ++d) {
        EXPECT_GE(r.positions.row(d).minCoeff(), 0.0);
        EXPECT_LE(r.positions.row(d).maxCoeff(), cfg.cap * cfg.aum * (1 + 1e-12));
        EXPECT_LE(r.positions.row(d).sum(), cfg.aum * (1 + 1e-9));
        EXPECT_LT(r.days[d].hedge_notional, 0.0);
    }
    std::vector<double> pnl = r.total_pnl();
    for (auto& x : pnl) x /= cfg.aum;
    EXPECT_LT(std::abs(*ols_beta(pnl, r.index_returns)), 0.1);
}

TEST(Backtest, LsBookIsDollarNeutralAndOnTarget) {
    const auto u = small_universe(6);
    StrategyConfig cfg;
    cfg.mode = StrategyMode::LS;
    cfg.cap = 0.2;
    cfg.vol_target = 0.1;
    const auto r = run_backtest(u.panel, smooth_ema(loading_signal(u), 10.0), u.truth.market.values, cfg);
    for (const auto& d : r.days) {
        EXPECT_LT(d.dollar_residual, 1e-8);
        if (!d.cap_binding && is_valid(d.predicted_vol) && d.gmv() > 0.0) EXPECT_NEAR(d.predicted_vol / d.target_vol, 1.0, 0.01);
        EXPECT_EQ(d.hedge_notional, 0.0);
    }
}

TEST(Backtest, BorrowCostFollowsTheHeldShorts) {
    auto u = small_universe(7);
    auto& fee = u.panel.ensure_field(Field::BorrowFee);
    for (Eigen::Index i = 15; i < 20; ++i) fee.col(i).setConstant(0.2);
    StrategyConfig cfg;
    cfg.mode = StrategyMode::LS;
    cfg.cap = 0.2;
    cfg.costs.borrow_fee_override["SYN0025"] = 0.5;
    const auto r = run_backtest(u.panel, smooth_ema(loading_signal(u), 10.0), u.truth.market.values, cfg);
    double worst = 0.0;
    for (std::size_t d = 1; d < r.days.size(); ++d) {
        double brute = 0.0;
        for (Eigen::Index i = 0; i < r.positions.cols(); ++i) {
            const double held = r.positions(d - 1, i);
            if (held >= 0.0) continue;
            const double f = i >= 15 && i < 20 ? 0.2 : i == 25 ? 0.5 : cfg.costs.default_borrow_fee;
            brute += f * -held / 252.0;
        }
        worst = std::max(worst, std::abs(-brute - r.days[d].borrow_cost));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Backtest, CalendarGapAndMisalignmentAreErrors) {
    const auto u = small_universe(8, 10, 300);
    auto dates = u.panel.dates();
    for (std::size_t t = 150; t < dates.size(); ++t) dates[t] += std::chrono::days{14};
    ReturnsPanel gapped(dates, u.panel.assets());
    gapped.set_field(Field::Ret, u.panel.field(Field::Ret));
    gapped.set_field(Field::Adv, u.panel.field(Field::Adv));
    auto sig = zero_signal(gapped);
    try {
        run_backtest(gapped, sig, u.truth.market.values, StrategyConfig{});
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("gap"), std::string::npos);
    }
    EXPECT_THROW(run_backtest(u.panel, zero_signal(u.panel), std::vector<double>(5), StrategyConfig{}), std::invalid_argument);
    StrategyConfig late;
    late.warmup = 300;
    EXPECT_THROW(run_backtest(u.panel, zero_signal(u.panel), u.truth.market.values, late), std::invalid_argument);
}

TEST(Backtest, TrailingVolTargetUsesOnlyPastDays) {
    const auto u = small_universe(9);
    const auto r = run_backtest(u.panel, loading_signal(u), u.truth.market.values, StrategyConfig{});
    const auto path = trailing_vol_target(r, u.panel.n_dates(), 250, 21);
    for (std::size_t t = 0; t < r.first_row + 63; ++t) EXPECT_FALSE(is_valid(path[t])) << t;
    const std::size_t t = r.first_row + 84;
    std::vector<double> past;
    for (std::size_t d = 0; d < 84; ++d) past.push_back(r.days[d].total);
    double m = 0.0, ss = 0.0;
    for (double x : past) m += x;
    m /= past.size();
    for (double x : past) ss += (x - m) * (x - m);
    EXPECT_NEAR(path[t], std::sqrt(ss / (past.size() - 1) * 252.0) / r.aum, 1e-14);
    EXPECT_EQ(path[t + 20], path[t]);
}
