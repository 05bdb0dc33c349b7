#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "lsf/portfolio.hpp"
#include "lsf/rng.hpp"

using namespace lsf;

namespace {

struct Instance {
    std::vector<double> signal, current, adv, sigma;
};

Instance random_instance(CounterRng& rng, std::size_t n, double aum) {
    Instance x;
    for (std::size_t i = 0; i < n; ++i) {
        x.signal.push_back(rng.uniform() - 0.5);
        x.current.push_back(rng.uniform() < 0.5 ? 0.0 : 0.03 * aum * rng.uniform());
        x.adv.push_back(1e6 + 5e7 * rng.uniform());
        x.sigma.push_back(0.01 + 0.02 * rng.uniform());
    }
    return x;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(LongOnly, ZeroCostGreedyFill) {
    const std::size_t n = 50;
    const double aum = 1e8;
    std::vector<double> signal(n), zero(n, 0.0), adv(n, 1e7), sigma(n, 0.02);
    for (std::size_t i = 0; i < n; ++i) signal[i] = 0.01 + static_cast<double>((i * 17) % n) / n;
    CostModelParams free{0.0, 0.0};
    OptimizerConstraints cons;
    const auto r = optimize_long_only(signal, zero, adv, sigma, free, cons);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return signal[a] > signal[b]; });
    for (std::size_t k = 0; k < n; ++k) {
        const double expected = k < 33 ? 0.03 * aum : k == 33 ? 0.01 * aum : 0.0;
        EXPECT_NEAR(r.positions[order[k]], expected, 1e-12 * aum) << k;
    }
    EXPECT_NEAR(sum(r.positions), aum, 1e-12 * aum);
}

TEST(LongOnly, NegativeSignalsStayOutWithoutMinimumInvestment) {
    std::vector<double> signal{-0.3, -0.1, 0.2}, zero(3, 0.0), adv(3, 1e7), sigma(3, 0.02);
    const auto r = optimize_long_only(signal, zero, adv, sigma, CostModelParams{0.0, 0.0}, OptimizerConstraints{});
    EXPECT_EQ(r.positions[0], 0.0);
    EXPECT_EQ(r.positions[1], 0.0);
    EXPECT_DOUBLE_EQ(r.positions[2], 0.03e8);
}

TEST(LongOnly, ZeroSignalWithCostsDoesNotTrade) {
    CounterRng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        auto x = random_instance(rng, 20, 1e8);
        std::fill(x.signal.begin(), x.signal.end(), 0.0);
        const auto r = optimize_long_only(x.signal, x.current, x.adv, x.sigma, CostModelParams{}, OptimizerConstraints{});
        EXPECT_EQ(r.positions, x.current);
    }
}

TEST(LongOnly, MissingSignalLiquidates) {
    std::vector<double> signal{kMissing, 0.2}, cur{2e6, 1e6}, adv(2, 1e7), sigma(2, 0.02);
    const auto r = optimize_long_only(signal, cur, adv, sigma, CostModelParams{}, OptimizerConstraints{});
    EXPECT_EQ(r.positions[0], 0.0);
    EXPECT_GE(r.positions[1], 1e6);
}

TEST(LongOnly, FeasibleAndImprovingOnRandomInstances) {
    CounterRng rng(2);
    const double aum = 1e8;
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 2 + rng.below(80);
        auto x = random_instance(rng, n, aum);
        OptimizerConstraints cons;
        cons.min_investment = rng.uniform() < 0.3 ? std::min(0.5, 0.02 * n) * aum * rng.uniform() : 0.0;
        OptimizerSettings set;
        set.cost_aversion = 0.1 + 3.0 * rng.uniform();
        const auto r = optimize_long_only(x.signal, x.current, x.adv, x.sigma, CostModelParams{}, cons, set);
        const double s = sum(r.positions);
        EXPECT_LE(s, aum * (1 + 1e-9));
        EXPECT_GE(s, cons.min_investment - 1e-9 * aum);
        for (double w : r.positions) {
            EXPECT_GE(w, 0.0);
            EXPECT_LE(w, 0.03 * aum * (1 + 1e-12));
        }
        if (sum(x.current) <= aum && sum(x.current) >= cons.min_investment) {
            const double hold = long_only_objective(x.current, x.signal, x.current, x.adv, x.sigma, CostModelParams{}, set);
            EXPECT_GE(r.objective, hold - 1e-9 * aum);
        }
    }
}

TEST(LongOnly, BeatsAFineGridOnThreeAssets) {
    CounterRng rng(3);
    const double aum = 1e7;
    OptimizerConstraints cons;
    cons.aum = aum;
    cons.cap = 0.4;
    OptimizerSettings set;
    set.signal_scale = 0.01;
    for (int rep = 0; rep < 10; ++rep) {
        auto x = random_instance(rng, 3, aum);
        for (auto& c : x.current) c *= 10.0;
        const auto r = optimize_long_only(x.signal, x.current, x.adv, x.sigma, CostModelParams{}, cons, set);
        const int G = 60;
        const double step = cons.cap * aum / G;
        double best = -1e300;
        std::vector<double> w(3);
        for (int a = 0; a <= G; ++a) {
            for (int b = 0; b <= G; ++b) {
                for (int c = 0; c <= G; ++c) {
                    w = {a * step, b * step, c * step};
                    if (sum(w) > aum) continue;
                    best = std::max(best, long_only_objective(w, x.signal, x.current, x.adv, x.sigma, CostModelParams{}, set));
                }
            }
        }
        EXPECT_GE(r.objective, best - 1e-9 * aum);
    }
}

TEST(LongOnly, Errors) {
    std::vector<double> s{0.1, 0.2}, cur(2, 0.0), adv(2, 1e7), sigma(2, 0.02);
    OptimizerConstraints cons;
    cons.min_investment = 0.07e8;  // two assets at 3% cannot reach 7%
    EXPECT_THROW(optimize_long_only(s, cur, adv, sigma, CostModelParams{}, cons), std::invalid_argument);
    cons = {};
    cons.cap = 1.5;
    EXPECT_THROW(optimize_long_only(s, cur, adv, sigma, CostModelParams{}, cons), std::invalid_argument);
    EXPECT_THROW(optimize_long_only(s, cur, std::vector<double>{1e7, 0.0}, sigma, CostModelParams{}, OptimizerConstraints{}),
                 std::domain_error);
    EXPECT_THROW(optimize_long_only(s, std::vector<double>(3, 0.0), adv, sigma, CostModelParams{}, OptimizerConstraints{}),
                 std::invalid_argument);
}

TEST(CoordinateResponse, MatchesScalarSearch) {
    CounterRng rng(4);
    for (int rep = 0; rep < 500; ++rep) {
        const double a = rng.uniform() - 0.5, p = rng.uniform(), lin = 0.2 * rng.uniform(), k = 2.0 * rng.uniform();
        const double lambda = 0.5 + rng.uniform();
        const double w = coordinate_response(a, p, 0.0, 1.0, lin, k, lambda, TieBreak::Stay);
        auto f = [&](double v) { const double q = std::abs(v - p); return a * v - lambda * (lin * q + k * q * std::sqrt(q)); };
        double best = -1e300;
        for (int g = 0; g <= 20000; ++g) best = std::max(best, f(g / 20000.0));
        EXPECT_GE(f(w), best - 1e-9);
        EXPECT_GE(w, 0.0);
        EXPECT_LE(w, 1.0);
    }
    EXPECT_EQ(coordinate_response(0.1, 0.3, 0.0, 1.0, 0.1, 0.0, 1.0, TieBreak::Low), 0.3);
    EXPECT_EQ(coordinate_response(0.1, 0.3, 0.0, 1.0, 0.1, 0.0, 1.0, TieBreak::High), 1.0);
    EXPECT_EQ(coordinate_response(0.0, 0.3, 0.0, 1.0, 0.0, 0.0, 1.0, TieBreak::Low), 0.0);
}

TEST(Hedge, Examples) {
    Portfolio full;
    full.aum = 1e8;
    full.positions.assign(100, 1e6);
    EXPECT_DOUBLE_EQ(hedge_with_index(full, std::vector<double>(100, 1.0)).hedge_notional, -1e8);
    Portfolio empty;
    empty.positions.assign(3, 0.0);
    EXPECT_EQ(hedge_with_index(empty, std::vector<double>(3, kMissing)).hedge_notional, 0.0);
    Portfolio mixed;
    mixed.positions = {2e6, 0.0, 1e6};
    const auto h = hedge_with_index(mixed, std::vector<double>{0.5, kMissing, 1.5});
    EXPECT_DOUBLE_EQ(h.hedge_notional, -2.5e6);
    mixed.positions[1] = 1.0;
    EXPECT_THROW(hedge_with_index(mixed, std::vector<double>{0.5, kMissing, 1.5}), MissingBetaError);
    EXPECT_EQ(strategy_from_name("ls"), StrategyMode::LS);
    EXPECT_THROW(strategy_from_name("LX"), std::invalid_argument);
}

// ---------------------------------------------------------------------------

namespace {

struct LsCase {
    std::vector<double> signal, current, adv, sigma, exposure;
    Eigen::MatrixXd cov;
    std::vector<std::size_t> assets;

    LongShortInputs inputs() const {
        LongShortInputs in;
        in.signal = signal;
        in.current = current;
        in.adv = adv;
        in.sigma_daily = sigma;
        in.exposure = exposure;
        in.covariance = &cov;
        in.covariance_assets = assets;
        return in;
    }
};

LsCase random_ls(CounterRng& rng, std::size_t n) {
    LsCase c;
    Eigen::MatrixXd f(400, n);
    for (Eigen::Index t = 0; t < 400; ++t) {
        const double m = rng.normal(0, 0.01);
        for (std::size_t i = 0; i < n; ++i) f(t, i) = (0.5 + rng.uniform()) * m + rng.normal(0, 0.015);
    }
    const Eigen::MatrixXd centered = f.rowwise() - f.colwise().mean();
    c.cov = centered.transpose() * centered / 399.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.cov);
    for (std::size_t i = 0; i < n; ++i) {
        c.signal.push_back(rng.uniform() - 0.5);
        c.current.push_back(0.0);
        c.adv.push_back(5e7);
        c.sigma.push_back(std::sqrt(c.cov(i, i)));
        c.exposure.push_back(std::abs(eig.eigenvectors()(i, n - 1)));
        c.assets.push_back(i);
    }
    return c;
}

}  // namespace

TEST(LongShort, TwoAssetSymmetricBook) {
    LsCase c;
    c.signal = {0.25, -0.25};
    c.current = {0.0, 0.0};
    c.adv = {1e8, 1e8};
    c.sigma = {0.01, 0.01};
    c.cov = Eigen::MatrixXd::Identity(2, 2) * 1e-4;
    c.assets = {0, 1};
    LongShortSettings set;
    set.neutralize_exposure = false;
    set.cap = 1.0;
    const auto r = build_long_short(c.inputs(), CostModelParams{0.0, 0.0}, set);
    const double x = 0.10 * 1e8 / std::sqrt(252.0 * 2e-4);
    EXPECT_NEAR(r.positions[0], x, 1e-9 * x);
    EXPECT_NEAR(r.positions[1], -x, 1e-9 * x);
    EXPECT_FALSE(r.cap_binding);
}

TEST(LongShort, HitsTheVolTargetAndIsNeutral) {
    CounterRng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        auto c = random_ls(rng, 40);
        LongShortSettings set;
        set.cap = 0.2;
        set.vol_target = 0.05 + 0.1 * rng.uniform();
        const auto r = build_long_short(c.inputs(), CostModelParams{}, set);
        ASSERT_FALSE(r.cap_binding);
        EXPECT_NEAR(r.predicted_vol / r.target_vol, 1.0, 0.01);
        EXPECT_LT(r.dollar_residual, 1e-8);
        EXPECT_LT(r.exposure_residual, 1e-8);
        double gmv = 0.0;
        for (double w : r.positions) {
            EXPECT_LE(std::abs(w), set.cap * set.aum * (1 + 1e-12));
            gmv += std::abs(w);
        }
        EXPECT_GT(gmv, 0.0);
    }
}

TEST(LongShort, TightCapScalesDownAndFlags) {
    CounterRng rng(6);
    auto c = random_ls(rng, 10);
    LongShortSettings set;
    set.cap = 0.01;
    set.vol_target = 0.3;
    const auto r = build_long_short(c.inputs(), CostModelParams{}, set);
    EXPECT_TRUE(r.cap_binding);
    EXPECT_LT(r.predicted_vol, r.target_vol);
    double biggest = 0.0;
    for (double w : r.positions) biggest = std::max(biggest, std::abs(w));
    EXPECT_NEAR(biggest, 0.01 * set.aum, 1e-9 * set.aum);
    EXPECT_LT(r.dollar_residual, 1e-8);
}

TEST(LongShort, AssetsOutsideTheBookStayFlat) {
    CounterRng rng(7);
    auto c = random_ls(rng, 12);
    c.signal[3] = kMissing;
    c.exposure[5] = kMissing;
    c.assets.pop_back();
    c.cov = c.cov.topLeftCorner(11, 11).eval();
    const auto r = build_long_short(c.inputs(), CostModelParams{}, LongShortSettings{});
    EXPECT_EQ(r.positions[3], 0.0);
    EXPECT_EQ(r.positions[5], 0.0);
    EXPECT_EQ(r.positions[11], 0.0);
    LongShortSettings bad;
    bad.vol_target = 0.0;
    EXPECT_THROW(build_long_short(c.inputs(), CostModelParams{}, bad), std::invalid_argument);
    auto in = c.inputs();
    in.covariance = nullptr;
    EXPECT_THROW(build_long_short(in, CostModelParams{}, LongShortSettings{}), std::invalid_argument);
}
