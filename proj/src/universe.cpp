#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lsf/rng.hpp"
#include "lsf/toy_model.hpp"

namespace lsf {

namespace {

// Substream reserved for per-asset fundamentals; return chunks never reach it.
constexpr std::uint64_t kFundamentalsStream = 1ULL << 48;

}  // namespace

void SyntheticUniverseSpec::validate() const {
    if (n_assets == 0 || n_assets % 2 != 0) {
        throw std::invalid_argument("universe: n_assets must be even and positive");
    }
    if (n_periods == 0) throw std::invalid_argument("universe: n_periods must be positive");
    for (double v : {resid_vol_long, resid_vol_short, market_vol, factor_vol}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("universe: volatilities must be >= 0");
    }
    if (!(adv > 0.0)) throw std::invalid_argument("universe: adv must be > 0");
    if (!(initial_price > 0.0) || !(shares > 0.0)) {
        throw std::invalid_argument("universe: initial_price and shares must be > 0");
    }
}

SyntheticUniverse generate_universe(const SyntheticUniverseSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_assets;
    const std::size_t half = n / 2;
    const std::size_t T = spec.n_periods;

    std::vector<Asset> assets(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "SYN%04zu", i);
        assets[i] = Asset{id, spec.region};
    }
    SyntheticUniverse out{ReturnsPanel(business_days(spec.start_date, T), std::move(assets)), {}};
    auto& truth = out.truth;
    truth.loadings.resize(n);
    truth.market_beta.assign(n, 1.0);
    std::vector<double> resid_vol(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool long_side = i < half;
        truth.loadings[i] = long_side ? spec.loading_long : -(spec.loading_short_scale * spec.loading_long);
        resid_vol[i] = long_side ? spec.resid_vol_long : spec.resid_vol_short;
    }
    truth.market.dates = out.panel.dates();
    truth.factor.dates = out.panel.dates();
    truth.market.values.resize(T);
    truth.factor.values.resize(T);

    PanelMatrix ret(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
    const std::size_t n_chunks = (T + kToyChunk - 1) / kToyChunk;
    for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
        CounterRng rng(spec.seed, chunk);
        const std::size_t end = std::min(T, (chunk + 1) * kToyChunk);
        for (std::size_t t = chunk * kToyChunk; t < end; ++t) {
            const double f = rng.normal(spec.factor_mean, spec.factor_vol);
            auto row = ret.row(static_cast<Eigen::Index>(t));
            for (std::size_t i = 0; i < n; ++i) row(static_cast<Eigen::Index>(i)) = rng.normal(0.0, resid_vol[i]);
            const double m = rng.normal(spec.market_mean, spec.market_vol);
            for (std::size_t i = 0; i < n; ++i) {
                auto& cell = row(static_cast<Eigen::Index>(i));
                cell = m + truth.loadings[i] * f + cell;
            }
            truth.factor.values[t] = f;
            truth.market.values[t] = m;
        }
    }

    // Prices, liquidity, size and smooth fundamentals.
    CounterRng frng(spec.seed, kFundamentalsStream);
    PanelMatrix price(ret.rows(), ret.cols()), adv(ret.rows(), ret.cols()), mcap(ret.rows(), ret.cols());
    PanelMatrix earnings(ret.rows(), ret.cols()), net_income(ret.rows(), ret.cols()),
        total_assets(ret.rows(), ret.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        const double shares = spec.shares * (0.5 + frng.uniform());
        const double earnings_yield = 0.02 + 0.08 * frng.uniform();
        const double roa = 0.01 + 0.1 * frng.uniform();
        const double assets_base = 1.0e9 * (0.5 + frng.uniform());
        double p = spec.initial_price;
        for (Eigen::Index t = 0; t < ret.rows(); ++t) {
            p *= 1.0 + ret(t, c);
            price(t, c) = p;
            adv(t, c) = spec.adv;
            mcap(t, c) = p * shares;
            earnings(t, c) = earnings_yield * spec.initial_price;
            total_assets(t, c) = assets_base;
            net_income(t, c) = roa * assets_base;
        }
    }
    out.panel.set_field(Field::Ret, std::move(ret));
    out.panel.set_field(Field::Price, std::move(price));
    out.panel.set_field(Field::Adv, std::move(adv));
    out.panel.set_field(Field::Mcap, std::move(mcap));
    out.panel.set_field(Field::Earnings, std::move(earnings));
    out.panel.set_field(Field::NetIncome, std::move(net_income));
    out.panel.set_field(Field::TotalAssets, std::move(total_assets));
    return out;
}

SyntheticUniverseSpec toy_universe_spec(const ToyModelParams& p, std::size_t n_periods, std::uint64_t seed,
                                        const ToyMarket& market) {
    SyntheticUniverseSpec spec;
    spec.n_assets = 2;
    spec.n_periods = n_periods;
    spec.loading_long = 1.0;
    spec.loading_short_scale = p.alpha2;
    spec.resid_vol_long = std::sqrt(p.var_eps1());
    spec.resid_vol_short = std::sqrt(p.var_eps2());
    spec.market_mean = market.mean;
    spec.market_vol = market.vol;
    spec.factor_mean = p.mean_f;
    spec.factor_vol = std::sqrt(p.var_f);
    spec.seed = seed;
    return spec;
}

}  // namespace lsf
