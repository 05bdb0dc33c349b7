#include "lsf/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "lsf/rng.hpp"

namespace lsf {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

double checked_sharpe(double mean, double variance) {
    if (!(variance > 0.0)) {
        throw DegenerateVarianceError("toy model P&L has zero variance; Sharpe ratio undefined");
    }
    return mean / std::sqrt(variance);
}

}  // namespace

void ToyModelParams::validate() const {
    require(std::isfinite(mean_f) && mean_f > 0.0, "toy model: mean_f must be > 0");
    require(std::isfinite(var_f) && var_f > 0.0, "toy model: var_f must be > 0");
    require(std::isfinite(alpha2) && alpha2 >= 0.0, "toy model: alpha2 must be >= 0");
    require(std::isfinite(gamma) && gamma >= 0.0, "toy model: gamma must be >= 0");
    require(std::isfinite(kappa) && kappa >= 0.0, "toy model: kappa must be >= 0");
}

double sr_long_short(const ToyModelParams& p) {
    p.validate();
    const double load = 1.0 + p.alpha2;
    return checked_sharpe(load * p.mean_f, load * load * p.var_f + p.var_eps1() + p.var_eps2());
}

double sr_hedged_long(const ToyModelParams& p) {
    p.validate();
    return checked_sharpe(p.mean_f, p.var_f + p.var_eps1());
}

double sr_ratio(const ToyModelParams& p) {
    p.validate();
    const double load = 1.0 + p.alpha2;
    return std::sqrt((1.0 + p.gamma) / (1.0 + p.gamma * (1.0 + p.kappa) / (load * load)));
}

double shorts_threshold(double kappa) {
    if (!(kappa >= 0.0)) throw std::domain_error("shorts_threshold: kappa must be >= 0");
    return std::sqrt(1.0 + kappa) - 1.0;
}

std::vector<double> ToySample::pnl(const ToyPortfolio& book) const {
    std::vector<double> out(size());
    const auto& w = book.weights;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = w[0] * r1[i] + w[1] * r2[i] + w[2] * market[i];
    }
    return out;
}

namespace {

template <typename ChunkFn>
void for_each_chunk(std::size_t n_chunks, unsigned threads, ChunkFn&& fn) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < n_chunks; c += workers) fn(c);
        });
    }
}

}  // namespace

ToySample simulate_toy_returns(const ToyModelParams& p, std::size_t n, std::uint64_t seed,
                               const ToyMarket& market, unsigned threads) {
    require(std::isfinite(p.mean_f) && std::isfinite(p.var_f) && p.var_f >= 0.0,
            "simulate_toy_returns: factor moments must be finite with var_f >= 0");
    require(p.alpha2 >= 0.0 && p.gamma >= 0.0 && p.kappa >= 0.0,
            "simulate_toy_returns: alpha2, gamma, kappa must be >= 0");
    require(market.vol >= 0.0, "simulate_toy_returns: market vol must be >= 0");

    ToySample s;
    for (auto* v : {&s.r1, &s.r2, &s.market, &s.f, &s.eps1, &s.eps2}) v->resize(n);
    const double vol_f = std::sqrt(p.var_f);
    const double vol_e1 = std::sqrt(p.var_eps1());
    const double vol_e2 = std::sqrt(p.var_eps2());
    const std::size_t n_chunks = (n + kToyChunk - 1) / kToyChunk;

    for_each_chunk(n_chunks, threads, [&](std::size_t chunk) {
        CounterRng rng(seed, chunk);
        const std::size_t end = std::min(n, (chunk + 1) * kToyChunk);
        for (std::size_t i = chunk * kToyChunk; i < end; ++i) {
            const double f = rng.normal(p.mean_f, vol_f);
            const double e1 = rng.normal(0.0, vol_e1);
            const double e2 = rng.normal(0.0, vol_e2);
            const double m = rng.normal(market.mean, market.vol);
            s.f[i] = f;
            s.eps1[i] = e1;
            s.eps2[i] = e2;
            s.market[i] = m;
            s.r1[i] = m + f + e1;
            s.r2[i] = m - p.alpha2 * f + e2;
        }
    });
    return s;
}

std::optional<double> sample_sharpe(const std::vector<double>& x) {
    if (x.size() < 2) return std::nullopt;
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) return std::nullopt;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(x.size() - 1);
    if (!(var > 0.0)) return std::nullopt;
    return mean / std::sqrt(var);
}

}  // namespace lsf
