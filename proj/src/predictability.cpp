#include <algorithm>
#include <cmath>
#include <numeric>

#include "lsf/rng.hpp"
#include "lsf/risk.hpp"
#include "lsf/signals.hpp"
#include "lsf/toy_model.hpp"

namespace lsf {

namespace {

/// Market-mode residuals: weights and betas refreshed every `refresh` rows.
PanelMatrix market_mode_residuals(const PanelMatrix& ret, const ResidualConfig& cfg) {
    const auto T = ret.rows();
    const auto N = ret.cols();
    const auto L = static_cast<Eigen::Index>(cfg.lookback);
    PanelMatrix out = PanelMatrix::Constant(T, N, kMissing);
    if (T <= L || N < 2) return out;

    for (Eigen::Index start = L; start < T; start += static_cast<Eigen::Index>(cfg.refresh)) {
        const Eigen::Index stop = std::min(T, start + static_cast<Eigen::Index>(cfg.refresh));
        // Eligible assets: enough valid returns in the window [start - L, start - 1].
        std::vector<Eigen::Index> eligible;
        for (Eigen::Index i = 0; i < N; ++i) {
            Eigen::Index n = 0;
            for (Eigen::Index s = start - L; s < start; ++s) n += is_valid(ret(s, i)) ? 1 : 0;
            if (static_cast<double>(n) >= cfg.min_valid_fraction * static_cast<double>(L)) eligible.push_back(i);
        }
        if (eligible.size() < 2) continue;
        const auto K = static_cast<Eigen::Index>(eligible.size());
        Eigen::MatrixXd window(L, K);
        for (Eigen::Index k = 0; k < K; ++k) {
            for (Eigen::Index s = 0; s < L; ++s) window(s, k) = ret(start - L + s, eligible[static_cast<std::size_t>(k)]);
        }
        CleanedCorrelation corr;
        try {
            corr = clean_correlation(window);
        } catch (const DegenerateSeriesError&) {
            continue;
        }
        const Eigen::VectorXd v = corr.leading_eigenvector();
        Eigen::VectorXd u = v.cwiseQuotient(corr.vols);
        u /= u.sum();

        auto mode_return = [&](Eigen::Index s) {
            double num = 0.0, wsum = 0.0;
            for (Eigen::Index k = 0; k < K; ++k) {
                const double r = ret(s, eligible[static_cast<std::size_t>(k)]);
                if (!is_valid(r)) continue;
                num += u(k) * r;
                wsum += u(k);
            }
            return wsum != 0.0 ? num / wsum : kMissing;
        };
        std::vector<double> m_window(static_cast<std::size_t>(L));
        for (Eigen::Index s = 0; s < L; ++s) m_window[static_cast<std::size_t>(s)] = mode_return(start - L + s);
        for (Eigen::Index k = 0; k < K; ++k) {
            const Eigen::Index i = eligible[static_cast<std::size_t>(k)];
            std::vector<double> a(static_cast<std::size_t>(L));
            for (Eigen::Index s = 0; s < L; ++s) a[static_cast<std::size_t>(s)] = ret(start - L + s, i);
            const auto beta = estimate_beta(a, m_window, cfg.lookback);
            if (!beta) continue;
            for (Eigen::Index s = start; s < stop; ++s) {
                const double m = mode_return(s);
                if (is_valid(ret(s, i)) && is_valid(m)) out(s, i) = ret(s, i) - *beta * m;
            }
        }
    }
    return out;
}

PanelMatrix index_residuals(const PanelMatrix& ret, std::span<const double> index, const ResidualConfig& cfg) {
    const auto min_obs = static_cast<std::size_t>(std::ceil(cfg.min_valid_fraction * static_cast<double>(cfg.lookback)));
    const PanelMatrix beta = rolling_betas(ret, index, cfg.lookback, min_obs);
    PanelMatrix out = PanelMatrix::Constant(ret.rows(), ret.cols(), kMissing);
    for (Eigen::Index t = 0; t < ret.rows(); ++t) {
        const double m = index[static_cast<std::size_t>(t)];
        if (!is_valid(m)) continue;
        for (Eigen::Index i = 0; i < ret.cols(); ++i) {
            if (is_valid(ret(t, i)) && is_valid(beta(t, i))) out(t, i) = ret(t, i) - beta(t, i) * m;
        }
    }
    return out;
}

struct Pair {
    double x;
    double y;
    std::uint32_t date;  // position in the list of used dates
};

/// Equal-weight-count bins over pairs sorted by x; pair j with cumulative weight c before it goes to floor(c * nb / W).
std::vector<PredictabilityBin> bin_pairs(const std::vector<Pair>& pairs, const std::vector<double>& date_weight,
                                         std::size_t n_bins) {
    double total = 0.0;
    for (const auto& p : pairs) total += date_weight[p.date];
    std::vector<double> sw(n_bins, 0.0), sx(n_bins, 0.0), sy(n_bins, 0.0), syy(n_bins, 0.0);
    double cum = 0.0;
    for (const auto& p : pairs) {
        const double w = date_weight[p.date];
        if (w == 0.0) continue;
        auto b = static_cast<std::size_t>(std::floor(cum * static_cast<double>(n_bins) / total));
        b = std::min(b, n_bins - 1);
        sw[b] += w;
        sx[b] += w * p.x;
        sy[b] += w * p.y;
        syy[b] += w * p.y * p.y;
        cum += w;
    }
    std::vector<PredictabilityBin> bins;
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (sw[b] == 0.0) continue;
        PredictabilityBin bin;
        bin.count = static_cast<std::size_t>(std::llround(sw[b]));
        bin.x = sx[b] / sw[b];
        bin.y = sy[b] / sw[b];
        if (sw[b] > 1.0) {
            const double var = std::max(0.0, (syy[b] - sw[b] * bin.y * bin.y) / (sw[b] - 1.0));
            bin.stderr_y = std::sqrt(var / sw[b]);
        }
        bins.push_back(bin);
    }
    return bins;
}

void finish_ratio(PredictabilityCurve& c) {
    c.slope_ratio.reset();
    if (!c.positive.slope || !c.negative.slope) return;
    const double se = c.positive.stderr();
    if (!(*c.positive.slope > 2.0 * se) || *c.positive.slope == 0.0) return;
    c.slope_ratio = *c.negative.slope / *c.positive.slope;
}

}  // namespace

PanelMatrix residual_returns(const ReturnsPanel& panel, const ResidualConfig& config, std::span<const double> index) {
    if (config.lookback < 2 || config.refresh == 0) throw std::invalid_argument("residual_returns: bad window");
    const auto& ret = panel.field(Field::Ret);
    if (config.mode == ResidualMode::Index) {
        if (index.size() != panel.n_dates()) {
            throw std::invalid_argument("residual_returns: index series must be aligned to the panel calendar");
        }
        return index_residuals(ret, index, config);
    }
    return market_mode_residuals(ret, config);
}

SideFit fit_through_origin(const std::vector<PredictabilityBin>& bins, bool positive_side) {
    SideFit fit;
    std::vector<const PredictabilityBin*> side;
    for (const auto& b : bins) {
        if (positive_side ? b.x > 0.0 : b.x < 0.0) side.push_back(&b);
    }
    fit.n_bins = side.size();
    if (side.size() < 2) return fit;
    const bool inverse_variance =
        std::all_of(side.begin(), side.end(), [](const PredictabilityBin* b) { return b->stderr_y > 0.0; });
    double swxx = 0.0, swxy = 0.0;
    std::vector<double> w(side.size());
    for (std::size_t k = 0; k < side.size(); ++k) {
        w[k] = inverse_variance ? 1.0 / (side[k]->stderr_y * side[k]->stderr_y) : static_cast<double>(side[k]->count);
        swxx += w[k] * side[k]->x * side[k]->x;
        swxy += w[k] * side[k]->x * side[k]->y;
    }
    if (!(swxx > 0.0)) return fit;
    fit.slope = swxy / swxx;
    if (inverse_variance) {
        fit.stderr_wls = std::sqrt(1.0 / swxx);
    } else {
        // Count weights: residual-based standard error.
        double rss = 0.0;
        for (std::size_t k = 0; k < side.size(); ++k) {
            const double r = side[k]->y - *fit.slope * side[k]->x;
            rss += w[k] * r * r;
        }
        fit.stderr_wls = std::sqrt(rss / static_cast<double>(side.size() - 1) / swxx);
    }
    return fit;
}

PredictabilityCurve predictability_curve(const SignalPanel& signal, const PanelMatrix& residuals,
                                         const PredictabilityConfig& config) {
    if (config.horizon < 1) throw std::invalid_argument("predictability_curve: horizon must be >= 1");
    if (config.n_bins < 2) throw std::invalid_argument("predictability_curve: need at least 2 bins");
    if (signal.scores.rows() != residuals.rows() || signal.scores.cols() != residuals.cols()) {
        throw std::invalid_argument("predictability_curve: signal and residual panels are not aligned");
    }
    const auto T = residuals.rows();
    const auto N = residuals.cols();
    const auto h = static_cast<Eigen::Index>(config.horizon);
    const Eigen::Index stride = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(config.stride));

    std::vector<Pair> pairs;
    std::uint32_t n_dates = 0;
    for (Eigen::Index t = 0; t + h < T; t += stride) {
        bool used = false;
        for (Eigen::Index i = 0; i < N; ++i) {
            const double x = signal.scores(t, i);
            if (!is_valid(x)) continue;
            double sum = 0.0;
            bool ok = true;
            for (Eigen::Index s = t + 1; s <= t + h; ++s) {
                const double r = residuals(s, i);
                if (!is_valid(r)) {
                    ok = false;
                    break;
                }
                sum += r;
            }
            if (!ok) continue;
            pairs.push_back(Pair{x, sum / static_cast<double>(h), n_dates});
            used = true;
        }
        if (used) ++n_dates;
    }

    PredictabilityCurve curve;
    curve.threshold = shorts_threshold(1.0);
    curve.n_observations = pairs.size();
    curve.n_dates = n_dates;
    if (pairs.size() < config.n_bins) return curve;

    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.x < b.x; });
    const std::vector<double> unit(n_dates, 1.0);
    curve.bins = bin_pairs(pairs, unit, config.n_bins);
    curve.positive = fit_through_origin(curve.bins, true);
    curve.negative = fit_through_origin(curve.bins, false);

    if (config.bootstrap_reps > 0 && n_dates >= 2) {
        const std::size_t block = std::min<std::size_t>(config.block_length ? config.block_length : config.horizon, n_dates);
        const std::size_t n_blocks = (n_dates + block - 1) / block;
        std::vector<double> pos, neg, ratio;
        CounterRng rng(config.seed);
        std::vector<double> weight(n_dates);
        for (std::size_t rep = 0; rep < config.bootstrap_reps; ++rep) {
            std::fill(weight.begin(), weight.end(), 0.0);
            for (std::size_t b = 0; b < n_blocks; ++b) {
                const auto first = rng.below(n_dates - block + 1);
                for (std::size_t k = 0; k < block; ++k) weight[first + k] += 1.0;
            }
            const auto bins = bin_pairs(pairs, weight, config.n_bins);
            const auto p = fit_through_origin(bins, true);
            const auto n = fit_through_origin(bins, false);
            if (p.slope) pos.push_back(*p.slope);
            if (n.slope) neg.push_back(*n.slope);
            if (p.slope && n.slope && *p.slope != 0.0) ratio.push_back(*n.slope / *p.slope);
        }
        auto sd = [](const std::vector<double>& xs) {
            if (xs.size() < 2) return 0.0;
            const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            double ss = 0.0;
            for (double x : xs) ss += (x - m) * (x - m);
            return std::sqrt(ss / static_cast<double>(xs.size() - 1));
        };
        curve.positive.stderr_boot = sd(pos);
        curve.negative.stderr_boot = sd(neg);
        if (ratio.size() >= 20) {
            std::sort(ratio.begin(), ratio.end());
            auto quantile = [&](double q) {
                const double pos_q = q * static_cast<double>(ratio.size() - 1);
                const auto lo = static_cast<std::size_t>(std::floor(pos_q));
                const auto hi = std::min(lo + 1, ratio.size() - 1);
                return ratio[lo] + (pos_q - static_cast<double>(lo)) * (ratio[hi] - ratio[lo]);
            };
            curve.ratio_ci_low = quantile(0.025);
            curve.ratio_ci_high = quantile(0.975);
        }
    }
    finish_ratio(curve);
    if (!curve.slope_ratio) {
        curve.ratio_ci_low.reset();
        curve.ratio_ci_high.reset();
    }
    return curve;
}

}  // namespace lsf
