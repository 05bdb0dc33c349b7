#include "lsf/signals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace lsf {

namespace {

constexpr std::array<std::pair<Factor, std::string_view>, 6> kFactorNames{{
    {Factor::Mom, "MOM"},
    {Factor::ValueEar, "VALUEEAR"},
    {Factor::LowVol, "LOWVOL"},
    {Factor::Smb, "SMB"},
    {Factor::Roa, "ROA"},
    {Factor::Static, "STATIC"},
}};

double cell(const PanelMatrix& m, std::size_t t, std::size_t i) {
    return m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
}

/// Feeds the valid values of asset i over rows [first, last]; false when too few are valid.
template <typename Fn>
bool window_valid(const PanelMatrix& m, std::size_t i, std::size_t first, std::size_t last, double min_fraction,
                  Fn&& on_value) {
    std::size_t n = 0;
    for (std::size_t s = first; s <= last; ++s) {
        const double v = cell(m, s, i);
        if (is_valid(v)) {
            on_value(v);
            ++n;
        }
    }
    const double need = std::ceil(min_fraction * static_cast<double>(last - first + 1));
    return n >= 2 && static_cast<double>(n) >= need;
}

}  // namespace

std::string_view factor_name(Factor f) {
    for (const auto& [id, name] : kFactorNames) {
        if (id == f) return name;
    }
    return "?";
}

std::optional<Factor> factor_from_name(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (const auto& [id, n] : kFactorNames) {
        if (n == upper) return id;
    }
    return std::nullopt;
}

std::vector<double> rank_normalize(std::span<const double> values) {
    std::vector<double> out(values.size(), kMissing);
    std::vector<std::size_t> idx;
    idx.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (is_valid(values[i])) idx.push_back(i);
    }
    if (idx.size() < 2) return out;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double n = static_cast<double>(idx.size());
    std::size_t start = 0;
    while (start < idx.size()) {
        std::size_t end = start + 1;
        while (end < idx.size() && values[idx[end]] == values[idx[start]]) ++end;
        // Ranks start+1 .. end share their average.
        const double avg_rank = 0.5 * static_cast<double>(start + 1 + end);
        const double score = (avg_rank - 0.5) / n - 0.5;
        for (std::size_t k = start; k < end; ++k) out[idx[k]] = score;
        start = end;
    }
    return out;
}

std::vector<double> compute_descriptor(const ReturnsPanel& panel, const PoolMask& pool, Factor factor, std::size_t t,
                                       const DescriptorConfig& config) {
    const std::size_t N = panel.n_assets();
    if (t >= panel.n_dates()) throw std::out_of_range("compute_descriptor: row out of range");
    if (pool.n_assets != N || pool.n_dates != panel.n_dates()) {
        throw std::invalid_argument("compute_descriptor: pool shape does not match panel");
    }
    std::vector<double> out(N, kMissing);
    const double minf = config.min_valid_fraction;

    auto need = [&](Field f) -> const PanelMatrix& {
        if (!panel.has(f)) {
            throw std::invalid_argument(std::string("factor ") + std::string(factor_name(factor)) + " needs field '" +
                                        std::string(field_name(f)) + "'");
        }
        return panel.field(f);
    };

    switch (factor) {
        case Factor::Mom: {
            const auto& ret = need(Field::Ret);
            if (t < config.mom_lookback || config.mom_skip > config.mom_lookback) break;
            const std::size_t first = t - config.mom_lookback, last = t - config.mom_skip;
            for (std::size_t i = 0; i < N; ++i) {
                if (!pool(t, i)) continue;
                double sum = 0.0;
                std::size_t n = 0;
                if (window_valid(ret, i, first, last, minf, [&](double v) { sum += v, ++n; })) {
                    out[i] = sum / static_cast<double>(n);
                }
            }
            break;
        }
        case Factor::LowVol: {
            const auto& ret = need(Field::Ret);
            if (t + 1 < config.vol_window) break;
            const std::size_t first = t + 1 - config.vol_window;
            for (std::size_t i = 0; i < N; ++i) {
                if (!pool(t, i)) continue;
                std::vector<double> xs;
                xs.reserve(config.vol_window);
                if (!window_valid(ret, i, first, t, minf, [&](double v) { xs.push_back(v); })) continue;
                const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
                double ss = 0.0;
                for (double x : xs) ss += (x - mean) * (x - mean);
                const double vol = std::sqrt(ss / static_cast<double>(xs.size() - 1));
                out[i] = config.lowvol_long_low_vol ? -vol : vol;
            }
            break;
        }
        case Factor::Smb: {
            const auto& mcap = need(Field::Mcap);
            if (t < config.size_lag + config.size_window - 1) break;
            const std::size_t last = t - config.size_lag, first = last + 1 - config.size_window;
            for (std::size_t i = 0; i < N; ++i) {
                if (!pool(t, i)) continue;
                double sum = 0.0;
                std::size_t n = 0;
                if (window_valid(mcap, i, first, last, minf, [&](double v) { sum += v, ++n; })) {
                    const double size = sum / static_cast<double>(n);
                    out[i] = config.smb_long_small ? -size : size;
                }
            }
            break;
        }
        case Factor::ValueEar: {
            const auto& earnings = need(Field::Earnings);
            const auto& price = need(Field::Price);
            for (std::size_t i = 0; i < N; ++i) {
                if (!pool(t, i)) continue;
                const double e = cell(earnings, t, i), p = cell(price, t, i);
                if (is_valid(e) && is_valid(p) && p > 0.0) out[i] = e / p;
            }
            break;
        }
        case Factor::Roa: {
            const auto& ni = need(Field::NetIncome);
            const auto& ta = need(Field::TotalAssets);
            for (std::size_t i = 0; i < N; ++i) {
                if (!pool(t, i)) continue;
                const double a = cell(ni, t, i), b = cell(ta, t, i);
                if (is_valid(a) && is_valid(b) && b > 0.0) out[i] = a / b;
            }
            break;
        }
        case Factor::Static: {
            for (std::size_t i = 0; i < N; ++i) {
                if (!pool(t, i)) continue;
                auto it = config.static_values.find(panel.assets()[i].id);
                if (it != config.static_values.end()) out[i] = it->second;
            }
            break;
        }
    }
    return out;
}

SignalPanel compute_signal(const ReturnsPanel& panel, const PoolMask& pool, Factor factor,
                           const DescriptorConfig& config) {
    SignalPanel s;
    s.name = std::string(factor_name(factor));
    s.dates = panel.dates();
    s.scores = PanelMatrix::Constant(static_cast<Eigen::Index>(panel.n_dates()),
                                     static_cast<Eigen::Index>(panel.n_assets()), kMissing);
    for (std::size_t t = 0; t < panel.n_dates(); ++t) {
        const auto raw = compute_descriptor(panel, pool, factor, t, config);
        const auto ranked = rank_normalize(raw);
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            s.scores(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = ranked[i];
        }
    }
    return s;
}

double ema_weight(double length, EmaConvention convention) {
    if (!(length > 0.0)) throw std::invalid_argument("ema_weight: length must be > 0");
    if (convention == EmaConvention::Span) return 2.0 / (length + 1.0);
    return 1.0 - std::pow(2.0, -1.0 / length);
}

SignalPanel smooth_ema(const SignalPanel& signal, double length, EmaConvention convention) {
    const double w = ema_weight(length, convention);
    SignalPanel out = signal;
    out.name = signal.name;
    const auto T = signal.scores.rows();
    const auto N = signal.scores.cols();
    for (Eigen::Index i = 0; i < N; ++i) {
        double state = kMissing;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double x = signal.scores(t, i);
            if (!is_valid(x)) {
                out.scores(t, i) = kMissing;
                continue;
            }
            state = is_valid(state) ? (1.0 - w) * state + w * x : x;
            out.scores(t, i) = state;
        }
    }
    return out;
}

SignalPanel blend(const std::vector<SignalPanel>& signals, const std::vector<double>& weights) {
    if (signals.empty()) throw std::invalid_argument("blend: empty signal list");
    if (weights.size() != signals.size()) throw std::invalid_argument("blend: one weight per signal required");
    for (double w : weights) {
        if (!std::isfinite(w)) throw std::invalid_argument("blend: weights must be finite");
    }
    const auto& first = signals.front();
    for (const auto& s : signals) {
        if (s.dates != first.dates || s.scores.cols() != first.scores.cols()) {
            throw std::invalid_argument("blend: signals must share calendar and assets");
        }
    }
    SignalPanel out;
    out.name = "BLEND";
    out.dates = first.dates;
    out.scores = PanelMatrix::Constant(first.scores.rows(), first.scores.cols(), kMissing);
    for (Eigen::Index t = 0; t < out.scores.rows(); ++t) {
        for (Eigen::Index i = 0; i < out.scores.cols(); ++i) {
            double num = 0.0, den = 0.0;
            bool any = false;
            for (std::size_t k = 0; k < signals.size(); ++k) {
                const double v = signals[k].scores(t, i);
                if (!is_valid(v)) continue;
                num += weights[k] * v;
                den += weights[k];
                any = true;
            }
            if (any && den != 0.0) out.scores(t, i) = num / den;
        }
    }
    return out;
}

}  // namespace lsf
