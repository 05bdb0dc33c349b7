#include "lsf/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "lsf/risk.hpp"

namespace lsf {

namespace {

double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

}  // namespace

std::optional<double> sharpe(std::span<const double> pnl, double base, double periods_per_year) {
    if (pnl.size() < 2 || !(base > 0.0)) return std::nullopt;
    // A constant series leaves rounding noise in ss; treat it as zero variance.
    if (std::all_of(pnl.begin(), pnl.end(), [&](double v) { return v == pnl.front(); })) return std::nullopt;
    const double m = mean_of(pnl);
    double ss = 0.0;
    for (double v : pnl) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(pnl.size() - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) return std::nullopt;
    // base cancels in mean/sd; kept for the returns-on-capital reading of the inputs.
    return (m / base) / (sd / base) * std::sqrt(periods_per_year);
}

std::optional<double> correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("correlation: series lengths differ");
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!is_valid(x[i]) || !is_valid(y[i])) continue;
        sx += x[i];
        sy += y[i];
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double cxx = 0, cyy = 0, cxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!is_valid(x[i]) || !is_valid(y[i])) continue;
        cxx += (x[i] - mx) * (x[i] - mx);
        cyy += (y[i] - my) * (y[i] - my);
        cxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(cxx > 0.0) || !(cyy > 0.0)) return std::nullopt;
    return std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
}

std::optional<double> ols_beta(std::span<const double> y, std::span<const double> x) {
    if (x.size() != y.size()) throw std::invalid_argument("ols_beta: series lengths differ");
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!is_valid(x[i]) || !is_valid(y[i])) continue;
        sx += x[i];
        sy += y[i];
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double cxx = 0, cxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!is_valid(x[i]) || !is_valid(y[i])) continue;
        cxx += (x[i] - mx) * (x[i] - mx);
        cxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(cxx > 0.0)) return std::nullopt;
    return cxy / cxx;
}

DrawdownStats drawdown_stats(std::span<const double> equity, double aum) {
    if (!(aum > 0.0)) throw std::invalid_argument("drawdown_stats: aum must be > 0");
    DrawdownStats out;
    out.drawdown.reserve(equity.size());
    double peak = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double e : equity) {
        if (!std::isfinite(e)) throw std::invalid_argument("drawdown_stats: equity curve must be finite");
        peak = std::max(peak, e);
        const double dd = (e - peak) / aum;
        out.drawdown.push_back(dd);
        sum += dd;
        out.max_depth = std::min(out.max_depth, dd);
    }
    if (!equity.empty()) out.mean_depth = sum / static_cast<double>(equity.size());
    return out;
}

std::vector<double> equity_curve(std::span<const double> pnl) {
    std::vector<double> out;
    out.reserve(pnl.size());
    double acc = 0.0;
    for (double v : pnl) out.push_back(acc += v);
    return out;
}

CorrelationSummary leg_correlation_summary(const std::vector<std::vector<double>>& streams) {
    if (streams.size() < 2) throw std::invalid_argument("leg_correlation_summary: need at least 2 streams");
    CorrelationSummary out;
    double sum = 0.0;
    for (std::size_t a = 0; a < streams.size(); ++a) {
        for (std::size_t b = a + 1; b < streams.size(); ++b) {
            const auto c = correlation(streams[a], streams[b]);
            if (!c) {
                ++out.n_masked;
                continue;
            }
            sum += *c;
            ++out.n_pairs;
        }
    }
    if (out.n_pairs > 0) out.mean = sum / static_cast<double>(out.n_pairs);
    return out;
}

AllocationResult max_sharpe_weights(const Eigen::MatrixXd& returns, const std::vector<bool>& is_long,
                                    const MaxSharpeOptions& options) {
    const auto T = returns.rows();
    const auto K = returns.cols();
    if (K < 1 || T < 2) throw std::invalid_argument("max_sharpe_weights: need >= 1 stream and >= 2 periods");
    if (static_cast<Eigen::Index>(is_long.size()) != K) {
        throw std::invalid_argument("max_sharpe_weights: one long/short flag per stream required");
    }
    if (!returns.allFinite()) throw std::invalid_argument("max_sharpe_weights: returns must be finite");

    const Eigen::VectorXd mu = returns.colwise().mean().transpose();
    const Eigen::MatrixXd centered = returns.rowwise() - mu.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(T - 1);
    if (options.clean_correlation) {
        const auto cleaned = clean_correlation(returns);
        cov = cleaned.covariance();
    }

    auto solve = [&](const std::vector<Eigen::Index>& active) {
        const auto m = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd c(m, m);
        Eigen::VectorXd r(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            r(a) = mu(active[a]);
            for (Eigen::Index b = 0; b < m; ++b) c(a, b) = cov(active[a], active[b]);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
        const Eigen::VectorXd lam = eig.eigenvalues();
        const double top = lam.cwiseAbs().maxCoeff();
        const double floor = 1e-12 * top;
        if (!(top > 0.0)) throw SingularCovarianceError("max_sharpe_weights: zero covariance");
        if (lam.minCoeff() <= floor && !options.allow_singular) {
            throw SingularCovarianceError(
                "max_sharpe_weights: singular covariance (try clean_correlation or allow_singular)");
        }
        Eigen::VectorXd inv(m);
        for (Eigen::Index k = 0; k < m; ++k) inv(k) = lam(k) > floor ? 1.0 / lam(k) : 0.0;
        return Eigen::VectorXd(eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * r));
    };

    std::vector<Eigen::Index> active(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) active[static_cast<std::size_t>(k)] = k;
    Eigen::VectorXd raw = solve(active);
    if (options.long_only) {
        while (true) {
            Eigen::Index worst = -1;
            double worst_value = 0.0;
            for (Eigen::Index a = 0; a < raw.size(); ++a) {
                if (raw(a) < worst_value) {
                    worst_value = raw(a);
                    worst = a;
                }
            }
            if (worst < 0) break;
            active.erase(active.begin() + worst);
            if (active.empty()) {
                throw std::runtime_error("max_sharpe_weights: no stream with a positive risk premium");
            }
            raw = solve(active);
        }
    }
    const double total = raw.sum();
    if (!(std::abs(total) > 0.0)) throw std::runtime_error("max_sharpe_weights: weights sum to zero");

    AllocationResult out;
    out.weights.assign(static_cast<std::size_t>(K), 0.0);
    for (std::size_t a = 0; a < active.size(); ++a) {
        out.weights[static_cast<std::size_t>(active[a])] = raw(static_cast<Eigen::Index>(a)) / total;
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        (is_long[static_cast<std::size_t>(k)] ? out.long_weight : out.short_weight) +=
            out.weights[static_cast<std::size_t>(k)];
    }
    return out;
}

SmbDiagnostic smb_diagnostic(const std::string& factor, std::span<const double> longs,
                             std::span<const double> shorts, std::span<const double> index,
                             std::span<const double> smb, std::optional<double> beta_long,
                             std::optional<double> beta_short) {
    const std::size_t n = longs.size();
    if (n == 0 || shorts.size() != n || index.size() != n || smb.size() != n) {
        throw std::invalid_argument("smb_diagnostic: missing or misaligned series for " + factor);
    }
    if (!beta_long) beta_long = ols_beta(longs, index);
    if (!beta_short) beta_short = ols_beta(shorts, index);
    if (!beta_long || !beta_short) throw std::invalid_argument("smb_diagnostic: index is constant");
    SmbDiagnostic out;
    out.factor = factor;
    out.delta.resize(n);
    double input_scale = 0.0, delta_scale = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        out.delta[t] = (longs[t] - *beta_long * index[t]) - (*beta_short * index[t] - shorts[t]);
        input_scale = std::max({input_scale, std::abs(longs[t]), std::abs(shorts[t]), std::abs(index[t])});
        if (is_valid(out.delta[t])) delta_scale = std::max(delta_scale, std::abs(out.delta[t]));
    }
    // A delta at rounding level is a degenerate (identically zero) series.
    if (delta_scale > 1e-12 * input_scale) out.correlation_with_smb = correlation(out.delta, smb);
    return out;
}

std::vector<HedgedLeg> hedge_legs(const LegPanel& legs, std::span<const double> index_excess) {
    const std::size_t n = legs.months.size();
    if (!index_excess.empty() && index_excess.size() != n) {
        throw std::invalid_argument("hedge_legs: index not aligned with the leg calendar");
    }
    std::vector<HedgedLeg> out;
    for (const auto& f : legs.factors) {
        std::vector<double> idx(n), lx(n), sx(n);
        for (std::size_t t = 0; t < n; ++t) {
            idx[t] = index_excess.empty() ? f.blend[t] - legs.rf[t] : index_excess[t];
            lx[t] = f.long_leg[t] - legs.rf[t];
            sx[t] = f.short_leg[t] - legs.rf[t];
        }
        const auto bl = ols_beta(lx, idx);
        const auto bs = ols_beta(sx, idx);
        if (!bl || !bs || *bl == 0.0 || *bs == 0.0) {
            throw std::invalid_argument("hedge_legs: cannot rescale " + f.factor + " legs to beta one");
        }
        HedgedLeg lg{f.factor + "_long", true, *bl, std::vector<double>(n)};
        HedgedLeg sg{f.factor + "_short", false, *bs, std::vector<double>(n)};
        for (std::size_t t = 0; t < n; ++t) {
            lg.returns[t] = lx[t] / *bl - idx[t];
            sg.returns[t] = idx[t] - sx[t] / *bs;
        }
        out.push_back(std::move(lg));
        out.push_back(std::move(sg));
    }
    return out;
}

PerfSummary cost_attribution(const BacktestResult& result, double periods_per_year) {
    PerfSummary s;
    s.n_days = result.days.size();
    if (s.n_days == 0) return s;
    const double n = static_cast<double>(s.n_days);
    const double ann = periods_per_year / result.aum;
    const auto total = result.total_pnl();
    double r = 0, tc = 0, fc = 0, bc = 0, tot = 0, turn = 0, gmv = 0;
    for (const auto& d : result.days) {
        r += d.returns_pnl;
        tc += d.trading_cost;
        fc += d.financing_cost;
        bc += d.borrow_cost;
        tot += d.total;
        turn += d.turnover;
        gmv += d.gmv();
    }
    s.returns_pnl = r / n * ann;
    s.trading_cost = tc / n * ann;
    s.financing_cost = fc / n * ann;
    s.borrow_cost = bc / n * ann;
    s.annual_return = tot / n * ann;
    s.mean_turnover = turn / n;
    s.mean_gmv = gmv / n / result.aum;
    double ss = 0.0;
    const double m = tot / n;
    for (double v : total) ss += (v - m) * (v - m);
    s.annual_vol = s.n_days > 1 ? std::sqrt(ss / (n - 1.0) * periods_per_year) / result.aum : 0.0;
    if (auto sr = sharpe(total, result.aum, periods_per_year)) s.sharpe = *sr;
    const auto dd = drawdown_stats(equity_curve(total), result.aum);
    s.mean_drawdown = dd.mean_depth;
    s.max_drawdown = dd.max_depth;
    return s;
}

}  // namespace lsf
