#include "lsf/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lsf {

namespace {

void check_sizes(std::size_t n, std::initializer_list<std::size_t> sizes, const char* what) {
    for (auto s : sizes) {
        if (s != n) throw std::invalid_argument(std::string(what) + ": input lengths differ");
    }
}

/// Coefficient k of the |q|^1.5 impact term.
double impact_k(double adv, double sigma, const CostModelParams& costs, std::size_t i) {
    if (!(adv > 0.0)) throw std::domain_error("asset #" + std::to_string(i) + ": adv must be > 0 (unpriceable trade)");
    if (costs.impact_coeff == 0.0) return 0.0;
    if (!is_valid(sigma) || sigma < 0.0) {
        throw std::domain_error("asset #" + std::to_string(i) + ": missing daily volatility");
    }
    return costs.impact_coeff * sigma / std::sqrt(adv);
}

struct Coordinate {
    double mu = 0.0;
    double p = 0.0;
    double k = 0.0;
    bool forced = false;  ///< liquidated: target 0
};

}  // namespace

std::string_view strategy_name(StrategyMode m) { return m == StrategyMode::LH ? "LH" : "LS"; }

StrategyMode strategy_from_name(std::string_view name) {
    if (name == "LH" || name == "lh") return StrategyMode::LH;
    if (name == "LS" || name == "ls") return StrategyMode::LS;
    throw std::invalid_argument("unknown strategy mode '" + std::string(name) + "' (expected LH or LS)");
}

double Portfolio::gross() const {
    double g = 0.0;
    for (double w : positions) g += std::abs(w);
    return g;
}

double Portfolio::net() const {
    double n = 0.0;
    for (double w : positions) n += w;
    return n;
}

void OptimizerConstraints::validate() const {
    if (!(aum > 0.0)) throw std::invalid_argument("optimizer: aum must be > 0");
    if (!(cap > 0.0 && cap <= 1.0)) throw std::invalid_argument("optimizer: cap must lie in (0, 1]");
    if (!(min_investment >= 0.0)) throw std::invalid_argument("optimizer: min_investment must be >= 0");
    if (min_investment > aum) throw std::invalid_argument("optimizer: min_investment exceeds aum");
}

double coordinate_response(double a, double p, double lo, double hi, double lin, double k, double lambda,
                           TieBreak tie) {
    const double friction = lambda * lin;
    double w;
    if (lambda == 0.0 || k == 0.0) {
        if (a > friction) {
            w = hi;
        } else if (a < -friction) {
            w = lo;
        } else if (a == friction && a == -friction) {
            w = tie == TieBreak::High ? hi : tie == TieBreak::Low ? lo : p;
        } else if (a == friction) {
            w = tie == TieBreak::High ? hi : p;
        } else if (a == -friction) {
            w = tie == TieBreak::Low ? lo : p;
        } else {
            w = p;
        }
    } else if (a > friction) {
        const double r = (a - friction) / (1.5 * lambda * k);
        w = p + r * r;
    } else if (a < -friction) {
        const double r = (-a - friction) / (1.5 * lambda * k);
        w = p - r * r;
    } else {
        w = p;
    }
    return std::clamp(w, lo, hi);
}

double long_only_objective(std::span<const double> w, std::span<const double> signal,
                           std::span<const double> current, std::span<const double> adv,
                           std::span<const double> sigma_daily, const CostModelParams& costs,
                           const OptimizerSettings& settings) {
    const std::size_t n = w.size();
    check_sizes(n, {signal.size(), current.size(), adv.size(), sigma_daily.size()}, "long_only_objective");
    double gain = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_valid(signal[i])) gain += settings.signal_scale * signal[i] * w[i];
        const double q = std::abs(w[i] - current[i]);
        if (q > 0.0) {
            const double sigma = costs.impact_coeff == 0.0 ? 0.0 : sigma_daily[i];
            cost += trade_cost(q, adv[i], sigma, costs);
        }
    }
    return gain - settings.cost_aversion * cost;
}

OptimizerResult optimize_long_only(std::span<const double> signal, std::span<const double> current,
                                   std::span<const double> adv, std::span<const double> sigma_daily,
                                   const CostModelParams& costs, const OptimizerConstraints& constraints,
                                   const OptimizerSettings& settings) {
    const std::size_t n = signal.size();
    check_sizes(n, {current.size(), adv.size(), sigma_daily.size()}, "optimize_long_only");
    constraints.validate();
    costs.validate();
    if (!(settings.cost_aversion >= 0.0)) throw std::invalid_argument("optimizer: cost_aversion must be >= 0");

    const double hi = constraints.cap * constraints.aum;
    const double lin = costs.linear_bps;
    const double lambda = settings.cost_aversion;

    std::vector<Coordinate> coords(n);
    std::size_t n_free = 0;
    double scale = lambda * lin;
    for (std::size_t i = 0; i < n; ++i) {
        auto& c = coords[i];
        c.p = current[i];
        if (!is_valid(c.p)) throw std::invalid_argument("optimize_long_only: missing current position");
        c.forced = !is_valid(signal[i]);
        if (c.forced) {
            if (c.p != 0.0) impact_k(adv[i], sigma_daily[i], costs, i);
            continue;
        }
        c.mu = settings.signal_scale * signal[i];
        c.k = impact_k(adv[i], sigma_daily[i], costs, i);
        scale = std::max(scale, std::abs(c.mu) + lambda * lin);
        ++n_free;
    }
    if (static_cast<double>(n_free) * hi < constraints.min_investment) {
        throw std::invalid_argument("optimize_long_only: infeasible, cap * tradeable assets * aum is below "
                                    "the minimum investment");
    }

    std::vector<double> w(n, 0.0);
    auto respond = [&](double nu, TieBreak tie, std::vector<double>& out) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& c = coords[i];
            out[i] = c.forced ? 0.0 : coordinate_response(c.mu - nu, c.p, 0.0, hi, lin, c.k, lambda, tie);
            sum += out[i];
        }
        return sum;
    };

    OptimizerResult result;
    const double s_stay = respond(0.0, TieBreak::Stay, w);
    if (s_stay <= constraints.aum && s_stay >= constraints.min_investment) {
        result.positions = std::move(w);
    } else {
        // Budget binds: S(nu) is nonincreasing, bracket nu with S_high(a) >= target >= S_low(b).
        const bool too_much = s_stay > constraints.aum;
        const double target = too_much ? constraints.aum : constraints.min_investment;
        std::vector<double> wa(n), wb(n);
        if (scale <= 0.0) scale = 1.0;
        double na = 0.0, nb = 0.0;
        double step = scale;
        std::size_t guard = 0;
        if (too_much) {
            nb = step;
            while (respond(nb, TieBreak::Low, wb) > target) {
                nb += (step *= 2.0);
                if (++guard > 2000) throw std::runtime_error("optimize_long_only: budget multiplier diverged");
            }
        } else {
            na = -step;
            while (respond(na, TieBreak::High, wa) < target) {
                na -= (step *= 2.0);
                if (++guard > 2000) throw std::runtime_error("optimize_long_only: budget multiplier diverged");
            }
        }
        const double tol = settings.tolerance * scale;
        std::size_t it = 0;
        while (nb - na > tol && it < 400) {
            const double mid = 0.5 * (na + nb);
            if (mid <= na || mid >= nb) break;
            ++it;
            if (respond(mid, TieBreak::Low, wb) > target) {
                na = mid;
            } else {
                nb = mid;
            }
        }
        result.iterations = it;
        const double sa = respond(na, TieBreak::High, wa);
        const double sb = respond(nb, TieBreak::Low, wb);
        const double gap = sa - sb;
        const double need = std::clamp(target - sb, 0.0, std::max(gap, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = wa[i] == wb[i] || !(gap > 0.0) ? wb[i] : wb[i] + (wa[i] - wb[i]) * need / gap;
        }
        result.budget_multiplier = 0.5 * (na + nb);
        result.positions = std::move(w);
    }
    result.objective =
        long_only_objective(result.positions, signal, current, adv, sigma_daily, costs, settings);
    return result;
}

Portfolio hedge_with_index(Portfolio long_portfolio, std::span<const double> betas) {
    if (betas.size() != long_portfolio.positions.size()) {
        throw std::invalid_argument("hedge_with_index: one beta per position required");
    }
    double hedge = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const double w = long_portfolio.positions[i];
        if (w == 0.0) continue;
        if (!is_valid(betas[i])) {
            throw MissingBetaError("hedge_with_index: missing beta for held asset #" + std::to_string(i));
        }
        hedge -= betas[i] * w;
    }
    long_portfolio.hedge_notional = hedge;
    return long_portfolio;
}

namespace {

/// Orthonormal basis of the span of the rows of C (rank-revealing).
Eigen::MatrixXd row_space_basis(const Eigen::MatrixXd& c) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.transpose());
    qr.setThreshold(1e-12);
    const auto rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(c.cols(), rank);
    return q;
}

void project_out(Eigen::VectorXd& x, const Eigen::MatrixXd& basis) {
    if (basis.cols() > 0) x -= basis * (basis.transpose() * x);
}

}  // namespace

LongShortResult build_long_short(const LongShortInputs& in, const CostModelParams& costs,
                                 const LongShortSettings& settings) {
    const std::size_t n = in.signal.size();
    check_sizes(n, {in.current.size(), in.adv.size(), in.sigma_daily.size()}, "build_long_short");
    if (settings.neutralize_exposure && in.exposure.size() != n) {
        throw std::invalid_argument("build_long_short: exposure vector length differs");
    }
    if (!(settings.vol_target > 0.0)) throw std::invalid_argument("build_long_short: vol_target must be > 0");
    if (!(settings.aum > 0.0)) throw std::invalid_argument("build_long_short: aum must be > 0");
    if (in.covariance == nullptr) throw std::invalid_argument("build_long_short: cleaned covariance required");
    const auto& cov_full = *in.covariance;
    if (static_cast<std::size_t>(cov_full.rows()) != in.covariance_assets.size() || cov_full.rows() != cov_full.cols()) {
        throw std::invalid_argument("build_long_short: covariance shape does not match its asset list");
    }
    costs.validate();

    std::vector<Eigen::Index> cov_pos(n, -1);
    for (std::size_t k = 0; k < in.covariance_assets.size(); ++k) {
        const std::size_t a = in.covariance_assets[k];
        if (a >= n) throw std::out_of_range("build_long_short: covariance asset index out of range");
        cov_pos[a] = static_cast<Eigen::Index>(k);
    }

    std::vector<std::size_t> book;  // eligible assets
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_valid(in.signal[i]) || cov_pos[i] < 0) continue;
        if (settings.neutralize_exposure && !is_valid(in.exposure[i])) continue;
        if (!(in.adv[i] > 0.0)) continue;
        if (costs.impact_coeff != 0.0 && !is_valid(in.sigma_daily[i])) continue;
        book.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(book.size());

    LongShortResult out;
    out.positions.assign(n, 0.0);
    out.target_vol = settings.vol_target * settings.aum;
    if (m < 2) return out;

    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) cov(a, b) = cov_full(cov_pos[book[a]], cov_pos[book[b]]);
    }
    Eigen::MatrixXd constraints(settings.neutralize_exposure ? 2 : 1, m);
    Eigen::VectorXd x(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        constraints(0, a) = 1.0;
        if (settings.neutralize_exposure) constraints(1, a) = in.exposure[book[a]];
        x(a) = in.signal[book[a]];
    }
    const Eigen::MatrixXd basis = row_space_basis(constraints);
    const double x_scale = x.norm();
    project_out(x, basis);
    if (!(x.norm() > 1e-12 * x_scale)) return out;

    const double cap_notional = settings.cap * settings.aum;
    auto vol_of = [&](const Eigen::VectorXd& v) { return predicted_vol(v, cov, settings.periods_per_year); };
    auto scale_to_target = [&](Eigen::VectorXd& v) {
        const double vol = vol_of(v);
        if (!(vol > 0.0)) return;
        v *= out.target_vol / vol;
        const double biggest = v.cwiseAbs().maxCoeff();
        if (biggest > cap_notional) {
            v *= cap_notional / biggest;
            out.cap_binding = true;
        }
    };

    Eigen::VectorXd desired = x;
    scale_to_target(desired);

    // Cost-aware step along the segment from the current book to the desired one:
    // maximize eta * mu.(d - p) - lambda * sum_i TradeCost(eta * |d_i - p_i|) over [0, 1].
    const double lambda = settings.optimizer.cost_aversion;
    double gain = 0.0, lin_sum = 0.0, impact_sum = 0.0;
    Eigen::VectorXd p(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const std::size_t i = book[a];
        p(a) = in.current[i];
        const double q = std::abs(desired(a) - p(a));
        gain += settings.optimizer.signal_scale * in.signal[i] * (desired(a) - p(a));
        lin_sum += costs.linear_bps * q;
        impact_sum += impact_k(in.adv[i], in.sigma_daily[i], costs, i) * q * std::sqrt(q);
    }
    double eta = 1.0;
    if (lambda > 0.0 && (lin_sum > 0.0 || impact_sum > 0.0)) {
        if (gain <= lambda * lin_sum) {
            eta = 0.0;
        } else if (impact_sum > 0.0) {
            const double r = (gain - lambda * lin_sum) / (1.5 * lambda * impact_sum);
            eta = std::min(1.0, r * r);
        }
    }
    out.step = eta;
    Eigen::VectorXd w = p + eta * (desired - p);
    project_out(w, basis);
    out.cap_binding = false;
    scale_to_target(w);

    double gmv = 0.0, net = 0.0, expo = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
        out.positions[book[a]] = w(a);
        gmv += std::abs(w(a));
        net += w(a);
        if (settings.neutralize_exposure) expo += w(a) * in.exposure[book[a]];
    }
    out.predicted_vol = vol_of(w);
    if (gmv > 0.0) {
        out.dollar_residual = std::abs(net) / gmv;
        out.exposure_residual = std::abs(expo) / gmv;
    }
    return out;
}

}  // namespace lsf
