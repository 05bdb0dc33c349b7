#include "lsf/risk.hpp"

#include <algorithm>
#include <cmath>

namespace lsf {

std::optional<double> estimate_beta(std::span<const double> asset_returns, std::span<const double> index_returns,
                                    std::size_t window) {
    if (asset_returns.size() != index_returns.size()) {
        throw std::invalid_argument("estimate_beta: series lengths differ");
    }
    const std::size_t n = asset_returns.size();
    const std::size_t first = n > window ? n - window : 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t count = 0;
    for (std::size_t t = first; t < n; ++t) {
        const double x = index_returns[t], y = asset_returns[t];
        if (!is_valid(x) || !is_valid(y)) continue;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2 || 2 * count < window) return std::nullopt;
    const double c = static_cast<double>(count);
    const double var = sxx - sx * sx / c;
    if (!(var > 1e-14 * sxx)) return std::nullopt;  // flat index, up to rounding
    return (sxy - sx * sy / c) / var;
}

PanelMatrix rolling_betas(const PanelMatrix& returns, std::span<const double> index, std::size_t window,
                          std::size_t min_obs) {
    const auto T = returns.rows();
    const auto N = returns.cols();
    if (static_cast<std::size_t>(T) != index.size()) throw std::invalid_argument("rolling_betas: index length differs");
    if (min_obs < 2) min_obs = 2;
    PanelMatrix out = PanelMatrix::Constant(T, N, kMissing);
    for (Eigen::Index i = 0; i < N; ++i) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t count = 0;
        auto add = [&](Eigen::Index t, double sign) {
            const double x = index[static_cast<std::size_t>(t)], y = returns(t, i);
            if (!is_valid(x) || !is_valid(y)) return;
            sx += sign * x;
            sy += sign * y;
            sxx += sign * x * x;
            sxy += sign * x * y;
            count = sign > 0 ? count + 1 : count - 1;
        };
        for (Eigen::Index t = 0; t < T; ++t) {
            // Window for row t is [t - window, t - 1].
            if (t >= 1) add(t - 1, 1.0);
            if (t - 1 - static_cast<Eigen::Index>(window) >= 0) add(t - 1 - static_cast<Eigen::Index>(window), -1.0);
            if (count >= min_obs) {
                const double c = static_cast<double>(count);
                const double var = sxx - sx * sx / c;
                if (var > 1e-14 * sxx) out(t, i) = (sxy - sx * sy / c) / var;
            }
        }
    }
    return out;
}

PanelMatrix rolling_vol(const PanelMatrix& returns, std::size_t window, std::size_t min_obs) {
    const auto T = returns.rows();
    const auto N = returns.cols();
    if (min_obs < 2) min_obs = 2;
    PanelMatrix out = PanelMatrix::Constant(T, N, kMissing);
    for (Eigen::Index i = 0; i < N; ++i) {
        // Shifted sums around the first valid value keep the variance well conditioned.
        double shift = kMissing, s = 0.0, ss = 0.0;
        std::size_t count = 0;
        auto add = [&](Eigen::Index t, double sign) {
            const double y = returns(t, i);
            if (!is_valid(y)) return;
            if (!is_valid(shift)) shift = y;
            s += sign * (y - shift);
            ss += sign * (y - shift) * (y - shift);
            count = sign > 0 ? count + 1 : count - 1;
        };
        for (Eigen::Index t = 0; t < T; ++t) {
            add(t, 1.0);
            if (t - static_cast<Eigen::Index>(window) >= 0) add(t - static_cast<Eigen::Index>(window), -1.0);
            if (count >= min_obs) {
                const double c = static_cast<double>(count);
                out(t, i) = std::sqrt(std::max(ss - s * s / c, 0.0) / (c - 1.0));
            }
        }
    }
    return out;
}

Eigen::VectorXd CleanedCorrelation::leading_eigenvector() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(correlation);
    Eigen::VectorXd v = solver.eigenvectors().col(correlation.cols() - 1);
    if (v.sum() < 0.0) v = -v;
    return v;
}

CleanedCorrelation clean_correlation(const Eigen::MatrixXd& returns, std::vector<std::string> asset_names) {
    const auto T = returns.rows();
    const auto N = returns.cols();
    if (N < 1) throw std::invalid_argument("clean_correlation: no assets");
    if (T < static_cast<Eigen::Index>(kMinCleaningObservations)) {
        throw std::invalid_argument("clean_correlation: need at least 60 observations, got " + std::to_string(T));
    }
    if (asset_names.empty()) {
        for (Eigen::Index i = 0; i < N; ++i) asset_names.push_back("#" + std::to_string(i));
    }
    CleanedCorrelation out;
    out.assets = std::move(asset_names);
    out.n_observations = static_cast<std::size_t>(T);
    out.vols.resize(N);

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(T, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        double sum = 0.0, lo = kMissing, hi = kMissing;
        std::size_t n = 0;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double r = returns(t, i);
            if (is_valid(r)) {
                sum += r;
                lo = n ? std::min(lo, r) : r;
                hi = n ? std::max(hi, r) : r;
                ++n;
            }
        }
        if (n < 2) throw DegenerateSeriesError("clean_correlation: asset " + out.assets[static_cast<std::size_t>(i)] + " has no data");
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            if (is_valid(returns(t, i))) ss += (returns(t, i) - mean) * (returns(t, i) - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (lo == hi || !(sd > 0.0)) {
            throw DegenerateSeriesError("clean_correlation: asset " + out.assets[static_cast<std::size_t>(i)] +
                                        " has a constant return series");
        }
        out.vols(i) = sd;
        for (Eigen::Index t = 0; t < T; ++t) {
            if (is_valid(returns(t, i))) z(t, i) = (returns(t, i) - mean) / sd;
        }
    }
    if (N == 1) {
        out.correlation = Eigen::MatrixXd::Ones(1, 1);
        out.raw_eigenvalues = out.cleaned_eigenvalues = Eigen::VectorXd::Ones(1);
        out.noise_edge = std::pow(1.0 + std::sqrt(1.0 / static_cast<double>(T)), 2);
        return out;
    }

    Eigen::MatrixXd sample = (z.transpose() * z) / static_cast<double>(T - 1);
    const Eigen::VectorXd diag = sample.diagonal().cwiseSqrt();
    sample = diag.cwiseInverse().asDiagonal() * sample * diag.cwiseInverse().asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sample);
    out.raw_eigenvalues = solver.eigenvalues();
    out.noise_edge = std::pow(1.0 + std::sqrt(static_cast<double>(N) / static_cast<double>(T)), 2);
    Eigen::VectorXd lambda = out.raw_eigenvalues;
    double noise_sum = 0.0;
    Eigen::Index noise_count = 0;
    for (Eigen::Index k = 0; k < N; ++k) {
        if (lambda(k) < out.noise_edge) {
            noise_sum += lambda(k);
            ++noise_count;
        }
    }
    if (noise_count > 0) {
        const double avg = std::max(noise_sum / static_cast<double>(noise_count), 0.0);
        for (Eigen::Index k = 0; k < N; ++k) {
            if (lambda(k) < out.noise_edge) lambda(k) = avg;
        }
    }
    out.cleaned_eigenvalues = lambda;
    Eigen::MatrixXd rebuilt = solver.eigenvectors() * lambda.asDiagonal() * solver.eigenvectors().transpose();
    const Eigen::VectorXd d = rebuilt.diagonal().cwiseSqrt().cwiseInverse();
    rebuilt = d.asDiagonal() * rebuilt * d.asDiagonal();
    rebuilt = 0.5 * (rebuilt + rebuilt.transpose());
    rebuilt.diagonal().setOnes();
    out.correlation = std::move(rebuilt);
    return out;
}

double predicted_vol(const Eigen::VectorXd& weights, const Eigen::MatrixXd& covariance, double periods_per_year) {
    const double var = weights.dot(covariance * weights);
    return std::sqrt(std::max(var, 0.0) * periods_per_year);
}

}  // namespace lsf
