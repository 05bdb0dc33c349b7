#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsf/panel.hpp"

namespace lsf {

/**
 * OLS slope of asset on index over the last `window` entries of the two
 * aligned series. Pairs with a NaN on either side are skipped; fewer than
 * window / 2 usable pairs (or a flat index) gives nullopt.
 */
std::optional<double> estimate_beta(std::span<const double> asset_returns, std::span<const double> index_returns,
                                    std::size_t window = 250);

/**
 * beta(t, i) estimated on rows [t - window, t - 1]; NaN where fewer than
 * min_obs pairs are available. O(T * N) through running sums.
 */
PanelMatrix rolling_betas(const PanelMatrix& returns, std::span<const double> index, std::size_t window = 250,
                          std::size_t min_obs = 125);

/// Sample standard deviation of returns(., i) over rows [t - window + 1, t]; NaN below min_obs.
PanelMatrix rolling_vol(const PanelMatrix& returns, std::size_t window = 250, std::size_t min_obs = 60);

class DegenerateSeriesError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CleanedCorrelation {
    std::vector<std::string> assets;
    Eigen::MatrixXd correlation;  ///< symmetric, unit diagonal, PSD
    Eigen::VectorXd vols;         ///< per-asset sample std of daily returns
    Eigen::VectorXd raw_eigenvalues;      ///< ascending
    Eigen::VectorXd cleaned_eigenvalues;  ///< ascending, before diagonal renormalization
    double noise_edge = 0.0;              ///< (1 + sqrt(N/T))^2
    std::size_t n_observations = 0;

    Eigen::MatrixXd covariance() const { return vols.asDiagonal() * correlation * vols.asDiagonal(); }
    /// Unit-norm leading eigenvector of the cleaned correlation, sign chosen so its entries sum >= 0.
    Eigen::VectorXd leading_eigenvector() const;
};

inline constexpr std::size_t kMinCleaningObservations = 60;

/**
 * Eigenvalue clipping of the sample correlation of `returns` (T rows x N
 * assets). Eigenvalues below the noise edge (1 + sqrt(N/T))^2 are replaced by
 * their mean, which preserves the trace; eigenvectors are kept and the
 * rebuilt matrix is rescaled to a unit diagonal. NaN cells contribute zero
 * after standardization. Throws for T < 60 or a constant column (naming it).
 */
CleanedCorrelation clean_correlation(const Eigen::MatrixXd& returns, std::vector<std::string> asset_names = {});

/// Annualized predicted volatility sqrt(periods * w' cov w).
double predicted_vol(const Eigen::VectorXd& weights, const Eigen::MatrixXd& covariance, double periods_per_year = 252.0);

}  // namespace lsf
