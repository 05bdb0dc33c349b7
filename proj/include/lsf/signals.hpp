#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsf/data.hpp"
#include "lsf/panel.hpp"

namespace lsf {

enum class Factor { Mom, ValueEar, LowVol, Smb, Roa, Static };

std::string_view factor_name(Factor f);
/// Accepts MOM, VALUEEAR, LOWVOL, SMB, ROA, STATIC (case-insensitive).
std::optional<Factor> factor_from_name(std::string_view name);

/// Date x asset cross-sectional scores; NaN where undefined.
struct SignalPanel {
    std::string name;
    std::vector<Date> dates;
    PanelMatrix scores;

    std::size_t n_dates() const noexcept { return dates.size(); }
    std::size_t n_assets() const noexcept { return static_cast<std::size_t>(scores.cols()); }
};

/**
 * Cross-sectional rank score (rank - 0.5) / N - 0.5 with ranks 1..N
 * ascending over the N valid entries and ties sharing their average rank.
 * Output lies strictly inside (-0.5, 0.5) and sums to zero. Fewer than two
 * valid inputs masks the whole cross-section.
 */
std::vector<double> rank_normalize(std::span<const double> values);

struct DescriptorConfig {
    std::size_t mom_lookback = 252;  ///< window is rows [t - mom_lookback, t - mom_skip]
    std::size_t mom_skip = 21;
    std::size_t vol_window = 250;
    std::size_t size_lag = 20;
    std::size_t size_window = 40;
    double min_valid_fraction = 0.8;
    bool lowvol_long_low_vol = true;  ///< descriptor is -vol, so low volatility ranks high
    bool smb_long_small = true;       ///< descriptor is -size, so small caps rank high
    std::map<std::string, double> static_values;  ///< STATIC factor: asset_id -> value
};

/**
 * Raw descriptor cross-section at row t, NaN where the asset is outside the
 * pool or its window is insufficient:
 *   MOM      mean daily return over rows [t-252, t-21]
 *   VALUEEAR earnings / price
 *   LOWVOL   -(sample std of the last 250 returns)
 *   SMB      -(mean market cap over the 40 rows ending 20 rows before t)
 *   ROA      net_income / total_assets (total_assets > 0)
 *   STATIC   a fixed per-asset value from the config
 */
std::vector<double> compute_descriptor(const ReturnsPanel& panel, const PoolMask& pool, Factor factor, std::size_t t,
                                       const DescriptorConfig& config = {});

/// Descriptor then rank_normalize on every row.
SignalPanel compute_signal(const ReturnsPanel& panel, const PoolMask& pool, Factor factor,
                           const DescriptorConfig& config = {});

enum class EmaConvention { Span, HalfLife };

/// Smoothing weight: 2 / (span + 1) for Span, 1 - 2^(-1/h) for HalfLife.
double ema_weight(double length, EmaConvention convention = EmaConvention::Span);

/**
 * s_t = (1 - w) s_{t-1} + w x_t per asset. A newly valid asset starts at its
 * first raw score; on masked days the state is carried but the output cell
 * stays masked.
 */
SignalPanel smooth_ema(const SignalPanel& signal, double length = 150.0,
                       EmaConvention convention = EmaConvention::Span);

/// Per cell, sum_k w_k s_k / sum_k w_k over the factors valid in that cell.
SignalPanel blend(const std::vector<SignalPanel>& signals, const std::vector<double>& weights);

// ---------------------------------------------------------------------------
// Residual returns and predictability.

enum class ResidualMode { MarketMode, Index };

struct ResidualConfig {
    std::size_t lookback = 250;
    std::size_t refresh = 21;            ///< market-mode re-estimation period (rows)
    double min_valid_fraction = 0.9;     ///< per asset inside the lookback window
    ResidualMode mode = ResidualMode::MarketMode;
};

/**
 * r_i - beta_i * m_t, where m is either the return of the leading
 * eigenvector portfolio of the trailing correlation matrix (MarketMode) or
 * the supplied index (Index). Betas are OLS over the trailing `lookback`
 * rows ending the row before the first use. Masked until enough history.
 */
PanelMatrix residual_returns(const ReturnsPanel& panel, const ResidualConfig& config = {},
                             std::span<const double> index = {});

struct PredictabilityBin {
    double x = 0.0;       ///< mean score
    double y = 0.0;       ///< mean future residual return
    double stderr_y = 0.0;
    std::size_t count = 0;
};

struct SideFit {
    std::optional<double> slope;
    double stderr_wls = 0.0;
    double stderr_boot = 0.0;  ///< 0 when no bootstrap ran
    std::size_t n_bins = 0;

    /// Bootstrap standard error when available, else the weighted least squares one.
    double stderr() const noexcept { return stderr_boot > 0.0 ? stderr_boot : stderr_wls; }
};

struct PredictabilityCurve {
    std::vector<PredictabilityBin> bins;
    SideFit positive;
    SideFit negative;
    std::optional<double> slope_ratio;  ///< negative / positive; masked when undefined or positive side insignificant
    std::optional<double> ratio_ci_low, ratio_ci_high;
    double threshold = 0.0;  ///< shorts_threshold(1)
    std::size_t n_observations = 0;
    std::size_t n_dates = 0;

    bool above_threshold() const noexcept { return slope_ratio && *slope_ratio > threshold; }
};

struct PredictabilityConfig {
    std::size_t horizon = 21;
    std::size_t n_bins = 20;
    std::size_t stride = 1;          ///< use every stride-th signal date
    std::size_t bootstrap_reps = 200;  ///< moving-block bootstrap over dates; 0 disables
    std::size_t block_length = 0;    ///< 0 means horizon
    std::uint64_t seed = 7;
};

/**
 * Pools (score_t, mean residual over t+1..t+h) pairs, forms equal-count bins
 * in score order, and fits a line through the origin separately to the bins
 * with positive and with negative mean score, weighting bins by 1/stderr^2
 * (by count on a side where some bin has zero stderr).
 */
PredictabilityCurve predictability_curve(const SignalPanel& signal, const PanelMatrix& residuals,
                                         const PredictabilityConfig& config = {});

/// Weighted through-origin fit used by predictability_curve (exposed for testing).
SideFit fit_through_origin(const std::vector<PredictabilityBin>& bins, bool positive_side);

}  // namespace lsf
