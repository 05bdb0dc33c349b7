#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lsf {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws std::invalid_argument on anything else.
Date parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

/// Monday-to-Friday calendar starting at `first` (rolled forward to a weekday).
std::vector<Date> business_days(Date first, std::size_t count);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_valid(double x) noexcept { return !std::isnan(x); }

/// Date x asset matrix. NaN marks a masked cell.
using PanelMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Field : std::size_t {
    Ret = 0,
    Price,
    Adv,
    Mcap,
    Earnings,
    NetIncome,
    TotalAssets,
    BorrowFee,
};
inline constexpr std::size_t kFieldCount = 8;

std::string_view field_name(Field f);
std::optional<Field> field_from_name(std::string_view name);
/// Comma-separated list of every known field column.
std::string known_field_names();

struct Asset {
    std::string id;
    std::string region;
};

/**
 * Rectangular date x asset store. Fields that were never loaded are
 * absent (has() is false); loaded fields carry NaN where missing.
 */
class ReturnsPanel {
public:
    ReturnsPanel() = default;
    ReturnsPanel(std::vector<Date> dates, std::vector<Asset> assets);

    std::size_t n_dates() const noexcept { return dates_.size(); }
    std::size_t n_assets() const noexcept { return assets_.size(); }
    const std::vector<Date>& dates() const noexcept { return dates_; }
    const std::vector<Asset>& assets() const noexcept { return assets_; }

    bool has(Field f) const noexcept { return present_[index(f)]; }
    const PanelMatrix& field(Field f) const;
    PanelMatrix& mutable_field(Field f);
    /// Adds the field filled with NaN if absent and returns it.
    PanelMatrix& ensure_field(Field f);
    void set_field(Field f, PanelMatrix values);

    std::optional<std::size_t> asset_index(std::string_view id) const;
    std::optional<std::size_t> date_index(Date d) const;

    /// Copy restricted to rows [first, last).
    ReturnsPanel slice_dates(std::size_t first, std::size_t last) const;

private:
    static constexpr std::size_t index(Field f) noexcept { return static_cast<std::size_t>(f); }

    std::vector<Date> dates_;
    std::vector<Asset> assets_;
    std::array<PanelMatrix, kFieldCount> fields_;
    std::array<bool, kFieldCount> present_{};
};

/// A dated scalar series (index returns, factor returns).
struct Series {
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    /// Values aligned on `calendar`; NaN where the series has no observation.
    std::vector<double> aligned_to(const std::vector<Date>& calendar) const;
};

}  // namespace lsf
