#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsf/panel.hpp"

namespace lsf {

/// Input file problem. line() is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Shortest round-trip decimal text for a double; locale independent.
std::string format_double(double x);
/// Strict decimal parse (whole field must be consumed); throws std::invalid_argument.
double parse_double(std::string_view text);
std::vector<std::string_view> split_csv_line(std::string_view line);

struct PanelSchema {
    /// Field columns that must appear in the header.
    std::vector<Field> required{Field::Ret};
    /// Carry earnings, net_income, total_assets forward up to `fundamentals_max_age_days` calendar days.
    bool forward_fill_fundamentals = false;
    int fundamentals_max_age_days = 370;
};

/**
 * Generic panel CSV:
 *   date,asset_id,region,<field columns...>
 * Field columns are any subset of ret, price, adv, mcap, earnings,
 * net_income, total_assets, borrow_fee. An empty cell is missing.
 * Assets keep their first-appearance order.
 */
ReturnsPanel load_panel(std::istream& in, const PanelSchema& schema = {});
ReturnsPanel load_panel(const std::filesystem::path& path, const PanelSchema& schema = {});

/// Writes the generic layout with every field the panel carries; rows where all fields are missing are skipped.
void write_panel(std::ostream& out, const ReturnsPanel& panel);
void write_panel(const std::filesystem::path& path, const ReturnsPanel& panel);

/// Forward-fills earnings, net_income and total_assets up to max_age_days calendar days.
ReturnsPanel forward_fill_fundamentals(const ReturnsPanel& panel, int max_age_days = 370);

/// Two-column `date,<value>` CSV (header required).
Series load_series(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, const Series& s, std::string_view value_name);

/// `asset_id,annual_fee_bps` CSV; returns annualized rates (bps / 1e4).
std::map<std::string, double> load_borrow_fees(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Liquidity pool.

/// Date x asset membership, row-major; 1 = member.
struct PoolMask {
    std::size_t n_dates = 0;
    std::size_t n_assets = 0;
    std::vector<std::uint8_t> member;
    std::vector<std::size_t> rebalance_rows;

    bool operator()(std::size_t t, std::size_t i) const { return member[t * n_assets + i] != 0; }
    std::size_t count(std::size_t t) const;
    /// Every cell a member (used when no pool is configured).
    static PoolMask all(std::size_t n_dates, std::size_t n_assets);
};

struct PoolConfig {
    std::size_t adv_window_days = 180;
    std::size_t min_valid_days = 60;
    std::map<std::string, std::size_t> counts_by_region{{"NA", 1200}, {"EU", 1000}, {"JP", 900}, {"AU", 200}};
};

/// First trading row of each calendar month.
std::vector<std::size_t> monthly_rebalance_rows(const std::vector<Date>& dates);

/**
 * On each monthly rebalance row, ranks each configured region's assets by
 * mean ADV over the trailing window (at most adv_window_days rows, ending on
 * the rebalance row) and keeps the top k. Assets with fewer than
 * min_valid_days valid ADV observations are excluded. Counts larger than the
 * eligible set clamp to it. Rows before the first rebalance are empty.
 */
PoolMask select_pool(const ReturnsPanel& panel, const PoolConfig& config = {});

}  // namespace lsf
