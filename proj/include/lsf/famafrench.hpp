#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lsf/panel.hpp"

namespace lsf {

/// One table of a Kenneth French library CSV: YYYYMM (or YYYY) keyed rows.
struct FrenchTable {
    std::string title;
    std::vector<std::string> columns;
    std::vector<int> periods;                 ///< YYYYMM or YYYY
    std::vector<std::vector<double>> values;  ///< per row, decimal fractions; NaN for sentinels

    bool monthly() const noexcept { return !periods.empty() && periods.front() > 9999; }
    /// Column index by trimmed, case-insensitive name; throws DataError when absent.
    std::size_t column(std::string_view name) const;
};

/**
 * Parses the published layout. Preamble rule: a table starts at a line whose
 * first cell is blank and which has at least one other non-blank cell (the
 * column header); it continues while the first cell is an all-digit period
 * (6 digits monthly, 4 digits annual). The closest preceding free-text line
 * becomes the title. Values are percent in the file and are divided by 100;
 * -99.99 and -999 are sentinels for missing and become NaN.
 */
std::vector<FrenchTable> parse_french_csv(std::istream& in);
std::vector<FrenchTable> parse_french_csv(const std::filesystem::path& path);

/// First monthly table (value-weighted returns in the portfolio files).
FrenchTable first_monthly_table(const std::vector<FrenchTable>& tables, const std::string& source);

enum class LongSide { High, Low };

/**
 * A factor defined by a 2x3 size x characteristic sort. The six columns are
 * taken by position: small-low, small-mid, small-high, big-low, big-mid, big-high.
 */
struct LegSource {
    std::string factor;
    std::filesystem::path file;
    LongSide long_side = LongSide::High;
    std::string published_column;  ///< column of the published factor in the factors file, if any
};

struct FamaFrenchFiles {
    std::filesystem::path factors_file;   ///< needs Mkt-RF, SMB, RF columns
    std::filesystem::path momentum_file;  ///< optional published momentum factor
    std::vector<LegSource> legs;

    /// The four library-backed factors with their conventional file names under `dir`.
    static FamaFrenchFiles defaults(const std::filesystem::path& dir);
};

struct FactorLegs {
    std::string factor;
    std::array<std::vector<double>, 6> blocks;
    std::vector<double> long_leg;   ///< mean of the two long-side blocks
    std::vector<double> short_leg;  ///< mean of the two short-side blocks
    std::vector<double> blend;      ///< mean of all six blocks (half small, half big)
    std::vector<double> published;  ///< published factor series, empty if unavailable
};

/// Monthly legs on a common calendar.
struct LegPanel {
    std::vector<int> months;       ///< YYYYMM
    std::vector<double> market;    ///< Mkt-RF + RF (cap-weighted total return)
    std::vector<double> market_excess;
    std::vector<double> smb;
    std::vector<double> rf;
    std::vector<FactorLegs> factors;

    const FactorLegs& factor(std::string_view name) const;
};

/**
 * Loads the factors file and each 2x3 file, keeps the months common to all
 * of them (which must be contiguous in every file, else a calendar mismatch
 * error is raised) and assembles long and short legs per factor. Legs are
 * kept separate; long - short reproduces the library's own construction.
 */
LegPanel load_famafrench(const FamaFrenchFiles& files);

}  // namespace lsf
