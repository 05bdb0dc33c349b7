#include "lsf/famafrench.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "lsf/data.hpp"

namespace lsf {

namespace {

std::string trim_copy(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// The library writes -99.99 or -999 for missing; no real monthly return reaches -99.99%.
bool is_sentinel(double v) { return v <= -99.99; }

int next_month(int yyyymm) {
    int y = yyyymm / 100, m = yyyymm % 100;
    if (++m > 12) {
        m = 1;
        ++y;
    }
    return y * 100 + m;
}

}  // namespace

std::size_t FrenchTable::column(std::string_view name) const {
    const std::string want = lower(trim_copy(name));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (lower(columns[c]) == want) return c;
    }
    throw DataError("table '" + title + "' has no column '" + std::string(name) + "'");
}

std::vector<FrenchTable> parse_french_csv(std::istream& in) {
    std::vector<FrenchTable> tables;
    std::string line;
    std::string last_text;
    FrenchTable* open = nullptr;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cells = split_csv_line(line);
        std::vector<std::string> trimmed;
        trimmed.reserve(cells.size());
        for (auto c : cells) trimmed.push_back(trim_copy(c));
        const bool blank_first = trimmed.empty() || trimmed[0].empty();
        const bool has_other = std::any_of(trimmed.begin() + (trimmed.empty() ? 0 : 1), trimmed.end(),
                                           [](const std::string& s) { return !s.empty(); });

        if (open && !trimmed.empty() && all_digits(trimmed[0]) &&
            (trimmed[0].size() == 6 || trimmed[0].size() == 4)) {
            if (trimmed.size() != open->columns.size() + 1) {
                throw DataError("row width does not match table header", line_no);
            }
            std::vector<double> row(open->columns.size());
            for (std::size_t c = 0; c < row.size(); ++c) {
                double v = kMissing;
                if (!trimmed[c + 1].empty()) {
                    try {
                        v = parse_double(trimmed[c + 1]);
                    } catch (const std::invalid_argument& e) {
                        throw DataError(e.what(), line_no);
                    }
                }
                row[c] = (is_valid(v) && !is_sentinel(v)) ? v / 100.0 : kMissing;
            }
            open->periods.push_back(std::stoi(trimmed[0]));
            open->values.push_back(std::move(row));
            continue;
        }
        if (blank_first && has_other) {
            FrenchTable t;
            t.title = last_text;
            for (std::size_t c = 1; c < trimmed.size(); ++c) t.columns.push_back(trimmed[c]);
            tables.push_back(std::move(t));
            open = &tables.back();
            continue;
        }
        open = nullptr;
        const std::string text = trim_copy(line);
        if (!text.empty()) last_text = text;
    }
    tables.erase(std::remove_if(tables.begin(), tables.end(), [](const FrenchTable& t) { return t.periods.empty(); }),
                 tables.end());
    return tables;
}

std::vector<FrenchTable> parse_french_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return parse_french_csv(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

FrenchTable first_monthly_table(const std::vector<FrenchTable>& tables, const std::string& source) {
    for (const auto& t : tables) {
        if (t.monthly()) return t;
    }
    throw DataError(source + ": no monthly table found");
}

FamaFrenchFiles FamaFrenchFiles::defaults(const std::filesystem::path& dir) {
    FamaFrenchFiles f;
    f.factors_file = dir / "F-F_Research_Data_5_Factors_2x3.csv";
    f.momentum_file = dir / "F-F_Momentum_Factor.csv";
    f.legs = {
        {"HML", dir / "6_Portfolios_2x3.csv", LongSide::High, "HML"},
        {"RMW", dir / "6_Portfolios_ME_OP_2x3.csv", LongSide::High, "RMW"},
        {"CMA", dir / "6_Portfolios_ME_INV_2x3.csv", LongSide::Low, "CMA"},
        {"WML", dir / "6_Portfolios_ME_Prior_12_2.csv", LongSide::High, "Mom"},
    };
    return f;
}

const FactorLegs& LegPanel::factor(std::string_view name) const {
    for (const auto& f : factors) {
        if (f.factor == name) return f;
    }
    throw DataError("leg panel has no factor '" + std::string(name) + "'");
}

namespace {

/// Values of `col` on `months`; requires the table to be contiguous over them.
std::vector<double> take(const FrenchTable& t, std::size_t col, const std::vector<int>& months,
                         const std::string& source) {
    auto it = std::find(t.periods.begin(), t.periods.end(), months.front());
    if (it == t.periods.end()) throw DataError(source + ": calendar mismatch (month " + std::to_string(months.front()) + " absent)");
    std::size_t row = static_cast<std::size_t>(it - t.periods.begin());
    std::vector<double> out;
    out.reserve(months.size());
    for (int m : months) {
        if (row >= t.periods.size() || t.periods[row] != m) {
            throw DataError(source + ": calendar mismatch at month " + std::to_string(m));
        }
        out.push_back(t.values[row][col]);
        ++row;
    }
    return out;
}

void check_contiguous(const FrenchTable& t, const std::string& source) {
    for (std::size_t i = 1; i < t.periods.size(); ++i) {
        if (t.periods[i] != next_month(t.periods[i - 1])) {
            throw DataError(source + ": calendar mismatch (gap after " + std::to_string(t.periods[i - 1]) + ")");
        }
    }
}

}  // namespace

LegPanel load_famafrench(const FamaFrenchFiles& files) {
    std::vector<std::string> missing;
    if (!std::filesystem::exists(files.factors_file)) missing.push_back(files.factors_file.string());
    for (const auto& leg : files.legs) {
        if (!std::filesystem::exists(leg.file)) missing.push_back(leg.file.string());
    }
    if (!missing.empty()) {
        std::string msg = "missing Fama-French files:";
        for (const auto& m : missing) msg += " " + m;
        throw DataError(msg);
    }

    const auto factors = first_monthly_table(parse_french_csv(files.factors_file), files.factors_file.string());
    check_contiguous(factors, files.factors_file.string());
    std::vector<FrenchTable> leg_tables;
    for (const auto& leg : files.legs) {
        auto t = first_monthly_table(parse_french_csv(leg.file), leg.file.string());
        if (t.columns.size() != 6) {
            throw DataError(leg.file.string() + ": factor " + leg.factor +
                            " needs the six 2x3 portfolio columns, found " + std::to_string(t.columns.size()));
        }
        check_contiguous(t, leg.file.string());
        leg_tables.push_back(std::move(t));
    }
    std::optional<FrenchTable> momentum;
    if (!files.momentum_file.empty() && std::filesystem::exists(files.momentum_file)) {
        momentum = first_monthly_table(parse_french_csv(files.momentum_file), files.momentum_file.string());
        check_contiguous(*momentum, files.momentum_file.string());
    }

    int first = factors.periods.front(), last = factors.periods.back();
    for (const auto& t : leg_tables) {
        first = std::max(first, t.periods.front());
        last = std::min(last, t.periods.back());
    }
    if (first > last) throw DataError("calendar mismatch: Fama-French files share no months");

    LegPanel out;
    for (int m = first; m <= last; m = next_month(m)) out.months.push_back(m);

    const std::string fsrc = files.factors_file.string();
    out.market_excess = take(factors, factors.column("Mkt-RF"), out.months, fsrc);
    out.smb = take(factors, factors.column("SMB"), out.months, fsrc);
    out.rf = take(factors, factors.column("RF"), out.months, fsrc);
    out.market.resize(out.months.size());
    for (std::size_t i = 0; i < out.months.size(); ++i) out.market[i] = out.market_excess[i] + out.rf[i];

    for (std::size_t k = 0; k < files.legs.size(); ++k) {
        const auto& src = files.legs[k];
        const auto& t = leg_tables[k];
        FactorLegs legs;
        legs.factor = src.factor;
        for (std::size_t c = 0; c < 6; ++c) legs.blocks[c] = take(t, c, out.months, src.file.string());
        // Columns: 0 small-low, 1 small-mid, 2 small-high, 3 big-low, 4 big-mid, 5 big-high.
        const auto [l0, l1] = src.long_side == LongSide::High ? std::pair{2, 5} : std::pair{0, 3};
        const auto [s0, s1] = src.long_side == LongSide::High ? std::pair{0, 3} : std::pair{2, 5};
        const std::size_t T = out.months.size();
        legs.long_leg.resize(T);
        legs.short_leg.resize(T);
        legs.blend.resize(T);
        for (std::size_t i = 0; i < T; ++i) {
            legs.long_leg[i] = 0.5 * (legs.blocks[l0][i] + legs.blocks[l1][i]);
            legs.short_leg[i] = 0.5 * (legs.blocks[s0][i] + legs.blocks[s1][i]);
            double sum = 0.0;
            for (std::size_t c = 0; c < 6; ++c) sum += legs.blocks[c][i];
            legs.blend[i] = sum / 6.0;
        }
        if (!src.published_column.empty()) {
            const FrenchTable* holder = nullptr;
            std::string source;
            for (const auto& name : factors.columns) {
                if (lower(name) == lower(src.published_column)) holder = &factors, source = fsrc;
            }
            if (!holder && momentum) {
                for (const auto& name : momentum->columns) {
                    if (lower(name) == lower(src.published_column)) holder = &*momentum, source = files.momentum_file.string();
                }
            }
            if (holder) {
                auto first_it = std::find(holder->periods.begin(), holder->periods.end(), out.months.front());
                auto last_it = std::find(holder->periods.begin(), holder->periods.end(), out.months.back());
                if (first_it != holder->periods.end() && last_it != holder->periods.end()) {
                    legs.published = take(*holder, holder->column(src.published_column), out.months, source);
                }
            }
        }
        out.factors.push_back(std::move(legs));
    }
    return out;
}

}  // namespace lsf
