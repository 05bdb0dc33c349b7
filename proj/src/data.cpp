#include "lsf/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace lsf {

std::string format_double(double x) {
    if (std::isnan(x)) return "";
    if (x == 0.0) x = 0.0;  // drop the sign of -0
    char buf[64];
    // Shortest round-trip digits; plain notation for everyday magnitudes.
    const double mag = std::fabs(x);
    const auto fmt = (mag == 0.0 || (mag >= 1e-5 && mag < 1e16)) ? std::chars_format::fixed : std::chars_format::scientific;
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, fmt);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct RawRow {
    Date date;
    std::size_t asset;
    std::size_t line;
    std::vector<double> values;  // one per field column
};

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

ReturnsPanel load_panel(std::istream& in, const PanelSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty panel file", 1);
    const auto header = split_csv_line(line);
    if (header.size() < 3 || trim(header[0]) != "date" || trim(header[1]) != "asset_id" ||
        trim(header[2]) != "region") {
        throw DataError("panel header must start with date,asset_id,region", 1);
    }
    std::vector<Field> columns;
    for (std::size_t c = 3; c < header.size(); ++c) {
        const auto name = trim(header[c]);
        const auto f = field_from_name(name);
        if (!f) {
            throw DataError("unknown field '" + std::string(name) + "'; known fields: " + known_field_names(), 1);
        }
        if (std::find(columns.begin(), columns.end(), *f) != columns.end()) {
            throw DataError("duplicate field column '" + std::string(name) + "'", 1);
        }
        columns.push_back(*f);
    }
    for (Field f : schema.required) {
        if (std::find(columns.begin(), columns.end(), f) == columns.end()) {
            throw DataError("required field '" + std::string(field_name(f)) + "' missing from header", 1);
        }
    }

    std::vector<Asset> assets;
    std::unordered_map<std::string, std::size_t> asset_ids;
    std::vector<RawRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " columns, got " +
                                std::to_string(cells.size()),
                            line_no);
        }
        RawRow row;
        row.line = line_no;
        try {
            row.date = parse_iso_date(trim(cells[0]));
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what(), line_no);
        }
        const std::string id(trim(cells[1]));
        const std::string region(trim(cells[2]));
        if (id.empty()) throw DataError("empty asset_id", line_no);
        auto [it, inserted] = asset_ids.emplace(id, assets.size());
        if (inserted) {
            assets.push_back(Asset{id, region});
        } else if (assets[it->second].region != region) {
            throw DataError("asset '" + id + "' changes region", line_no);
        }
        row.asset = it->second;
        row.values.resize(columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto cell = trim(cells[c + 3]);
            if (cell.empty()) {
                row.values[c] = kMissing;
                continue;
            }
            try {
                row.values[c] = parse_double(cell);
            } catch (const std::invalid_argument&) {
                throw DataError("bad number '" + std::string(cell) + "' in column '" +
                                    std::string(field_name(columns[c])) + "'",
                                line_no);
            }
            if (!std::isfinite(row.values[c])) {
                throw DataError("non-finite value in column '" + std::string(field_name(columns[c])) + "'",
                                line_no);
            }
            if (columns[c] == Field::Adv && row.values[c] < 0.0) throw DataError("negative adv", line_no);
        }
        rows.push_back(std::move(row));
    }

    std::vector<Date> dates;
    dates.reserve(rows.size());
    for (const auto& r : rows) dates.push_back(r.date);
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());

    ReturnsPanel panel(dates, assets);
    for (Field f : columns) panel.ensure_field(f);
    std::vector<std::uint8_t> seen(dates.size() * assets.size(), 0);
    for (const auto& r : rows) {
        const auto t = static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), r.date) - dates.begin());
        auto& flag = seen[t * assets.size() + r.asset];
        if (flag) {
            throw DataError("duplicate (date, asset) " + format_iso_date(r.date) + "," + assets[r.asset].id, r.line);
        }
        flag = 1;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            panel.mutable_field(columns[c])(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(r.asset)) =
                r.values[c];
        }
    }
    if (schema.forward_fill_fundamentals) return forward_fill_fundamentals(panel, schema.fundamentals_max_age_days);
    return panel;
}

ReturnsPanel load_panel(const std::filesystem::path& path, const PanelSchema& schema) {
    auto in = open_input(path);
    try {
        return load_panel(in, schema);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_panel(std::ostream& out, const ReturnsPanel& panel) {
    std::vector<Field> columns;
    for (std::size_t k = 0; k < kFieldCount; ++k) {
        if (panel.has(static_cast<Field>(k))) columns.push_back(static_cast<Field>(k));
    }
    out << "date,asset_id,region";
    for (Field f : columns) out << ',' << field_name(f);
    out << '\n';
    for (std::size_t t = 0; t < panel.n_dates(); ++t) {
        const std::string date = format_iso_date(panel.dates()[t]);
        for (std::size_t i = 0; i < panel.n_assets(); ++i) {
            bool any = false;
            for (Field f : columns) {
                any = any || is_valid(panel.field(f)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)));
            }
            if (!any) continue;
            out << date << ',' << panel.assets()[i].id << ',' << panel.assets()[i].region;
            for (Field f : columns) {
                out << ',' << format_double(panel.field(f)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)));
            }
            out << '\n';
        }
    }
}

void write_panel(const std::filesystem::path& path, const ReturnsPanel& panel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_panel(out, panel);
}

ReturnsPanel forward_fill_fundamentals(const ReturnsPanel& panel, int max_age_days) {
    ReturnsPanel out = panel;
    for (Field f : {Field::Earnings, Field::NetIncome, Field::TotalAssets}) {
        if (!out.has(f)) continue;
        auto& m = out.mutable_field(f);
        for (Eigen::Index i = 0; i < m.cols(); ++i) {
            double last = kMissing;
            Date last_date{};
            for (Eigen::Index t = 0; t < m.rows(); ++t) {
                const Date d = panel.dates()[static_cast<std::size_t>(t)];
                if (is_valid(m(t, i))) {
                    last = m(t, i);
                    last_date = d;
                } else if (is_valid(last) && (d - last_date).count() <= max_age_days) {
                    m(t, i) = last;
                }
            }
        }
    }
    return out;
}

Series load_series(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty series file", 1);
    const auto header = split_csv_line(line);
    if (header.size() != 2 || trim(header[0]) != "date") {
        throw DataError(path.string() + ": series header must be date,<name>", 1);
    }
    Series s;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2) throw DataError(path.string() + ": expected 2 columns", line_no);
        try {
            const Date d = parse_iso_date(trim(cells[0]));
            if (!s.dates.empty() && d <= s.dates.back()) {
                throw DataError(path.string() + ": dates must be strictly increasing", line_no);
            }
            s.dates.push_back(d);
            s.values.push_back(trim(cells[1]).empty() ? kMissing : parse_double(cells[1]));
        } catch (const std::invalid_argument& e) {
            throw DataError(path.string() + ": " + e.what(), line_no);
        }
    }
    return s;
}

void write_series(const std::filesystem::path& path, const Series& s, std::string_view value_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "date," << value_name << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << format_iso_date(s.dates[i]) << ',' << format_double(s.values[i]) << '\n';
    }
}

std::map<std::string, double> load_borrow_fees(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty borrow-fee file", 1);
    const auto header = split_csv_line(line);
    if (header.size() != 2 || trim(header[0]) != "asset_id" || trim(header[1]) != "annual_fee_bps") {
        throw DataError(path.string() + ": header must be asset_id,annual_fee_bps", 1);
    }
    std::map<std::string, double> fees;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2) throw DataError(path.string() + ": expected 2 columns", line_no);
        double bps = 0.0;
        try {
            bps = parse_double(cells[1]);
        } catch (const std::invalid_argument& e) {
            throw DataError(path.string() + ": " + e.what(), line_no);
        }
        if (bps < 0.0) throw DataError(path.string() + ": negative borrow fee", line_no);
        fees[std::string(trim(cells[0]))] = bps / 1.0e4;
    }
    return fees;
}

// ---------------------------------------------------------------------------

std::size_t PoolMask::count(std::size_t t) const {
    return static_cast<std::size_t>(std::count(member.begin() + static_cast<std::ptrdiff_t>(t * n_assets),
                                               member.begin() + static_cast<std::ptrdiff_t>((t + 1) * n_assets),
                                               std::uint8_t{1}));
}

PoolMask PoolMask::all(std::size_t n_dates, std::size_t n_assets) {
    PoolMask m;
    m.n_dates = n_dates;
    m.n_assets = n_assets;
    m.member.assign(n_dates * n_assets, 1);
    return m;
}

std::vector<std::size_t> monthly_rebalance_rows(const std::vector<Date>& dates) {
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < dates.size(); ++t) {
        if (t == 0) {
            rows.push_back(t);
            continue;
        }
        const std::chrono::year_month_day a{dates[t - 1]}, b{dates[t]};
        if (a.year() != b.year() || a.month() != b.month()) rows.push_back(t);
    }
    return rows;
}

PoolMask select_pool(const ReturnsPanel& panel, const PoolConfig& config) {
    if (!panel.has(Field::Adv)) throw DataError("select_pool: panel has no adv field");
    if (config.adv_window_days == 0) throw std::invalid_argument("select_pool: adv window must be positive");
    for (const auto& [region, count] : config.counts_by_region) {
        const bool any = std::any_of(panel.assets().begin(), panel.assets().end(),
                                     [&](const Asset& a) { return a.region == region; });
        if (!any) throw DataError("select_pool: region '" + region + "' has no assets");
    }

    const auto& adv = panel.field(Field::Adv);
    const std::size_t N = panel.n_assets();
    PoolMask mask;
    mask.n_dates = panel.n_dates();
    mask.n_assets = N;
    mask.member.assign(mask.n_dates * N, 0);
    mask.rebalance_rows = monthly_rebalance_rows(panel.dates());

    std::vector<std::uint8_t> current(N, 0);
    std::size_t next_rebalance = 0;
    for (std::size_t t = 0; t < mask.n_dates; ++t) {
        if (next_rebalance < mask.rebalance_rows.size() && mask.rebalance_rows[next_rebalance] == t) {
            ++next_rebalance;
            std::fill(current.begin(), current.end(), 0);
            const std::size_t first = t + 1 >= config.adv_window_days ? t + 1 - config.adv_window_days : 0;
            std::vector<double> mean_adv(N, kMissing);
            for (std::size_t i = 0; i < N; ++i) {
                double sum = 0.0;
                std::size_t n = 0;
                for (std::size_t s = first; s <= t; ++s) {
                    const double v = adv(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
                    if (is_valid(v)) {
                        sum += v;
                        ++n;
                    }
                }
                if (n >= config.min_valid_days && n > 0) mean_adv[i] = sum / static_cast<double>(n);
            }
            for (const auto& [region, count] : config.counts_by_region) {
                std::vector<std::size_t> eligible;
                for (std::size_t i = 0; i < N; ++i) {
                    if (panel.assets()[i].region == region && is_valid(mean_adv[i])) eligible.push_back(i);
                }
                // Ties broken by asset order for determinism.
                std::stable_sort(eligible.begin(), eligible.end(),
                                 [&](std::size_t a, std::size_t b) { return mean_adv[a] > mean_adv[b]; });
                const std::size_t k = std::min(count, eligible.size());
                for (std::size_t j = 0; j < k; ++j) current[eligible[j]] = 1;
            }
        }
        std::copy(current.begin(), current.end(), mask.member.begin() + static_cast<std::ptrdiff_t>(t * N));
    }
    return mask;
}

}  // namespace lsf
