#include "lsf/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <unordered_map>

namespace lsf {

namespace {

constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "ret", "price", "adv", "mcap", "earnings", "net_income", "total_assets", "borrow_fee"};

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument("invalid date '" + std::string(whole) + "' (expected YYYY-MM-DD)");
    }
    return value;
}

}  // namespace

Date parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw std::invalid_argument("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    const int y = parse_int(text.substr(0, 4), text);
    const int m = parse_int(text.substr(5, 2), text);
    const int d = parse_int(text.substr(8, 2), text);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid calendar date '" + std::string(text) + "'");
    }
    return Date{ymd};
}

std::string format_iso_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<Date> business_days(Date first, std::size_t count) {
    std::vector<Date> out;
    out.reserve(count);
    Date d = first;
    while (out.size() < count) {
        const std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
        d += std::chrono::days{1};
    }
    return out;
}

std::string_view field_name(Field f) { return kFieldNames[static_cast<std::size_t>(f)]; }

std::optional<Field> field_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kFieldCount; ++i) {
        if (kFieldNames[i] == name) return static_cast<Field>(i);
    }
    return std::nullopt;
}

std::string known_field_names() {
    std::string out;
    for (auto n : kFieldNames) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

ReturnsPanel::ReturnsPanel(std::vector<Date> dates, std::vector<Asset> assets)
    : dates_(std::move(dates)), assets_(std::move(assets)) {
    if (!std::is_sorted(dates_.begin(), dates_.end()) ||
        std::adjacent_find(dates_.begin(), dates_.end()) != dates_.end()) {
        throw std::invalid_argument("panel dates must be strictly increasing");
    }
}

const PanelMatrix& ReturnsPanel::field(Field f) const {
    if (!has(f)) throw std::out_of_range("panel has no field '" + std::string(field_name(f)) + "'");
    return fields_[index(f)];
}

PanelMatrix& ReturnsPanel::mutable_field(Field f) {
    if (!has(f)) throw std::out_of_range("panel has no field '" + std::string(field_name(f)) + "'");
    return fields_[index(f)];
}

PanelMatrix& ReturnsPanel::ensure_field(Field f) {
    if (!has(f)) {
        fields_[index(f)] = PanelMatrix::Constant(static_cast<Eigen::Index>(n_dates()),
                                                  static_cast<Eigen::Index>(n_assets()), kMissing);
        present_[index(f)] = true;
    }
    return fields_[index(f)];
}

void ReturnsPanel::set_field(Field f, PanelMatrix values) {
    if (values.rows() != static_cast<Eigen::Index>(n_dates()) ||
        values.cols() != static_cast<Eigen::Index>(n_assets())) {
        throw std::invalid_argument("field '" + std::string(field_name(f)) + "' has wrong shape");
    }
    fields_[index(f)] = std::move(values);
    present_[index(f)] = true;
}

std::optional<std::size_t> ReturnsPanel::asset_index(std::string_view id) const {
    for (std::size_t i = 0; i < assets_.size(); ++i) {
        if (assets_[i].id == id) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> ReturnsPanel::date_index(Date d) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
}

ReturnsPanel ReturnsPanel::slice_dates(std::size_t first, std::size_t last) const {
    if (first > last || last > n_dates()) throw std::out_of_range("slice_dates: bad range");
    ReturnsPanel out(std::vector<Date>(dates_.begin() + static_cast<std::ptrdiff_t>(first),
                                       dates_.begin() + static_cast<std::ptrdiff_t>(last)),
                     assets_);
    for (std::size_t k = 0; k < kFieldCount; ++k) {
        if (!present_[k]) continue;
        out.fields_[k] = fields_[k].middleRows(static_cast<Eigen::Index>(first),
                                               static_cast<Eigen::Index>(last - first));
        out.present_[k] = true;
    }
    return out;
}

std::vector<double> Series::aligned_to(const std::vector<Date>& calendar) const {
    std::unordered_map<int, double> by_day;
    by_day.reserve(dates.size());
    for (std::size_t i = 0; i < dates.size(); ++i) {
        by_day[dates[i].time_since_epoch().count()] = values[i];
    }
    std::vector<double> out(calendar.size(), kMissing);
    for (std::size_t i = 0; i < calendar.size(); ++i) {
        auto it = by_day.find(calendar[i].time_since_epoch().count());
        if (it != by_day.end()) out[i] = it->second;
    }
    return out;
}

}  // namespace lsf
