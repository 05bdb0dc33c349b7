#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lsf/data.hpp"
#include "lsf/rng.hpp"

using namespace lsf;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = LSF_FIXTURES;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ReturnsPanel parse(const std::string& text, const PanelSchema& schema = {}) {
    std::istringstream in(text);
    return load_panel(in, schema);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.line();
    }
    return 0;
}

Date d(const char* iso) { return parse_iso_date(iso); }

}  // namespace

TEST(LoadPanel, ThreeAssetFixture) {
    const auto p = load_panel(kFixtures / "panel3.csv");
    ASSERT_EQ(p.n_assets(), 3u);
    ASSERT_EQ(p.n_dates(), 3u);
    EXPECT_EQ(p.assets()[2].id, "CCC");
    EXPECT_EQ(p.assets()[2].region, "EU");
    EXPECT_TRUE(p.has(Field::Ret));
    EXPECT_TRUE(p.has(Field::Adv));
    EXPECT_FALSE(p.has(Field::Mcap));
    const auto& r = p.field(Field::Ret);
    for (Eigen::Index t = 0; t < r.rows(); ++t) {
        for (Eigen::Index i = 0; i < r.cols(); ++i) EXPECT_TRUE(is_valid(r(t, i)));
    }
    EXPECT_DOUBLE_EQ(r(1, 1), 0.013);
    EXPECT_EQ(p.dates()[2], d("2020-01-06"));
}

TEST(LoadPanel, BlankCellIsMasked) {
    const auto p = load_panel(kFixtures / "panel_blank.csv");
    const auto& r = p.field(Field::Ret);
    EXPECT_FALSE(is_valid(r(0, 1)));
    EXPECT_TRUE(is_valid(r(0, 0)));
    EXPECT_DOUBLE_EQ(p.field(Field::Price)(0, 1), 49.0);
}

TEST(LoadPanel, WriteRoundTripIsByteIdentical) {
    const std::string original = slurp(kFixtures / "panel3.csv");
    std::ostringstream out;
    write_panel(out, load_panel(kFixtures / "panel3.csv"));
    EXPECT_EQ(out.str(), original);
    // And again through the writer's own output.
    std::ostringstream again;
    write_panel(again, parse(out.str()));
    EXPECT_EQ(again.str(), original);
}

TEST(LoadPanel, MissingRowsBecomeMaskedCells) {
    const auto p = parse("date,asset_id,region,ret\n2020-01-02,A,X,0.1\n2020-01-03,B,X,0.2\n");
    ASSERT_EQ(p.n_dates(), 2u);
    EXPECT_FALSE(is_valid(p.field(Field::Ret)(0, 1)));
    EXPECT_FALSE(is_valid(p.field(Field::Ret)(1, 0)));
}

TEST(LoadPanel, RowsMayArriveInAnyOrder) {
    const auto p = parse("date,asset_id,region,ret\n2020-01-03,A,X,0.3\n2020-01-02,A,X,0.1\n");
    EXPECT_EQ(p.dates().front(), d("2020-01-02"));
    EXPECT_DOUBLE_EQ(p.field(Field::Ret)(0, 0), 0.1);
}

TEST(LoadPanel, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("date,asset_id,region,ret\n2020-01-02,A,X,0.1\n2020-01-03,A,X\n"), 3u);
    EXPECT_EQ(error_line("date,asset_id,region,ret\n2020-01-02,A,X,abc\n"), 2u);
    EXPECT_EQ(error_line("date,asset_id,region,ret\n2020-13-02,A,X,0.1\n"), 2u);
    EXPECT_EQ(error_line("date,asset_id,region,ret\n2020-01-02,A,X,0.1\n\n2020-01-02,A,X,0.2\n"), 4u);
    EXPECT_EQ(error_line("date,asset_id,region,ret\n2020-01-02,A,X,0.1\n2020-01-03,A,Y,0.1\n"), 3u);
    EXPECT_EQ(error_line("date,asset_id,region,ret,adv\n2020-01-02,A,X,0.1,-5\n"), 2u);
    EXPECT_EQ(error_line("date,asset_id,region,ret\n2020-01-02,A,X,inf\n"), 2u);
}

TEST(LoadPanel, DuplicateDateAssetIsAnError) {
    try {
        parse("date,asset_id,region,ret\n2020-01-02,A,X,0.1\n2020-01-02,A,X,0.2\n");
        FAIL() << "expected a duplicate error";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(LoadPanel, UnknownFieldListsKnownFields) {
    try {
        parse("date,asset_id,region,ret,volume\n");
        FAIL() << "expected an unknown-field error";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("volume"), std::string::npos);
        for (const char* name : {"ret", "price", "adv", "mcap", "earnings", "net_income", "total_assets", "borrow_fee"}) {
            EXPECT_NE(msg.find(name), std::string::npos) << name;
        }
    }
}

TEST(LoadPanel, HeaderChecks) {
    EXPECT_THROW(parse(""), DataError);
    EXPECT_THROW(parse("asset_id,date,region,ret\n"), DataError);
    EXPECT_THROW(parse("date,asset_id,region,ret,ret\n"), DataError);
    EXPECT_THROW(parse("date,asset_id,region,price\n"), DataError);  // ret required by default
    PanelSchema loose;
    loose.required.clear();
    EXPECT_NO_THROW(parse("date,asset_id,region,price\n2020-01-02,A,X,3\n", loose));
    EXPECT_THROW(load_panel(kFixtures / "does_not_exist.csv"), DataError);
}

TEST(LoadPanel, CrlfAndSpacesTolerated) {
    const auto p = parse("date,asset_id,region,ret\r\n2020-01-02, A ,X, 0.25 \r\n");
    EXPECT_EQ(p.assets()[0].id, "A");
    EXPECT_DOUBLE_EQ(p.field(Field::Ret)(0, 0), 0.25);
}

TEST(Numbers, FormatIsShortestRoundTrip) {
    CounterRng rng(1);
    for (int k = 0; k < 10000; ++k) {
        const double x = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.below(30)) - 15);
        EXPECT_EQ(parse_double(format_double(x)), x);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(-0.0), "0");
    EXPECT_EQ(format_double(1e21), "1e+21");
    EXPECT_EQ(format_double(1e6), "1000000");
    EXPECT_EQ(format_double(2.5e-7), "2.5e-07");
    EXPECT_EQ(format_double(kMissing), "");
}

TEST(Numbers, ParseIsStrict) {
    EXPECT_DOUBLE_EQ(parse_double(" +1.5 "), 1.5);
    EXPECT_DOUBLE_EQ(parse_double("-2e-3"), -0.002);
    EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
    EXPECT_THROW(parse_double("1,5"), std::invalid_argument);
    EXPECT_THROW(parse_double(""), std::invalid_argument);
}

TEST(Dates, ParseFormatAndBusinessDays) {
    EXPECT_EQ(format_iso_date(d("2021-02-28")), "2021-02-28");
    EXPECT_THROW(parse_iso_date("2021-02-29"), std::invalid_argument);
    EXPECT_THROW(parse_iso_date("2021/02/01"), std::invalid_argument);
    EXPECT_THROW(parse_iso_date("21-02-01"), std::invalid_argument);
    const auto days = business_days(d("2021-01-02"), 6);  // a Saturday
    EXPECT_EQ(format_iso_date(days.front()), "2021-01-04");
    EXPECT_EQ(format_iso_date(days.back()), "2021-01-11");
    for (auto day : days) {
        const std::chrono::weekday w{day};
        EXPECT_NE(w, std::chrono::Saturday);
        EXPECT_NE(w, std::chrono::Sunday);
    }
}

TEST(Panel, SliceAndLookup) {
    const auto p = load_panel(kFixtures / "panel3.csv");
    const auto s = p.slice_dates(1, 3);
    EXPECT_EQ(s.n_dates(), 2u);
    EXPECT_DOUBLE_EQ(s.field(Field::Ret)(0, 0), 0.002);
    EXPECT_EQ(*p.asset_index("BBB"), 1u);
    EXPECT_FALSE(p.asset_index("ZZZ").has_value());
    EXPECT_EQ(*p.date_index(d("2020-01-03")), 1u);
    EXPECT_THROW(p.field(Field::Mcap), std::out_of_range);
    EXPECT_THROW(p.slice_dates(2, 1), std::out_of_range);
    EXPECT_THROW(ReturnsPanel({d("2020-01-03"), d("2020-01-02")}, {}), std::invalid_argument);
}

TEST(Fundamentals, ForwardFillStopsAfterMaxAge) {
    const auto days = std::vector<Date>{d("2020-01-01"), d("2020-06-01"), d("2020-12-31"), d("2021-01-10"),
                                        d("2021-03-01")};
    ReturnsPanel p(days, {Asset{"A", "X"}});
    auto& e = p.ensure_field(Field::Earnings);
    e(0, 0) = 5.0;
    e(3, 0) = kMissing;
    const auto filled = forward_fill_fundamentals(p, 370);
    const auto& f = filled.field(Field::Earnings);
    EXPECT_DOUBLE_EQ(f(1, 0), 5.0);
    EXPECT_DOUBLE_EQ(f(2, 0), 5.0);   // 365 days
    EXPECT_FALSE(is_valid(f(3, 0)));  // 375 days
    EXPECT_FALSE(is_valid(f(4, 0)));
    EXPECT_FALSE(is_valid(p.field(Field::Earnings)(1, 0)));  // input untouched
}

TEST(Series, LoadAlignAndWrite) {
    const fs::path tmp = fs::temp_directory_path() / "lsf_test_series.csv";
    Series s{{d("2020-01-02"), d("2020-01-06")}, {0.01, -0.02}};
    write_series(tmp, s, "index");
    EXPECT_EQ(slurp(tmp), "date,index\n2020-01-02,0.01\n2020-01-06,-0.02\n");
    const auto back = load_series(tmp);
    EXPECT_EQ(back.values, s.values);
    const auto aligned = back.aligned_to({d("2020-01-02"), d("2020-01-03"), d("2020-01-06")});
    EXPECT_DOUBLE_EQ(aligned[0], 0.01);
    EXPECT_FALSE(is_valid(aligned[1]));
    EXPECT_DOUBLE_EQ(aligned[2], -0.02);
    std::ofstream(tmp) << "date,index\n2020-01-06,0.1\n2020-01-02,0.2\n";
    EXPECT_THROW(load_series(tmp), DataError);
    fs::remove(tmp);
}

TEST(BorrowFees, BpsBecomeRates) {
    const auto fees = load_borrow_fees(kFixtures / "borrow_fees.csv");
    EXPECT_DOUBLE_EQ(fees.at("AAA"), 0.01);
    EXPECT_DOUBLE_EQ(fees.at("BBB"), 0.25);
    const fs::path tmp = fs::temp_directory_path() / "lsf_test_fees.csv";
    std::ofstream(tmp) << "asset_id,annual_fee_bps\nAAA,-3\n";
    EXPECT_THROW(load_borrow_fees(tmp), DataError);
    fs::remove(tmp);
}

// ---------------------------------------------------------------------------

namespace {

ReturnsPanel adv_panel(const std::vector<std::vector<double>>& adv_by_asset, std::size_t n_dates,
                       const std::vector<std::string>& regions, Date start = parse_iso_date("2020-01-01")) {
    std::vector<Asset> assets;
    for (std::size_t i = 0; i < adv_by_asset.size(); ++i) assets.push_back({"S" + std::to_string(i), regions[i]});
    ReturnsPanel p(business_days(start, n_dates), assets);
    auto& adv = p.ensure_field(Field::Adv);
    p.ensure_field(Field::Ret).setZero();
    for (std::size_t i = 0; i < adv_by_asset.size(); ++i) {
        for (std::size_t t = 0; t < n_dates; ++t) adv(t, i) = adv_by_asset[i][t % adv_by_asset[i].size()];
    }
    return p;
}

}  // namespace

TEST(Pool, TopThreeOfFiveByConstantAdv) {
    const auto p = adv_panel({{5}, {4}, {3}, {2}, {1}}, 200, std::vector<std::string>(5, "NA"));
    PoolConfig cfg;
    cfg.counts_by_region = {{"NA", 3}};
    cfg.min_valid_days = 1;
    const auto mask = select_pool(p, cfg);
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
        EXPECT_TRUE(mask(t, 0) && mask(t, 1) && mask(t, 2));
        EXPECT_FALSE(mask(t, 3) || mask(t, 4));
        EXPECT_EQ(mask.count(t), 3u);
    }
}

TEST(Pool, CountLargerThanUniverseClamps) {
    const auto p = adv_panel({{5}, {4}, {3}}, 60, std::vector<std::string>(3, "NA"));
    PoolConfig cfg;
    cfg.counts_by_region = {{"NA", 10}};
    cfg.min_valid_days = 1;
    const auto mask = select_pool(p, cfg);
    EXPECT_EQ(mask.count(30), 3u);
}

TEST(Pool, NeedsHistoryAndKnownRegions) {
    const auto p = adv_panel({{5}, {4}}, 100, {"NA", "NA"});
    PoolConfig cfg;
    cfg.counts_by_region = {{"NA", 1}};
    cfg.min_valid_days = 60;
    const auto mask = select_pool(p, cfg);
    // Rebalances fall on month starts; the first with 60 rows of history is in April.
    std::size_t first_member = p.n_dates();
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
        if (mask.count(t)) {
            first_member = t;
            break;
        }
    }
    ASSERT_LT(first_member, p.n_dates());
    EXPECT_GE(first_member + 1, 60u);
    EXPECT_TRUE(std::binary_search(mask.rebalance_rows.begin(), mask.rebalance_rows.end(), first_member));
    cfg.counts_by_region = {{"JP", 1}};
    EXPECT_THROW(select_pool(p, cfg), DataError);
    ReturnsPanel no_adv(p.dates(), p.assets());
    EXPECT_THROW(select_pool(no_adv, PoolConfig{}), DataError);
}

TEST(Pool, RandomAdvMatchesBruteForceAndOnlyChangesOnRebalance) {
    CounterRng rng(31);
    const std::size_t N = 30, T = 400;
    std::vector<std::vector<double>> adv(N, std::vector<double>(T));
    std::vector<std::string> regions;
    for (std::size_t i = 0; i < N; ++i) {
        regions.push_back(i % 3 == 0 ? "EU" : "NA");
        for (std::size_t t = 0; t < T; ++t) adv[i][t] = rng.uniform() < 0.05 ? kMissing : 1e6 * (1.0 + i % 7) * rng.uniform();
    }
    const auto p = adv_panel(adv, T, regions);
    PoolConfig cfg;
    cfg.adv_window_days = 90;
    cfg.min_valid_days = 40;
    cfg.counts_by_region = {{"NA", 7}, {"EU", 4}};
    const auto mask = select_pool(p, cfg);

    const auto rebal = monthly_rebalance_rows(p.dates());
    EXPECT_EQ(rebal, mask.rebalance_rows);
    for (std::size_t t = 1; t < T; ++t) {
        if (std::binary_search(rebal.begin(), rebal.end(), t)) continue;
        for (std::size_t i = 0; i < N; ++i) ASSERT_EQ(mask(t, i), mask(t - 1, i)) << t << " " << i;
    }
    for (std::size_t r : rebal) {
        for (const auto& [region, k] : cfg.counts_by_region) {
            std::vector<std::pair<double, std::size_t>> ranked;
            for (std::size_t i = 0; i < N; ++i) {
                if (regions[i] != region) continue;
                double sum = 0.0;
                std::size_t n = 0;
                for (std::size_t s = r + 1 >= 90 ? r + 1 - 90 : 0; s <= r; ++s) {
                    if (is_valid(adv[i][s])) sum += adv[i][s], ++n;
                }
                if (n >= 40) ranked.push_back({-sum / n, i});
            }
            std::sort(ranked.begin(), ranked.end());
            for (std::size_t j = 0; j < ranked.size(); ++j) {
                EXPECT_EQ(mask(r, ranked[j].second), j < k) << "row " << r << " asset " << ranked[j].second;
            }
        }
    }
}

TEST(Pool, RebalanceRowsAreMonthStarts) {
    const std::vector<Date> days{d("2020-01-30"), d("2020-01-31"), d("2020-02-03"), d("2020-02-04"), d("2020-03-02")};
    EXPECT_EQ(monthly_rebalance_rows(days), (std::vector<std::size_t>{0, 2, 4}));
}
