#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <gtest/gtest.h>

#include "lsf/commands.hpp"
#include "lsf/config.hpp"

using namespace lsf;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text, fs::path base = {}) {
    std::istringstream in(text);
    return Config::parse(in, "test.ini", std::move(base));
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, SectionsCommentsAndTypes) {
    const auto cfg = parse(
        "top = 1   # before any header\n"
        "\n"
        "[ backtest ]\n"
        "mode = LH\n"
        "factors = MOM, LOWVOL ,,\n"
        "weights = 1, 0.5\n"
        "flag = Yes\n"
        "n = 42\n"
        "x = 2.5e-3\n");
    EXPECT_EQ(cfg.get_double("", "top"), 1.0);
    EXPECT_TRUE(cfg.has_section("backtest"));
    EXPECT_EQ(cfg.get_string("backtest", "mode"), "LH");
    EXPECT_EQ(cfg.get_strings("backtest", "factors"), (std::vector<std::string>{"MOM", "LOWVOL"}));
    EXPECT_EQ(cfg.get_doubles("backtest", "weights"), (std::vector<double>{1.0, 0.5}));
    EXPECT_TRUE(cfg.get_bool("backtest", "flag"));
    EXPECT_EQ(cfg.get_size("backtest", "n"), 42u);
    EXPECT_DOUBLE_EQ(cfg.get_double("backtest", "x"), 2.5e-3);
    EXPECT_EQ(cfg.get_double("backtest", "absent", 7.0), 7.0);
    EXPECT_NO_THROW(cfg.check_consumed());
}

TEST(Config, MalformedInputCarriesTheLine) {
    EXPECT_NE(error_of([] { parse("[a]\nx = 1\nx = 2\n"); }).find("test.ini:3"), std::string::npos);
    EXPECT_NE(error_of([] { parse("[a\n"); }).find("malformed section"), std::string::npos);
    EXPECT_NE(error_of([] { parse("[a]\njust words\n"); }).find("test.ini:2"), std::string::npos);
    EXPECT_FALSE(error_of([] { parse(" = 3\n"); }).empty());

    const auto cfg = parse("[a]\n\nx = abc\nn = -3\nb = maybe\nv = 1, two\ninf = inf\n");
    EXPECT_NE(error_of([&] { cfg.get_double("a", "x"); }).find("test.ini:3"), std::string::npos);
    EXPECT_NE(error_of([&] { cfg.get_size("a", "n"); }).find("non-negative integer"), std::string::npos);
    EXPECT_FALSE(error_of([&] { cfg.get_bool("a", "b"); }).empty());
    EXPECT_FALSE(error_of([&] { cfg.get_doubles("a", "v"); }).empty());
    EXPECT_FALSE(error_of([&] { cfg.get_double("a", "inf"); }).empty());
    EXPECT_NE(error_of([&] { cfg.get_string("a", "missing"); }).find("[a] missing"), std::string::npos);
}

TEST(Config, UnreadKeysAreListed) {
    const auto cfg = parse("[a]\nused = 1\ntypo = 2\n[b]\nother = 3\n");
    cfg.get_double("a", "used");
    const auto msg = error_of([&] { cfg.check_consumed(); });
    EXPECT_NE(msg.find("[a] typo"), std::string::npos);
    EXPECT_NE(msg.find("[b] other"), std::string::npos);
    EXPECT_EQ(msg.find("used"), std::string::npos);
}

TEST(Config, PathsResolveAgainstTheConfigDirectory) {
    const fs::path dir = fs::temp_directory_path() / ("lsf_cfg_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::ofstream(dir / "here.csv") << "x\n";
    std::ofstream(dir / "run.ini") << "[data]\npanel = here.csv\nabsent = nope.csv\nabs = /etc\n";
    const auto cfg = Config::load(dir / "run.ini");
    EXPECT_EQ(cfg.get_path("data", "panel", true), dir / "here.csv");
    EXPECT_EQ(cfg.get_path("data", "abs", true), fs::path("/etc"));
    EXPECT_NE(error_of([&] { cfg.get_path("data", "absent", true); }).find("does not exist"), std::string::npos);
    EXPECT_EQ(cfg.get_path("data", "absent", false), dir / "nope.csv");
    EXPECT_TRUE(cfg.get_path("data", "other", true, fs::path{}).empty());
    EXPECT_THROW(Config::load(dir / "missing.ini"), ConfigError);
    fs::remove_all(dir);
}

TEST(Config, CostAndStrategyReaders) {
    const auto costs = read_cost_params(parse(
        "[costs]\nlinear_cost_bps = 10\nimpact_coeff = 0.5\ndefault_borrow_bps = 100\nborrow_fees = borrow_fees.csv\n",
        LSF_FIXTURES));
    EXPECT_DOUBLE_EQ(costs.linear_bps, 1e-3);
    EXPECT_DOUBLE_EQ(costs.impact_coeff, 0.5);
    EXPECT_DOUBLE_EQ(costs.default_borrow_fee, 0.01);
    EXPECT_FALSE(costs.borrow_fee_override.empty());

    const auto defaults = read_strategy(parse(""), StrategyMode::LS);
    EXPECT_EQ(defaults.mode, StrategyMode::LS);
    EXPECT_EQ(defaults.neutrality, LsNeutrality::IndexBeta);
    const auto fixed = read_strategy(parse("[strategy]\nvol_target = 0.08\nneutrality = market_mode\ncap = 0.02\n"),
                                     StrategyMode::LH);
    EXPECT_DOUBLE_EQ(fixed.vol_target, 0.08);
    EXPECT_EQ(fixed.neutrality, LsNeutrality::MarketMode);
    EXPECT_DOUBLE_EQ(fixed.cap, 0.02);
    EXPECT_THROW(read_strategy(parse("[strategy]\nneutrality = sideways\n"), StrategyMode::LS), ConfigError);
    EXPECT_THROW(read_cost_params(parse("[costs]\nimpact_coeff = -1\n")), std::exception);
}
