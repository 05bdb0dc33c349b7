#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lsf/config.hpp"
#include "lsf/portfolio.hpp"

namespace lsf {

struct CommandOptions {
    std::filesystem::path config_path;      ///< empty: built-in defaults (toy only)
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;       ///< overrides [run] seed
};

/// Usage problems (bad grid, missing config) as opposed to runtime failures.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Files written by a command land under temporary names and are renamed
 * only by commit(); anything uncommitted is removed on destruction.
 */
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);
    ~OutputSet();
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    /// Writes `content` to the staged file `name`.
    void write(const std::string& name, const std::string& content);
    std::vector<std::filesystem::path> commit();

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
    bool committed_ = false;
};

using CommandFn = std::vector<std::filesystem::path> (*)(const Config&, const CommandOptions&, std::ostream&);

std::vector<std::filesystem::path> cmd_toy(const Config& cfg, const CommandOptions& opt, std::ostream& log);
std::vector<std::filesystem::path> cmd_generate(const Config& cfg, const CommandOptions& opt, std::ostream& log);
std::vector<std::filesystem::path> cmd_predictability(const Config& cfg, const CommandOptions& opt,
                                                      std::ostream& log);
std::vector<std::filesystem::path> cmd_backtest(const Config& cfg, const CommandOptions& opt, std::ostream& log);
std::vector<std::filesystem::path> cmd_famafrench(const Config& cfg, const CommandOptions& opt, std::ostream& log);

/// Loads the config, runs the command, reports errors. Exit code: 0 ok, 1 runtime failure, 2 usage error.
int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err);

// Config readers shared with tests.
CostModelParams read_cost_params(const Config& cfg);
StrategyConfig read_strategy(const Config& cfg, StrategyMode mode);

/// Daily backtest rows as CSV.
std::string backtest_csv(const BacktestResult& result);

}  // namespace lsf
