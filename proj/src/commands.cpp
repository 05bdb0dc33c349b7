#include "lsf/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lsf/analytics.hpp"
#include "lsf/data.hpp"
#include "lsf/famafrench.hpp"
#include "lsf/signals.hpp"
#include "lsf/toy_model.hpp"

namespace lsf {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Output staging

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

OutputSet::~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged_) std::filesystem::remove(tmp, ec);
}

void OutputSet::write(const std::string& name, const std::string& content) {
    const auto final_path = dir_ / name;
    auto tmp = final_path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        staged_.emplace_back(tmp, final_path);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
}

std::vector<std::filesystem::path> OutputSet::commit() {
    std::vector<std::filesystem::path> done;
    try {
        for (const auto& [tmp, final_path] : staged_) {
            std::filesystem::rename(tmp, final_path);
            done.push_back(final_path);
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : done) std::filesystem::remove(p, ec);
        throw;
    }
    committed_ = true;
    return done;
}

namespace {

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
json num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::uint64_t seed_of(const Config& cfg, const CommandOptions& opt) {
    const auto from_config = cfg.get_u64("run", "seed", 1);
    return opt.seed ? *opt.seed : from_config;
}

std::string series_csv(const std::vector<Date>& dates, const std::vector<double>& values, const std::string& name) {
    std::ostringstream out;
    out << "date," << name << '\n';
    for (std::size_t i = 0; i < dates.size(); ++i) {
        out << format_iso_date(dates[i]) << ',' << format_double(values[i]) << '\n';
    }
    return out.str();
}

std::vector<double> default_alpha_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 60; ++k) g.push_back(0.025 * k);
    return g;
}

// ---------------------------------------------------------------------------
// Shared readers

struct DataSetup {
    std::filesystem::path panel_path;
    std::filesystem::path index_path;
    bool forward_fill = false;
    std::string start_date, end_date;
    bool pool_enabled = false;
    PoolConfig pool;
};

DataSetup read_data(const Config& cfg, bool index_required) {
    DataSetup d;
    d.panel_path = cfg.get_path("data", "panel", true);
    d.index_path = index_required ? cfg.get_path("data", "index", true)
                                  : cfg.get_path("data", "index", true, std::filesystem::path{});
    d.forward_fill = cfg.get_bool("data", "forward_fill_fundamentals", false);
    d.start_date = cfg.get_string("data", "start_date", "");
    d.end_date = cfg.get_string("data", "end_date", "");
    d.pool_enabled = cfg.get_bool("pool", "enabled", false);
    d.pool.adv_window_days = cfg.get_size("pool", "adv_window_days", d.pool.adv_window_days);
    d.pool.min_valid_days = cfg.get_size("pool", "min_valid_days", d.pool.min_valid_days);
    if (cfg.has("pool", "counts")) {
        d.pool.counts_by_region.clear();
        for (const auto& item : cfg.get_strings("pool", "counts")) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError("[pool] counts entries must be REGION:COUNT, got " + item);
            const auto region = item.substr(0, colon);
            const auto count = item.substr(colon + 1);
            const double c = parse_double(count);
            if (!(c >= 0.0) || c != std::floor(c)) throw ConfigError("[pool] bad count for region " + region);
            d.pool.counts_by_region[region] = static_cast<std::size_t>(c);
        }
    }
    return d;
}

struct LoadedData {
    ReturnsPanel panel;
    std::vector<double> index;  ///< aligned, empty when no index configured
    PoolMask pool;
};

LoadedData load_data(const DataSetup& d) {
    LoadedData out;
    PanelSchema schema;
    schema.forward_fill_fundamentals = d.forward_fill;
    out.panel = load_panel(d.panel_path, schema);
    if (!d.start_date.empty() || !d.end_date.empty()) {
        const auto& dates = out.panel.dates();
        std::size_t first = 0, last = dates.size();
        if (!d.start_date.empty()) {
            const auto s = parse_iso_date(d.start_date);
            first = static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), s) - dates.begin());
        }
        if (!d.end_date.empty()) {
            const auto e = parse_iso_date(d.end_date);
            last = static_cast<std::size_t>(std::upper_bound(dates.begin(), dates.end(), e) - dates.begin());
        }
        if (first >= last) throw std::invalid_argument("configured calendar range selects no dates");
        out.panel = out.panel.slice_dates(first, last);
    }
    if (!d.index_path.empty()) out.index = load_series(d.index_path).aligned_to(out.panel.dates());
    out.pool = d.pool_enabled ? select_pool(out.panel, d.pool) : PoolMask::all(out.panel.n_dates(), out.panel.n_assets());
    return out;
}

std::map<std::string, double> load_static_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open static signal file " + path.string());
    std::map<std::string, double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2) throw DataError(path.string() + ": expected asset_id,value", line_no);
        out[std::string(cells[0])] = parse_double(cells[1]);
    }
    return out;
}

struct SignalSetup {
    std::vector<Factor> factors;
    std::vector<double> weights;
    DescriptorConfig descriptor;
    double ema_length = 150.0;
    EmaConvention convention = EmaConvention::Span;
};

SignalSetup read_signals(const Config& cfg, double default_ema) {
    SignalSetup s;
    for (const auto& name : cfg.get_strings("signals", "factors", std::vector<std::string>{"MOM"})) {
        auto f = factor_from_name(name);
        if (!f) throw ConfigError("[signals] unknown factor '" + name + "' (MOM, VALUEEAR, LOWVOL, SMB, ROA, STATIC)");
        s.factors.push_back(*f);
    }
    if (s.factors.empty()) throw UsageError("[signals] factors is empty");
    s.weights = cfg.get_doubles("signals", "weights", std::vector<double>(s.factors.size(), 1.0));
    if (s.weights.size() != s.factors.size()) throw ConfigError("[signals] one weight per factor required");
    auto& dc = s.descriptor;
    dc.mom_lookback = cfg.get_size("signals", "mom_lookback", dc.mom_lookback);
    dc.mom_skip = cfg.get_size("signals", "mom_skip", dc.mom_skip);
    dc.vol_window = cfg.get_size("signals", "vol_window", dc.vol_window);
    dc.size_lag = cfg.get_size("signals", "size_lag", dc.size_lag);
    dc.size_window = cfg.get_size("signals", "size_window", dc.size_window);
    dc.min_valid_fraction = cfg.get_double("signals", "min_valid_fraction", dc.min_valid_fraction);
    const auto static_file = cfg.get_path("signals", "static_file", true, std::filesystem::path{});
    if (!static_file.empty()) dc.static_values = load_static_values(static_file);
    s.ema_length = cfg.get_double("signals", "ema_length", default_ema);
    const auto conv = cfg.get_string("signals", "ema_convention", "span");
    if (conv == "span") {
        s.convention = EmaConvention::Span;
    } else if (conv == "halflife") {
        s.convention = EmaConvention::HalfLife;
    } else {
        throw ConfigError("[signals] ema_convention must be span or halflife");
    }
    return s;
}

SignalPanel build_signal(const LoadedData& data, const SignalSetup& s) {
    std::vector<SignalPanel> parts;
    for (auto f : s.factors) {
        auto sig = compute_signal(data.panel, data.pool, f, s.descriptor);
        if (s.ema_length > 0.0) sig = smooth_ema(sig, s.ema_length, s.convention);
        parts.push_back(std::move(sig));
    }
    if (parts.size() == 1) return parts.front();
    return blend(parts, s.weights);
}

}  // namespace

CostModelParams read_cost_params(const Config& cfg) {
    CostModelParams c;
    c.linear_bps = cfg.get_double("costs", "linear_cost_bps", c.linear_bps * 1e4) * 1e-4;
    c.impact_coeff = cfg.get_double("costs", "impact_coeff", c.impact_coeff);
    c.financing_spread = cfg.get_double("costs", "financing_spread", c.financing_spread);
    c.default_borrow_fee = cfg.get_double("costs", "default_borrow_bps", c.default_borrow_fee * 1e4) * 1e-4;
    c.trading_days_per_year = cfg.get_double("costs", "trading_days_per_year", c.trading_days_per_year);
    const auto fees = cfg.get_path("costs", "borrow_fees", true, std::filesystem::path{});
    if (!fees.empty()) c.borrow_fee_override = load_borrow_fees(fees);
    c.validate();
    return c;
}

StrategyConfig read_strategy(const Config& cfg, StrategyMode mode) {
    StrategyConfig s;
    s.mode = mode;
    s.costs = read_cost_params(cfg);
    s.aum = cfg.get_double("strategy", "aum", s.aum);
    s.cap = cfg.get_double("strategy", "cap", s.cap);
    const auto vt = cfg.get_string("strategy", "vol_target", "match_lh");
    if (vt != "match_lh") s.vol_target = parse_double(vt);
    const auto neut = cfg.get_string("strategy", "neutrality", "index_beta");
    if (neut == "index_beta") {
        s.neutrality = LsNeutrality::IndexBeta;
    } else if (neut == "market_mode") {
        s.neutrality = LsNeutrality::MarketMode;
    } else {
        throw ConfigError("[strategy] neutrality must be index_beta or market_mode");
    }
    s.warmup = cfg.get_size("strategy", "warmup", s.warmup);
    s.beta_window = cfg.get_size("strategy", "beta_window", s.beta_window);
    s.vol_window = cfg.get_size("strategy", "vol_window", s.vol_window);
    s.corr_window = cfg.get_size("strategy", "corr_window", s.corr_window);
    s.corr_refresh = cfg.get_size("strategy", "corr_refresh", s.corr_refresh);
    s.execution_lag = cfg.get_size("strategy", "execution_lag", s.execution_lag);
    s.max_calendar_gap_days = cfg.get_double("strategy", "max_calendar_gap_days", s.max_calendar_gap_days);
    s.optimizer.signal_scale = cfg.get_double("strategy", "signal_scale", s.optimizer.signal_scale);
    s.optimizer.cost_aversion = cfg.get_double("strategy", "cost_aversion", s.optimizer.cost_aversion);
    s.validate();
    return s;
}

std::string backtest_csv(const BacktestResult& result) {
    std::ostringstream out;
    out << "date,stock_pnl,hedge_pnl,returns_pnl,trading_cost,financing_cost,borrow_cost,total,equity,drawdown,"
           "traded_notional,turnover,long_exposure,short_exposure,hedge_notional,predicted_vol,target_vol,"
           "dollar_residual,cap_binding\n";
    const auto equity = equity_curve(result.total_pnl());
    const auto dd = drawdown_stats(equity, result.aum);
    for (std::size_t k = 0; k < result.days.size(); ++k) {
        const auto& d = result.days[k];
        out << format_iso_date(d.date) << ',' << format_double(d.stock_pnl) << ',' << format_double(d.hedge_pnl) << ','
            << format_double(d.returns_pnl) << ',' << format_double(d.trading_cost) << ','
            << format_double(d.financing_cost) << ',' << format_double(d.borrow_cost) << ','
            << format_double(d.total) << ',' << format_double(equity[k]) << ',' << format_double(dd.drawdown[k])
            << ',' << format_double(d.traded_notional) << ',' << format_double(d.turnover) << ','
            << format_double(d.long_exposure) << ',' << format_double(d.short_exposure) << ','
            << format_double(d.hedge_notional) << ',' << format_double(d.predicted_vol) << ','
            << format_double(d.target_vol) << ',' << format_double(d.dollar_residual) << ','
            << (d.cap_binding ? 1 : 0) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// toy

std::vector<std::filesystem::path> cmd_toy(const Config& cfg, const CommandOptions& opt, std::ostream& log) {
    const auto alphas = cfg.get_doubles("toy", "alpha2", default_alpha_grid());
    const auto gammas = cfg.get_doubles("toy", "gamma", std::vector<double>{0.1, 1.0, 10.0});
    const auto kappas = cfg.get_doubles("toy", "kappa", std::vector<double>{1.0});
    const double mean_f = cfg.get_double("toy", "mean_f", 1.0);
    const double var_f = cfg.get_double("toy", "var_f", 1.0);
    const auto mc_samples = cfg.get_size("toy", "mc_samples", 0);
    const auto seed = seed_of(cfg, opt);
    cfg.check_consumed();
    if (alphas.empty() || gammas.empty() || kappas.empty()) {
        throw UsageError("toy: the alpha2, gamma and kappa grids must all be nonempty");
    }

    struct Row {
        ToyModelParams p;
        double ls, lh, ratio;
    };
    std::vector<Row> rows;
    for (double a : alphas) {
        for (double g : gammas) {
            for (double k : kappas) {
                ToyModelParams p{mean_f, var_f, a, g, k};
                try {
                    p.validate();
                    rows.push_back({p, sr_long_short(p), sr_hedged_long(p), sr_ratio(p)});
                } catch (const std::exception& e) {
                    throw UsageError(std::string("toy: invalid grid point: ") + e.what());
                }
            }
        }
    }

    std::ostringstream csv;
    csv << "alpha2,gamma,kappa,sr_ls,sr_lh,ratio\n";
    std::size_t ls_wins = 0;
    for (const auto& r : rows) {
        csv << format_double(r.p.alpha2) << ',' << format_double(r.p.gamma) << ',' << format_double(r.p.kappa) << ','
            << format_double(r.ls) << ',' << format_double(r.lh) << ',' << format_double(r.ratio) << '\n';
        if (r.ratio > 1.0) ++ls_wins;
    }

    // Threshold report: closed form against the crossing read off the sweep.
    json thresholds = json::array();
    std::vector<double> sorted_alphas = alphas;
    std::sort(sorted_alphas.begin(), sorted_alphas.end());
    for (double k : kappas) {
        json per_gamma = json::array();
        for (double g : gammas) {
            std::optional<double> crossing;
            for (std::size_t j = 1; j < sorted_alphas.size() && !crossing; ++j) {
                ToyModelParams lo{mean_f, var_f, sorted_alphas[j - 1], g, k};
                ToyModelParams hi{mean_f, var_f, sorted_alphas[j], g, k};
                const double r0 = sr_ratio(lo) - 1.0, r1 = sr_ratio(hi) - 1.0;
                if (r0 == 0.0) {
                    crossing = sorted_alphas[j - 1];
                } else if (r0 < 0.0 && r1 >= 0.0) {
                    crossing = sorted_alphas[j - 1] + (sorted_alphas[j] - sorted_alphas[j - 1]) * (-r0) / (r1 - r0);
                }
            }
            per_gamma.push_back({{"gamma", g}, {"sweep_crossing", num(crossing)}});
        }
        thresholds.push_back({{"kappa", k}, {"threshold", shorts_threshold(k)}, {"crossings", per_gamma}});
    }
    json report{{"n_rows", rows.size()}, {"rows_long_short_wins", ls_wins}, {"thresholds", thresholds}};

    OutputSet out(opt.out_dir);
    out.write("toy_sweep.csv", csv.str());
    out.write("toy_threshold.json", dump(report));

    if (mc_samples > 0) {
        std::ostringstream mc;
        mc << "alpha2,gamma,kappa,sr_ls,sr_lh,sr_ls_mc,sr_lh_mc,ratio,ratio_mc\n";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto sample = simulate_toy_returns(rows[r].p, mc_samples, seed + r);
            const auto ls = sample_sharpe(sample.pnl(ToyPortfolio::long_short()));
            const auto lh = sample_sharpe(sample.pnl(ToyPortfolio::hedged_long()));
            const double ratio_mc = ls && lh ? *ls / *lh : kMissing;
            mc << format_double(rows[r].p.alpha2) << ',' << format_double(rows[r].p.gamma) << ','
               << format_double(rows[r].p.kappa) << ',' << format_double(rows[r].ls) << ','
               << format_double(rows[r].lh) << ',' << format_double(ls.value_or(kMissing)) << ','
               << format_double(lh.value_or(kMissing)) << ',' << format_double(rows[r].ratio) << ','
               << format_double(ratio_mc) << '\n';
        }
        out.write("toy_montecarlo.csv", mc.str());
    }
    log << "toy: " << rows.size() << " grid points, long-short wins on " << ls_wins << "\n";
    return out.commit();
}

// ---------------------------------------------------------------------------
// generate

std::vector<std::filesystem::path> cmd_generate(const Config& cfg, const CommandOptions& opt, std::ostream& log) {
    SyntheticUniverseSpec spec;
    spec.n_assets = cfg.get_size("generate", "n_assets", spec.n_assets);
    spec.n_periods = cfg.get_size("generate", "n_periods", spec.n_periods);
    spec.loading_long = cfg.get_double("generate", "loading_long", spec.loading_long);
    spec.loading_short_scale = cfg.get_double("generate", "alpha2", spec.loading_short_scale);
    spec.market_mean = cfg.get_double("generate", "market_mean", spec.market_mean);
    spec.market_vol = cfg.get_double("generate", "market_vol", spec.market_vol);
    spec.factor_mean = cfg.get_double("generate", "factor_mean", spec.factor_mean);
    spec.factor_vol = cfg.get_double("generate", "factor_vol", spec.factor_vol);
    const bool book_level = cfg.has("generate", "gamma");
    if (book_level && (cfg.has("generate", "resid_vol_long") || cfg.has("generate", "resid_vol_short"))) {
        throw ConfigError("[generate] give either gamma/kappa or resid_vol_long/resid_vol_short, not both");
    }
    if (book_level) {
        // gamma and kappa describe the equal-weighted half books, as in the two-asset model.
        const double gamma = cfg.get_double("generate", "gamma");
        const double kappa = cfg.get_double("generate", "kappa", 1.0);
        if (!(gamma >= 0.0) || !(kappa >= 0.0)) throw ConfigError("[generate] gamma and kappa must be >= 0");
        const double half = 0.5 * static_cast<double>(spec.n_assets);
        spec.resid_vol_long = spec.loading_long * spec.factor_vol * std::sqrt(gamma * half);
        spec.resid_vol_short = spec.resid_vol_long * std::sqrt(kappa);
    } else {
        spec.resid_vol_long = cfg.get_double("generate", "resid_vol_long", spec.resid_vol_long);
        spec.resid_vol_short = cfg.get_double("generate", "resid_vol_short", spec.resid_vol_short);
    }
    spec.adv = cfg.get_double("generate", "adv", spec.adv);
    spec.initial_price = cfg.get_double("generate", "initial_price", spec.initial_price);
    spec.shares = cfg.get_double("generate", "shares", spec.shares);
    spec.region = cfg.get_string("generate", "region", spec.region);
    const auto start = cfg.get_string("generate", "start_date", "");
    if (!start.empty()) spec.start_date = parse_iso_date(start);
    spec.seed = seed_of(cfg, opt);
    cfg.check_consumed();
    spec.validate();

    const auto u = generate_universe(spec);
    std::ostringstream panel;
    write_panel(panel, u.panel);
    std::ostringstream truth;
    truth << "asset_id,loading,market_beta\n";
    for (std::size_t i = 0; i < u.panel.n_assets(); ++i) {
        truth << u.panel.assets()[i].id << ',' << format_double(u.truth.loadings[i]) << ','
              << format_double(u.truth.market_beta[i]) << '\n';
    }
    OutputSet out(opt.out_dir);
    out.write("panel.csv", panel.str());
    out.write("market.csv", series_csv(u.truth.market.dates, u.truth.market.values, "market"));
    out.write("factor.csv", series_csv(u.truth.factor.dates, u.truth.factor.values, "factor"));
    out.write("truth.csv", truth.str());
    log << "generate: " << spec.n_assets << " assets x " << spec.n_periods << " periods (seed " << spec.seed << ")\n";
    return out.commit();
}

// ---------------------------------------------------------------------------
// predictability

std::vector<std::filesystem::path> cmd_predictability(const Config& cfg, const CommandOptions& opt,
                                                      std::ostream& log) {
    const auto setup = read_data(cfg, false);
    const auto signals = read_signals(cfg, 0.0);
    ResidualConfig rc;
    const auto mode = cfg.get_string("predictability", "residuals", "market_mode");
    if (mode == "market_mode") {
        rc.mode = ResidualMode::MarketMode;
    } else if (mode == "index") {
        rc.mode = ResidualMode::Index;
        if (setup.index_path.empty()) throw ConfigError("[predictability] residuals = index needs [data] index");
    } else {
        throw ConfigError("[predictability] residuals must be market_mode or index");
    }
    rc.lookback = cfg.get_size("predictability", "residual_window", rc.lookback);
    rc.refresh = cfg.get_size("predictability", "residual_refresh", rc.refresh);
    PredictabilityConfig pc;
    pc.horizon = cfg.get_size("predictability", "horizon", pc.horizon);
    pc.n_bins = cfg.get_size("predictability", "n_bins", pc.n_bins);
    pc.stride = cfg.get_size("predictability", "stride", pc.stride);
    pc.bootstrap_reps = cfg.get_size("predictability", "bootstrap_reps", pc.bootstrap_reps);
    pc.block_length = cfg.get_size("predictability", "block_length", pc.block_length);
    pc.seed = seed_of(cfg, opt);
    cfg.check_consumed();

    const auto data = load_data(setup);
    const auto residuals = residual_returns(data.panel, rc, data.index);

    std::ostringstream csv;
    csv << "factor,bin,mean_score,mean_residual,stderr,count\n";
    json factors = json::array();
    json skipped = json::array();
    for (auto f : signals.factors) {
        const std::string name(factor_name(f));
        SignalPanel sig;
        try {
            sig = compute_signal(data.panel, data.pool, f, signals.descriptor);
        } catch (const std::invalid_argument& e) {
            log << "predictability: warning: skipping " << name << ": " << e.what() << "\n";
            skipped.push_back({{"factor", name}, {"reason", e.what()}});
            continue;
        }
        if (signals.ema_length > 0.0) sig = smooth_ema(sig, signals.ema_length, signals.convention);
        const auto curve = predictability_curve(sig, residuals, pc);
        for (std::size_t b = 0; b < curve.bins.size(); ++b) {
            const auto& bin = curve.bins[b];
            csv << name << ',' << b << ',' << format_double(bin.x) << ',' << format_double(bin.y) << ','
                << format_double(bin.stderr_y) << ',' << bin.count << '\n';
        }
        factors.push_back({{"factor", name},
                           {"slope_positive", num(curve.positive.slope)},
                           {"stderr_positive", num(curve.positive.stderr())},
                           {"slope_negative", num(curve.negative.slope)},
                           {"stderr_negative", num(curve.negative.stderr())},
                           {"slope_ratio", num(curve.slope_ratio)},
                           {"ratio_ci_low", num(curve.ratio_ci_low)},
                           {"ratio_ci_high", num(curve.ratio_ci_high)},
                           {"above_threshold", curve.above_threshold()},
                           {"n_observations", curve.n_observations},
                           {"n_dates", curve.n_dates}});
        log << "predictability: " << name << " slope ratio "
            << (curve.slope_ratio ? format_double(*curve.slope_ratio) : std::string("masked")) << "\n";
    }
    if (factors.empty()) throw std::runtime_error("predictability: no factor could be evaluated");
    json summary{{"residuals", mode},
                 {"horizon", pc.horizon},
                 {"n_bins", pc.n_bins},
                 {"threshold", shorts_threshold(1.0)},
                 {"factors", factors},
                 {"skipped", skipped}};
    OutputSet out(opt.out_dir);
    out.write("predictability_curves.csv", csv.str());
    out.write("predictability_summary.json", dump(summary));
    return out.commit();
}

// ---------------------------------------------------------------------------
// backtest

namespace {

json summary_json(const PerfSummary& s) {
    return json{{"sharpe", num(s.sharpe)},
                {"annual_return", num(s.annual_return)},
                {"annual_vol", num(s.annual_vol)},
                {"mean_drawdown", num(s.mean_drawdown)},
                {"max_drawdown", num(s.max_drawdown)},
                {"returns_pnl", num(s.returns_pnl)},
                {"trading_cost", num(s.trading_cost)},
                {"financing_cost", num(s.financing_cost)},
                {"borrow_cost", num(s.borrow_cost)},
                {"mean_turnover", num(s.mean_turnover)},
                {"mean_gmv", num(s.mean_gmv)},
                {"n_days", s.n_days}};
}

std::string positions_csv(const BacktestResult& r) {
    std::ostringstream out;
    out << "date";
    for (const auto& a : r.assets) out << ',' << a;
    out << '\n';
    for (std::size_t d = 0; d < r.days.size(); ++d) {
        out << format_iso_date(r.days[d].date);
        for (Eigen::Index i = 0; i < r.positions.cols(); ++i) {
            out << ',' << format_double(r.positions(static_cast<Eigen::Index>(d), i));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace

std::vector<std::filesystem::path> cmd_backtest(const Config& cfg, const CommandOptions& opt, std::ostream& log) {
    const auto setup = read_data(cfg, true);
    const auto signals = read_signals(cfg, 150.0);
    std::vector<StrategyMode> modes;
    for (const auto& m : cfg.get_strings("strategy", "modes", std::vector<std::string>{"LH", "LS"})) {
        modes.push_back(strategy_from_name(m));
    }
    if (modes.empty()) throw UsageError("[strategy] modes is empty");
    const bool match_lh = cfg.get_string("strategy", "vol_target", "match_lh") == "match_lh";
    const auto lh_config = read_strategy(cfg, StrategyMode::LH);
    auto ls_config = lh_config;
    ls_config.mode = StrategyMode::LS;
    const bool write_positions = cfg.get_bool("output", "write_positions", false);
    seed_of(cfg, opt);
    cfg.check_consumed();
    const bool want_lh = std::count(modes.begin(), modes.end(), StrategyMode::LH) > 0;
    const bool want_ls = std::count(modes.begin(), modes.end(), StrategyMode::LS) > 0;
    if (want_ls && match_lh && !want_lh) throw UsageError("vol_target = match_lh needs LH among [strategy] modes");

    const auto data = load_data(setup);
    const auto signal = build_signal(data, signals);

    OutputSet out(opt.out_dir);
    json summary = json::object();
    std::optional<BacktestResult> lh;
    std::optional<double> lh_sharpe, ls_sharpe;
    if (want_lh) {
        lh = run_backtest(data.panel, signal, data.index, lh_config);
        const auto s = cost_attribution(*lh, lh_config.costs.trading_days_per_year);
        if (std::isfinite(s.sharpe)) lh_sharpe = s.sharpe;
        summary["LH"] = summary_json(s);
        out.write("backtest_LH.csv", backtest_csv(*lh));
        if (write_positions) out.write("positions_LH.csv", positions_csv(*lh));
        log << "backtest LH: sharpe " << format_double(s.sharpe) << ", annual return "
            << format_double(s.annual_return) << "\n";
    }
    if (want_ls) {
        std::vector<double> path;
        if (match_lh) {
            path = trailing_vol_target(*lh, data.panel.n_dates(), 250, lh_config.corr_refresh,
                                       lh_config.costs.trading_days_per_year);
        }
        const auto ls = run_backtest(data.panel, signal, data.index, ls_config, path);
        const auto s = cost_attribution(ls, ls_config.costs.trading_days_per_year);
        if (std::isfinite(s.sharpe)) ls_sharpe = s.sharpe;
        summary["LS"] = summary_json(s);
        out.write("backtest_LS.csv", backtest_csv(ls));
        if (write_positions) out.write("positions_LS.csv", positions_csv(ls));
        log << "backtest LS: sharpe " << format_double(s.sharpe) << ", annual return "
            << format_double(s.annual_return) << "\n";
    }
    summary["vol_target"] = match_lh ? json("match_lh") : json(ls_config.vol_target);
    summary["sharpe_ratio_ls_over_lh"] =
        lh_sharpe && ls_sharpe && *lh_sharpe != 0.0 ? num(*ls_sharpe / *lh_sharpe) : json(nullptr);
    out.write("backtest_summary.json", dump(summary));
    return out.commit();
}

// ---------------------------------------------------------------------------
// famafrench

std::vector<std::filesystem::path> cmd_famafrench(const Config& cfg, const CommandOptions& opt, std::ostream& log) {
    const auto dir = cfg.get_path("famafrench", "dir", true);
    MaxSharpeOptions ms;
    ms.long_only = cfg.get_bool("famafrench", "long_only", false);
    ms.allow_singular = cfg.get_bool("famafrench", "allow_singular", false);
    ms.clean_correlation = cfg.get_bool("famafrench", "clean_correlation", false);
    seed_of(cfg, opt);
    cfg.check_consumed();

    const auto lp = load_famafrench(FamaFrenchFiles::defaults(dir));
    const auto legs = hedge_legs(lp);
    const std::size_t T = lp.months.size();

    std::ostringstream csv;
    csv << "leg,is_long,beta,rescaled_beta,sharpe\n";
    std::vector<std::vector<double>> longs, shorts;
    Eigen::MatrixXd streams(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(legs.size()));
    std::vector<bool> is_long;
    bool betas_ok = true;
    for (std::size_t k = 0; k < legs.size(); ++k) {
        const auto& leg = legs[k];
        const auto& f = lp.factors[k / 2];
        std::vector<double> idx(T), rescaled(T);
        for (std::size_t t = 0; t < T; ++t) {
            idx[t] = f.blend[t] - lp.rf[t];
            rescaled[t] = ((leg.is_long ? f.long_leg[t] : f.short_leg[t]) - lp.rf[t]) / leg.beta;
        }
        const double rb = ols_beta(rescaled, idx).value_or(kMissing);
        betas_ok = betas_ok && rb >= 0.95 && rb <= 1.05;
        const auto sr = sharpe(leg.returns, 1.0, 12.0);
        csv << leg.name << ',' << (leg.is_long ? 1 : 0) << ',' << format_double(leg.beta) << ','
            << format_double(rb) << ',' << format_double(sr.value_or(kMissing)) << '\n';
        (leg.is_long ? longs : shorts).push_back(leg.returns);
        is_long.push_back(leg.is_long);
        for (std::size_t t = 0; t < T; ++t) {
            streams(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = leg.returns[t];
        }
    }
    const auto long_corr = leg_correlation_summary(longs);
    const auto short_corr = leg_correlation_summary(shorts);
    const auto alloc = max_sharpe_weights(streams, is_long, ms);

    std::vector<double> market_excess(T);
    for (std::size_t t = 0; t < T; ++t) market_excess[t] = lp.market_excess[t];
    json smb = json::array();
    std::ostringstream smb_csv;
    smb_csv << "factor,correlation_with_smb\n";
    bool smb_all_positive = true;
    for (const auto& f : lp.factors) {
        std::vector<double> lx(T), sx(T);
        for (std::size_t t = 0; t < T; ++t) {
            lx[t] = f.long_leg[t] - lp.rf[t];
            sx[t] = f.short_leg[t] - lp.rf[t];
        }
        const auto diag = smb_diagnostic(f.factor, lx, sx, market_excess, lp.smb);
        smb_all_positive = smb_all_positive && diag.correlation_with_smb && *diag.correlation_with_smb > 0.0;
        smb.push_back({{"factor", f.factor}, {"correlation_with_smb", num(diag.correlation_with_smb)}});
        smb_csv << f.factor << ',' << format_double(diag.correlation_with_smb.value_or(kMissing)) << '\n';
    }

    json weights = json::object();
    for (std::size_t k = 0; k < legs.size(); ++k) weights[legs[k].name] = alloc.weights[k];
    json summary{{"first_month", T ? lp.months.front() : 0},
                 {"last_month", T ? lp.months.back() : 0},
                 {"n_months", T},
                 {"mean_long_leg_correlation", num(long_corr.mean)},
                 {"mean_short_leg_correlation", num(short_corr.mean)},
                 {"short_correlation_exceeds_long", short_corr.mean > long_corr.mean},
                 {"allocation_long_only", ms.long_only},
                 {"allocation_weights", weights},
                 {"long_leg_weight", alloc.long_weight},
                 {"short_leg_weight", alloc.short_weight},
                 {"long_weight_in_60_80_band", alloc.long_weight >= 0.6 && alloc.long_weight <= 0.8},
                 {"beta_one_rescaling_ok", betas_ok},
                 {"smb_diagnostic", smb},
                 {"smb_correlation_positive_for_all", smb_all_positive}};
    OutputSet out(opt.out_dir);
    out.write("ff_legs.csv", csv.str());
    out.write("ff_smb.csv", smb_csv.str());
    out.write("ff_summary.json", dump(summary));
    log << "famafrench: long-leg weight " << format_double(alloc.long_weight) << ", mean corr long "
        << format_double(long_corr.mean) << " short " << format_double(short_corr.mean) << "\n";
    return out.commit();
}

// ---------------------------------------------------------------------------

int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    static const std::map<std::string, CommandFn> commands{{"toy", &cmd_toy},
                                                           {"generate", &cmd_generate},
                                                           {"predictability", &cmd_predictability},
                                                           {"backtest", &cmd_backtest},
                                                           {"famafrench", &cmd_famafrench}};
    const auto it = commands.find(name);
    try {
        if (it == commands.end()) throw UsageError("unknown command '" + name + "'");
        Config cfg;
        if (!opt.config_path.empty()) {
            cfg = Config::load(opt.config_path);
        } else if (name != "toy" && name != "generate") {
            throw UsageError(name + " needs --config");
        }
        for (const auto& p : it->second(cfg, opt, log)) log << "wrote " << p.string() << "\n";
        return 0;
    } catch (const UsageError& e) {
        err << "lsf " << name << ": usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "lsf " << name << ": config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "lsf " << name << ": error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace lsf
