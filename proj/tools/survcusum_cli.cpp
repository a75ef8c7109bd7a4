// survcusum: risk-adjusted CUSUM monitoring of survival outcomes.
// Subcommands: fit, chart, calibrate, simulate, arl.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survcusum/arl.hpp"
#include "survcusum/charts.hpp"
#include "survcusum/coxfit.hpp"
#include "survcusum/io.hpp"
#include "survcusum/model.hpp"
#include "survcusum/parallel.hpp"
#include "survcusum/simulate.hpp"
#include "survcusum/svg.hpp"

namespace {

using namespace survcusum;
namespace fs = std::filesystem;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out_dir = ".";
    std::string format = "csv";

    fs::path out(const std::string& name) const { return fs::path(out_dir) / name; }
    void prepare() const {
        if (format != "csv" && format != "json")
            throw ConfigError("--format must be csv or json");
        fs::create_directories(out_dir);
    }
};

std::string slug(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')
            out.push_back(c);
        else if (!out.empty() && out.back() != '_')
            out.push_back('_');
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

std::string fmt(double x, const char* spec = "%.6g") {
    if (std::isinf(x)) return "inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, x);
    return buf;
}

void emit_table_json(const fs::path& path, const nlohmann::json& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << rows.dump(2) << "\n";
}

// ---------------------------------------------------------------- fit

int run_fit(const GlobalOptions& global, const std::string& csv_path, std::string out_path,
            bool no_covariates, int max_iter, double tol) {
    global.prepare();
    if (out_path.empty()) out_path = global.out("model.json").string();
    auto records = io::read_patient_records(csv_path);
    if (no_covariates)
        for (auto& rec : records) rec.covariates.clear();
    const auto fit = fit_cox(records, CoxFitOptions{max_iter, tol});
    io::write_risk_model(out_path, fit.risk_model(), fit.standard_errors);

    std::cout << "term,estimate,std_error\n";
    for (std::size_t k = 0; k < fit.beta.size(); ++k)
        std::cout << "z" << k + 1 << ',' << fmt(fit.beta[k], "%.8g") << ','
                  << fmt(fit.standard_errors[k], "%.8g") << "\n";
    std::cout << "# log_partial_likelihood " << fmt(fit.log_partial_likelihood, "%.8g")
              << ", iterations " << fit.iterations << ", baseline steps "
              << fit.baseline.breakpoints().size() << "\n";
    std::cout << "# model written to " << out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- chart

struct ChartFlags {
    std::string kind;
    double cap_hr = 0.0;
    double theta1_hr = 0.0;
    double window = 365.0;
    double period = 365.0;
    double confidence = 0.95;
    bool exact_binomial = false;
    bool window_set = false, period_set = false, confidence_set = false;
    bool cap_set = false, theta1_set = false;
};

ChartSpec spec_from_flags(const ChartFlags& f) {
    const auto reject = [&](bool bad_flag, const char* flag) {
        if (bad_flag)
            throw ConfigError(std::string(flag) + " does not apply to chart kind '" + f.kind + "'");
    };
    if (f.kind == "cgi" || f.kind == "cgr") {
        reject(f.theta1_set, "--theta1-hr");
        reject(f.window_set, "--window");
        reject(f.period_set, "--period");
        reject(f.confidence_set, "--confidence");
        reject(f.exact_binomial, "--exact-binomial");
        std::optional<double> cap;
        if (f.cap_set) {
            if (!(f.cap_hr > 1.0)) throw ConfigError("--cap-hr must exceed 1");
            cap = std::log(f.cap_hr);
        }
        if (f.kind == "cgi") return CgiSpec{cap};
        return CgrSpec{cap};
    }
    if (f.kind == "bk") {
        reject(f.cap_set, "--cap-hr");
        reject(f.window_set, "--window");
        reject(f.period_set, "--period");
        reject(f.confidence_set, "--confidence");
        reject(f.exact_binomial, "--exact-binomial");
        if (!f.theta1_set) throw ConfigError("bk chart needs --theta1-hr");
        if (!(f.theta1_hr > 1.0)) throw ConfigError("--theta1-hr must exceed 1");
        return BkSpec{std::log(f.theta1_hr)};
    }
    if (f.kind == "bernoulli") {
        reject(f.cap_set, "--cap-hr");
        reject(f.period_set, "--period");
        reject(f.confidence_set, "--confidence");
        reject(f.exact_binomial, "--exact-binomial");
        if (!f.theta1_set) throw ConfigError("bernoulli chart needs --theta1-hr");
        if (!(f.theta1_hr > 1.0)) throw ConfigError("--theta1-hr must exceed 1");
        return BernoulliSpec{std::log(f.theta1_hr), f.window};
    }
    if (f.kind == "funnel") {
        reject(f.cap_set, "--cap-hr");
        reject(f.theta1_set, "--theta1-hr");
        return FunnelSpec{f.confidence, f.period, f.window, f.exact_binomial};
    }
    throw ConfigError("unknown chart kind '" + f.kind + "'");
}

int run_chart(const GlobalOptions& global, const std::string& csv_path,
              const std::string& model_path, const ChartFlags& flags, double h, bool has_h,
              bool monthly, bool svg, const std::vector<std::string>& hospital_filter,
              std::optional<double> horizon) {
    global.prepare();
    if (has_h && !(h > 0.0)) throw ConfigError("--h must be > 0");
    const ChartSpec spec = spec_from_flags(flags);
    const RiskModel model = io::read_risk_model(model_path);
    auto data = io::read_patient_csv(csv_path, horizon);
    if (data.covariate_dim != model.beta.size())
        throw ConfigError("data has " + std::to_string(data.covariate_dim) +
                          " covariates but the model expects " +
                          std::to_string(model.beta.size()));

    if (!hospital_filter.empty()) {
        for (const auto& id : hospital_filter) {
            const bool known = std::any_of(data.hospitals.begin(), data.hospitals.end(),
                                           [&id](const auto& kv) { return kv.first == id; });
            if (!known) throw ConfigError("unknown hospital id '" + id + "' in filter");
        }
        std::erase_if(data.hospitals, [&](const auto& kv) {
            return std::find(hospital_filter.begin(), hospital_filter.end(), kv.first) ==
                   hospital_filter.end();
        });
    }

    const std::string label = chart_label(spec);
    std::vector<std::string> outputs;

    if (std::holds_alternative<FunnelSpec>(spec)) {
        if (has_h) throw ConfigError("--h does not apply to the funnel comparison");
        const auto rows = funnel_points(data.hospitals, model, std::get<FunnelSpec>(spec));
        for (const auto& [id, stream] : data.hospitals) {
            const bool present = std::any_of(rows.begin(), rows.end(),
                                             [&](const FunnelRow& r) { return r.hospital_id == id; });
            if (!present)
                std::cerr << "note: hospital " << id
                          << " skipped (no completed outcome windows)\n";
        }
        const auto path = global.out("funnel.csv");
        io::write_funnel_csv(path.string(), rows);
        std::cout << "hospital_id,period_end,n,observed,expected,lower,upper,out_of_control\n";
        for (const auto& row : rows)
            std::cout << row.hospital_id << ',' << fmt(row.period_end) << ',' << row.n << ','
                      << fmt(row.observed) << ',' << fmt(row.expected) << ',' << fmt(row.lower)
                      << ',' << fmt(row.upper) << ',' << (row.out_of_control ? 1 : 0) << "\n";
        std::cout << "# written to " << path.string() << "\n";
        return 0;
    }

    std::ostringstream summary;
    summary << "hospital_id,chart,h,max_value,detection_day\n";
    for (const auto& [id, stream] : data.hospitals) {
        const ChartSeries series = std::visit(
            [&](const auto& s) -> ChartSeries {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, CgiSpec>) return compute_cgi(stream, model, s);
                else if constexpr (std::is_same_v<T, CgrSpec>) return compute_cgr(stream, model, s);
                else if constexpr (std::is_same_v<T, BkSpec>) return compute_bk(stream, model, s);
                else if constexpr (std::is_same_v<T, BernoulliSpec>)
                    return compute_bernoulli(stream, model, s);
                else
                    throw ConfigError("unreachable");
            },
            spec);
        std::optional<double> hit;
        if (has_h) hit = detection_time(series, h, monthly);
        const std::string stem = "chart_" + slug(label) + "_" + slug(id);
        if (global.format == "json") {
            const auto path = global.out(stem + ".json");
            io::write_series_json(path.string(), series,
                                  has_h ? std::optional<double>(h) : std::nullopt, hit);
            outputs.push_back(path.string());
        } else {
            const auto path = global.out(stem + ".csv");
            io::write_series_csv(path.string(), series);
            outputs.push_back(path.string());
        }
        if (svg) {
            const auto path = global.out(stem + ".svg");
            io::write_series_svg(path.string(), series,
                                 has_h ? std::optional<double>(h) : std::nullopt,
                                 label + " " + id);
            outputs.push_back(path.string());
        }
        double max_value = 0.0;
        for (const auto& pt : series.points) max_value = std::max(max_value, pt.value);
        summary << id << ',' << label << ',' << (has_h ? fmt(h) : "") << ',' << fmt(max_value)
                << ',' << (hit ? fmt(*hit) : "") << "\n";
    }
    const auto summary_path = global.out("detections.csv");
    std::ofstream(summary_path) << summary.str();
    std::cout << summary.str();
    std::cout << "# " << outputs.size() << " series file(s) in " << global.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------- arl

int run_arl(const GlobalOptions& global, const std::string& chart,
            std::vector<double> theta_ratios, double h, double psi, std::optional<double> lambda,
            const std::string& model_path, std::optional<double> theta1_ratio,
            const std::string& frailty_kind, double delta, double rho, double nu, double m,
            const std::string& pool_csv, double t_max) {
    global.prepare();
    if (chart != "cgi" && chart != "cgr" && chart != "bk")
        throw ConfigError("--chart must be cgi, cgr or bk for run-length theory");
    if (theta_ratios.empty()) throw ConfigError("--theta-ratio needs at least one value");
    if (lambda.has_value() == !model_path.empty())
        throw ConfigError("baseline needs exactly one of --lambda or --model");

    ArlQuery query;
    query.h = h;
    query.psi = psi;
    query.t_max = t_max;
    RiskModel model;
    if (lambda) {
        query.baseline = BaselineHazard::exponential(*lambda);
    } else {
        model = io::read_risk_model(model_path);
        query.baseline = model.baseline;
    }

    if (frailty_kind == "none") {
        query.frailty = DegenerateFrailty{};
    } else if (frailty_kind == "gamma") {
        query.frailty = GammaFrailty{delta};
    } else if (frailty_kind == "pvf") {
        query.frailty = PvfFrailty{rho, nu, m};
    } else if (frailty_kind == "empirical") {
        if (pool_csv.empty() || model_path.empty())
            throw ConfigError("empirical frailty needs --model and --pool-csv");
        EmpiricalFrailty empirical;
        for (const auto& rec : io::read_patient_records(pool_csv))
            empirical.samples.push_back(model.relative_risk(rec.covariates));
        query.frailty = std::move(empirical);
    } else {
        throw ConfigError("--frailty must be none, gamma, pvf or empirical");
    }
    validate_frailty(query.frailty);

    if (chart == "bk") {
        if (!theta1_ratio) throw ConfigError("bk run length needs --theta1-ratio");
        if (!(*theta1_ratio > 1.0)) throw ConfigError("--theta1-ratio must exceed 1");
    } else if (theta1_ratio) {
        throw ConfigError("--theta1-ratio only applies to the bk chart");
    }

    std::ostringstream table;
    table << "chart,theta_ratio,theta1_ratio,h,arl_days\n";
    for (double ratio : theta_ratios) {
        if (!(ratio >= 1.0)) throw ConfigError("--theta-ratio values must be >= 1");
        query.theta = std::log(ratio);
        std::string arl_text;
        if (chart == "bk") {
            query.theta1 = std::log(*theta1_ratio);
            const auto arl = arl_bk(query);
            arl_text = arl ? fmt(*arl, "%.2f") : "inf";
        } else {
            try {
                arl_text = fmt(arl_cgi(query), "%.2f");
            } catch (const NoApproximationError&) {
                arl_text = "inf";  // in control: no finite approximation exists
            }
        }
        table << chart << ',' << fmt(ratio) << ','
              << (theta1_ratio ? fmt(*theta1_ratio) : "") << ',' << fmt(h) << ',' << arl_text
              << "\n";
    }
    const auto path = global.out("arl.csv");
    std::ofstream(path) << table.str();
    std::cout << table.str();
    std::cout << "# written to " << path.string() << "\n";
    return 0;
}

// ------------------------------------------------- calibrate / simulate

FrailtyDist frailty_for_theory(const SimConfig& sim) {
    if (const auto* resample = std::get_if<ResampleCovariates>(&sim.covariates)) {
        EmpiricalFrailty empirical;
        empirical.samples.reserve(resample->pool.size());
        for (const auto& z : resample->pool)
            empirical.samples.push_back(sim.model.relative_risk(z));
        return empirical;
    }
    return DegenerateFrailty{};
}

std::optional<double> theory_arl(const ChartSpec& spec, const SimConfig& sim, double h) {
    ArlQuery query;
    query.theta = sim.theta;
    query.h = h;
    query.psi = sim.psi;
    query.baseline = sim.model.baseline;
    query.frailty = frailty_for_theory(sim);
    try {
        if (std::holds_alternative<CgiSpec>(spec) || std::holds_alternative<CgrSpec>(spec))
            return arl_cgi(query);
        if (const auto* bk = std::get_if<BkSpec>(&spec)) {
            query.theta1 = bk->theta1;
            return arl_bk(query);
        }
    } catch (const NoApproximationError&) {
        return std::nullopt;  // theta = 0: reported as inf
    }
    return std::nullopt;  // no theory column for outcome-window charts
}

int run_calibrate(const GlobalOptions& global, const std::string& config_path) {
    global.prepare();
    auto config = io::read_experiment_config(config_path);
    if (global.seed) config.sim.seed = *global.seed;
    if (!config.target) throw ConfigError("calibrate needs a 'target' in the config");

    const auto limits =
        calibrate_control_limits(config.charts, config.sim, *config.target, global.threads);
    std::vector<std::string> labels;
    for (const auto& spec : config.charts) labels.push_back(chart_label(spec));

    const auto csv_path = global.out("control_limits.csv");
    io::write_control_limit_csv(csv_path.string(), labels, limits);
    std::vector<std::string> outputs{csv_path.string()};
    if (global.format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < labels.size(); ++i)
            rows.push_back({{"chart", labels[i]}, {"h", limits[i]}});
        const auto json_path = global.out("control_limits.json");
        emit_table_json(json_path, rows);
        outputs.push_back(json_path.string());
    }
    const auto manifest_path = global.out("manifest.json");
    io::write_manifest(manifest_path.string(), "calibrate",
                       io::experiment_config_hash(config_path), config.sim.seed, outputs);

    std::cout << "chart,h\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        std::cout << labels[i] << ',' << fmt(limits[i], "%.4f") << "\n";
    std::cout << "# written to " << csv_path.string() << "\n";
    return 0;
}

int run_simulate(const GlobalOptions& global, const std::string& config_path) {
    global.prepare();
    auto config = io::read_experiment_config(config_path);
    if (global.seed) config.sim.seed = *global.seed;
    if (config.control_limits.size() != config.charts.size())
        throw ConfigError("simulate needs one control limit per chart");

    const auto rows = run_length_experiment(config.charts, config.sim, config.control_limits,
                                            global.threads);
    std::vector<std::optional<double>> theory;
    for (std::size_t i = 0; i < config.charts.size(); ++i)
        theory.push_back(theory_arl(config.charts[i], config.sim, config.control_limits[i]));

    const auto csv_path = global.out("run_lengths.csv");
    io::write_run_length_csv(csv_path.string(), rows, theory);
    std::vector<std::string> outputs{csv_path.string()};

    if (!config.power_grid.empty()) {
        const auto curves = power_over_time(config.charts, config.sim, config.control_limits,
                                            config.power_grid, global.threads);
        const auto power_path = global.out("power.csv");
        io::write_power_csv(power_path.string(), curves);
        outputs.push_back(power_path.string());
    }
    if (global.format == "json") {
        nlohmann::json doc = nlohmann::json::array();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            nlohmann::json row{{"chart", rows[i].chart},   {"h", rows[i].h},
                               {"arl", rows[i].arl},       {"sd", rows[i].sd},
                               {"mrl", rows[i].mrl},       {"detected", rows[i].detected},
                               {"censored", rows[i].censored}};
            row["theory"] = theory[i] ? nlohmann::json(*theory[i]) : nlohmann::json("inf");
            doc.push_back(std::move(row));
        }
        const auto json_path = global.out("run_lengths.json");
        emit_table_json(json_path, doc);
        outputs.push_back(json_path.string());
    }
    const auto manifest_path = global.out("manifest.json");
    io::write_manifest(manifest_path.string(), "simulate",
                       io::experiment_config_hash(config_path), config.sim.seed, outputs);

    std::cout << "chart,h,arl,sd,mrl,detected,censored,theory\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::cout << rows[i].chart << ',' << fmt(rows[i].h) << ',' << fmt(rows[i].arl, "%.2f")
                  << ',' << fmt(rows[i].sd, "%.2f") << ',' << fmt(rows[i].mrl, "%.2f") << ','
                  << rows[i].detected << ',' << rows[i].censored << ','
                  << (theory[i] ? fmt(*theory[i], "%.2f") : "inf") << "\n";
    }
    std::cout << "# written to " << csv_path.string() << "\n";
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Continuous-time risk-adjusted CUSUM monitoring of survival outcomes"};
    app.require_subcommand(1);
    app.fallthrough();
    // --h is a real option (the control limit), so help is --help only
    app.set_help_flag("--help", "Print help");

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Override the experiment seed");
    app.add_option("--threads", global.threads,
                   "Worker threads (0: SURVCUSUM_THREADS or hardware)");
    app.add_option("--out-dir", global.out_dir, "Output directory")->capture_default_str();
    app.add_option("--format", global.format, "Output format: csv or json")
        ->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a Cox model with a Breslow baseline");
    fit->set_help_flag("--help", "Print help");
    std::string fit_csv, fit_out;
    bool fit_no_covariates = false;
    int fit_max_iter = 50;
    double fit_tol = 1e-8;
    fit->add_option("csv", fit_csv, "Patient CSV")->required();
    fit->add_option("--out", fit_out, "Model document path (default <out-dir>/model.json)");
    fit->add_flag("--no-covariates", fit_no_covariates, "Baseline-only fit");
    fit->add_option("--max-iter", fit_max_iter)->capture_default_str();
    fit->add_option("--tol", fit_tol, "Gradient max-norm tolerance")->capture_default_str();

    // chart
    auto* chart = app.add_subcommand("chart", "Build monitoring charts from patient data");
    chart->set_help_flag("--help", "Print help");
    std::string chart_csv, chart_model;
    ChartFlags flags;
    double chart_h = 0.0;
    bool chart_monthly = false, chart_svg = false;
    std::vector<std::string> chart_hospitals;
    std::optional<double> chart_horizon;
    chart->add_option("csv", chart_csv, "Patient CSV")->required();
    chart->add_option("--model", chart_model, "Risk model document")->required();
    chart->add_option("--chart", flags.kind, "cgi, cgr, bk, bernoulli or funnel")->required();
    auto* cap_opt = chart->add_option("--cap-hr", flags.cap_hr, "Upper bound on the estimated hazard ratio");
    auto* theta1_opt = chart->add_option("--theta1-hr", flags.theta1_hr, "Anticipated hazard ratio");
    auto* window_opt = chart->add_option("--window", flags.window, "Outcome window in days");
    auto* period_opt = chart->add_option("--period", flags.period, "Funnel period in days");
    auto* conf_opt = chart->add_option("--confidence", flags.confidence, "Funnel confidence level");
    chart->add_flag("--exact-binomial", flags.exact_binomial, "Exact binomial funnel limits");
    auto* h_opt = chart->add_option("--h", chart_h, "Control limit");
    chart->add_flag("--monthly", chart_monthly, "Round detections up to 30-day blocks");
    chart->add_flag("--svg", chart_svg, "Also render a static SVG per hospital");
    chart->add_option("--hospital", chart_hospitals, "Restrict to these hospital ids");
    chart->add_option("--horizon", chart_horizon, "Override the study horizon in days");

    // arl
    auto* arl = app.add_subcommand("arl", "Run-length approximations from Fisher information");
    arl->set_help_flag("--help", "Print help");
    std::string arl_chart = "cgi", arl_model, arl_frailty = "none", arl_pool;
    std::vector<double> arl_ratios;
    double arl_h = 0.0, arl_psi = 0.0, arl_delta = 1.0;
    double arl_rho = 1.0, arl_nu = 1.0, arl_m = 0.5, arl_tmax = 36500.0;
    std::optional<double> arl_lambda, arl_theta1;
    arl->add_option("--chart", arl_chart, "cgi, cgr or bk")->capture_default_str();
    arl->add_option("--theta-ratio", arl_ratios, "True hazard ratios e^theta (comma separated)")
        ->required()
        ->delimiter(',');
    arl->add_option("--h", arl_h, "Control limit")->required();
    arl->add_option("--psi", arl_psi, "Arrival rate per day")->required();
    arl->add_option("--lambda", arl_lambda, "Exponential baseline rate per day");
    arl->add_option("--model", arl_model, "Risk model document supplying the baseline");
    arl->add_option("--theta1-ratio", arl_theta1, "Anticipated hazard ratio (bk only)");
    arl->add_option("--frailty", arl_frailty, "none, gamma, pvf or empirical")
        ->capture_default_str();
    arl->add_option("--delta", arl_delta, "Gamma frailty variance");
    arl->add_option("--rho", arl_rho, "PVF rho");
    arl->add_option("--nu", arl_nu, "PVF nu");
    arl->add_option("--m", arl_m, "PVF m");
    arl->add_option("--pool-csv", arl_pool, "Patient CSV for empirical frailty");
    arl->add_option("--t-max", arl_tmax, "Root search horizon in days")->capture_default_str();

    // calibrate / simulate
    auto* calibrate = app.add_subcommand("calibrate", "Monte-Carlo control-limit calibration");
    calibrate->set_help_flag("--help", "Print help");
    std::string calibrate_config;
    calibrate->add_option("config", calibrate_config, "Experiment config JSON")->required();

    auto* simulate = app.add_subcommand("simulate", "Run-length and power experiments");
    simulate->set_help_flag("--help", "Print help");
    std::string simulate_config;
    simulate->add_option("config", simulate_config, "Experiment config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        throw ConfigError(std::string("argument error: ") + e.what());
    }

    flags.cap_set = cap_opt->count() > 0;
    flags.theta1_set = theta1_opt->count() > 0;
    flags.window_set = window_opt->count() > 0;
    flags.period_set = period_opt->count() > 0;
    flags.confidence_set = conf_opt->count() > 0;

    if (fit->parsed())
        return run_fit(global, fit_csv, fit_out, fit_no_covariates, fit_max_iter, fit_tol);
    if (chart->parsed())
        return run_chart(global, chart_csv, chart_model, flags, chart_h, h_opt->count() > 0,
                         chart_monthly, chart_svg, chart_hospitals, chart_horizon);
    if (arl->parsed())
        return run_arl(global, arl_chart, arl_ratios, arl_h, arl_psi, arl_lambda, arl_model,
                       arl_theta1, arl_frailty, arl_delta, arl_rho, arl_nu, arl_m, arl_pool,
                       arl_tmax);
    if (calibrate->parsed()) return run_calibrate(global, calibrate_config);
    if (simulate->parsed()) return run_simulate(global, simulate_config);
    return 0;
}

void print_error(const char* type, const std::string& message) {
    nlohmann::json doc{{"error", {{"type", type}, {"message", message}}}};
    std::cerr << doc.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        print_error("config", e.what());
        return 2;
    } catch (const NumericError& e) {
        print_error("numeric", e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
