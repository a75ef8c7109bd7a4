#include "survcusum/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace survcusum::io {

using nlohmann::json;

namespace {

std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& text, const std::string& what, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" +
                          text + "'");
    }
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&key](const char* k) { return key == k; }) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

json load_json(const std::string& path) {
    auto in = open_input(path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return doc;
}

double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    if (!obj[key].is_number()) throw ConfigError("key '" + std::string(key) + "' must be numeric");
    return obj[key].get<double>();
}

json baseline_to_json(const BaselineHazard& baseline) {
    json params;
    switch (baseline.kind()) {
        case BaselineHazard::Kind::exponential:
            params = {{"rate", baseline.rate()}};
            return {{"kind", "exponential"}, {"params", params}};
        case BaselineHazard::Kind::weibull:
            params = {{"shape", baseline.shape()}, {"scale", baseline.scale()}};
            return {{"kind", "weibull"}, {"params", params}};
        case BaselineHazard::Kind::step_cumulative:
            params = {{"breakpoints", baseline.breakpoints()},
                      {"cumulative", baseline.cumulative_values()}};
            return {{"kind", "step"}, {"params", params}};
    }
    throw ConfigError("unreachable baseline kind");
}

BaselineHazard baseline_from_json(const json& doc) {
    reject_unknown_keys(doc, {"kind", "params"}, "baseline");
    if (!doc.contains("kind") || !doc["kind"].is_string())
        throw ConfigError("baseline needs a string 'kind'");
    if (!doc.contains("params") || !doc["params"].is_object())
        throw ConfigError("baseline needs a 'params' object");
    const std::string kind = doc["kind"].get<std::string>();
    const json& params = doc["params"];
    if (kind == "exponential") {
        reject_unknown_keys(params, {"rate"}, "baseline.params");
        return BaselineHazard::exponential(require_number(params, "rate", "baseline.params"));
    }
    if (kind == "weibull") {
        reject_unknown_keys(params, {"shape", "scale"}, "baseline.params");
        return BaselineHazard::weibull(require_number(params, "shape", "baseline.params"),
                                       require_number(params, "scale", "baseline.params"));
    }
    if (kind == "step") {
        reject_unknown_keys(params, {"breakpoints", "cumulative"}, "baseline.params");
        if (!params.contains("breakpoints") || !params.contains("cumulative"))
            throw ConfigError("step baseline needs 'breakpoints' and 'cumulative'");
        return BaselineHazard::step_cumulative(params["breakpoints"].get<std::vector<double>>(),
                                               params["cumulative"].get<std::vector<double>>());
    }
    throw ConfigError("unknown baseline kind '" + kind + "'");
}

RiskModel model_from_json(const json& doc, const std::string& where) {
    reject_unknown_keys(doc, {"baseline", "beta", "standard_errors"}, where);
    if (!doc.contains("baseline")) throw ConfigError(where + " needs a 'baseline'");
    RiskModel model;
    model.baseline = baseline_from_json(doc["baseline"]);
    if (doc.contains("beta")) model.beta = doc["beta"].get<std::vector<double>>();
    return model;
}

ChartSpec chart_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
        throw ConfigError("each chart needs a string 'kind'");
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "cgi" || kind == "cgr") {
        reject_unknown_keys(doc, {"kind", "cap_hr"}, "chart");
        std::optional<double> cap;
        if (doc.contains("cap_hr")) {
            const double hr = require_number(doc, "cap_hr", "chart");
            if (!(hr > 1.0)) throw ConfigError("cap_hr must exceed 1");
            cap = std::log(hr);
        }
        if (kind == "cgi") return CgiSpec{cap};
        return CgrSpec{cap};
    }
    if (kind == "bk") {
        reject_unknown_keys(doc, {"kind", "theta1_hr"}, "chart");
        const double hr = require_number(doc, "theta1_hr", "chart");
        if (!(hr > 1.0)) throw ConfigError("theta1_hr must exceed 1");
        return BkSpec{std::log(hr)};
    }
    if (kind == "bernoulli") {
        reject_unknown_keys(doc, {"kind", "theta1_hr", "window_days"}, "chart");
        const double hr = require_number(doc, "theta1_hr", "chart");
        if (!(hr > 1.0)) throw ConfigError("theta1_hr must exceed 1");
        BernoulliSpec spec{std::log(hr), 365.0};
        if (doc.contains("window_days")) spec.window = require_number(doc, "window_days", "chart");
        return spec;
    }
    if (kind == "funnel") {
        reject_unknown_keys(doc, {"kind", "confidence", "period_days", "window_days"}, "chart");
        FunnelSpec spec;
        if (doc.contains("confidence")) spec.confidence = require_number(doc, "confidence", "chart");
        if (doc.contains("period_days")) spec.period = require_number(doc, "period_days", "chart");
        if (doc.contains("window_days")) spec.window = require_number(doc, "window_days", "chart");
        return spec;
    }
    throw ConfigError("unknown chart kind '" + kind + "'");
}

}  // namespace

PatientData read_patient_csv(const std::string& path, std::optional<double> horizon) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    const auto header = split_line(line);
    if (header.size() < 5 || header[0] != "hospital_id" || header[1] != "patient_id" ||
        header[2] != "entry_day" || header[3] != "followup_days" || header[4] != "event")
        throw ConfigError(path +
                          ": header must be hospital_id,patient_id,entry_day,followup_days,event"
                          ",z1,...,zp");
    const std::size_t p = header.size() - 5;
    for (std::size_t k = 0; k < p; ++k)
        if (header[5 + k] != "z" + std::to_string(k + 1))
            throw ConfigError(path + ": covariate columns must be named z1..zp in order");

    std::map<std::string, std::vector<PatientRecord>> groups;
    double max_exit = 0.0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size())
            throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        PatientRecord rec;
        rec.id = fields[1];
        rec.entry_time = parse_double(fields[2], "entry_day", line_no);
        rec.followup = parse_double(fields[3], "followup_days", line_no);
        if (fields[4] == "0")
            rec.event = false;
        else if (fields[4] == "1")
            rec.event = true;
        else
            throw ConfigError("line " + std::to_string(line_no) + ": event must be 0 or 1");
        rec.covariates.reserve(p);
        for (std::size_t k = 0; k < p; ++k)
            rec.covariates.push_back(parse_double(fields[5 + k], header[5 + k], line_no));
        rec.validate();
        max_exit = std::max(max_exit, rec.exit_time());
        groups[fields[0]].push_back(std::move(rec));
    }
    if (groups.empty()) throw ConfigError(path + ": no patient rows");

    PatientData data;
    data.covariate_dim = p;
    data.horizon = horizon.value_or(max_exit);
    for (auto& [id, records] : groups)
        data.hospitals.emplace_back(id, HospitalStream(std::move(records), data.horizon));
    return data;
}

std::vector<PatientRecord> read_patient_records(const std::string& path) {
    std::vector<PatientRecord> records;
    for (const auto& [id, stream] : read_patient_csv(path).hospitals)
        records.insert(records.end(), stream.records().begin(), stream.records().end());
    return records;
}

void write_patient_csv(const std::string& path,
                       const std::vector<std::pair<std::string, HospitalStream>>& hospitals) {
    auto out = open_output(path);
    std::size_t p = 0;
    for (const auto& [id, stream] : hospitals) p = std::max(p, stream.covariate_dim());
    out << "hospital_id,patient_id,entry_day,followup_days,event";
    for (std::size_t k = 1; k <= p; ++k) out << ",z" << k;
    out << "\n";
    for (const auto& [id, stream] : hospitals) {
        for (const auto& rec : stream.records()) {
            out << id << ',' << rec.id << ',' << format_double(rec.entry_time) << ','
                << format_double(rec.followup) << ',' << (rec.event ? 1 : 0);
            for (std::size_t k = 0; k < p; ++k)
                out << ',' << format_double(k < rec.covariates.size() ? rec.covariates[k] : 0.0);
            out << "\n";
        }
    }
}

RiskModel read_risk_model(const std::string& path) {
    return model_from_json(load_json(path), "risk model");
}

void write_risk_model(const std::string& path, const RiskModel& model,
                      const std::vector<double>& standard_errors) {
    json doc;
    doc["baseline"] = baseline_to_json(model.baseline);
    doc["beta"] = model.beta;
    if (!standard_errors.empty()) doc["standard_errors"] = standard_errors;
    open_output(path) << doc.dump(2) << "\n";
}

void write_series_csv(const std::string& path, const ChartSeries& series) {
    auto out = open_output(path);
    out << "time,value\n";
    for (const auto& pt : series.points)
        out << format_double(pt.time) << ',' << format_double(pt.value) << "\n";
}

std::vector<ChartPoint> read_series_csv(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split_line(line) != std::vector<std::string>{"time", "value"})
        throw ConfigError(path + ": expected header time,value");
    std::vector<ChartPoint> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != 2)
            throw ConfigError("line " + std::to_string(line_no) + ": expected time,value");
        points.push_back({parse_double(fields[0], "time", line_no),
                          parse_double(fields[1], "value", line_no)});
    }
    return points;
}

void write_series_json(const std::string& path, const ChartSeries& series,
                       std::optional<double> control_limit, std::optional<double> detection) {
    json doc;
    doc["chart"] = chart_label(series.spec);
    if (control_limit) doc["control_limit"] = *control_limit;
    doc["detection_time"] = detection ? json(*detection) : json(nullptr);
    json points = json::array();
    for (const auto& pt : series.points) points.push_back({pt.time, pt.value});
    doc["points"] = std::move(points);
    open_output(path) << doc.dump(2) << "\n";
}

void write_funnel_csv(const std::string& path, const std::vector<FunnelRow>& rows) {
    auto out = open_output(path);
    out << "hospital_id,period_end,n,observed,expected,lower,upper,out_of_control\n";
    for (const auto& row : rows) {
        out << row.hospital_id << ',' << format_double(row.period_end) << ',' << row.n << ','
            << format_double(row.observed) << ',' << format_double(row.expected) << ','
            << format_double(row.lower) << ',' << format_double(row.upper) << ','
            << (row.out_of_control ? 1 : 0) << "\n";
    }
}

void write_run_length_csv(const std::string& path, const std::vector<RunLengthRow>& rows,
                          const std::vector<std::optional<double>>& theory) {
    auto out = open_output(path);
    out << "chart,h,arl,sd,mrl,detected,censored,theory\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        out << row.chart << ',' << format_double(row.h) << ',' << format_double(row.arl) << ','
            << format_double(row.sd) << ',' << format_double(row.mrl) << ',' << row.detected
            << ',' << row.censored << ',';
        if (i < theory.size() && theory[i])
            out << format_double(*theory[i]);
        else if (i < theory.size())
            out << "inf";
        out << "\n";
    }
}

void write_power_csv(const std::string& path, const std::vector<PowerCurve>& curves) {
    auto out = open_output(path);
    out << "chart,h,time,power\n";
    for (const auto& curve : curves)
        for (std::size_t g = 0; g < curve.grid.size(); ++g)
            out << curve.chart << ',' << format_double(curve.h) << ','
                << format_double(curve.grid[g]) << ',' << format_double(curve.power[g]) << "\n";
}

void write_control_limit_csv(const std::string& path, const std::vector<std::string>& charts,
                             const std::vector<double>& limits) {
    auto out = open_output(path);
    out << "chart,h\n";
    for (std::size_t i = 0; i < charts.size(); ++i)
        out << charts[i] << ',' << format_double(limits[i]) << "\n";
}

ExperimentConfig read_experiment_config(const std::string& path) {
    const json doc = load_json(path);
    reject_unknown_keys(doc,
                        {"psi", "horizon_days", "theta", "hospitals", "seed", "model",
                         "model_path", "covariates", "charts", "target", "control_limits",
                         "power_grid_days"},
                        "experiment config");
    ExperimentConfig config;
    config.sim.psi = require_number(doc, "psi", "experiment config");
    config.sim.horizon = require_number(doc, "horizon_days", "experiment config");
    config.sim.theta = require_number(doc, "theta", "experiment config");
    config.sim.n_hospitals = static_cast<int>(require_number(doc, "hospitals", "experiment config"));
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
        config.sim.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("model") == doc.contains("model_path"))
        throw ConfigError("experiment config needs exactly one of 'model' or 'model_path'");
    if (doc.contains("model"))
        config.sim.model = model_from_json(doc["model"], "model");
    else
        config.sim.model = read_risk_model(doc["model_path"].get<std::string>());

    if (doc.contains("covariates")) {
        const json& cov = doc["covariates"];
        reject_unknown_keys(cov, {"mode", "pool_csv"}, "covariates");
        const std::string mode = cov.value("mode", "none");
        if (mode == "none") {
            config.sim.covariates = NoCovariates{};
        } else if (mode == "resample") {
            if (!cov.contains("pool_csv"))
                throw ConfigError("covariates mode 'resample' needs 'pool_csv'");
            ResampleCovariates resample;
            for (const auto& rec : read_patient_records(cov["pool_csv"].get<std::string>()))
                resample.pool.push_back(rec.covariates);
            config.sim.covariates = std::move(resample);
        } else {
            throw ConfigError("unknown covariates mode '" + mode + "'");
        }
    }

    if (!doc.contains("charts") || !doc["charts"].is_array() || doc["charts"].empty())
        throw ConfigError("experiment config needs a nonempty 'charts' array");
    for (const auto& chart : doc["charts"]) config.charts.push_back(chart_from_json(chart));

    if (doc.contains("target")) {
        const json& target = doc["target"];
        if (!target.is_object() || !target.contains("kind"))
            throw ConfigError("target needs a 'kind'");
        const std::string kind = target["kind"].get<std::string>();
        if (kind == "type_i_error") {
            reject_unknown_keys(target, {"kind", "alpha", "horizon_days"}, "target");
            TypeIErrorTarget t;
            t.alpha = require_number(target, "alpha", "target");
            t.horizon = target.contains("horizon_days")
                            ? require_number(target, "horizon_days", "target")
                            : config.sim.horizon;
            config.target = t;
        } else if (kind == "in_control_arl") {
            reject_unknown_keys(target, {"kind", "days"}, "target");
            config.target = InControlArlTarget{require_number(target, "days", "target")};
        } else {
            throw ConfigError("unknown target kind '" + kind + "'");
        }
    }

    if (doc.contains("control_limits"))
        config.control_limits = doc["control_limits"].get<std::vector<double>>();
    if (doc.contains("power_grid_days"))
        config.power_grid = doc["power_grid_days"].get<std::vector<double>>();
    return config;
}

std::string experiment_config_hash(const std::string& path) {
    const std::string canonical = load_json(path).dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::string& config_hash, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
    json doc;
    doc["command"] = command;
    doc["config_hash"] = config_hash;
    doc["seed"] = seed;
    doc["outputs"] = outputs;
    open_output(path) << doc.dump(2) << "\n";
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(split_line(line));
    return rows;
}

}  // namespace survcusum::io
