#include "survcusum/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "survcusum/parallel.hpp"
#include "survcusum/stats.hpp"

namespace survcusum {

void validate(const SimConfig& config) {
    if (!(config.psi > 0.0)) throw ConfigError("arrival rate psi must be > 0");
    if (!(config.horizon > 0.0)) throw ConfigError("simulation horizon must be > 0");
    if (config.theta < 0.0) throw ConfigError("theta must be >= 0");
    if (config.n_hospitals <= 0) throw ConfigError("hospital count must be > 0");
    if (const auto* resample = std::get_if<ResampleCovariates>(&config.covariates)) {
        if (resample->pool.empty()) throw ConfigError("resampling pool is empty");
        for (const auto& z : resample->pool)
            if (z.size() != config.model.beta.size())
                throw ConfigError("resampling pool vectors do not match model coefficients");
    } else if (!config.model.beta.empty()) {
        throw ConfigError("covariate sampler 'none' needs a model without coefficients");
    }
}

double survival_time_from_uniform(double u, const BaselineHazard& baseline, double multiplier) {
    if (!(u > 0.0 && u < 1.0)) throw ConfigError("uniform draw must lie in (0, 1)");
    if (!(multiplier > 0.0)) throw ConfigError("hazard multiplier must be > 0");
    return baseline.inverse_cumulative(-std::log(u) / multiplier);
}

double sample_survival_time(Rng& rng, const BaselineHazard& baseline, double multiplier) {
    return survival_time_from_uniform(rng.uniform01(), baseline, multiplier);
}

HospitalStream generate_hospital(const SimConfig& config, int replicate_index) {
    validate(config);
    Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(replicate_index));
    const auto* resample = std::get_if<ResampleCovariates>(&config.covariates);
    const double hazard_ratio = std::exp(config.theta);

    std::vector<PatientRecord> records;
    double arrival = 0.0;
    long serial = 0;
    char id_buf[32];
    for (;;) {
        arrival += rng.exponential(config.psi);
        if (arrival >= config.horizon) break;
        PatientRecord rec;
        std::snprintf(id_buf, sizeof(id_buf), "p%07ld", serial++);
        rec.id = id_buf;
        rec.entry_time = arrival;
        if (resample) rec.covariates = resample->pool[rng.uniform_index(resample->pool.size())];
        const double multiplier = hazard_ratio * config.model.relative_risk(rec.covariates);
        const double survival = sample_survival_time(rng, config.model.baseline, multiplier);
        if (arrival + survival <= config.horizon) {
            rec.event = true;
            rec.followup = survival;
        } else {
            rec.event = false;
            rec.followup = config.horizon - arrival;
        }
        records.push_back(std::move(rec));
    }
    return HospitalStream(std::move(records), config.horizon);
}

namespace {

std::vector<DetectionRecord> record_curves(const ChartSpec& spec, const SimConfig& config,
                                           int threads) {
    std::vector<DetectionRecord> curves(static_cast<std::size_t>(config.n_hospitals));
    parallel_for(config.n_hospitals, threads, [&](int r) {
        const HospitalStream stream = generate_hospital(config, r);
        curves[static_cast<std::size_t>(r)] = detection_record(stream, config.model, spec);
    });
    return curves;
}

double type_i_quantile(std::vector<double> maxima, double alpha) {
    std::sort(maxima.begin(), maxima.end());
    return stats::quantile_higher(maxima, 1.0 - alpha);
}

double mean_run_length(const std::vector<DetectionRecord>& curves, double h, double horizon) {
    double sum = 0.0;
    for (const auto& curve : curves) {
        const auto hit = curve.first_crossing(h);
        sum += hit && *hit <= horizon ? *hit : horizon;
    }
    return sum / static_cast<double>(curves.size());
}

double calibrate_in_control_arl(const std::vector<DetectionRecord>& curves, double target,
                                double horizon) {
    if (!(target > 0.0)) throw ConfigError("in-control ARL target must be > 0");
    if (target >= horizon)
        throw ConfigError("in-control ARL target must be below the simulation horizon");
    double hi = 1.0;
    for (const auto& curve : curves)
        if (!curve.records().empty()) hi = std::max(hi, curve.records().back().value);
    hi *= 2.0;
    double lo = 1e-9;
    if (mean_run_length(curves, lo, horizon) > target)
        throw NumericError("mean run length exceeds target even at a vanishing control limit");
    for (int iter = 0; iter < 200 && hi - lo > 1e-9 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mean_run_length(curves, mid, horizon) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double err_lo = std::abs(mean_run_length(curves, lo, horizon) - target);
    const double err_hi = std::abs(mean_run_length(curves, hi, horizon) - target);
    const double h = err_lo <= err_hi ? lo : hi;
    if (std::min(err_lo, err_hi) > 0.01 * target)
        throw NumericError("no control limit matches the ARL target within 1%");
    return h;
}

}  // namespace

std::vector<double> calibrate_control_limits(std::span<const ChartSpec> specs,
                                             const SimConfig& config,
                                             const CalibrationTarget& target, int threads) {
    validate(config);
    if (config.theta != 0.0) throw ConfigError("calibration needs an in-control config (theta = 0)");
    if (specs.empty()) throw ConfigError("calibration needs at least one chart");
    for (const auto& spec : specs) {
        validate_spec(spec);
        if (std::holds_alternative<FunnelSpec>(spec))
            throw ConfigError("funnel comparisons have no control limit to calibrate");
    }

    const auto n = static_cast<std::size_t>(config.n_hospitals);
    if (const auto* type1 = std::get_if<TypeIErrorTarget>(&target)) {
        if (!(type1->alpha > 0.0 && type1->alpha < 1.0))
            throw ConfigError("type-I error level must lie in the open interval (0, 1)");
        if (type1->alpha * static_cast<double>(config.n_hospitals) < 5.0)
            throw InsufficientReplicatesError(
                "alpha * hospitals < 5; too few replicates to place the quantile");
        if (type1->horizon > config.horizon + 1e-9)
            throw ConfigError("type-I horizon exceeds the simulation horizon");
        std::vector<std::vector<double>> maxima(specs.size(), std::vector<double>(n, 0.0));
        parallel_for(config.n_hospitals, threads, [&](int r) {
            const HospitalStream stream = generate_hospital(config, r);
            for (std::size_t s = 0; s < specs.size(); ++s) {
                const DetectionRecord curve = detection_record(stream, config.model, specs[s]);
                maxima[s][static_cast<std::size_t>(r)] = curve.max_value(type1->horizon);
            }
        });
        std::vector<double> limits(specs.size());
        for (std::size_t s = 0; s < specs.size(); ++s)
            limits[s] = type_i_quantile(std::move(maxima[s]), type1->alpha);
        return limits;
    }

    const auto& arl_target = std::get<InControlArlTarget>(target);
    std::vector<double> limits(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const auto curves = record_curves(specs[s], config, threads);
        limits[s] = calibrate_in_control_arl(curves, arl_target.target_days, config.horizon);
    }
    return limits;
}

double calibrate_control_limit(const ChartSpec& spec, const SimConfig& config,
                               const CalibrationTarget& target, int threads) {
    return calibrate_control_limits(std::span<const ChartSpec>(&spec, 1), config, target,
                                    threads)[0];
}

std::vector<RunLengthRow> run_length_experiment(std::span<const ChartSpec> specs,
                                                const SimConfig& config,
                                                std::span<const double> control_limits,
                                                int threads) {
    validate(config);
    if (specs.size() != control_limits.size())
        throw ConfigError("need exactly one control limit per chart");
    for (std::size_t s = 0; s < specs.size(); ++s) {
        validate_spec(specs[s]);
        if (!(control_limits[s] > 0.0)) throw ConfigError("control limits must be > 0");
    }

    const auto n = static_cast<std::size_t>(config.n_hospitals);
    std::vector<std::vector<double>> times(specs.size(), std::vector<double>(n, 0.0));
    std::vector<std::vector<char>> hit(specs.size(), std::vector<char>(n, 0));
    parallel_for(config.n_hospitals, threads, [&](int r) {
        const HospitalStream stream = generate_hospital(config, r);
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const auto detection =
                first_detection(stream, config.model, specs[s], control_limits[s]);
            const auto idx = static_cast<std::size_t>(r);
            hit[s][idx] = detection.has_value() ? 1 : 0;
            times[s][idx] = detection.value_or(config.horizon);
        }
    });

    std::vector<RunLengthRow> rows;
    rows.reserve(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        RunLengthRow row;
        row.chart = chart_label(specs[s]);
        row.h = control_limits[s];
        row.arl = stats::mean(times[s]);
        row.sd = times[s].size() > 1 ? stats::sample_sd(times[s]) : 0.0;
        row.mrl = stats::median(times[s]);
        for (char flag : hit[s]) flag ? ++row.detected : ++row.censored;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<PowerCurve> power_over_time(std::span<const ChartSpec> specs, const SimConfig& config,
                                        std::span<const double> control_limits,
                                        std::span<const double> grid, int threads) {
    validate(config);
    if (specs.size() != control_limits.size())
        throw ConfigError("need exactly one control limit per chart");
    if (grid.empty()) throw ConfigError("power grid is empty");
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (!(grid[g] > grid[g - 1])) throw ConfigError("power grid must be strictly increasing");

    const auto n = static_cast<std::size_t>(config.n_hospitals);
    std::vector<std::vector<double>> times(specs.size(),
                                           std::vector<double>(n, -1.0));  // -1: no detection
    parallel_for(config.n_hospitals, threads, [&](int r) {
        const HospitalStream stream = generate_hospital(config, r);
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const auto detection =
                first_detection(stream, config.model, specs[s], control_limits[s]);
            if (detection) times[s][static_cast<std::size_t>(r)] = *detection;
        }
    });

    std::vector<PowerCurve> curves;
    curves.reserve(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        PowerCurve curve;
        curve.chart = chart_label(specs[s]);
        curve.h = control_limits[s];
        curve.grid.assign(grid.begin(), grid.end());
        curve.power.reserve(grid.size());
        for (double g : grid) {
            long detected = 0;
            for (double t : times[s])
                if (t >= 0.0 && t <= g) ++detected;
            curve.power.push_back(static_cast<double>(detected) /
                                  static_cast<double>(config.n_hospitals));
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

}  // namespace survcusum
