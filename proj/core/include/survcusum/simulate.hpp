#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "survcusum/charts.hpp"
#include "survcusum/model.hpp"
#include "survcusum/rng.hpp"

namespace survcusum {

// Covariate generator for simulated patients: none (model without
// coefficients) or i.i.d. resampling with replacement from a pool.
struct NoCovariates {};

struct ResampleCovariates {
    std::vector<std::vector<double>> pool;
};

using CovariateSampler = std::variant<NoCovariates, ResampleCovariates>;

struct SimConfig {
    double psi = 1.0;        // Poisson arrival rate, patients per day
    double horizon = 365.0;  // observation window in days
    double theta = 0.0;      // true log hazard ratio of the generated data
    int n_hospitals = 1;
    RiskModel model;  // in-control model; charts are always built against it
    CovariateSampler covariates = NoCovariates{};
    std::uint64_t seed = 0;
};

void validate(const SimConfig& config);

// Inverse-transform sampling of a survival time: the generalized inverse of
// the cumulative hazard at -log(u) / multiplier. May be +infinity when the
// hazard is bounded.
double survival_time_from_uniform(double u, const BaselineHazard& baseline, double multiplier);
double sample_survival_time(Rng& rng, const BaselineHazard& baseline, double multiplier);

// One simulated hospital: Poisson arrivals on [0, horizon), risk-adjusted
// survival times scaled by e^theta, right-censoring at the horizon.
// Deterministic for a fixed (seed, replicate_index) pair.
HospitalStream generate_hospital(const SimConfig& config, int replicate_index);

struct TypeIErrorTarget {
    double alpha = 0.1;      // in (0, 1)
    double horizon = 365.0;  // days over which a false signal counts
};

struct InControlArlTarget {
    double target_days = 365.0;
};

using CalibrationTarget = std::variant<TypeIErrorTarget, InControlArlTarget>;

// Control limits from an in-control sample (config.theta must be 0). The
// type-I target takes the empirical (1 - alpha) quantile of per-hospital
// chart maxima with "higher" interpolation, so the realized training error
// never exceeds alpha; the in-control-ARL target bisects on h over the
// recorded trajectories (which do not depend on h) until the mean run
// length, censored runs imputed at the horizon, is within 1% of target.
std::vector<double> calibrate_control_limits(std::span<const ChartSpec> specs,
                                             const SimConfig& config,
                                             const CalibrationTarget& target, int threads = 0);
double calibrate_control_limit(const ChartSpec& spec, const SimConfig& config,
                               const CalibrationTarget& target, int threads = 0);

struct RunLengthRow {
    std::string chart;
    double h = 0.0;
    double arl = 0.0;  // mean detection time, censored runs imputed at horizon
    double sd = 0.0;
    double mrl = 0.0;  // median
    int detected = 0;
    int censored = 0;  // runs that never crossed h before the horizon
};

std::vector<RunLengthRow> run_length_experiment(std::span<const ChartSpec> specs,
                                                const SimConfig& config,
                                                std::span<const double> control_limits,
                                                int threads = 0);

struct PowerCurve {
    std::string chart;
    double h = 0.0;
    std::vector<double> grid;   // days
    std::vector<double> power;  // cumulative detection fraction, nondecreasing
};

std::vector<PowerCurve> power_over_time(std::span<const ChartSpec> specs, const SimConfig& config,
                                        std::span<const double> control_limits,
                                        std::span<const double> grid, int threads = 0);

}  // namespace survcusum
