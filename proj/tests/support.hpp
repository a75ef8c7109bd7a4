#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// recompute chart values from counting_state snapshots and stay clear of the
// sweep engine they are checking.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "survcusum/charts.hpp"
#include "survcusum/model.hpp"
#include "survcusum/rng.hpp"
#include "survcusum/simulate.hpp"

namespace testsupport {

using namespace survcusum;

inline PatientRecord patient(std::string id, double entry, double followup, bool event,
                             std::vector<double> z = {}) {
    PatientRecord rec;
    rec.id = std::move(id);
    rec.entry_time = entry;
    rec.followup = followup;
    rec.event = event;
    rec.covariates = std::move(z);
    return rec;
}

inline RiskModel unit_exponential_model(double rate) {
    return RiskModel{{}, BaselineHazard::exponential(rate)};
}

// Likelihood-ratio statistic from raw (N, Lambda), capped or not.
inline double lr_statistic(double n, double lambda, std::optional<double> cap) {
    if (n <= 0.0) return 0.0;
    if (lambda <= 0.0) {
        if (!cap) throw UndefinedMleError("oracle: undefined mle");
        return *cap * n;
    }
    double theta = std::log(n / lambda);
    if (theta < 0.0) theta = 0.0;
    if (cap && theta > *cap) theta = *cap;
    return theta * n - (std::exp(theta) - 1.0) * lambda;
}

inline double failures_at(const HospitalStream& stream, double tau) {
    double d = 0.0;
    for (const auto& rec : stream.records())
        if (rec.event && rec.exit_time() == tau) d += 1.0;
    return d;
}

inline std::vector<double> failure_times(const HospitalStream& stream, double up_to) {
    std::vector<double> times;
    for (const auto& rec : stream.records())
        if (rec.event && rec.exit_time() <= up_to) times.push_back(rec.exit_time());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

// CGI at time t straight from the counting process.
inline double brute_cgi(const HospitalStream& stream, const RiskModel& model,
                        std::optional<double> cap, double t) {
    const CountingState state = counting_state(stream, model, t);
    return lr_statistic(static_cast<double>(state.failures), state.total_intensity, cap);
}

// CGR at time t by enumerating every change-onset subject index.
inline double brute_cgr(const HospitalStream& stream, const RiskModel& model,
                        std::optional<double> cap, double t) {
    const CountingState state = counting_state(stream, model, t);
    const auto& records = stream.records();
    double best = 0.0;
    for (std::size_t nu = 0; nu < records.size(); ++nu) {
        double n = 0.0;
        double lambda = 0.0;
        for (std::size_t i = nu; i < records.size(); ++i) {
            lambda += state.subject_intensity[i];
            if (records[i].event && records[i].exit_time() <= t) n += 1.0;
        }
        best = std::max(best, lr_statistic(n, lambda, cap));
    }
    return best;
}

// BK at time t by maximizing over every change-time breakpoint, including
// the left limits just before failure jumps.
inline double brute_bk(const HospitalStream& stream, const RiskModel& model, double theta1,
                       double t) {
    const CountingState now = counting_state(stream, model, t);
    const double c1 = std::exp(theta1) - 1.0;
    std::vector<std::pair<double, double>> anchors{{0.0, 0.0}};
    for (double tau : failure_times(stream, t)) {
        const CountingState at = counting_state(stream, model, tau);
        const double d = failures_at(stream, tau);
        anchors.emplace_back(static_cast<double>(at.failures) - d, at.total_intensity);
        anchors.emplace_back(static_cast<double>(at.failures), at.total_intensity);
    }
    double best = 0.0;  // the s = t anchor
    for (const auto& [n_s, lambda_s] : anchors) {
        const double value = theta1 * (static_cast<double>(now.failures) - n_s) -
                             c1 * (now.total_intensity - lambda_s);
        best = std::max(best, value);
    }
    return best;
}

// Small random monitoring instance for property tests.
inline HospitalStream random_stream(std::uint64_t seed, double psi, double horizon,
                                    double rate, double theta) {
    SimConfig config;
    config.psi = psi;
    config.horizon = horizon;
    config.theta = theta;
    config.n_hospitals = 1;
    config.model = unit_exponential_model(rate);
    config.seed = seed;
    return generate_hospital(config, 0);
}

// Synthetic register-like setting: a step-cumulative baseline with an early
// failure ramp (about 0.4% in the first month, 1.7% at one year, 2.4% at six
// years) and a modest covariate mix resampled from a fixed pool.
struct RegisterFixture {
    RiskModel model;
    std::vector<std::vector<double>> pool;

    SimConfig config(double psi, double horizon, double theta, int hospitals,
                     std::uint64_t seed) const {
        SimConfig config;
        config.psi = psi;
        config.horizon = horizon;
        config.theta = theta;
        config.n_hospitals = hospitals;
        config.model = model;
        config.covariates = ResampleCovariates{pool};
        config.seed = seed;
        return config;
    }
};

inline const RegisterFixture& register_fixture() {
    static const RegisterFixture fixture = [] {
        RegisterFixture f;
        f.model.baseline = BaselineHazard::step_cumulative({30.0, 365.0, 2190.0},
                                                           {0.004, 0.0171, 0.0243});
        f.model.beta = {0.25, 0.20, 0.35};
        Rng rng(20140101);
        f.pool.reserve(2000);
        for (int i = 0; i < 2000; ++i) {
            const double age = rng.normal();
            const double male = rng.uniform01() < 0.35 ? 1.0 : 0.0;
            const double diagnosis = rng.uniform01() < 0.13 ? 1.0 : 0.0;
            f.pool.push_back({age, male, diagnosis});
        }
        return f;
    }();
    return fixture;
}

}  // namespace testsupport
