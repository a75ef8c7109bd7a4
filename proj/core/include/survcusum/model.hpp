#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survcusum/errors.hpp"

namespace survcusum {

// All times in this library are in days. Entry times are offsets from study
// start; follow-up is measured from the subject's own entry.

// One subject under monitoring. followup is the time until failure when
// event is true, otherwise the censoring offset. Exactly one of
// {failure, censoring} terminates follow-up.
struct PatientRecord {
    std::string id;
    double entry_time = 0.0;  // S_i, days since study start, >= 0
    double followup = 0.0;    // days since entry, > 0
    bool event = false;       // failure observed
    std::vector<double> covariates;

    // Chronological time follow-up ends: the failure time when event is
    // true, the censoring time otherwise.
    double exit_time() const { return entry_time + followup; }

    void validate() const;
};

// Cumulative baseline hazard H with H(0) = 0, nondecreasing. The step
// variant stores cumulative values at breakpoints and interpolates linearly;
// evaluation beyond the last breakpoint extends the last segment's slope,
// since simulated follow-up can outrun the fitting window.
class BaselineHazard {
  public:
    enum class Kind { exponential, weibull, step_cumulative };

    static BaselineHazard exponential(double rate);
    static BaselineHazard weibull(double shape, double scale);
    static BaselineHazard step_cumulative(std::vector<double> breakpoints,
                                          std::vector<double> cumulative);

    Kind kind() const { return kind_; }

    // H(x). Exact for the parametric variants, piecewise linear for steps.
    double cumulative(double x) const;

    // Smallest x with H(x) >= y (generalized inverse); +infinity when the
    // hazard never accumulates that far (flat tail).
    double inverse_cumulative(double y) const;

    double rate() const { return param_a_; }
    double shape() const { return param_a_; }
    double scale() const { return param_b_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& cumulative_values() const { return cumulative_; }

  private:
    BaselineHazard() = default;

    Kind kind_ = Kind::exponential;
    double param_a_ = 0.0;  // rate (exponential) or shape (weibull)
    double param_b_ = 0.0;  // scale (weibull)
    std::vector<double> breakpoints_;
    std::vector<double> cumulative_;
    double tail_slope_ = 0.0;
};

// Cox risk adjustment: subject hazard is h0(x) * exp(z . beta).
struct RiskModel {
    std::vector<double> beta;
    BaselineHazard baseline = BaselineHazard::exponential(1.0);

    double relative_risk(std::span<const double> z) const;
};

// Records of one hospital sorted by entry time (ties broken by id, which
// makes the subject index deterministic; the change-point maximization in
// the CGR chart is defined over this order). horizon is the end of the
// observation window in days.
class HospitalStream {
  public:
    HospitalStream(std::vector<PatientRecord> records, double horizon);

    const std::vector<PatientRecord>& records() const { return records_; }
    double horizon() const { return horizon_; }
    std::size_t covariate_dim() const { return covariate_dim_; }

  private:
    std::vector<PatientRecord> records_;
    double horizon_ = 0.0;
    std::size_t covariate_dim_ = 0;
};

// Snapshot of the counting process at time t: observed failures N(t), total
// cumulative intensity Lambda(t), and the per-subject intensities in stream
// order (frozen at exit for subjects no longer at risk).
struct CountingState {
    double t = 0.0;
    long failures = 0;
    double total_intensity = 0.0;
    std::vector<double> subject_intensity;
};

// H(x) for x >= 0; negative x is a domain error.
double cumulative_hazard(const BaselineHazard& baseline, double x);

// Lambda_i(t) = exp(z.beta) * H(min(t, exit) - entry), zero before entry and
// frozen at the exit value afterwards.
double subject_cum_intensity(const PatientRecord& rec, const RiskModel& model, double t);

CountingState counting_state(const HospitalStream& stream, const RiskModel& model, double t);

// theta_hat = max(0, log(N / Lambda)), optionally capped at log_cap. With
// failures but zero intensity the MLE is undefined: the cap is returned when
// present, otherwise UndefinedMleError is thrown (keeps chart values finite
// and surfaces degenerate inputs).
double mle_theta(double n_failures, double total_intensity,
                 std::optional<double> log_cap = std::nullopt);

}  // namespace survcusum
