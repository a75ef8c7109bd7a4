#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "survcusum/model.hpp"

namespace survcusum {

// Chart variants. theta1 parameters are log hazard ratios; caps bound the
// estimated log hazard ratio from above (e.g. log 6).
struct CgiSpec {
    std::optional<double> log_hr_cap;
};

struct CgrSpec {
    std::optional<double> log_hr_cap;
};

struct BkSpec {
    double theta1 = 0.0;  // > 0, log of the anticipated hazard ratio
};

struct BernoulliSpec {
    double theta1 = 0.0;   // > 0, log odds multiplier of the alternative
    double window = 365.0; // days after entry in which a failure counts
};

struct FunnelSpec {
    double confidence = 0.95;  // in (0, 1)
    double period = 365.0;     // reporting interval in days
    double window = 365.0;     // outcome window in days
    bool exact_binomial = false;
};

using ChartSpec = std::variant<CgiSpec, CgrSpec, BkSpec, BernoulliSpec, FunnelSpec>;

void validate_spec(const ChartSpec& spec);
std::string chart_label(const ChartSpec& spec);

struct ChartPoint {
    double time = 0.0;
    double value = 0.0;
};

struct ChartSeries {
    ChartSpec spec;
    std::vector<ChartPoint> points;  // strictly increasing times

    std::optional<double> detection_time(double h) const;
};

// Full trajectories, evaluated at entry times, failure times and the horizon
// (outcome times for the Bernoulli chart). Detection only needs the failure
// times, but entry points are kept for plotting fidelity.
ChartSeries compute_cgi(const HospitalStream& stream, const RiskModel& model,
                        const CgiSpec& spec = {});
ChartSeries compute_cgr(const HospitalStream& stream, const RiskModel& model,
                        const CgrSpec& spec = {});
ChartSeries compute_bk(const HospitalStream& stream, const RiskModel& model, const BkSpec& spec);
ChartSeries compute_bernoulli(const HospitalStream& stream, const RiskModel& model,
                              const BernoulliSpec& spec);

// Brute-force sweep of the preliminary chart G(t): maximizes the likelihood
// ratio over every (change time, theta-grid value) pair from first
// principles. Quadratic cost, guarded to small instances; exists as an
// equivalence oracle for compute_bk and is not meant for monitoring.
ChartSeries compute_g_oracle(const HospitalStream& stream, const RiskModel& model,
                             std::span<const double> theta_grid);

// Chart value at an arbitrary time (between jumps included).
double chart_value_at(const HospitalStream& stream, const RiskModel& model,
                      const ChartSpec& spec, double t);

// First time the series reaches h, if any. monthly rounds the detection time
// up to the next 30-day block.
std::optional<double> detection_time(const ChartSeries& series, double h, bool monthly = false);

// Running-maximum curve of a chart over one stream, recorded at the jump
// times. Because CUSUM values only increase at failures (outcomes for the
// Bernoulli chart), this is enough to recover the detection time for any
// control limit, so calibration can reuse trajectories across h values.
class DetectionRecord {
  public:
    DetectionRecord() = default;
    explicit DetectionRecord(std::vector<ChartPoint> records) : records_(std::move(records)) {}

    // Earliest time the chart reaches h.
    std::optional<double> first_crossing(double h) const;

    // Largest chart value over evaluation times <= up_to (0 when none).
    double max_value(double up_to) const;

    const std::vector<ChartPoint>& records() const { return records_; }

  private:
    std::vector<ChartPoint> records_;  // strictly increasing in time and value
};

DetectionRecord detection_record(const HospitalStream& stream, const RiskModel& model,
                                 const ChartSpec& spec);

// Detection time against a fixed limit with an early-stopped sweep.
std::optional<double> first_detection(const HospitalStream& stream, const RiskModel& model,
                                      const ChartSpec& spec, double h);

struct FunnelRow {
    std::string hospital_id;
    double period_end = 0.0;
    long n = 0;              // patients with a completed outcome window
    double observed = 0.0;   // failure proportion within the window
    double expected = 0.0;   // risk-adjusted expected proportion
    double upper = 0.0;
    double lower = 0.0;
    bool out_of_control = false;
};

// Cross-sectional funnel comparison at each period end, cumulative over all
// patients whose outcome window has completed by then. Hospitals with no
// completed outcomes at a period end are skipped.
std::vector<FunnelRow> funnel_points(
    const std::vector<std::pair<std::string, HospitalStream>>& hospitals, const RiskModel& model,
    const FunnelSpec& spec);

}  // namespace survcusum
