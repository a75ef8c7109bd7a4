#include "survcusum/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace survcusum {

void PatientRecord::validate() const {
    if (!(entry_time >= 0.0) || !std::isfinite(entry_time))
        throw ConfigError("patient " + id + ": entry_time must be finite and >= 0");
    if (!(followup > 0.0) || !std::isfinite(followup))
        throw ConfigError("patient " + id + ": followup must be finite and > 0");
    for (double z : covariates)
        if (!std::isfinite(z)) throw ConfigError("patient " + id + ": non-finite covariate");
}

BaselineHazard BaselineHazard::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw ConfigError("exponential baseline needs rate > 0");
    BaselineHazard h;
    h.kind_ = Kind::exponential;
    h.param_a_ = rate;
    return h;
}

BaselineHazard BaselineHazard::weibull(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ConfigError("weibull baseline needs shape > 0 and scale > 0");
    BaselineHazard h;
    h.kind_ = Kind::weibull;
    h.param_a_ = shape;
    h.param_b_ = scale;
    return h;
}

BaselineHazard BaselineHazard::step_cumulative(std::vector<double> breakpoints,
                                               std::vector<double> cumulative) {
    if (breakpoints.empty() || breakpoints.size() != cumulative.size())
        throw ConfigError("step baseline needs matching nonempty breakpoints and values");
    double prev_x = 0.0;
    double prev_h = 0.0;
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > prev_x) || !std::isfinite(breakpoints[i]))
            throw ConfigError("step baseline breakpoints must be strictly increasing and > 0");
        if (cumulative[i] < prev_h || !std::isfinite(cumulative[i]))
            throw ConfigError("step baseline cumulative values must be nondecreasing");
        prev_x = breakpoints[i];
        prev_h = cumulative[i];
    }
    BaselineHazard h;
    h.kind_ = Kind::step_cumulative;
    h.breakpoints_ = std::move(breakpoints);
    h.cumulative_ = std::move(cumulative);
    const std::size_t k = h.breakpoints_.size();
    const double x0 = k >= 2 ? h.breakpoints_[k - 2] : 0.0;
    const double h0 = k >= 2 ? h.cumulative_[k - 2] : 0.0;
    h.tail_slope_ = (h.cumulative_[k - 1] - h0) / (h.breakpoints_[k - 1] - x0);
    return h;
}

double BaselineHazard::cumulative(double x) const {
    if (x < 0.0) throw ConfigError("cumulative hazard evaluated at negative time");
    if (x == 0.0) return 0.0;
    switch (kind_) {
        case Kind::exponential:
            return param_a_ * x;
        case Kind::weibull:
            return std::pow(x / param_b_, param_a_);
        case Kind::step_cumulative: {
            if (x >= breakpoints_.back())
                return cumulative_.back() + tail_slope_ * (x - breakpoints_.back());
            const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
            const auto i = static_cast<std::size_t>(it - breakpoints_.begin());
            const double x0 = i == 0 ? 0.0 : breakpoints_[i - 1];
            const double h0 = i == 0 ? 0.0 : cumulative_[i - 1];
            const double frac = (x - x0) / (breakpoints_[i] - x0);
            return h0 + frac * (cumulative_[i] - h0);
        }
    }
    return 0.0;
}

double BaselineHazard::inverse_cumulative(double y) const {
    if (y < 0.0) throw ConfigError("inverse cumulative hazard needs y >= 0");
    if (y == 0.0) return 0.0;
    switch (kind_) {
        case Kind::exponential:
            return y / param_a_;
        case Kind::weibull:
            return param_b_ * std::pow(y, 1.0 / param_a_);
        case Kind::step_cumulative: {
            if (y > cumulative_.back()) {
                if (tail_slope_ <= 0.0) return std::numeric_limits<double>::infinity();
                return breakpoints_.back() + (y - cumulative_.back()) / tail_slope_;
            }
            // First segment whose upper value reaches y; flat segments are
            // skipped so this is the generalized (left-continuous) inverse.
            const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), y);
            const auto i = static_cast<std::size_t>(it - cumulative_.begin());
            const double x0 = i == 0 ? 0.0 : breakpoints_[i - 1];
            const double h0 = i == 0 ? 0.0 : cumulative_[i - 1];
            if (cumulative_[i] == h0) return x0;
            const double frac = (y - h0) / (cumulative_[i] - h0);
            return x0 + frac * (breakpoints_[i] - x0);
        }
    }
    return 0.0;
}

double RiskModel::relative_risk(std::span<const double> z) const {
    if (z.size() != beta.size())
        throw ConfigError("covariate vector length does not match model coefficients");
    double dot = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) dot += z[i] * beta[i];
    return std::exp(dot);
}

HospitalStream::HospitalStream(std::vector<PatientRecord> records, double horizon)
    : records_(std::move(records)), horizon_(horizon) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw ConfigError("stream horizon must be finite and > 0");
    for (const auto& rec : records_) rec.validate();
    if (!records_.empty()) {
        covariate_dim_ = records_.front().covariates.size();
        for (const auto& rec : records_)
            if (rec.covariates.size() != covariate_dim_)
                throw ConfigError("patient " + rec.id + ": covariate length differs within stream");
    }
    std::stable_sort(records_.begin(), records_.end(),
                     [](const PatientRecord& a, const PatientRecord& b) {
                         if (a.entry_time != b.entry_time) return a.entry_time < b.entry_time;
                         return a.id < b.id;
                     });
}

double cumulative_hazard(const BaselineHazard& baseline, double x) {
    return baseline.cumulative(x);
}

double subject_cum_intensity(const PatientRecord& rec, const RiskModel& model, double t) {
    if (t < 0.0) throw ConfigError("subject_cum_intensity needs t >= 0");
    if (t <= rec.entry_time) return 0.0;
    const double exposure = std::min(t, rec.exit_time()) - rec.entry_time;
    return model.relative_risk(rec.covariates) * model.baseline.cumulative(exposure);
}

CountingState counting_state(const HospitalStream& stream, const RiskModel& model, double t) {
    if (t < 0.0) throw ConfigError("counting_state needs t >= 0");
    CountingState state;
    state.t = t;
    state.subject_intensity.reserve(stream.records().size());
    for (const auto& rec : stream.records()) {
        const double li = subject_cum_intensity(rec, model, t);
        state.subject_intensity.push_back(li);
        state.total_intensity += li;
        if (rec.event && rec.exit_time() <= t) ++state.failures;
    }
    return state;
}

double mle_theta(double n_failures, double total_intensity, std::optional<double> log_cap) {
    if (total_intensity < 0.0) throw ConfigError("mle_theta needs Lambda >= 0");
    if (n_failures <= 0.0) return 0.0;
    if (total_intensity == 0.0) {
        if (log_cap) return *log_cap;
        throw UndefinedMleError("failures observed with zero cumulative intensity and no cap");
    }
    double theta = std::log(n_failures / total_intensity);
    if (theta < 0.0) theta = 0.0;
    if (log_cap && theta > *log_cap) theta = *log_cap;
    return theta;
}

}  // namespace survcusum
