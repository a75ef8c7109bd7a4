#include "survcusum/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "survcusum/stats.hpp"

namespace survcusum {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class CusumKind { cgi, cgr, bk };

// Event sweep shared by the continuous-time charts. Subjects are processed
// in chronological order; at equal timestamps entries are applied before
// exits. State after advance(t) reflects every event with time <= t.
class CusumSweep {
  public:
    CusumSweep(const HospitalStream& stream, const RiskModel& model, CusumKind kind,
               std::optional<double> cap, double theta1)
        : baseline_(&model.baseline), horizon_(stream.horizon()), kind_(kind), cap_(cap),
          theta1_(theta1), bk_coeff_(std::exp(theta1) - 1.0) {
        const auto& recs = stream.records();
        n_ = recs.size();
        entries_.reserve(n_);
        exits_.reserve(n_);
        risks_.reserve(n_);
        is_failure_.reserve(n_);
        for (const auto& rec : recs) {
            entries_.push_back(rec.entry_time);
            exits_.push_back(rec.exit_time());
            risks_.push_back(model.relative_risk(rec.covariates));
            is_failure_.push_back(rec.event);
        }
        exit_order_.resize(n_);
        std::iota(exit_order_.begin(), exit_order_.end(), std::size_t{0});
        std::sort(exit_order_.begin(), exit_order_.end(), [this](std::size_t a, std::size_t b) {
            if (exits_[a] != exits_[b]) return exits_[a] < exits_[b];
            return a < b;
        });
        exponential_ = baseline_->kind() == BaselineHazard::Kind::exponential;
        if (exponential_) rate_ = baseline_->rate();
        frozen_value_.assign(n_, 0.0);
        active_pos_.assign(n_, npos());
        if (kind_ == CusumKind::cgr) prefix_.resize(n_ + 1);
    }

    double value_at(double t) {
        advance(t);
        return evaluate(t);
    }

    // Distinct failure times within the horizon, ascending.
    std::vector<double> failure_times() const {
        std::vector<double> times;
        for (std::size_t i = 0; i < n_; ++i)
            if (is_failure_[i] && exits_[i] <= horizon_) times.push_back(exits_[i]);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        return times;
    }

    std::vector<double> evaluation_times(bool include_entries) const {
        std::vector<double> times = failure_times();
        if (include_entries)
            for (std::size_t i = 0; i < n_; ++i)
                if (entries_[i] <= horizon_) times.push_back(entries_[i]);
        times.push_back(horizon_);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        return times;
    }

  private:
    static std::size_t npos() { return static_cast<std::size_t>(-1); }

    void advance(double t) {
        for (;;) {
            const double next_entry = entry_cursor_ < n_ ? entries_[entry_cursor_] : kInfinity;
            const double next_exit =
                exit_cursor_ < n_ ? exits_[exit_order_[exit_cursor_]] : kInfinity;
            const double next = std::min(next_entry, next_exit);
            if (next > t) break;
            if (next_entry <= next_exit) {
                enter(entry_cursor_++);
            } else {
                process_exit_group(next_exit);
            }
        }
    }

    void enter(std::size_t i) {
        if (exponential_) {
            active_u_ += risks_[i];
            active_us_ += risks_[i] * entries_[i];
        } else {
            active_pos_[i] = active_.size();
            active_.push_back(i);
        }
        ++entered_;
    }

    void process_exit_group(double te) {
        // The running minimum of U feeds the reflected BK statistic; minima
        // occur at the left limits just before failure jumps, so take them
        // before the group's failures are counted.
        if (kind_ == CusumKind::bk) {
            bool any_failure = false;
            for (std::size_t j = exit_cursor_; j < n_ && exits_[exit_order_[j]] == te; ++j)
                if (is_failure_[exit_order_[j]]) {
                    any_failure = true;
                    break;
                }
            if (any_failure) {
                const double u_left =
                    theta1_ * static_cast<double>(failures_) - bk_coeff_ * lambda_total(te);
                run_min_ = std::min(run_min_, u_left);
            }
        }
        while (exit_cursor_ < n_ && exits_[exit_order_[exit_cursor_]] == te) {
            const std::size_t i = exit_order_[exit_cursor_++];
            const double value =
                risks_[i] * baseline_->cumulative(exits_[i] - entries_[i]);
            frozen_value_[i] = value;
            frozen_total_ += value;
            if (exponential_) {
                active_u_ -= risks_[i];
                active_us_ -= risks_[i] * entries_[i];
            } else {
                const std::size_t pos = active_pos_[i];
                active_pos_[active_.back()] = pos;
                std::swap(active_[pos], active_.back());
                active_.pop_back();
                active_pos_[i] = npos();
            }
            if (is_failure_[i]) {
                ++failures_;
                if (kind_ == CusumKind::cgr) insert_failed(i);
            }
        }
    }

    void insert_failed(std::size_t i) {
        const auto it = std::lower_bound(failed_.begin(), failed_.end(), i);
        failed_.insert(it, i);
    }

    double lambda_total(double t) const {
        if (exponential_) return frozen_total_ + rate_ * (t * active_u_ - active_us_);
        double lam = frozen_total_;
        for (std::size_t i : active_) lam += risks_[i] * baseline_->cumulative(t - entries_[i]);
        return lam;
    }

    double evaluate(double t) {
        switch (kind_) {
            case CusumKind::cgi: {
                const double lam = lambda_total(t);
                const double theta = mle_theta(static_cast<double>(failures_), lam, cap_);
                if (theta == 0.0) return 0.0;
                return theta * static_cast<double>(failures_) - std::expm1(theta) * lam;
            }
            case CusumKind::bk: {
                const double u =
                    theta1_ * static_cast<double>(failures_) - bk_coeff_ * lambda_total(t);
                return std::max(0.0, u - run_min_);
            }
            case CusumKind::cgr:
                return evaluate_cgr(t);
        }
        return 0.0;
    }

    // Maximum of the likelihood-ratio statistic over the change-onset subject
    // index. Only suffixes that start at a failed subject can attain the
    // maximum: within a run of non-failed subjects the failure count is
    // constant while the suffix intensity shrinks, so the run's end dominates.
    double evaluate_cgr(double t) {
        prefix_[0] = 0.0;
        for (std::size_t i = 0; i < entered_; ++i) {
            // Exits <= t are already processed, so their frozen value is set.
            const double li = exits_[i] <= t
                                  ? frozen_value_[i]
                                  : risks_[i] * baseline_->cumulative(t - entries_[i]);
            prefix_[i + 1] = prefix_[i] + li;
        }
        const double total = prefix_[entered_];
        double best = 0.0;
        double count = 0.0;
        for (std::size_t r = failed_.size(); r-- > 0;) {
            const std::size_t k = failed_[r];
            count += 1.0;
            const double suffix = total - prefix_[k];
            if (suffix <= 0.0) {
                if (!cap_)
                    throw UndefinedMleError(
                        "suffix with failures has zero cumulative intensity and no cap");
                best = std::max(best, *cap_ * count);
                continue;
            }
            if (count <= suffix) continue;
            const double excess = count - suffix;
            // x log x - x + 1 <= (x - 1)^2 / 2 for x >= 1 bounds the statistic
            // by excess^2 / (2 suffix); skip candidates that cannot win.
            if (excess * excess / (2.0 * suffix) <= best) continue;
            const double log_ratio = std::log(count / suffix);
            double g;
            if (cap_ && log_ratio > *cap_)
                g = *cap_ * count - std::expm1(*cap_) * suffix;
            else
                g = count * log_ratio - excess;
            if (g > best) best = g;
        }
        return best;
    }

    const BaselineHazard* baseline_;
    double horizon_;
    CusumKind kind_;
    std::optional<double> cap_;
    double theta1_;
    double bk_coeff_;

    std::size_t n_ = 0;
    std::vector<double> entries_;
    std::vector<double> exits_;
    std::vector<double> risks_;
    std::vector<char> is_failure_;
    std::vector<std::size_t> exit_order_;

    bool exponential_ = false;
    double rate_ = 0.0;

    std::size_t entry_cursor_ = 0;
    std::size_t exit_cursor_ = 0;
    std::size_t entered_ = 0;
    long failures_ = 0;
    double frozen_total_ = 0.0;
    double active_u_ = 0.0;
    double active_us_ = 0.0;
    std::vector<std::size_t> active_;
    std::vector<std::size_t> active_pos_;
    std::vector<double> frozen_value_;
    std::vector<std::size_t> failed_;
    std::vector<double> prefix_;
    double run_min_ = 0.0;
};

struct WindowOutcome {
    double time = 0.0;  // when the outcome materializes
    bool failed = false;
    double probability = 0.0;  // risk-adjusted failure probability in the window
};

// Binary window outcomes: failure within `window` days of entry, known at
// min(failure time, entry + window). Subjects censored inside the window
// never materialize an outcome and are skipped.
std::vector<WindowOutcome> window_outcomes(const HospitalStream& stream, const RiskModel& model,
                                           double window, bool reject_degenerate) {
    const double hazard_window = model.baseline.cumulative(window);
    std::vector<WindowOutcome> outcomes;
    outcomes.reserve(stream.records().size());
    for (const auto& rec : stream.records()) {
        WindowOutcome out;
        if (rec.event && rec.followup <= window) {
            out.failed = true;
            out.time = rec.exit_time();
        } else if (rec.followup >= window) {
            out.failed = false;
            out.time = rec.entry_time + window;
        } else {
            continue;
        }
        if (out.time > stream.horizon()) continue;
        const double p = -std::expm1(-model.relative_risk(rec.covariates) * hazard_window);
        if (reject_degenerate && (p <= 0.0 || p >= 1.0))
            throw DegenerateProbabilityError("window failure probability is exactly 0 or 1");
        out.probability = p;
        outcomes.push_back(out);
    }
    std::stable_sort(outcomes.begin(), outcomes.end(),
                     [](const WindowOutcome& a, const WindowOutcome& b) { return a.time < b.time; });
    return outcomes;
}

double bernoulli_weight(const BernoulliSpec& spec, const WindowOutcome& out) {
    const double denom = 1.0 + out.probability * std::expm1(spec.theta1);
    const double w = -std::log(denom);
    return out.failed ? w + spec.theta1 : w;
}

template <typename Visit>
void sweep_bernoulli(const HospitalStream& stream, const RiskModel& model,
                     const BernoulliSpec& spec, Visit&& visit) {
    const auto outcomes = window_outcomes(stream, model, spec.window, true);
    double value = 0.0;
    for (std::size_t i = 0; i < outcomes.size();) {
        const double t = outcomes[i].time;
        while (i < outcomes.size() && outcomes[i].time == t) {
            value = std::max(0.0, value + bernoulli_weight(spec, outcomes[i]));
            ++i;
        }
        if (!visit(t, value)) return;
    }
}

ChartSeries make_series(ChartSpec spec, CusumSweep& sweep, bool include_entries) {
    ChartSeries series{std::move(spec), {}};
    const auto times = sweep.evaluation_times(include_entries);
    series.points.reserve(times.size());
    for (double t : times) series.points.push_back({t, sweep.value_at(t)});
    return series;
}

}  // namespace

void validate_spec(const ChartSpec& spec) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CgiSpec> || std::is_same_v<T, CgrSpec>) {
                if (s.log_hr_cap && !(*s.log_hr_cap > 0.0))
                    throw ConfigError("hazard-ratio cap must exceed 1");
            } else if constexpr (std::is_same_v<T, BkSpec>) {
                if (!(s.theta1 > 0.0)) throw ConfigError("bk chart needs theta1 > 0");
            } else if constexpr (std::is_same_v<T, BernoulliSpec>) {
                if (!(s.theta1 > 0.0)) throw ConfigError("bernoulli chart needs theta1 > 0");
                if (!(s.window > 0.0)) throw ConfigError("bernoulli chart needs window > 0");
            } else if constexpr (std::is_same_v<T, FunnelSpec>) {
                if (!(s.confidence > 0.0 && s.confidence < 1.0))
                    throw ConfigError("funnel confidence must lie in (0, 1)");
                if (!(s.period > 0.0)) throw ConfigError("funnel period must be > 0");
                if (!(s.window > 0.0)) throw ConfigError("funnel window must be > 0");
            }
        },
        spec);
}

std::string chart_label(const ChartSpec& spec) {
    char buf[96];
    return std::visit(
        [&buf](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CgiSpec>) {
                if (!s.log_hr_cap) return "cgi";
                std::snprintf(buf, sizeof(buf), "cgi cap=%g", std::exp(*s.log_hr_cap));
                return buf;
            } else if constexpr (std::is_same_v<T, CgrSpec>) {
                if (!s.log_hr_cap) return "cgr";
                std::snprintf(buf, sizeof(buf), "cgr cap=%g", std::exp(*s.log_hr_cap));
                return buf;
            } else if constexpr (std::is_same_v<T, BkSpec>) {
                std::snprintf(buf, sizeof(buf), "bk hr1=%g", std::exp(s.theta1));
                return buf;
            } else if constexpr (std::is_same_v<T, BernoulliSpec>) {
                std::snprintf(buf, sizeof(buf), "bernoulli hr1=%g window=%g", std::exp(s.theta1),
                              s.window);
                return buf;
            } else {
                std::snprintf(buf, sizeof(buf), "funnel conf=%g period=%g", s.confidence,
                              s.period);
                return buf;
            }
        },
        spec);
}

std::optional<double> ChartSeries::detection_time(double h) const {
    return survcusum::detection_time(*this, h, false);
}

ChartSeries compute_cgi(const HospitalStream& stream, const RiskModel& model,
                        const CgiSpec& spec) {
    validate_spec(spec);
    CusumSweep sweep(stream, model, CusumKind::cgi, spec.log_hr_cap, 0.0);
    return make_series(spec, sweep, true);
}

ChartSeries compute_cgr(const HospitalStream& stream, const RiskModel& model,
                        const CgrSpec& spec) {
    validate_spec(spec);
    CusumSweep sweep(stream, model, CusumKind::cgr, spec.log_hr_cap, 0.0);
    return make_series(spec, sweep, true);
}

ChartSeries compute_bk(const HospitalStream& stream, const RiskModel& model, const BkSpec& spec) {
    validate_spec(spec);
    CusumSweep sweep(stream, model, CusumKind::bk, std::nullopt, spec.theta1);
    return make_series(spec, sweep, true);
}

ChartSeries compute_bernoulli(const HospitalStream& stream, const RiskModel& model,
                              const BernoulliSpec& spec) {
    validate_spec(spec);
    ChartSeries series{spec, {}};
    sweep_bernoulli(stream, model, spec, [&series](double t, double value) {
        series.points.push_back({t, value});
        return true;
    });
    if (series.points.empty() || series.points.back().time < stream.horizon())
        series.points.push_back(
            {stream.horizon(), series.points.empty() ? 0.0 : series.points.back().value});
    return series;
}

ChartSeries compute_g_oracle(const HospitalStream& stream, const RiskModel& model,
                             std::span<const double> theta_grid) {
    if (stream.records().size() > 50)
        throw ConfigError("g oracle is limited to instances with at most 50 subjects");
    if (theta_grid.empty()) throw ConfigError("g oracle needs a nonempty theta grid");

    // Change-time candidates: study start plus, for every failure time, the
    // state just before and just after the jump. Built from counting_state so
    // the oracle stays independent of the sweep engine it checks.
    std::vector<double> failure_times;
    for (const auto& rec : stream.records())
        if (rec.event && rec.exit_time() <= stream.horizon())
            failure_times.push_back(rec.exit_time());
    std::sort(failure_times.begin(), failure_times.end());
    failure_times.erase(std::unique(failure_times.begin(), failure_times.end()),
                        failure_times.end());

    std::vector<std::pair<double, double>> candidates;  // (N(s), Lambda(s))
    candidates.emplace_back(0.0, 0.0);
    for (double tau : failure_times) {
        const CountingState at = counting_state(stream, model, tau);
        long jump = 0;
        for (const auto& rec : stream.records())
            if (rec.event && rec.exit_time() == tau) ++jump;
        candidates.emplace_back(static_cast<double>(at.failures - jump), at.total_intensity);
        candidates.emplace_back(static_cast<double>(at.failures), at.total_intensity);
    }

    std::vector<double> times = failure_times;
    for (const auto& rec : stream.records())
        if (rec.entry_time <= stream.horizon()) times.push_back(rec.entry_time);
    times.push_back(stream.horizon());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    ChartSeries series{CgrSpec{}, {}};
    std::size_t usable = 1;  // candidates with s <= t (two per failure time passed)
    std::size_t next_failure = 0;
    for (double t : times) {
        const CountingState at = counting_state(stream, model, t);
        while (next_failure < failure_times.size() && failure_times[next_failure] <= t) {
            ++next_failure;
            usable += 2;
        }
        double best = 0.0;
        for (std::size_t c = 0; c < usable; ++c) {
            const double dn = static_cast<double>(at.failures) - candidates[c].first;
            const double dl = at.total_intensity - candidates[c].second;
            for (double theta : theta_grid) {
                const double g = theta * dn - std::expm1(theta) * dl;
                if (g > best) best = g;
            }
        }
        series.points.push_back({t, best});
    }
    return series;
}

double chart_value_at(const HospitalStream& stream, const RiskModel& model, const ChartSpec& spec,
                      double t) {
    validate_spec(spec);
    if (t < 0.0) throw ConfigError("chart_value_at needs t >= 0");
    if (std::holds_alternative<FunnelSpec>(spec))
        throw ConfigError("funnel comparisons have no chart value; use funnel_points");
    if (const auto* bern = std::get_if<BernoulliSpec>(&spec)) {
        double value = 0.0;
        sweep_bernoulli(stream, model, *bern, [&value, t](double time, double v) {
            if (time > t) return false;
            value = v;
            return true;
        });
        return value;
    }
    if (const auto* cgi = std::get_if<CgiSpec>(&spec)) {
        CusumSweep sweep(stream, model, CusumKind::cgi, cgi->log_hr_cap, 0.0);
        return sweep.value_at(t);
    }
    if (const auto* cgr = std::get_if<CgrSpec>(&spec)) {
        CusumSweep sweep(stream, model, CusumKind::cgr, cgr->log_hr_cap, 0.0);
        return sweep.value_at(t);
    }
    const auto& bk = std::get<BkSpec>(spec);
    CusumSweep sweep(stream, model, CusumKind::bk, std::nullopt, bk.theta1);
    return sweep.value_at(t);
}

std::optional<double> detection_time(const ChartSeries& series, double h, bool monthly) {
    if (!(h > 0.0)) throw ConfigError("control limit h must be > 0");
    for (const auto& pt : series.points) {
        if (pt.value >= h) {
            if (!monthly) return pt.time;
            return 30.0 * std::ceil(pt.time / 30.0);
        }
    }
    return std::nullopt;
}

std::optional<double> DetectionRecord::first_crossing(double h) const {
    if (!(h > 0.0)) throw ConfigError("control limit h must be > 0");
    const auto it = std::lower_bound(
        records_.begin(), records_.end(), h,
        [](const ChartPoint& pt, double limit) { return pt.value < limit; });
    if (it == records_.end()) return std::nullopt;
    return it->time;
}

double DetectionRecord::max_value(double up_to) const {
    const auto it = std::upper_bound(
        records_.begin(), records_.end(), up_to,
        [](double t, const ChartPoint& pt) { return t < pt.time; });
    if (it == records_.begin()) return 0.0;
    return std::prev(it)->value;
}

namespace {

template <typename Visit>
void sweep_detection(const HospitalStream& stream, const RiskModel& model, const ChartSpec& spec,
                     Visit&& visit) {
    validate_spec(spec);
    if (std::holds_alternative<FunnelSpec>(spec))
        throw ConfigError("funnel comparisons have no detection sweep");
    if (const auto* bern = std::get_if<BernoulliSpec>(&spec)) {
        sweep_bernoulli(stream, model, *bern, visit);
        return;
    }
    CusumKind kind = CusumKind::cgi;
    std::optional<double> cap;
    double theta1 = 0.0;
    if (const auto* cgi = std::get_if<CgiSpec>(&spec)) {
        cap = cgi->log_hr_cap;
    } else if (const auto* cgr = std::get_if<CgrSpec>(&spec)) {
        kind = CusumKind::cgr;
        cap = cgr->log_hr_cap;
    } else {
        kind = CusumKind::bk;
        theta1 = std::get<BkSpec>(spec).theta1;
    }
    CusumSweep sweep(stream, model, kind, cap, theta1);
    for (double t : sweep.failure_times())
        if (!visit(t, sweep.value_at(t))) return;
}

}  // namespace

DetectionRecord detection_record(const HospitalStream& stream, const RiskModel& model,
                                 const ChartSpec& spec) {
    std::vector<ChartPoint> records;
    double best = 0.0;
    sweep_detection(stream, model, spec, [&](double t, double value) {
        if (value > best) {
            best = value;
            records.push_back({t, value});
        }
        return true;
    });
    return DetectionRecord(std::move(records));
}

std::optional<double> first_detection(const HospitalStream& stream, const RiskModel& model,
                                      const ChartSpec& spec, double h) {
    if (!(h > 0.0)) throw ConfigError("control limit h must be > 0");
    std::optional<double> hit;
    sweep_detection(stream, model, spec, [&](double t, double value) {
        if (value >= h) {
            hit = t;
            return false;
        }
        return true;
    });
    return hit;
}

std::vector<FunnelRow> funnel_points(
    const std::vector<std::pair<std::string, HospitalStream>>& hospitals, const RiskModel& model,
    const FunnelSpec& spec) {
    validate_spec(spec);
    const double z = stats::normal_quantile(0.5 * (1.0 + spec.confidence));
    std::vector<FunnelRow> rows;
    for (const auto& [id, stream] : hospitals) {
        const auto outcomes = window_outcomes(stream, model, spec.window, false);
        std::size_t cursor = 0;
        long n = 0;
        long observed_failures = 0;
        double p_sum = 0.0;
        for (long k = 1; static_cast<double>(k) * spec.period <= stream.horizon() + 1e-9; ++k) {
            const double period_end = static_cast<double>(k) * spec.period;
            while (cursor < outcomes.size() && outcomes[cursor].time <= period_end) {
                ++n;
                observed_failures += outcomes[cursor].failed ? 1 : 0;
                p_sum += outcomes[cursor].probability;
                ++cursor;
            }
            if (n == 0) continue;  // nothing materialized yet; hospital skipped
            FunnelRow row;
            row.hospital_id = id;
            row.period_end = period_end;
            row.n = n;
            row.observed = static_cast<double>(observed_failures) / static_cast<double>(n);
            row.expected = p_sum / static_cast<double>(n);
            if (spec.exact_binomial) {
                const double tail = 0.5 * (1.0 - spec.confidence);
                long k_upper = n + 1;
                for (long k = n; k >= 0; --k) {
                    if (stats::binomial_upper_tail(n, row.expected, k) < tail)
                        k_upper = k;
                    else
                        break;
                }
                row.upper = std::min(1.0, static_cast<double>(std::min(k_upper, n)) /
                                              static_cast<double>(n));
                long k_lower = -1;
                for (long k = 0; k <= n; ++k) {
                    const double cdf = 1.0 - stats::binomial_upper_tail(n, row.expected, k + 1);
                    if (cdf < tail)
                        k_lower = k;
                    else
                        break;
                }
                row.lower = k_lower < 0 ? 0.0
                                        : static_cast<double>(k_lower) / static_cast<double>(n);
                row.out_of_control =
                    stats::binomial_upper_tail(n, row.expected, observed_failures) < tail &&
                    row.observed > row.expected;
            } else {
                const double half_width =
                    z * std::sqrt(row.expected * (1.0 - row.expected) / static_cast<double>(n));
                row.upper = std::min(1.0, row.expected + half_width);
                row.lower = std::max(0.0, row.expected - half_width);
                row.out_of_control = row.observed > row.upper;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace survcusum
