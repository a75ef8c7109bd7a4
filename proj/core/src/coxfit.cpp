#include "survcusum/coxfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace survcusum {

namespace {

// Cholesky solve of (information) x = b; returns false when the matrix is
// singular to machine precision.
bool cholesky_factor(std::vector<double>& a, std::size_t p) {
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) sum -= a[i * p + k] * a[j * p + k];
            if (i == j) {
                if (sum <= 1e-12 * std::max(1.0, std::abs(a[i * p + i]))) return false;
                a[i * p + i] = std::sqrt(sum);
            } else {
                a[i * p + j] = sum / a[j * p + j];
            }
        }
    }
    return true;
}

void cholesky_solve(const std::vector<double>& chol, std::size_t p, std::vector<double>& x) {
    for (std::size_t i = 0; i < p; ++i) {
        double sum = x[i];
        for (std::size_t k = 0; k < i; ++k) sum -= chol[i * p + k] * x[k];
        x[i] = sum / chol[i * p + i];
    }
    for (std::size_t i = p; i-- > 0;) {
        double sum = x[i];
        for (std::size_t k = i + 1; k < p; ++k) sum -= chol[k * p + i] * x[k];
        x[i] = sum / chol[i * p + i];
    }
}

struct EventGroup {
    double time = 0.0;
    std::vector<std::size_t> members;  // record indices failing at this time
};

struct FitData {
    std::size_t p = 0;
    std::vector<std::size_t> by_followup_desc;
    std::vector<EventGroup> groups_desc;  // event times, descending
};

FitData prepare(std::span<const PatientRecord> records) {
    FitData data;
    if (records.empty()) throw ConfigError("cox fit needs at least one record");
    data.p = records.front().covariates.size();
    for (const auto& rec : records) {
        rec.validate();
        if (rec.covariates.size() != data.p)
            throw ConfigError("cox fit needs a uniform covariate length");
    }
    data.by_followup_desc.resize(records.size());
    std::iota(data.by_followup_desc.begin(), data.by_followup_desc.end(), std::size_t{0});
    std::sort(data.by_followup_desc.begin(), data.by_followup_desc.end(),
              [&records](std::size_t a, std::size_t b) {
                  return records[a].followup > records[b].followup;
              });
    for (std::size_t idx : data.by_followup_desc) {
        if (!records[idx].event) continue;
        const double t = records[idx].followup;
        if (data.groups_desc.empty() || data.groups_desc.back().time != t)
            data.groups_desc.push_back({t, {}});
        data.groups_desc.back().members.push_back(idx);
    }
    if (data.groups_desc.empty()) throw NumericError("cox fit needs at least one event");
    return data;
}

PartialLikelihood evaluate(std::span<const PatientRecord> records, std::span<const double> beta,
                           const FitData& data) {
    const std::size_t p = data.p;
    PartialLikelihood out;
    out.gradient.assign(p, 0.0);
    out.information.assign(p * p, 0.0);

    std::vector<double> eta(records.size(), 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < p; ++k) dot += beta[k] * records[i].covariates[k];
        eta[i] = dot;
    }

    // Walk event times from latest to earliest; the risk set only grows.
    double s0 = 0.0;
    std::vector<double> s1(p, 0.0);
    std::vector<double> s2(p * p, 0.0);
    std::size_t cursor = 0;
    for (const auto& group : data.groups_desc) {
        while (cursor < data.by_followup_desc.size()) {
            const std::size_t idx = data.by_followup_desc[cursor];
            if (records[idx].followup < group.time) break;
            const double w = std::exp(eta[idx]);
            s0 += w;
            const auto& z = records[idx].covariates;
            for (std::size_t a = 0; a < p; ++a) {
                s1[a] += w * z[a];
                for (std::size_t b = 0; b <= a; ++b) s2[a * p + b] += w * z[a] * z[b];
            }
            ++cursor;
        }
        const auto d = static_cast<double>(group.members.size());
        for (std::size_t idx : group.members) {
            out.value += eta[idx];
            for (std::size_t a = 0; a < p; ++a) out.gradient[a] += records[idx].covariates[a];
        }
        out.value -= d * std::log(s0);
        for (std::size_t a = 0; a < p; ++a) {
            const double mean_a = s1[a] / s0;
            out.gradient[a] -= d * mean_a;
            for (std::size_t b = 0; b <= a; ++b) {
                const double cov = s2[a * p + b] / s0 - mean_a * (s1[b] / s0);
                out.information[a * p + b] += d * cov;
            }
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b) out.information[a * p + b] = out.information[b * p + a];
    return out;
}

BaselineHazard breslow_baseline(std::span<const PatientRecord> records,
                                std::span<const double> beta, const FitData& data) {
    std::vector<double> s0_at_group(data.groups_desc.size(), 0.0);
    double s0 = 0.0;
    std::size_t cursor = 0;
    for (std::size_t g = 0; g < data.groups_desc.size(); ++g) {
        while (cursor < data.by_followup_desc.size()) {
            const std::size_t idx = data.by_followup_desc[cursor];
            if (records[idx].followup < data.groups_desc[g].time) break;
            double dot = 0.0;
            for (std::size_t k = 0; k < data.p; ++k) dot += beta[k] * records[idx].covariates[k];
            s0 += std::exp(dot);
            ++cursor;
        }
        s0_at_group[g] = s0;
    }
    std::vector<double> times;
    std::vector<double> cumulative;
    times.reserve(data.groups_desc.size());
    cumulative.reserve(data.groups_desc.size());
    double total = 0.0;
    for (std::size_t g = data.groups_desc.size(); g-- > 0;) {
        const auto& group = data.groups_desc[g];
        total += static_cast<double>(group.members.size()) / s0_at_group[g];
        times.push_back(group.time);
        cumulative.push_back(total);
    }
    return BaselineHazard::step_cumulative(std::move(times), std::move(cumulative));
}

}  // namespace

PartialLikelihood cox_partial_likelihood(std::span<const PatientRecord> records,
                                         std::span<const double> beta) {
    const FitData data = prepare(records);
    if (beta.size() != data.p) throw ConfigError("beta length does not match covariates");
    return evaluate(records, beta, data);
}

CoxFitResult fit_cox(std::span<const PatientRecord> records, const CoxFitOptions& options) {
    const FitData data = prepare(records);
    const std::size_t p = data.p;
    CoxFitResult result;
    result.beta.assign(p, 0.0);

    if (p == 0) {
        result.log_partial_likelihood = evaluate(records, result.beta, data).value;
        result.baseline = breslow_baseline(records, result.beta, data);
        return result;
    }

    PartialLikelihood current = evaluate(records, result.beta, data);
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        double grad_norm = 0.0;
        for (double g : current.gradient) grad_norm = std::max(grad_norm, std::abs(g));
        if (grad_norm < options.gradient_tolerance) {
            converged = true;
            break;
        }

        std::vector<double> chol = current.information;
        if (!cholesky_factor(chol, p))
            throw SingularInformationError("information matrix is singular; covariates collinear");
        std::vector<double> step = current.gradient;
        cholesky_solve(chol, p, step);

        // Half the step until the likelihood does not decrease.
        std::vector<double> candidate(p);
        PartialLikelihood next;
        double scale = 1.0;
        for (int halving = 0;; ++halving) {
            for (std::size_t k = 0; k < p; ++k) candidate[k] = result.beta[k] + scale * step[k];
            next = evaluate(records, candidate, data);
            if (next.value >= current.value || halving >= 32) break;
            scale *= 0.5;
        }
        result.beta = candidate;
        current = std::move(next);
        result.iterations = iter + 1;
    }
    if (!converged) {
        double grad_norm = 0.0;
        for (double g : current.gradient) grad_norm = std::max(grad_norm, std::abs(g));
        if (grad_norm >= options.gradient_tolerance)
            throw ConvergenceError("cox fit did not converge; final gradient max-norm " +
                                   std::to_string(grad_norm));
    }
    result.log_partial_likelihood = current.value;

    std::vector<double> chol = current.information;
    if (!cholesky_factor(chol, p))
        throw SingularInformationError("information matrix is singular at the optimum");
    result.standard_errors.resize(p);
    std::vector<double> unit(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::fill(unit.begin(), unit.end(), 0.0);
        unit[j] = 1.0;
        cholesky_solve(chol, p, unit);
        result.standard_errors[j] = std::sqrt(unit[j]);
    }
    result.baseline = breslow_baseline(records, result.beta, data);
    return result;
}

}  // namespace survcusum
