#include "survcusum/arl.hpp"

#include <cmath>

namespace survcusum {

namespace {

template <typename F>
double adaptive_simpson_step(const F& f, double a, double b, double fa, double fm, double fb,
                             double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

constexpr double kQuadTolerance = 1e-8;

// Exponential baseline, everyone at baseline risk:
// I = psi (t - (1 - e^{-a t}) / a) with a = lambda e^theta.
double exponential_degenerate(double theta, double t, double psi, double rate) {
    const double a = rate * std::exp(theta);
    return psi * (t + std::expm1(-a * t) / a);
}

// Exponential baseline with gamma risk multipliers (mean 1, variance delta).
// The delta = 1 pole is the logarithmic limit, handled exactly.
double exponential_gamma(double theta, double t, double psi, double rate, double delta) {
    const double a = rate * std::exp(theta);
    if (delta == 1.0) return psi * t - psi * std::log1p(a * t) / a;
    const double integral = std::expm1((1.0 - 1.0 / delta) * std::log1p(delta * a * t)) /
                            (a * (delta - 1.0));
    return psi * t - psi * integral;
}

}  // namespace

void validate_frailty(const FrailtyDist& frailty) {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, GammaFrailty>) {
                if (!(f.variance > 0.0)) throw ConfigError("gamma frailty needs variance > 0");
            } else if constexpr (std::is_same_v<T, PvfFrailty>) {
                if (!(f.nu > 0.0)) throw ConfigError("pvf frailty needs nu > 0");
                if (!(f.m > -1.0)) throw ConfigError("pvf frailty needs m > -1");
                if (!(f.m * f.rho > 0.0)) throw ConfigError("pvf frailty needs m * rho > 0");
            } else if constexpr (std::is_same_v<T, EmpiricalFrailty>) {
                if (f.samples.empty()) throw ConfigError("empirical frailty needs samples");
                for (double u : f.samples)
                    if (!(u > 0.0)) throw ConfigError("empirical frailty samples must be > 0");
            }
        },
        frailty);
}

double laplace_transform(const FrailtyDist& frailty, double c) {
    if (c < 0.0) throw ConfigError("laplace transform evaluated at negative argument");
    return std::visit(
        [c](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, DegenerateFrailty>) {
                return std::exp(-c);
            } else if constexpr (std::is_same_v<T, GammaFrailty>) {
                return std::exp(-std::log1p(f.variance * c) / f.variance);
            } else if constexpr (std::is_same_v<T, PvfFrailty>) {
                const double ratio = f.nu / (f.nu + c);
                return std::exp(-f.rho * (1.0 - std::pow(ratio, f.m)));
            } else {
                double sum = 0.0;
                for (double u : f.samples) sum += std::exp(-c * u);
                return sum / static_cast<double>(f.samples.size());
            }
        },
        frailty);
}

double fisher_information_quadrature(double theta, double t, double psi,
                                     const BaselineHazard& baseline, const FrailtyDist& frailty) {
    if (t < 0.0) throw ConfigError("fisher information needs t >= 0");
    validate_frailty(frailty);
    if (t == 0.0) return 0.0;
    const double hr = std::exp(theta);
    const auto integrand = [&](double s) {
        return 1.0 - laplace_transform(frailty, hr * baseline.cumulative(s));
    };
    return psi * adaptive_simpson(integrand, 0.0, t, kQuadTolerance);
}

double fisher_information(double theta, double t, double psi, const BaselineHazard& baseline,
                          const FrailtyDist& frailty) {
    if (t < 0.0) throw ConfigError("fisher information needs t >= 0");
    validate_frailty(frailty);
    if (t == 0.0) return 0.0;
    if (baseline.kind() == BaselineHazard::Kind::exponential) {
        if (std::holds_alternative<DegenerateFrailty>(frailty))
            return exponential_degenerate(theta, t, psi, baseline.rate());
        if (const auto* gamma = std::get_if<GammaFrailty>(&frailty))
            return exponential_gamma(theta, t, psi, baseline.rate(), gamma->variance);
    }
    return fisher_information_quadrature(theta, t, psi, baseline, frailty);
}

namespace {

// Root of coefficient * I(theta, t) = h in t. I is continuous and
// nondecreasing, so expand a bracket by doubling and bisect; derivative-free
// keeps the step-baseline kinks harmless.
double solve_run_length(double coefficient, const ArlQuery& query) {
    const double target = query.h / coefficient;
    const auto info = [&](double t) {
        return fisher_information(query.theta, t, query.psi, query.baseline, query.frailty);
    };
    double lo = 0.0;
    double hi = 1.0;
    while (info(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > query.t_max) {
            if (info(query.t_max) < target)
                throw HorizonExceededError("run-length equation has no root below t_max");
            hi = query.t_max;
            break;
        }
    }
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        if (info(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void validate_query(const ArlQuery& query) {
    if (!(query.h > 0.0)) throw ConfigError("control limit h must be > 0");
    if (!(query.psi > 0.0)) throw ConfigError("arrival rate psi must be > 0");
    if (query.theta < 0.0) throw ConfigError("theta must be >= 0");
    if (!(query.t_max > 0.0)) throw ConfigError("t_max must be > 0");
}

}  // namespace

double arl_cgi(const ArlQuery& query) {
    validate_query(query);
    if (query.theta == 0.0)
        throw NoApproximationError("run-length approximation requires theta > 0");
    const double coefficient = query.theta + std::exp(-query.theta) - 1.0;
    return solve_run_length(coefficient, query);
}

std::optional<double> arl_bk(const ArlQuery& query) {
    validate_query(query);
    if (!query.theta1) throw ConfigError("bk run length needs theta1");
    if (!(*query.theta1 > 0.0)) throw ConfigError("bk run length needs theta1 > 0");
    const double coefficient =
        *query.theta1 + std::exp(-query.theta) - std::exp(*query.theta1 - query.theta);
    if (coefficient <= 0.0) return std::nullopt;
    return solve_run_length(coefficient, query);
}

}  // namespace survcusum
