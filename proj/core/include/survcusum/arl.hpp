#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "survcusum/model.hpp"

namespace survcusum {

// Distribution of the subject-level risk multiplier exp(z . beta). The
// Laplace transform of this distribution is what enters the Fisher
// information of the observation process.

struct DegenerateFrailty {};  // every subject at baseline risk

struct GammaFrailty {
    double variance = 1.0;  // mean fixed at 1
};

struct PvfFrailty {
    double rho = 0.0;
    double nu = 0.0;  // > 0
    double m = 0.0;   // > -1, with m * rho > 0
};

struct EmpiricalFrailty {
    std::vector<double> samples;  // positive risk multipliers from a fitted model
};

using FrailtyDist = std::variant<DegenerateFrailty, GammaFrailty, PvfFrailty, EmpiricalFrailty>;

void validate_frailty(const FrailtyDist& frailty);

// E[exp(-c U)] for the risk multiplier U, c >= 0.
double laplace_transform(const FrailtyDist& frailty, double c);

// Fisher information I(theta, t) = psi * Int_0^t E_Z[F^theta(s)] ds of the
// observation process under arrival rate psi. Uses closed forms for the
// exponential baseline with degenerate or gamma frailty; every other
// combination integrates 1 - L(e^theta H(s)) with adaptive Simpson
// quadrature (absolute tolerance 1e-8).
double fisher_information(double theta, double t, double psi, const BaselineHazard& baseline,
                          const FrailtyDist& frailty);

// Quadrature route, exposed so the closed forms can be cross-checked.
double fisher_information_quadrature(double theta, double t, double psi,
                                     const BaselineHazard& baseline, const FrailtyDist& frailty);

struct ArlQuery {
    double theta = 0.0;            // true log hazard ratio, >= 0
    std::optional<double> theta1;  // anticipated log hazard ratio (bk only)
    double h = 0.0;                // control limit, > 0
    double psi = 0.0;              // arrivals per day, > 0
    BaselineHazard baseline = BaselineHazard::exponential(1.0);
    FrailtyDist frailty = DegenerateFrailty{};
    double t_max = 36500.0;  // search horizon in days
};

// Approximate out-of-control average run length of the CGI chart: the root
// of (theta + e^-theta - 1) I(theta, t) = h. Also an upper bound for the
// CGR chart's run length. Throws NoApproximationError for theta = 0 and
// HorizonExceededError when no root exists below t_max.
double arl_cgi(const ArlQuery& query);

// Approximate average run length of the BK chart: the root of
// (theta1 + e^-theta - e^{theta1 - theta}) I(theta, t) = h. Returns nullopt
// when the coefficient is not positive, i.e. the chart has no finite
// approximation (the "infinite run length" case).
std::optional<double> arl_bk(const ArlQuery& query);

}  // namespace survcusum
