#pragma once

#include <span>
#include <vector>

#include "survcusum/model.hpp"

namespace survcusum {

struct CoxFitOptions {
    int max_iterations = 50;
    double gradient_tolerance = 1e-8;  // max-norm of the score at convergence
};

struct CoxFitResult {
    std::vector<double> beta;
    BaselineHazard baseline = BaselineHazard::exponential(1.0);  // Breslow step estimate
    std::vector<double> standard_errors;
    double log_partial_likelihood = 0.0;
    int iterations = 0;

    RiskModel risk_model() const { return RiskModel{beta, baseline}; }
};

// Log partial likelihood with score and observed information (Breslow ties).
// The information matrix is p x p row-major and positive semidefinite.
struct PartialLikelihood {
    double value = 0.0;
    std::vector<double> gradient;
    std::vector<double> information;
};

PartialLikelihood cox_partial_likelihood(std::span<const PatientRecord> records,
                                         std::span<const double> beta);

// Newton-Raphson on the Breslow partial likelihood with step halving, then
// the Breslow cumulative baseline at the fitted coefficients. The survival
// time scale is follow-up since entry. p = 0 is supported and reduces the
// baseline to the Nelson-Aalen estimator.
CoxFitResult fit_cox(std::span<const PatientRecord> records, const CoxFitOptions& options = {});

}  // namespace survcusum
