#pragma once

#include <functional>
#include <span>
#include <vector>

namespace survcusum::stats {

double mean(std::span<const double> xs);
double sample_sd(std::span<const double> xs);

// Median of an unsorted sample (averages the middle pair for even sizes).
double median(std::span<const double> xs);

// Empirical quantile with "higher" interpolation: the sorted element at
// 0-based index ceil(q * (n - 1)). Input must be sorted ascending.
double quantile_higher(std::span<const double> sorted, double q);

double normal_cdf(double x);

// Inverse standard normal CDF (Acklam's rational approximation, refined with
// one Halley step; absolute error well below 1e-9).
double normal_quantile(double p);

// CDF of Gamma(shape 1/2, scale b) at x; reduces to erf(sqrt(x/b)).
double gamma_half_cdf(double x, double scale);

// P(Binomial(n, p) >= k), computed by stable summation of log pmf terms.
double binomial_upper_tail(long n, double p, long k);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value
// uses the asymptotic Kolmogorov distribution with the Stephens small-sample
// correction. The sample is copied and sorted internally.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace survcusum::stats
