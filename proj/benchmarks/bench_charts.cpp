#include <benchmark/benchmark.h>

#include <cmath>

#include "survcusum/arl.hpp"
#include "survcusum/charts.hpp"
#include "survcusum/coxfit.hpp"
#include "survcusum/rng.hpp"
#include "survcusum/simulate.hpp"

namespace {

using namespace survcusum;

SimConfig bench_config(double psi, double horizon, double theta, double rate) {
    SimConfig config;
    config.psi = psi;
    config.horizon = horizon;
    config.theta = theta;
    config.n_hospitals = 1;
    config.model = RiskModel{{}, BaselineHazard::exponential(rate)};
    config.seed = 20240101;
    return config;
}

void BM_GenerateHospital(benchmark::State& state) {
    const auto config = bench_config(2.28, static_cast<double>(state.range(0)), 0.0, 0.002);
    int replicate = 0;
    for (auto _ : state) {
        const auto stream = generate_hospital(config, replicate++);
        benchmark::DoNotOptimize(stream.records().size());
    }
}
BENCHMARK(BM_GenerateHospital)->Arg(365)->Arg(2190);

void BM_DetectionRecord(benchmark::State& state, const ChartSpec& spec) {
    const auto config = bench_config(1.7, 2190.0, 0.0, 0.002);
    const auto stream = generate_hospital(config, 0);
    for (auto _ : state) {
        const auto record = detection_record(stream, config.model, spec);
        benchmark::DoNotOptimize(record.records().size());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(stream.records().size()));
}
BENCHMARK_CAPTURE(BM_DetectionRecord, cgi, ChartSpec(CgiSpec{}));
BENCHMARK_CAPTURE(BM_DetectionRecord, bk2, ChartSpec(BkSpec{std::log(2.0)}));
BENCHMARK_CAPTURE(BM_DetectionRecord, cgr_cap6, ChartSpec(CgrSpec{std::log(6.0)}));

void BM_FisherClosedForm(benchmark::State& state) {
    const auto baseline = BaselineHazard::exponential(0.002);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            fisher_information(std::log(1.4), 2000.0, 2.28, baseline, DegenerateFrailty{}));
}
BENCHMARK(BM_FisherClosedForm);

void BM_FisherQuadrature(benchmark::State& state) {
    const auto baseline = BaselineHazard::weibull(0.8, 400.0);
    const GammaFrailty frailty{0.5};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            fisher_information(std::log(1.4), 2000.0, 2.28, baseline, frailty));
}
BENCHMARK(BM_FisherQuadrature);

void BM_ArlRoot(benchmark::State& state) {
    ArlQuery query;
    query.theta = std::log(1.4);
    query.h = 7.73;
    query.psi = 2.28;
    query.baseline = BaselineHazard::exponential(0.002);
    for (auto _ : state) benchmark::DoNotOptimize(arl_cgi(query));
}
BENCHMARK(BM_ArlRoot);

void BM_CoxFit(benchmark::State& state) {
    Rng rng(7);
    std::vector<PatientRecord> records;
    const auto n = state.range(0);
    for (std::int64_t i = 0; i < n; ++i) {
        PatientRecord rec;
        rec.id = "p" + std::to_string(i);
        rec.covariates = {rng.normal(), rng.normal()};
        const double hazard = 0.002 * std::exp(0.4 * rec.covariates[0] - 0.2 * rec.covariates[1]);
        const double x = -std::log(rng.uniform01()) / hazard;
        rec.followup = std::min(x, 1825.0);
        rec.event = x <= 1825.0;
        records.push_back(std::move(rec));
    }
    for (auto _ : state) {
        const auto fit = fit_cox(records);
        benchmark::DoNotOptimize(fit.beta[0]);
    }
}
BENCHMARK(BM_CoxFit)->Arg(500)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
