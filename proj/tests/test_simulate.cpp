#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "survcusum/simulate.hpp"
#include "survcusum/stats.hpp"

using namespace survcusum;
using testsupport::register_fixture;
using testsupport::unit_exponential_model;

namespace {

SimConfig plain_config(double psi, double horizon, double theta, int hospitals,
                       std::uint64_t seed, double rate = 0.002) {
    SimConfig config;
    config.psi = psi;
    config.horizon = horizon;
    config.theta = theta;
    config.n_hospitals = hospitals;
    config.model = unit_exponential_model(rate);
    config.seed = seed;
    return config;
}

}  // namespace

TEST_CASE("inverse-transform survival sampling") {
    const auto baseline = BaselineHazard::exponential(0.002);
    // doubling the hazard halves the sampled time for a matched draw
    CHECK(survival_time_from_uniform(0.5, baseline, 2.0) ==
          doctest::Approx(std::log(2.0) / 0.004).epsilon(1e-12));
    CHECK(survival_time_from_uniform(0.5, baseline, 1.0) ==
          doctest::Approx(346.574).epsilon(1e-5));
    CHECK_THROWS_AS(survival_time_from_uniform(0.0, baseline, 1.0), ConfigError);
    CHECK_THROWS_AS(survival_time_from_uniform(0.5, baseline, 0.0), ConfigError);
}

TEST_CASE("sampled survival times pass a ks test against the generator") {
    const auto baseline = BaselineHazard::exponential(0.002);
    Rng rng(6021023);
    std::vector<double> draws;
    draws.reserve(10000);
    for (int i = 0; i < 10000; ++i) draws.push_back(sample_survival_time(rng, baseline, 1.0));
    CHECK(stats::median(draws) == doctest::Approx(346.574).epsilon(0.03));
    const auto ks = stats::ks_test(std::move(draws),
                                   [](double x) { return -std::expm1(-0.002 * x); });
    CHECK(ks.p_value >= 0.01);

    // weibull and step baselines go through the same transform
    const auto weib = BaselineHazard::weibull(0.7, 300.0);
    std::vector<double> weib_draws;
    for (int i = 0; i < 10000; ++i) weib_draws.push_back(sample_survival_time(rng, weib, 1.0));
    const auto ks_weib = stats::ks_test(std::move(weib_draws), [&weib](double x) {
        return -std::expm1(-weib.cumulative(x));
    });
    CHECK(ks_weib.p_value >= 0.01);
}

TEST_CASE("poisson arrivals hit the expected volume") {
    const auto config = plain_config(2.28, 365.0, 0.0, 1000, 40);
    double total = 0.0;
    for (int r = 0; r < 1000; ++r)
        total += static_cast<double>(generate_hospital(config, r).records().size());
    const double mean_count = total / 1000.0;
    CHECK(mean_count == doctest::Approx(2.28 * 365.0).epsilon(0.03));
}

TEST_CASE("generated records satisfy the stream invariants") {
    const auto config = plain_config(0.8, 200.0, std::log(2.0), 1, 7);
    const auto stream = generate_hospital(config, 0);
    for (const auto& rec : stream.records()) {
        CHECK(rec.entry_time >= 0.0);
        CHECK(rec.entry_time < 200.0);
        CHECK(rec.followup > 0.0);
        if (!rec.event) CHECK(rec.exit_time() == doctest::Approx(200.0).epsilon(1e-12));
        if (rec.event) CHECK(rec.exit_time() <= 200.0 + 1e-12);
    }
    // deterministic per (seed, replicate)
    const auto again = generate_hospital(config, 0);
    REQUIRE(again.records().size() == stream.records().size());
    for (std::size_t i = 0; i < stream.records().size(); ++i) {
        CHECK(again.records()[i].id == stream.records()[i].id);
        CHECK(again.records()[i].entry_time == stream.records()[i].entry_time);
        CHECK(again.records()[i].followup == stream.records()[i].followup);
        CHECK(again.records()[i].event == stream.records()[i].event);
    }
    // different replicates differ
    const auto other = generate_hospital(config, 1);
    CHECK(other.records().size() != stream.records().size());
}

TEST_CASE("experiments are deterministic across thread counts") {
    const auto config = plain_config(1.0, 250.0, std::log(2.0), 24, 99, 0.004);
    const std::vector<ChartSpec> specs{CgiSpec{}, BkSpec{std::log(2.0)}};
    const std::vector<double> limits{2.0, 2.5};
    const auto rows1 = run_length_experiment(specs, config, limits, 1);
    const auto rows2 = run_length_experiment(specs, config, limits, 2);
    REQUIRE(rows1.size() == rows2.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) {
        CHECK(rows1[i].arl == rows2[i].arl);
        CHECK(rows1[i].sd == rows2[i].sd);
        CHECK(rows1[i].mrl == rows2[i].mrl);
        CHECK(rows1[i].censored == rows2[i].censored);
    }

    auto calib = plain_config(1.0, 250.0, 0.0, 60, 12, 0.004);
    const CalibrationTarget target = TypeIErrorTarget{0.1, 250.0};
    const auto h1 = calibrate_control_limits(specs, calib, target, 1);
    const auto h2 = calibrate_control_limits(specs, calib, target, 2);
    CHECK(h1 == h2);
}

TEST_CASE("type-i calibration preconditions and monotonicity") {
    auto config = plain_config(1.0, 250.0, 0.0, 100, 5, 0.004);
    const std::vector<ChartSpec> specs{CgiSpec{}};

    CHECK_THROWS_AS(
        calibrate_control_limits(specs, config, CalibrationTarget(TypeIErrorTarget{1.0, 250.0})),
        ConfigError);
    CHECK_THROWS_AS(
        calibrate_control_limits(specs, config, CalibrationTarget(TypeIErrorTarget{0.0, 250.0})),
        ConfigError);
    CHECK_THROWS_AS(
        calibrate_control_limits(specs, config, CalibrationTarget(TypeIErrorTarget{0.01, 250.0})),
        InsufficientReplicatesError);

    auto out_of_control = plain_config(1.0, 250.0, 0.5, 100, 5, 0.004);
    CHECK_THROWS_AS(calibrate_control_limits(specs, out_of_control,
                                             CalibrationTarget(TypeIErrorTarget{0.1, 250.0})),
                    ConfigError);

    const double strict = calibrate_control_limit(
        specs[0], config, CalibrationTarget(TypeIErrorTarget{0.05, 250.0}));
    const double loose = calibrate_control_limit(
        specs[0], config, CalibrationTarget(TypeIErrorTarget{0.20, 250.0}));
    CHECK(strict >= loose);
}

TEST_CASE("in-control arl calibration hits its target") {
    const auto& fixture = register_fixture();
    const auto config = fixture.config(0.6, 2190.0, 0.0, 120, 2718);
    const ChartSpec spec = CgrSpec{std::log(6.0)};
    const double target = 1400.0;
    const double h =
        calibrate_control_limit(spec, config, CalibrationTarget(InControlArlTarget{target}));
    CHECK(h > 0.0);
    // re-derive the censored-imputed mean at the returned limit
    double total = 0.0;
    for (int r = 0; r < config.n_hospitals; ++r) {
        const auto stream = generate_hospital(config, r);
        const auto hit = first_detection(stream, config.model, spec, h);
        total += hit.value_or(config.horizon);
    }
    const double mean_rl = total / config.n_hospitals;
    CHECK(std::abs(mean_rl - target) <= 0.01 * target);
}

TEST_CASE("paired out-of-control run lengths: cgr detects no later than cgi") {
    const auto config = plain_config(0.5, 400.0, std::log(2.0), 40, 321, 0.004);
    const std::vector<ChartSpec> specs{CgrSpec{}, CgiSpec{}};
    const std::vector<double> limits{3.0, 3.0};
    const auto rows = run_length_experiment(specs, config, limits);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].arl <= rows[1].arl);
    CHECK(rows[0].censored <= rows[1].censored);
}

TEST_CASE("power curves are nondecreasing step functions in [0, 1]") {
    const auto config = plain_config(0.7, 300.0, std::log(2.0), 30, 55, 0.004);
    const std::vector<ChartSpec> specs{BkSpec{std::log(2.0)}};
    const std::vector<double> limits{2.5};
    const std::vector<double> grid{50.0, 100.0, 150.0, 200.0, 250.0, 300.0};
    const auto curves = power_over_time(specs, config, limits, grid);
    REQUIRE(curves.size() == 1);
    double prev = 0.0;
    for (double p : curves[0].power) {
        CHECK(p >= prev);
        CHECK(p <= 1.0);
        prev = p;
    }
    CHECK_THROWS_AS(power_over_time(specs, config, limits, std::vector<double>{10.0, 5.0}),
                    ConfigError);
}

TEST_CASE("register-like calibration lands near the published magnitude") {
    // capped cgr, psi = 0.6, alpha = 0.1 over six years; reference value 5.79
    const auto& fixture = register_fixture();
    const auto config = fixture.config(0.6, 2190.0, 0.0, 500, 113);
    const double h = calibrate_control_limit(ChartSpec(CgrSpec{std::log(6.0)}), config,
                                             CalibrationTarget(TypeIErrorTarget{0.1, 2190.0}));
    CHECK(h > 5.79 * 0.85);
    CHECK(h < 5.79 * 1.15);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(generate_hospital(plain_config(0.0, 100.0, 0.0, 1, 1), 0), ConfigError);
    CHECK_THROWS_AS(generate_hospital(plain_config(1.0, 0.0, 0.0, 1, 1), 0), ConfigError);
    CHECK_THROWS_AS(generate_hospital(plain_config(1.0, 100.0, -0.1, 1, 1), 0), ConfigError);

    SimConfig mismatched = plain_config(1.0, 100.0, 0.0, 1, 1);
    mismatched.model.beta = {0.5};
    CHECK_THROWS_AS(generate_hospital(mismatched, 0), ConfigError);

    SimConfig bad_pool = plain_config(1.0, 100.0, 0.0, 1, 1);
    bad_pool.covariates = ResampleCovariates{{{1.0, 2.0}}};
    CHECK_THROWS_AS(generate_hospital(bad_pool, 0), ConfigError);
}
