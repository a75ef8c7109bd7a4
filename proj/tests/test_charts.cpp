#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "survcusum/charts.hpp"

using namespace survcusum;
using testsupport::brute_bk;
using testsupport::brute_cgi;
using testsupport::brute_cgr;
using testsupport::patient;
using testsupport::random_stream;
using testsupport::unit_exponential_model;

namespace {

const double kLn2 = std::log(2.0);

HospitalStream single_failure_stream() {
    return HospitalStream({patient("p1", 0.0, 0.5, true)}, 1.0);
}

double value_at(const ChartSeries& series, double t) {
    for (const auto& pt : series.points)
        if (pt.time == t) return pt.value;
    FAIL("no series point at t = ", t);
    return 0.0;
}

}  // namespace

TEST_CASE("cgi single-failure example") {
    const auto model = unit_exponential_model(1.0);
    const auto series = compute_cgi(single_failure_stream(), model);
    CHECK(value_at(series, 0.5) == doctest::Approx(kLn2 - 0.5).epsilon(1e-12));
    // frozen intensity keeps the value constant through the horizon
    CHECK(value_at(series, 1.0) == doctest::Approx(kLn2 - 0.5).epsilon(1e-12));
}

TEST_CASE("cgi is zero without failures") {
    const auto model = unit_exponential_model(1.0);
    const HospitalStream stream({patient("a", 0.0, 3.0, false), patient("b", 1.0, 2.0, false)},
                                4.0);
    for (const auto& pt : compute_cgi(stream, model).points) CHECK(pt.value == 0.0);
}

TEST_CASE("cgr dominates cgi and maximizes over the change subject") {
    const auto model = unit_exponential_model(1.0);
    // patient 1 at risk through t=1, patient 2 fails at 0.5
    const HospitalStream stream({patient("p1", 0.0, 1.0, false), patient("p2", 0.0, 0.5, true)},
                                1.0);
    const auto cgr = compute_cgr(stream, model);
    const auto cgi = compute_cgi(stream, model);
    CHECK(value_at(cgr, 1.0) == doctest::Approx(kLn2 - 0.5).epsilon(1e-12));
    CHECK(value_at(cgi, 1.0) == 0.0);

    const auto single = compute_cgr(single_failure_stream(), model);
    CHECK(value_at(single, 0.5) == doctest::Approx(kLn2 - 0.5).epsilon(1e-12));

    const auto empty = compute_cgr(HospitalStream({}, 2.0), model);
    REQUIRE(empty.points.size() == 1);
    CHECK(empty.points[0].value == 0.0);
}

TEST_CASE("bk reflection identity on the single-failure stream") {
    const auto model = unit_exponential_model(1.0);
    const auto series = compute_bk(single_failure_stream(), model, BkSpec{kLn2});
    // running minimum -0.5 is attained just before the failure jump
    CHECK(value_at(series, 0.5) == doctest::Approx(kLn2).epsilon(1e-12));
    CHECK(value_at(series, 0.0) == 0.0);

    const HospitalStream censored({patient("a", 0.0, 2.0, false)}, 3.0);
    for (const auto& pt : compute_bk(censored, model, BkSpec{kLn2}).points)
        CHECK(pt.value == 0.0);

    CHECK_THROWS_AS(compute_bk(single_failure_stream(), model, BkSpec{0.0}), ConfigError);
}

TEST_CASE("charts match brute-force oracles on random instances") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const double theta = (seed % 3) * 0.35;
        const auto stream = random_stream(seed, 0.35, 60.0, 0.015, theta);
        if (stream.records().size() > 50) continue;
        const auto model = unit_exponential_model(0.015);

        const auto cgr = compute_cgr(stream, model);
        const auto cgr_capped = compute_cgr(stream, model, CgrSpec{std::log(6.0)});
        const auto cgi = compute_cgi(stream, model);
        const auto bk = compute_bk(stream, model, BkSpec{std::log(1.5)});
        for (const auto& pt : cgr.points)
            CHECK(pt.value ==
                  doctest::Approx(brute_cgr(stream, model, {}, pt.time)).epsilon(1e-10));
        for (const auto& pt : cgr_capped.points)
            CHECK(pt.value ==
                  doctest::Approx(brute_cgr(stream, model, std::log(6.0), pt.time))
                      .epsilon(1e-10));
        for (const auto& pt : cgi.points)
            CHECK(pt.value ==
                  doctest::Approx(brute_cgi(stream, model, {}, pt.time)).epsilon(1e-10));
        for (const auto& pt : bk.points)
            CHECK(pt.value ==
                  doctest::Approx(brute_bk(stream, model, std::log(1.5), pt.time))
                      .epsilon(1e-10));
    }
}

TEST_CASE("g oracle collapses to bk on a singleton grid") {
    const auto model = unit_exponential_model(1.0);
    const double theta1 = kLn2;
    const auto stream = single_failure_stream();
    const auto bk = compute_bk(stream, model, BkSpec{theta1});
    const auto g = compute_g_oracle(stream, model, std::vector<double>{theta1});
    REQUIRE(g.points.size() == bk.points.size());
    for (std::size_t i = 0; i < g.points.size(); ++i) {
        CHECK(g.points[i].time == bk.points[i].time);
        CHECK(g.points[i].value == doctest::Approx(bk.points[i].value).epsilon(1e-12));
    }

    for (std::uint64_t seed = 50; seed < 56; ++seed) {
        const auto random = random_stream(seed, 0.3, 40.0, 0.02, 0.4);
        if (random.records().size() > 50) continue;
        const auto model2 = unit_exponential_model(0.02);
        const auto bk2 = compute_bk(random, model2, BkSpec{theta1});
        const auto g2 = compute_g_oracle(random, model2, std::vector<double>{theta1});
        REQUIRE(g2.points.size() == bk2.points.size());
        for (std::size_t i = 0; i < g2.points.size(); ++i)
            CHECK(g2.points[i].value == doctest::Approx(bk2.points[i].value).epsilon(1e-12));
    }
}

TEST_CASE("g oracle over a dense grid dominates bk") {
    const auto model = unit_exponential_model(1.0);
    const auto stream = single_failure_stream();
    std::vector<double> grid;
    for (double theta = 0.05; theta <= 2.5; theta += 0.05) grid.push_back(theta);
    grid.push_back(kLn2);
    const auto g = compute_g_oracle(stream, model, grid);
    const auto bk = compute_bk(stream, model, BkSpec{kLn2});
    REQUIRE(g.points.size() == bk.points.size());
    for (std::size_t i = 0; i < g.points.size(); ++i)
        CHECK(g.points[i].value >= bk.points[i].value - 1e-12);

    const auto empty = compute_g_oracle(HospitalStream({}, 1.0), model, grid);
    CHECK(empty.points.back().value == 0.0);

    std::vector<PatientRecord> big;
    for (int i = 0; i < 51; ++i) big.push_back(patient("p" + std::to_string(i), 0.0, 1.0, false));
    CHECK_THROWS_AS(compute_g_oracle(HospitalStream(std::move(big), 2.0), model, grid),
                    ConfigError);
}

TEST_CASE("cgr is never below cgi across random streams") {
    int streams_checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const double theta = (seed % 4) * 0.25;
        const auto stream = random_stream(seed + 1000, 0.5, 45.0, 0.02, theta);
        const auto model = unit_exponential_model(0.02);
        const auto cgr = compute_cgr(stream, model);
        const auto cgi = compute_cgi(stream, model);
        REQUIRE(cgr.points.size() == cgi.points.size());
        for (std::size_t i = 0; i < cgr.points.size(); ++i)
            CHECK(cgr.points[i].value >= cgi.points[i].value - 1e-12);
        ++streams_checked;
    }
    CHECK(streams_checked == 100);
}

TEST_CASE("chart values drift down between failures") {
    Rng rng(99);
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto stream = random_stream(seed + 7, 0.4, 50.0, 0.02, 0.5);
        const auto model = unit_exponential_model(0.02);
        const auto failures = testsupport::failure_times(stream, 50.0);
        if (failures.size() < 2) continue;
        const std::vector<ChartSpec> specs{CgiSpec{}, CgrSpec{std::log(6.0)},
                                           BkSpec{std::log(2.0)}};
        for (const auto& spec : specs) {
            for (std::size_t k = 0; k + 1 < failures.size(); ++k) {
                const double lo = failures[k];
                const double hi = failures[k + 1];
                double prev_t = lo;
                double prev_v = chart_value_at(stream, model, spec, lo);
                for (int step = 0; step < 4; ++step) {
                    const double t = prev_t + (hi - prev_t) * (0.3 + 0.5 * rng.uniform01());
                    const double v = chart_value_at(stream, model, spec, std::nextafter(t, lo));
                    CHECK(v <= prev_v + 1e-9);
                    prev_t = t;
                    prev_v = v;
                }
            }
        }
    }
}

TEST_CASE("capped charts never use a hazard ratio above the cap") {
    const double cap = std::log(6.0);
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const auto stream = random_stream(seed + 40, 0.4, 40.0, 0.01, 1.2);
        const auto model = unit_exponential_model(0.01);
        const auto capped = compute_cgr(stream, model, CgrSpec{cap});
        const auto uncapped = compute_cgr(stream, model);
        for (std::size_t i = 0; i < capped.points.size(); ++i) {
            CHECK(capped.points[i].value <= uncapped.points[i].value + 1e-12);
            CHECK(capped.points[i].value ==
                  doctest::Approx(brute_cgr(stream, model, cap, capped.points[i].time))
                      .epsilon(1e-10));
        }
    }
}

TEST_CASE("series invariants: increasing times, nonnegative values") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto stream = random_stream(seed + 77, 0.5, 40.0, 0.02, 0.3);
        const auto model = unit_exponential_model(0.02);
        for (const auto& series :
             {compute_cgi(stream, model), compute_cgr(stream, model),
              compute_bk(stream, model, BkSpec{kLn2})}) {
            for (std::size_t i = 0; i < series.points.size(); ++i) {
                CHECK(series.points[i].value >= 0.0);
                if (i > 0) CHECK(series.points[i].time > series.points[i - 1].time);
            }
        }
    }
}

TEST_CASE("detection times") {
    const auto model = unit_exponential_model(1.0);
    const auto series = compute_bk(single_failure_stream(), model, BkSpec{kLn2});
    CHECK(detection_time(series, 0.5).value() == doctest::Approx(0.5));
    CHECK(!detection_time(series, 5.0).has_value());
    CHECK_THROWS_AS(detection_time(series, 0.0), ConfigError);
    CHECK_THROWS_AS(detection_time(series, -1.0), ConfigError);
    // monthly rounding goes up to the next 30-day block
    CHECK(detection_time(series, 0.5, true).value() == doctest::Approx(30.0));

    const auto record = detection_record(single_failure_stream(), model, BkSpec{kLn2});
    CHECK(record.first_crossing(0.5).value() == doctest::Approx(0.5));
    CHECK(!record.first_crossing(5.0).has_value());
    CHECK(record.max_value(0.4) == 0.0);
    CHECK(record.max_value(0.6) == doctest::Approx(kLn2));
    CHECK(first_detection(single_failure_stream(), model, BkSpec{kLn2}, 0.5).value() ==
          doctest::Approx(0.5));
}

TEST_CASE("detection record agrees with the full series") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto stream = random_stream(seed + 3, 0.5, 45.0, 0.02, 0.6);
        const auto model = unit_exponential_model(0.02);
        const ChartSpec spec = CgrSpec{std::log(6.0)};
        const auto series = compute_cgr(stream, model, CgrSpec{std::log(6.0)});
        const auto record = detection_record(stream, model, spec);
        for (double h : {0.2, 0.5, 1.0, 2.0, 4.0}) {
            const auto from_series = detection_time(series, h);
            const auto from_record = record.first_crossing(h);
            CHECK(from_series.has_value() == from_record.has_value());
            if (from_series)
                CHECK(*from_series == doctest::Approx(*from_record).epsilon(1e-12));
            const auto direct = first_detection(stream, model, spec, h);
            CHECK(direct.has_value() == from_record.has_value());
            if (direct) CHECK(*direct == doctest::Approx(*from_record).epsilon(1e-12));
        }
    }
}

TEST_CASE("bernoulli cusum weights and trajectory") {
    // H(365) = log 2 makes every unit-risk window probability exactly 0.5
    const auto model = unit_exponential_model(kLn2 / 365.0);
    const BernoulliSpec spec{kLn2, 365.0};

    const HospitalStream stream({patient("fail", 0.0, 100.0, true),
                                 patient("survive", 10.0, 800.0, false),
                                 patient("pending", 700.0, 100.0, false)},
                                900.0);
    const auto series = compute_bernoulli(stream, model, spec);
    // failure at day 100: W = log(2 / 1.5)
    const double w_fail = std::log(2.0 / 1.5);
    const double w_survive = std::log(1.0 / 1.5);
    CHECK(value_at(series, 100.0) == doctest::Approx(w_fail).epsilon(1e-12));
    // survivor outcome at day 375 pulls the chart to max(0, ...)
    CHECK(value_at(series, 375.0) ==
          doctest::Approx(std::max(0.0, w_fail + w_survive)).epsilon(1e-12));
    CHECK(value_at(series, 900.0) == value_at(series, 375.0));

    CHECK(chart_value_at(stream, model, spec, 50.0) == 0.0);

    const HospitalStream survivors({patient("a", 0.0, 400.0, false),
                                    patient("b", 5.0, 600.0, false)},
                                   800.0);
    for (const auto& pt : compute_bernoulli(survivors, model, spec).points)
        CHECK(pt.value == 0.0);

    const auto hot = unit_exponential_model(10.0);  // p indistinguishable from 1
    CHECK_THROWS_AS(compute_bernoulli(stream, hot, spec), DegenerateProbabilityError);
}

TEST_CASE("funnel limits and flags") {
    // all unit risk, window probability 0.02
    const double rate = -std::log(0.98) / 365.0;
    const auto model = unit_exponential_model(rate);
    const FunnelSpec spec{0.95, 365.0, 365.0, false};

    std::vector<PatientRecord> records;
    for (int i = 0; i < 100; ++i) {
        const bool fail = i < 2;
        records.push_back(patient("p" + std::to_string(i), 0.0, fail ? 100.0 : 365.0, fail));
    }
    std::vector<std::pair<std::string, HospitalStream>> hospitals;
    hospitals.emplace_back("H1", HospitalStream(std::move(records), 365.0));
    const auto rows = funnel_points(hospitals, model, spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 100);
    CHECK(rows[0].observed == doctest::Approx(0.02));
    CHECK(rows[0].expected == doctest::Approx(0.02).epsilon(1e-9));
    CHECK(rows[0].upper == doctest::Approx(0.04744).epsilon(2e-3));
    CHECK(rows[0].lower == 0.0);
    CHECK(!rows[0].out_of_control);  // observed == expected sits inside

    // limits shrink with n: a fixed excess gets flagged at large volume
    std::vector<PatientRecord> big;
    for (int i = 0; i < 10000; ++i) {
        const bool fail = i < 300;  // 3% observed vs 2% expected
        big.push_back(patient("q" + std::to_string(i), 0.0, fail ? 50.0 : 365.0, fail));
    }
    std::vector<std::pair<std::string, HospitalStream>> big_hospital;
    big_hospital.emplace_back("H2", HospitalStream(std::move(big), 365.0));
    const auto flagged = funnel_points(big_hospital, model, spec);
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0].out_of_control);

    // exact binomial route flags the same gross excess
    const auto exact = funnel_points(big_hospital, model, FunnelSpec{0.95, 365.0, 365.0, true});
    REQUIRE(exact.size() == 1);
    CHECK(exact[0].out_of_control);

    // a hospital with no completed outcomes is skipped
    std::vector<std::pair<std::string, HospitalStream>> pending;
    pending.emplace_back("H3", HospitalStream({patient("x", 300.0, 30.0, false)}, 365.0));
    CHECK(funnel_points(pending, model, spec).empty());
}

TEST_CASE("simultaneous events: tied failures, censorings and entries") {
    const auto model = unit_exponential_model(0.01);
    // two failures at exactly t=20, a censoring at the same instant, and a
    // subject entering at the failure time
    const HospitalStream stream(
        {patient("a", 0.0, 20.0, true), patient("b", 5.0, 15.0, true),
         patient("c", 2.0, 18.0, false), patient("d", 20.0, 30.0, false),
         patient("e", 10.0, 25.0, true)},
        60.0);
    const double theta1 = std::log(1.8);

    const auto bk = compute_bk(stream, model, BkSpec{theta1});
    for (const auto& pt : bk.points)
        CHECK(pt.value == doctest::Approx(brute_bk(stream, model, theta1, pt.time))
                              .epsilon(1e-12));

    const auto cgr = compute_cgr(stream, model);
    for (const auto& pt : cgr.points)
        CHECK(pt.value == doctest::Approx(brute_cgr(stream, model, {}, pt.time)).epsilon(1e-12));

    const auto cgi = compute_cgi(stream, model);
    for (const auto& pt : cgi.points)
        CHECK(pt.value == doctest::Approx(brute_cgi(stream, model, {}, pt.time)).epsilon(1e-12));

    // the tied jump counts both failures at once
    const auto at_20 = counting_state(stream, model, 20.0);
    CHECK(at_20.failures == 2);
}

TEST_CASE("zero-intensity suffixes: undefined mle propagates unless capped") {
    // flat-at-zero first segment: failures there carry no cumulative intensity
    const auto flat_start = BaselineHazard::step_cumulative({10.0, 20.0}, {0.0, 0.5});
    const RiskModel model{{}, flat_start};
    const HospitalStream stream({patient("a", 0.0, 5.0, true)}, 30.0);

    CHECK_THROWS_AS(compute_cgi(stream, model), UndefinedMleError);
    CHECK_THROWS_AS(compute_cgr(stream, model), UndefinedMleError);
    const double cap = std::log(6.0);
    const auto capped_cgi = compute_cgi(stream, model, CgiSpec{cap});
    const auto capped_cgr = compute_cgr(stream, model, CgrSpec{cap});
    // one failure against zero intensity: value is cap * N
    CHECK(value_at(capped_cgi, 5.0) == doctest::Approx(cap).epsilon(1e-12));
    CHECK(value_at(capped_cgr, 5.0) == doctest::Approx(cap).epsilon(1e-12));
    // bk has a fixed theta1 and needs no mle
    const auto bk = compute_bk(stream, model, BkSpec{std::log(2.0)});
    CHECK(value_at(bk, 5.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("chart spec validation") {
    CHECK_THROWS_AS(validate_spec(ChartSpec(BkSpec{-0.1})), ConfigError);
    CHECK_THROWS_AS(validate_spec(ChartSpec(BernoulliSpec{0.5, 0.0})), ConfigError);
    CHECK_THROWS_AS(validate_spec(ChartSpec(FunnelSpec{1.5, 365.0, 365.0})), ConfigError);
    CHECK_THROWS_AS(validate_spec(ChartSpec(CgrSpec{-1.0})), ConfigError);
    CHECK_NOTHROW(validate_spec(ChartSpec(CgrSpec{std::log(6.0)})));
}
