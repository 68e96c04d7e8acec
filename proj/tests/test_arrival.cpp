#include <doctest.h>

#include <cmath>

#include "aexns/arrival.hpp"

using namespace aexns;
using namespace aexns::arrival;

TEST_CASE("sample_arrival degenerate and truncation") {
    Rng rng(1);
    ArrivalDistribution d;
    d.mean_offset = 120;
    d.std_dev = 0;
    IpiPlan p;
    p.fire_delay = 30;
    for (int i = 0; i < 10; ++i) CHECK(sample_arrival(d, p, rng) == doctest::Approx(150.0));

    // mean below zero: every sample still >= 0 (truncation by resampling)
    d.mean_offset = 0;
    d.std_dev = 100;
    p.fire_delay = 0;
    ArrivalDistribution neg = d;
    neg.mean_offset = -100;  // -1 sigma
    for (int i = 0; i < 2000; ++i) CHECK(sample_arrival(neg, p, rng) >= 0.0);
    neg.mean_offset = -500;  // -5 sigma: acceptance ~3e-7 per draw, check once
    CHECK(sample_arrival(neg, p, rng) >= 0.0);
}

TEST_CASE("sample_arrival CLT mean bound") {
    Rng rng(7);
    ArrivalDistribution d;
    d.mean_offset = 1000;
    d.std_dev = 100;
    IpiPlan p;
    p.fire_delay = 500;
    const int n = 1000000;
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += sample_arrival(d, p, rng);
    double mean = acc / n;
    CHECK(std::abs(mean - 1500.0) <= 4.0 * d.std_dev / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("quantile") {
    ArrivalDistribution d;
    d.mean_offset = 500;
    d.std_dev = 100;
    CHECK(quantile(d, 0.5) == doctest::Approx(500.0));
    CHECK(quantile(d, 0.9) == doctest::Approx(500.0 + 128.155).epsilon(1e-5));
    // symmetry about the mean
    CHECK(quantile(d, 0.9) - d.mean_offset == doctest::Approx(d.mean_offset - quantile(d, 0.1)));
    CHECK_THROWS_AS(quantile(d, 0.0), UsageError);
    CHECK_THROWS_AS(quantile(d, 1.0), UsageError);
}

TEST_CASE("fire_delay shifts every quantile by the same amount") {
    ArrivalDistribution d;
    d.mean_offset = 300;
    d.std_dev = 80;
    IpiPlan p0, p1;
    p0.fire_delay = 100;
    p1.fire_delay = 100 + 77.5;
    for (double q : {0.01, 0.1, 0.5, 0.9, 0.99}) {
        CHECK(quantile(d, p1, q) - quantile(d, p0, q) == doctest::Approx(77.5));
    }
}

TEST_CASE("calibrate_pss") {
    ArrivalDistribution d;
    d.mean_offset = 0;
    d.std_dev = 100;
    auto plan = calibrate_pss(d, 2000.0, 0.1);
    CHECK(d.mean_offset + plan.fire_delay == doctest::Approx(2000.0 - 128.155).epsilon(1e-5));

    // sigma = 0: the whole distribution is the atom at mitigation_end
    ArrivalDistribution d0;
    d0.std_dev = 0;
    auto plan0 = calibrate_pss(d0, 2000.0, 0.1);
    CHECK(plan0.fire_delay == doctest::Approx(2000.0));

    // infeasible: base latency already past the target mean
    ArrivalDistribution far;
    far.mean_offset = 5000;
    far.std_dev = 100;
    CHECK_THROWS_AS(calibrate_pss(far, 2000.0, 0.1), CalibrationError);
    CHECK_THROWS_AS(calibrate_pss(d, 2000.0, 0.7), CalibrationError);
}

TEST_CASE("calibrate_pss empirical tail within 2 percent") {
    ArrivalDistribution d;
    d.mean_offset = 40;
    d.std_dev = 100;
    double mit_end = 1840;
    auto plan = calibrate_pss(d, mit_end, 0.1);
    Rng rng(99);
    const int n = 100000;
    int past = 0;
    for (int i = 0; i < n; ++i) past += sample_arrival(d, plan, rng) > mit_end;
    CHECK(std::abs(static_cast<double>(past) / n - 0.1) <= 0.02);
}

TEST_CASE("calibrate_lbms") {
    ArrivalDistribution d;
    d.mean_offset = 0;
    d.std_dev = 100;
    double bound = 2440.0;
    auto plan = calibrate_lbms(d, 1840.0, 600.0, 1e-6);
    REQUIRE(plan.lbms_lower_bound.has_value());
    CHECK(*plan.lbms_lower_bound == doctest::Approx(bound));
    // z(1 - 1e-6) = 4.7534
    CHECK(plan.fire_delay == doctest::Approx(bound + 475.34).epsilon(1e-4));

    ArrivalDistribution d0;
    d0.std_dev = 0;
    auto plan0 = calibrate_lbms(d0, 1840.0, 600.0, 1e-6);
    CHECK(plan0.fire_delay == doctest::Approx(bound));

    CHECK_THROWS_AS(calibrate_lbms(d, 1840.0, 600.0, 0.5), CalibrationError);
}

TEST_CASE("calibrate_lbms empirical violation rate") {
    ArrivalDistribution d;
    d.mean_offset = 40;
    d.std_dev = 100;
    double eps = 1e-6;
    auto plan = calibrate_lbms(d, 1840.0, 600.0, eps);
    Rng rng(123);
    const int n = 100000;
    int violations = 0;
    for (int i = 0; i < n; ++i) violations += sample_arrival(d, plan, rng) < 2440.0;
    CHECK(static_cast<double>(violations) / n <= std::max(eps * 10, 1e-4));
}
