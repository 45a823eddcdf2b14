#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "oscfit/signal.hpp"

using namespace oscfit;

namespace {

TrajectoryRecord make_record(std::vector<double> xs, double rate, double t0 = 0.0) {
    TrajectoryRecord rec;
    rec.speaker = "s01";
    rec.word = "w01";
    rec.channel = Channel::parse("TDx");
    rec.sample_rate = rate;
    rec.t0 = t0;
    rec.positions = std::move(xs);
    return rec;
}

// Independent naive DCT-II/III pair used as the smoothing oracle.
std::vector<double> oracle_dct_smooth(const std::vector<double>& x, int order) {
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);
    std::vector<double> coeff(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += x[i] * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * nd));
        }
        coeff[k] = acc * (k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd));
    }
    for (std::size_t k = static_cast<std::size_t>(order); k < n; ++k) coeff[k] = 0.0;
    std::vector<double> rec(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double s = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
            acc += s * coeff[k] * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * nd));
        }
        rec[i] = acc;
    }
    return rec;
}

}  // namespace

TEST_CASE("downsample: 1250 Hz to 81 Hz covers the original span") {
    std::vector<double> xs(1251);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::sin(0.01 * static_cast<double>(i));
    const auto rec = make_record(xs, 1250.0, 0.25);
    const auto out = downsample(rec, 81.0);
    CHECK(out.sample_rate == 81.0);
    CHECK(out.t0 == 0.25);
    CHECK(out.positions.front() == rec.positions.front());
    const double in_end = rec.time_at(rec.size() - 1);
    const double out_end = out.time_at(out.size() - 1);
    CHECK(out_end <= in_end + 1e-12);
    CHECK(in_end - out_end < 1.0 / 81.0);
}

TEST_CASE("downsample: identical rate is the identity") {
    const auto rec = make_record({1.0, 4.0, 2.0, -1.0, 0.5}, 100.0);
    const auto out = downsample(rec, 100.0);
    CHECK(out.positions == rec.positions);
}

TEST_CASE("downsample: exact on a linear ramp") {
    std::vector<double> xs(501);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i) / 1000.0;
    const auto rec = make_record(xs, 1000.0);
    for (const double rate : {81.0, 250.0, 333.0, 999.0}) {
        const auto out = downsample(rec, rate);
        for (std::size_t j = 0; j < out.size(); ++j) {
            CHECK(out.positions[j] == doctest::Approx(out.time_at(j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("downsample refuses to upsample") {
    const auto rec = make_record({0.0, 1.0, 2.0}, 50.0);
    CHECK_THROWS_AS(downsample(rec, 81.0), std::invalid_argument);
}

TEST_CASE("center") {
    const auto out = center(make_record({3.0, 5.0, 7.0}, 10.0));
    CHECK(out.positions == std::vector<double>{-2.0, 0.0, 2.0});

    const auto constant = center(make_record({4.2, 4.2, 4.2, 4.2}, 10.0));
    for (double x : constant.positions) CHECK(x == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("center: idempotent and range-preserving") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs(37);
        for (double& x : xs) x = u(rng);
        const auto rec = make_record(xs, 81.0);
        const auto once = center(rec);
        const auto twice = center(once);
        double mean = 0.0;
        for (double x : once.positions) mean += x;
        mean /= static_cast<double>(once.size());
        CHECK(std::abs(mean) < 1e-12 * 50.0);
        for (std::size_t i = 0; i < once.size(); ++i) {
            CHECK(twice.positions[i] == doctest::Approx(once.positions[i]).epsilon(1e-12));
        }
        const auto range = [](const std::vector<double>& v) {
            return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
        };
        CHECK(range(once.positions) == doctest::Approx(range(xs)).epsilon(1e-13));
    }
}

TEST_CASE("dct_smooth: constant signal passes through at order 5") {
    const auto rec = make_record(std::vector<double>(32, 2.75), 81.0);
    const auto smooth = dct_smooth(rec, 5);
    for (double x : smooth.smoothed) CHECK(x == doctest::Approx(2.75).epsilon(1e-12));
}

TEST_CASE("dct_smooth: basis vector k=3 passes at order 5 and dies at order 3") {
    const std::size_t n = 48;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = std::cos(std::numbers::pi * (2.0 * i + 1.0) * 3.0 / (2.0 * n));
    }
    const auto rec = make_record(xs, 81.0);

    const auto keep = dct_smooth(rec, 5);
    const auto drop = dct_smooth(rec, 3);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(keep.smoothed[i] - xs[i]) < 1e-10);
        CHECK(std::abs(drop.smoothed[i]) < 1e-10);
    }
}

TEST_CASE("dct_smooth matches an independent transform") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, 3.0);
    std::vector<double> xs(40);
    for (double& x : xs) x = noise(rng);
    const auto rec = make_record(xs, 81.0);
    for (const int order : {1, 3, 5, 12, 40}) {
        const auto got = dct_smooth(rec, order);
        const auto want = oracle_dct_smooth(xs, order);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            CHECK(got.smoothed[i] == doctest::Approx(want[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("dct_smooth: projection properties") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> noise(0.0, 5.0);
    std::vector<double> xs(64);
    for (double& x : xs) x = noise(rng);
    const auto rec = make_record(xs, 81.0);

    SUBCASE("idempotent") {
        const auto once = dct_smooth(rec, 5);
        auto re = rec;
        re.positions = once.smoothed;
        const auto twice = dct_smooth(re, 5);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            CHECK(std::abs(twice.smoothed[i] - once.smoothed[i]) < 1e-10);
        }
    }
    SUBCASE("order N is the identity") {
        const auto full = dct_smooth(rec, static_cast<int>(xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            CHECK(std::abs(full.smoothed[i] - xs[i]) < 1e-10);
        }
    }
    SUBCASE("residual is non-increasing in order") {
        double prev = std::numeric_limits<double>::infinity();
        for (int order = 1; order <= static_cast<int>(xs.size()); ++order) {
            const auto s = dct_smooth(rec, order);
            double ss = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                ss += (xs[i] - s.smoothed[i]) * (xs[i] - s.smoothed[i]);
            }
            CHECK(ss <= prev + 1e-9);
            prev = ss;
        }
    }
}

TEST_CASE("dct_smooth rejects impossible orders") {
    const auto rec = make_record({1.0, 2.0, 3.0, 4.0}, 10.0);
    CHECK_THROWS_AS(dct_smooth(rec, 0), std::invalid_argument);
    CHECK_THROWS_AS(dct_smooth(rec, 5), std::invalid_argument);
}

TEST_CASE("differentiate: exact on a linear ramp, endpoints included") {
    const double rate = 200.0;
    std::vector<double> xs(25);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i) / rate;
    const auto v = differentiate(xs, rate);
    for (double d : v) CHECK(d == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("differentiate: exact for quadratics at interior points") {
    const double rate = 100.0;
    std::vector<double> xs(30);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        xs[i] = t * t;
    }
    const auto v = differentiate(xs, rate);
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        CHECK(v[i] == doctest::Approx(2.0 * t).epsilon(1e-9));
    }
}

TEST_CASE("differentiate: sine derivative error below 1e-4 at 1 kHz") {
    const double rate = 1000.0;
    std::vector<double> xs(1001);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / rate);
    }
    const auto v = differentiate(xs, rate);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        worst = std::max(worst,
                         std::abs(v[i] - 2.0 * std::numbers::pi *
                                             std::cos(2.0 * std::numbers::pi * t)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("differentiate: constant signal gives zero, short input throws") {
    const auto v = differentiate(std::vector<double>(10, 3.5), 81.0);
    for (double d : v) CHECK(d == 0.0);
    CHECK_THROWS_AS(differentiate(std::vector<double>{1.0, 2.0}, 81.0), std::invalid_argument);
}

TEST_CASE("dct_smooth derived series have matching lengths") {
    std::vector<double> xs(20, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::sin(0.3 * static_cast<double>(i));
    const auto s = dct_smooth(make_record(xs, 81.0), 5);
    CHECK(s.smoothed.size() == xs.size());
    CHECK(s.velocity.size() == xs.size());
    CHECK(s.acceleration.size() == xs.size());
    CHECK(s.dct_order == 5);
}
