#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "levyh/format.hpp"
#include "levyh/parallel.hpp"
#include "levyh/quadrature.hpp"

using namespace levyh;

TEST(Wynn, AcceleratesAlternatingSeries) {
    std::vector<double> sums;
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
        s += (k % 2 ? 1.0 : -1.0) / k;
        sums.push_back(s);
    }
    double err = 0.0;
    const double v = quad::wynn_epsilon(sums, err);
    EXPECT_NEAR(v, std::numbers::ln2, 1e-12);
    EXPECT_LT(std::abs(sums.back() - std::numbers::ln2), 0.03);
}

TEST(Wynn, ConstantSequence) {
    const std::vector<double> sums(5, 2.5);
    double err = 1.0;
    EXPECT_EQ(quad::wynn_epsilon(sums, err), 2.5);
}

TEST(LogScale, PowerLawTail) {
    QuadratureConfig cfg;
    quad::LogScaleOptions opt;
    opt.start = 1.0;
    const auto r = quad::log_scale([](double l) { return std::pow(l, -1.5); }, opt, cfg);
    EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(LogScale, InwardSingularity) {
    QuadratureConfig cfg;
    quad::LogScaleOptions opt;
    opt.start = 1.0;
    opt.direction = quad::Direction::Inward;
    const auto r = quad::log_scale([](double l) { return 1.0 / std::sqrt(l); }, opt, cfg);
    EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(LogScale, DivergentIntegralThrows) {
    QuadratureConfig cfg;
    quad::LogScaleOptions opt;
    opt.max_chunks = 50;
    try {
        quad::log_scale([](double l) { return 1.0 / l; }, opt, cfg);
        FAIL() << "expected a QuadratureError";
    } catch (const QuadratureError& e) {
        EXPECT_GT(e.best_estimate(), 40.0);
    }
}

TEST(Oscillatory, SineIntegralTail) {
    // int_1^inf sin(l)/l dl = pi/2 - Si(1)
    QuadratureConfig cfg;
    cfg.rel_tol = 1e-10;
    const auto r = quad::oscillatory([](double l) { return std::sin(l) / l; }, 1.0, std::numbers::pi, cfg);
    EXPECT_NEAR(r.value, std::numbers::pi / 2 - 0.94608307036718301, 1e-9);
}

TEST(Oscillatory, BudgetExhaustionThrows) {
    QuadratureConfig cfg;
    cfg.max_panels = 4;
    EXPECT_THROW(quad::oscillatory([](double l) { return std::sin(l) / std::sqrt(l); }, 1.0, std::numbers::pi, cfg),
                 QuadratureError);
}

TEST(RealLine, GaussianWithCusp) {
    QuadratureConfig cfg;
    const auto r = quad::real_line([](double y) { return std::abs(y - 1.0) * std::exp(-y * y / 2); }, {1.0}, cfg);
    // E|Z - 1| sqrt(2 pi) with Z standard normal
    const double e = 2.0 * std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi) + 1.0 * std::erf(1.0 / std::numbers::sqrt2);
    EXPECT_NEAR(r.value, e * std::sqrt(2.0 * std::numbers::pi), 1e-8);
}

TEST(RealLine, HeavyTails) {
    QuadratureConfig cfg;
    const auto r = quad::real_line([](double y) { return 1.0 / (1.0 + y * y); }, {0.0}, cfg);
    EXPECT_NEAR(r.value, std::numbers::pi, 1e-7);
}

TEST(Config, Validation) {
    QuadratureConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.rel_tol = 1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.abs_tol = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.max_panels = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Format, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.7071067811865476}) {
        const auto s = format_double(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(Parallel, ScheduleIndependentSums) {
    std::vector<double> v(10007);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.37 * i) * 1e-3 + 1.0 / (i + 1);
    std::vector<double> a(v.size()), b(v.size());
    parallel_for(v.size(), 1, [&](std::size_t i) { a[i] = v[i] * v[i]; });
    parallel_for(v.size(), 7, [&](std::size_t i) { b[i] = v[i] * v[i]; });
    EXPECT_EQ(pairwise_sum(a), pairwise_sum(b));
}

TEST(Parallel, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(100, 4, [](std::size_t i) {
                     if (i == 57) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}
