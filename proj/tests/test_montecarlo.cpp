#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "levyh/montecarlo.hpp"

using namespace levyh;

namespace {

SimulationOptions threads(unsigned k) {
    SimulationOptions o;
    o.threads = k;
    return o;
}

double survival_oracle(double x, double t) { return std::erf(x / std::sqrt(2.0 * t)); }

}  // namespace

TEST(SamplePath, BrownianUnitStepIsStandardNormal) {
    const auto m = LevyModel::brownian(1.0);
    const int n = 20000;
    double s = 0.0, s2 = 0.0;
    for (int seed = 0; seed < n; ++seed) {
        const auto p = sample_path(m, 0.0, 1.0, 1.0, seed);
        ASSERT_EQ(p.values.size(), 2u);
        EXPECT_EQ(p.values[0], 0.0);
        s += p.values[1];
        s2 += p.values[1] * p.values[1];
    }
    EXPECT_LT(std::abs(s / n), 3.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(SamplePath, StableCharacteristicFunction) {
    // E cos(X_1) = e^{-psi(1)} = e^{-1} for the symmetric law with c = 1
    const auto m = LevyModel::stable(1.5, 1.0, 0.0);
    const int n = 20000;
    std::vector<double> c(n);
    for (int seed = 0; seed < n; ++seed) c[seed] = std::cos(sample_path(m, 0.0, 1.0, 1.0, seed, 1e-300).values[1]);
    const auto est = detail::plain_mean(c);
    EXPECT_LT(std::abs(est.mean - std::exp(-1.0)), 3.0 * est.std_err);
}

TEST(SamplePath, SkewedStableCharacteristicFunction) {
    const auto m = LevyModel::stable(1.7, 0.6, 0.5);
    const int n = 20000;
    std::vector<double> re(n), im(n);
    for (int seed = 0; seed < n; ++seed) {
        const double x = sample_path(m, 0.0, 0.5, 0.5, seed, 1e-300).values[1];
        re[seed] = std::cos(x);
        im[seed] = std::sin(x);
    }
    const auto want = std::exp(-0.5 * m.psi(1.0));
    const auto r = detail::plain_mean(re), i = detail::plain_mean(im);
    EXPECT_LT(std::abs(r.mean - want.real()), 3.5 * r.std_err);
    EXPECT_LT(std::abs(i.mean - want.imag()), 3.5 * i.std_err);
}

TEST(SamplePath, JumpModelMean) {
    const auto m = LevyModel::brownian_jumps(1.0, 0.2, {{-1.0, 0.5}, {2.0, 0.25}});
    const int n = 20000;
    std::vector<double> v(n);
    for (int seed = 0; seed < n; ++seed) v[seed] = sample_path(m, 0.0, 1.0, 0.25, seed).values.back();
    const auto est = detail::plain_mean(v);
    EXPECT_LT(std::abs(est.mean - m.mean()), 3.0 * est.std_err);
}

TEST(SamplePath, GridAndDeterminism) {
    const auto m = LevyModel::brownian(1.0);
    EXPECT_THROW(sample_path(m, 1.0, 1.0, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(sample_path(m, 1.0, 0.5, 1.0, 1), std::invalid_argument);
    const auto a = sample_path(m, 1.0, 1.0, 0.3, 42);
    const auto b = sample_path(m, 1.0, 1.0, 0.3, 42);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.values.size(), 5u);
    EXPECT_EQ(a.values.front(), 1.0);
    EXPECT_TRUE(std::holds_alternative<BridgeExact>(a.hit_method));
    const auto s = sample_path(LevyModel::stable(1.5, 1.0, 0.0), 1.0, 1.0, 0.01, 3, 0.05);
    ASSERT_TRUE(std::holds_alternative<Threshold>(s.hit_method));
    EXPECT_EQ(std::get<Threshold>(s.hit_method).eps, 0.05);
    if (s.hit_index) { EXPECT_LE(std::abs(s.values.at(*s.hit_index)), 0.05); }
}

TEST(SamplePath, BridgeWeightsOnSignChange) {
    const auto m = LevyModel::brownian(1.0);
    for (int seed = 0; seed < 200; ++seed) {
        const auto p = sample_path(m, 0.3, 1.0, 0.1, seed);
        EXPECT_GE(p.survival_weight, 0.0);
        EXPECT_LE(p.survival_weight, 1.0);
        for (std::size_t k = 1; k < p.values.size(); ++k)
            if (p.values[k - 1] * p.values[k] < 0.0) {
                EXPECT_TRUE(p.hit_index.has_value());
                EXPECT_LE(*p.hit_index, k);
            }
    }
}

TEST(Survival, BrownianOracles) {
    const auto m = LevyModel::brownian(1.0);
    const auto a = survival_probability(m, 1.0, 1.0, 0.01, 20000, 11);
    EXPECT_LT(std::abs(a.mean - survival_oracle(1.0, 1.0)), 3.0 * a.std_err);
    const auto b = survival_probability(m, 1.0, 4.0, 0.01, 20000, 12);
    EXPECT_LT(std::abs(b.mean - survival_oracle(1.0, 4.0)), 3.0 * b.std_err);
    EXPECT_GE(survival_probability(m, 1e3, 1.0, 0.01, 1000, 13).mean, 0.999);
    EXPECT_THROW(survival_probability(m, 0.0, 1.0, 0.01, 10, 1), std::invalid_argument);
}

TEST(Survival, Supermartingale) {
    const auto m = LevyModel::stable(1.5, 1.0, 0.0);
    MCEstimate prev{1.0, 0.0, 0, 0};
    for (double t : {0.5, 1.0, 2.0}) {
        const auto e = survival_probability(m, 1.0, t, 0.01, 4000, 21);
        EXPECT_LE(e.mean, prev.mean + 3.0 * std::hypot(e.std_err, prev.std_err)) << t;
        prev = e;
    }
}

TEST(Survival, ThreadCountInvariance) {
    const auto m = LevyModel::stable(1.3, 1.0, 0.2);
    const auto a = survival_probability(m, 0.5, 0.5, 0.01, 3000, 5, threads(1));
    const auto b = survival_probability(m, 0.5, 0.5, 0.01, 3000, 5, threads(4));
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_err, b.std_err);
}

TEST(Invariance, BrownianTargets) {
    const auto m = LevyModel::brownian(1.0);
    PotentialEvaluator ev(m);
    // ten independent runs pooled: the mean z-score times sqrt(10) is standard normal
    double zsum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = invariance_check(m, ev, 2.0, 0.25, 0.01, 20000, seed);
        EXPECT_NEAR(r.target, 2.0, 1e-6);
        EXPECT_LE(r.estimate.n_effective, 20000.0);
        zsum += r.z;
    }
    EXPECT_LT(std::abs(zsum / std::sqrt(10.0)), 3.0);
}

TEST(Invariance, BridgeRemovesStepBias) {
    const auto m = LevyModel::brownian(1.0);
    PotentialEvaluator ev(m);
    const auto coarse = invariance_check(m, ev, 0.5, 1.0, 0.04, 20000, 41);
    const auto fine = invariance_check(m, ev, 0.5, 1.0, 0.01, 20000, 42);
    EXPECT_LT(std::abs(coarse.estimate.mean - fine.estimate.mean),
              3.0 * std::hypot(coarse.estimate.std_err, fine.estimate.std_err));
}

TEST(Invariance, NeedsPositiveH) {
    const auto m = LevyModel::brownian(1.0, 1.0);
    PotentialEvaluator ev(m);
    EXPECT_THROW(invariance_check(m, ev, -1.0, 1.0, 0.01, 100, 1), HTransformError);
}

TEST(Conditioning, RejectionMatchesTransformAtFiniteQ) {
    const auto m = LevyModel::brownian(1.0);
    PotentialEvaluator ev(m);
    const auto rep = conditioned_consistency(m, ev, 1.0, 1.0, 0.5, 0.01, 20000, 51);
    EXPECT_GT(rep.acceptance_rate, 0.1);
    EXPECT_EQ(rep.rows.size(), 7u);
    EXPECT_LE(rep.max_abs_z(), 3.5);
}

TEST(Conditioning, NegativeStart) {
    const auto m = LevyModel::brownian(1.0);
    PotentialEvaluator ev(m);
    const auto rep = conditioned_consistency(m, ev, -1.0, 1.0, 0.5, 0.01, 10000, 52);
    EXPECT_LE(rep.max_abs_z(), 3.5);
    for (const auto& row : rep.rows)
        if (row.name == "identity") { EXPECT_LT(row.transform.mean, 0.0); }
}

TEST(Conditioning, Errors) {
    const auto m = LevyModel::brownian(1.0);
    PotentialEvaluator ev(m);
    EXPECT_THROW(conditioned_consistency(m, ev, 0.0, 1.0, 1.0, 0.01, 10, 1), std::invalid_argument);
    EXPECT_THROW(conditioned_consistency(m, ev, 1.0, 0.0, 1.0, 0.01, 10, 1), std::invalid_argument);
    try {
        conditioned_consistency(m, ev, 1.0, 1e-9, 1.0, 0.01, 10, 1);
        FAIL() << "expected AcceptanceError";
    } catch (const AcceptanceError& e) {
        EXPECT_LT(e.rate(), 1e-4);
    }
}

TEST(Density, BrownianMassAndShape) {
    const auto m = LevyModel::brownian(1.0);
    PotentialEvaluator ev(m);
    const auto rep = conditioned_density_check(m, ev, 1.0, 1.0, 20, 0.01, 40000, 61);
    EXPECT_LT(std::abs(rep.mass.mean - 1.0), 3.0 * rep.mass.std_err);
    EXPECT_TRUE(rep.has_reference);
    EXPECT_EQ(rep.bins.size(), 20u);
    EXPECT_GT(rep.p_value, 0.001);
    EXPECT_EQ(rep.mass_opposite_side, 0.0);
    const auto* b = rep.bin_at(1.0);
    ASSERT_NE(b, nullptr);
    EXPECT_NEAR(b->density, 0.3449513, 0.05);
    for (const auto& bin : rep.bins) EXPECT_GE(bin.lo, 0.0);
}

TEST(Density, NegativeStartStaysNegative) {
    const auto m = LevyModel::brownian(1.0);
    PotentialEvaluator ev(m);
    const auto rep = conditioned_density_check(m, ev, -1.0, 1.0, 10, 0.01, 5000, 62);
    EXPECT_EQ(rep.mass_opposite_side, 0.0);
    for (const auto& bin : rep.bins) EXPECT_LE(bin.hi, 0.0);
}

TEST(Estimators, WeightedStatistics) {
    const std::vector<double> w{1.0, 1.0, 0.0, 2.0};
    EXPECT_NEAR(detail::weight_n_effective(w), 16.0 / 6.0, 1e-15);
    const auto r = detail::ratio_mean(w, {1.0, 3.0, 100.0, 2.0});
    EXPECT_NEAR(r.mean, 2.0, 1e-15);
    const auto p = detail::plain_mean({1.0, 2.0, 3.0});
    EXPECT_NEAR(p.mean, 2.0, 1e-15);
    EXPECT_NEAR(p.std_err, 1.0 / std::sqrt(3.0), 1e-15);
}

TEST(Estimators, StreamSeedsDiffer) {
    EXPECT_NE(stream_seed(1, mc_stream::path, 0), stream_seed(1, mc_stream::transform, 0));
    EXPECT_NE(stream_seed(1, mc_stream::path, 0), stream_seed(1, mc_stream::path, 1));
    EXPECT_NE(stream_seed(1, mc_stream::path, 0), stream_seed(2, mc_stream::path, 0));
}

TEST(Estimators, TabulatedFunctionInterpolates) {
    const TabulatedFunction f([](double x) { return std::abs(x); }, -2.0, 3.0, 101, 1);
    EXPECT_EQ(f(0.0), 0.0);
    EXPECT_NEAR(f(1.2345), 1.2345, 1e-12);
    EXPECT_NEAR(f(-1.5), 1.5, 1e-12);
}

TEST(Estimators, CsvLayout) {
    std::ostringstream os;
    write_estimator_csv(os, {{"survival", "brownian", "x=1;t=1", {0.5, 0.01, 100, 100.0}, 0.6826894921370859, -18.2}});
    EXPECT_EQ(os.str(),
              "op,model,params,estimate,stderr,n,n_effective,target,z\n"
              "survival,brownian,x=1;t=1,0.5,0.01,100,100,0.6826894921370859,-18.2\n");
}
