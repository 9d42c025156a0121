#include <gtest/gtest.h>

#include <cmath>

#include "qhahn/experiments.hpp"

using namespace qhahn;

namespace {

const ModelParams kGeneric(0.5, 0.25, 0.7, 0.3);
const ModelParams kFig5(0.4, 0.4, 1.0, 0.0);
const ModelParams kFig6(0.6, 0.6, 0.9, 0.1);

}  // namespace

TEST(EqLaplaceMonteCarlo, TrivialZetaAndDomain) {
    const auto s = eq_laplace_monte_carlo(kGeneric, 2, 1.0, 0.0, 50, 1);
    EXPECT_EQ(s.mean(), 1.0);
    EXPECT_EQ(s.variance(), 0.0);
    EXPECT_THROW(eq_laplace_monte_carlo(kGeneric, 2, 1.0, 0.1, 10, 1), DomainError);
}

TEST(EqLaplaceMonteCarlo, ThreadCountDoesNotChangeResult) {
    const auto a = eq_laplace_monte_carlo(kGeneric, 2, 1.0, -0.5, 2000, 3, 1);
    const auto b = eq_laplace_monte_carlo(kGeneric, 2, 1.0, -0.5, 2000, 3, 4);
    EXPECT_EQ(a.sum, b.sum);
    EXPECT_EQ(a.sumsq, b.sumsq);
}

TEST(ParticleSamples, OrderedByTrialAndThreadIndependent) {
    const auto a = particle_samples(kGeneric, 3, 2.0, 500, 9, 1);
    const auto b = particle_samples(kGeneric, 3, 2.0, 500, 9, 3);
    ASSERT_EQ(a.size(), 500u);
    EXPECT_EQ(a, b);
    // trial k depends only on its own seed
    const auto head = particle_samples(kGeneric, 3, 2.0, 10, 9, 1);
    EXPECT_TRUE(std::equal(head.begin(), head.end(), a.begin()));
}

TEST(ThetaAtVelocity, InvertsPi) {
    const auto e = fan_edges(kFig6);
    for (double f : {0.1, 0.5, 0.9}) {
        const double x = e.x_left + f * (e.x_right - e.x_left);
        const double th = theta_at_velocity(kFig6, x, e.theta_right, e.theta_left);
        EXPECT_NEAR(pi_kappa_sigma(kFig6, th).pi, x, 1e-9);
    }
    EXPECT_THROW(theta_at_velocity(kFig6, 100.0, e.theta_right, e.theta_left), DomainError);
}

TEST(FanEdges, Examples) {
    const auto e6 = fan_edges(kFig6);
    EXPECT_NEAR(e6.x_left, kFig6.L - kFig6.R, 1e-9);
    EXPECT_NEAR(e6.theta_right, theta0(kFig6), 1e-15);
    EXPECT_LT(e6.x_left, e6.x_right);
    const auto e5 = fan_edges(kFig5);
    EXPECT_NEAR(e5.x_left, -1.0, 1e-9);
    EXPECT_GT(e5.x_right, 0.0);
}

TEST(LlnStaircase, CloseToHydrodynamicCurveAtModerateTime) {
    const auto r = lln_staircase(kFig5, 300.0, 2, 4);
    ASSERT_EQ(r.x.size(), 200u);
    EXPECT_LT(r.sup_distance, 0.05);
    EXPECT_GE(r.mean_trial_sup, r.sup_distance - 1e-15);
    for (size_t i = 1; i < r.x.size(); ++i) {
        EXPECT_GT(r.x[i], r.x[i - 1]);
        EXPECT_LE(r.kappa[i], r.kappa[i - 1] + 1e-12);
        EXPECT_LE(r.mean_count[i], r.mean_count[i - 1] + 1e-12);
    }
}

TEST(LlnStaircase, ReproducibleAndKeepsFinals) {
    const auto a = lln_staircase(kGeneric, 50.0, 2, 7, 50, 0.05, 5);
    const auto b = lln_staircase(kGeneric, 50.0, 2, 7, 50, 0.05, 5);
    EXPECT_EQ(a.mean_count, b.mean_count);
    ASSERT_EQ(a.finals.size(), 2u);
    EXPECT_EQ(a.finals[0].size(), 5u);
    EXPECT_EQ(a.finals, b.finals);
}

TEST(DensityJump, ReportFields) {
    const auto r = density_jump(kFig6, 200.0, 2, 3, 20.0);
    EXPECT_NEAR(r.rho0, 1.0 - std::pow(0.6, r.theta0), 1e-12);
    EXPECT_NEAR(r.x_edge, pi_kappa_sigma(kFig6, r.theta0).pi * 200.0, 1e-9);
    EXPECT_GT(r.inside, r.beyond);
    EXPECT_THROW(density_jump(kFig5, 10.0, 1, 1), DomainError);
}

TEST(RescaleFluctuations, HandExample) {
    const double t = 8.0;
    const auto h = pi_kappa_sigma(kFig5, 0.5);
    const long centre = std::lround(h.pi * t);
    const auto r = rescale_fluctuations(kFig5, 0.5, 3, t, {centre, centre - 4});
    ASSERT_EQ(r.scaled.size(), 2u);
    const double scale = h.sigma * 2.0;
    EXPECT_NEAR(r.scaled[0], -(double(centre) - h.pi * t) / scale, 1e-12);
    EXPECT_NEAR(r.scaled[1] - r.scaled[0], 4.0 / scale, 1e-12);
    const double expected = ks_distance(r.scaled, [](double v) { return tw_cdf(v); });
    EXPECT_EQ(r.ks, expected);
}
