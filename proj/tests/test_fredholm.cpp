#include <gtest/gtest.h>

#include <cmath>

#include "qhahn/checks.hpp"
#include "qhahn/duality.hpp"
#include "qhahn/experiments.hpp"
#include "qhahn/fredholm.hpp"

using namespace qhahn;

namespace {

const ModelParams kGeneric(0.5, 0.25, 0.7, 0.3);
const ModelParams kRightOnly(0.5, 0.25, 1.0, 0.0);

}  // namespace

TEST(KernelG, ValueAtZeroAndRatio) {
    EXPECT_LT(std::abs(kernel_g(kGeneric, 2, 1.0, 0.0) - 1.0), 1e-15);
    for (cplx w : {cplx(0.3, 0.2), cplx(-0.7, 0.1), cplx(0.5, -0.4)}) {
        const cplx r = kernel_g(kGeneric, 3, 1.5, w) / kernel_g(kGeneric, 3, 1.5, kGeneric.q * w);
        EXPECT_LT(std::abs(r - kernel_g_ratio(kGeneric, 3, 1.5, w)), 1e-12 * std::abs(r));
    }
    EXPECT_THROW(kernel_g(kGeneric, 1, 1.0, 1.0), DomainError);
}

TEST(MellinBarnes, ZetaZeroAndDomain) {
    EXPECT_EQ(det_mellin_barnes(kGeneric, 2, 1.0, 0.0).value, cplx(1.0));
    EXPECT_THROW(det_mellin_barnes(kGeneric, 2, 1.0, 0.5), DomainError);
    EXPECT_THROW(det_mellin_barnes(kGeneric, 0, 1.0, -0.5), DomainError);
    EXPECT_THROW(det_cauchy(kGeneric, 2, 1.0, -0.3, 0.9, 1e-8), DomainError);
}

TEST(MellinBarnes, AgreesWithCauchyForm) {
    for (const auto& pt : fredholm_points())
        for (cplx zeta : {cplx(-0.3), cplx(-0.1, 0.2), cplx(-0.5)}) {
            const cplx mb = det_mellin_barnes(pt.p, pt.n, pt.t, zeta).value;
            const cplx ca = det_cauchy(pt.p, pt.n, pt.t, zeta).value;
            EXPECT_LT(std::abs(mb - ca), 1e-6) << pt.p.q << ' ' << pt.n << ' ' << zeta;
        }
}

TEST(MellinBarnes, FirstOrderCoefficientIsTheMoment) {
    // E[1/(zeta q^{x_n+n};q)_inf] = 1 + zeta E[q^{x_n+n}]/(1-q) + O(zeta^2)
    const double eps = 1e-4;
    for (const auto& p : {kGeneric, kRightOnly}) {
        const cplx up = det_mellin_barnes(p, 2, 1.0, cplx(0.0, eps), 1e-12).value;
        const cplx dn = det_mellin_barnes(p, 2, 1.0, cplx(0.0, -eps), 1e-12).value;
        const double slope = ((up - dn) / cplx(0.0, 2.0 * eps)).real();
        EXPECT_NEAR(slope * (1.0 - p.q), moment_contour(p, {2}, 1.0).value, 1e-6);
    }
}

TEST(MellinBarnes, ContourInvariance) {
    const auto base = default_mb_contours(kGeneric);
    const cplx ref = det_mellin_barnes(kGeneric, 2, 2.0, -0.3, base, 1e-10).value;
    auto smaller = base;
    smaller.radius *= 0.6;
    auto longer = base;
    longer.half_length = 20.0;
    longer.inner_start = 401;
    EXPECT_LT(std::abs(det_mellin_barnes(kGeneric, 2, 2.0, -0.3, smaller, 1e-10).value - ref), 1e-7);
    EXPECT_LT(std::abs(det_mellin_barnes(kGeneric, 2, 2.0, -0.3, longer, 1e-10).value - ref), 1e-7);
}

TEST(MellinBarnes, IsAProbabilityWeightForNegativeZeta) {
    for (double zeta : {-0.05, -0.5, -2.0, -20.0}) {
        const double v = det_mellin_barnes(kRightOnly, 2, 1.0, zeta).value.real();
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-9);
    }
}

TEST(MellinBarnes, MatchesSimulationWithoutLeftJumps) {
    const double zeta = -0.5;
    const auto mc = eq_laplace_monte_carlo(kRightOnly, 2, 2.0, zeta, 200000, 5, 4);
    const double det = det_mellin_barnes(kRightOnly, 2, 2.0, zeta).value.real();
    EXPECT_LT(std::abs(mc.mean() - det), 4.0 * mc.stderr_mean()) << "mc " << mc.mean() << " det " << det;
}

TEST(MellinBarnes, MatchesSimulationWithLeftJumps) {
    const double zeta = -0.5;
    const auto mc = eq_laplace_monte_carlo(kGeneric, 2, 2.0, zeta, 200000, 6, 4);
    const double det = det_mellin_barnes(kGeneric, 2, 2.0, zeta).value.real();
    EXPECT_LT(std::abs(mc.mean() - det), 4.0 * mc.stderr_mean()) << "mc " << mc.mean() << " det " << det;
}

TEST(TracyWidom, PainleveReferenceValues) {
    for (const auto& r : kFgueReference) EXPECT_NEAR(tw_cdf(r.x), r.F, 1e-7) << "x " << r.x;
}

TEST(TracyWidom, LimitsAndMonotone) {
    EXPECT_EQ(tw_cdf(20.0), 1.0);
    EXPECT_EQ(tw_cdf(-20.0), 0.0);
    double prev = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double v = tw_cdf(-8.0 + 14.0 * i / 199.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(TracyWidom, DensityIsUnimodal) {
    const double h = 0.05;
    std::vector<double> dens;
    for (double x = -7.0; x <= 5.0; x += h) dens.push_back((tw_cdf(x + h) - tw_cdf(x - h)) / (2.0 * h));
    size_t peak = 0;
    for (size_t i = 0; i < dens.size(); ++i) {
        EXPECT_GE(dens[i], -1e-6);
        if (dens[i] > dens[peak]) peak = i;
    }
    for (size_t i = 1; i <= peak; ++i) EXPECT_GE(dens[i], dens[i - 1] - 1e-6);
    for (size_t i = peak + 1; i < dens.size(); ++i) EXPECT_LE(dens[i], dens[i - 1] + 1e-6);
}

TEST(KsDistance, Examples) {
    EXPECT_EQ(ks_distance({}, [](double) { return 0.5; }), 0.0);
    EXPECT_NEAR(ks_distance({0.5}, [](double x) { return x; }), 0.5, 1e-15);
    EXPECT_NEAR(ks_distance({0.25, 0.75}, [](double x) { return x; }), 0.25, 1e-15);
}

TEST(AsymptoticProbe, BulkDifferenceShrinks) {
    const ModelParams p(0.4, 0.4, 1.0, 0.0);
    const auto rep = asymptotic_probe(p, 0.5, {20.0, 50.0, 100.0}, 0.0);
    ASSERT_EQ(rep.rows.size(), 3u);
    // a trend, not a rate: floor(kappa t) makes consecutive steps uneven
    EXPECT_GT(rep.rows[0].diff, rep.rows[1].diff);
    EXPECT_GT(rep.rows[0].diff, rep.rows[2].diff);
    EXPECT_EQ(rep.rows[2].n, int(std::floor(rep.hydro.kappa * 100.0)));
}

TEST(AsymptoticProbe, LeftTail) {
    const ModelParams p(0.4, 0.4, 1.0, 0.0);
    const auto rep = asymptotic_probe(p, 0.5, {100.0}, -3.0);
    EXPECT_NEAR(rep.rows[0].det.real(), 1.0, 1e-3);
    EXPECT_NEAR(rep.rows[0].fgue, 1.0, 1e-3);
}

TEST(AsymptoticProbe, RightTail) {
    const ModelParams p(0.4, 0.4, 1.0, 0.0);
    const auto rep = asymptotic_probe(p, 0.5, {100.0}, 3.0);
    EXPECT_LT(rep.rows[0].diff, 1e-3) << "det " << rep.rows[0].det << " F " << rep.rows[0].fgue;
}

TEST(AsymptoticProbe, Refusals) {
    EXPECT_THROW(asymptotic_probe(kGeneric, 1.0, {20.0}, 0.0), DomainError);
    EXPECT_THROW(asymptotic_probe(ModelParams(0.6, 0.6, 0.9, 0.1), 1.0, {20.0}, 0.0, ProbeMode::FirstParticle),
                 DomainError);
    // q^theta below 2q/(1+q)
    EXPECT_THROW(asymptotic_probe(ModelParams(0.4, 0.4, 1.0, 0.0), 1.0, {20.0}, 0.0), DomainError);
}
