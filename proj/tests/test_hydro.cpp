#include <gtest/gtest.h>

#include <cmath>

#include "qhahn/hydro.hpp"
#include "qhahn/sim.hpp"

using namespace qhahn;

namespace {

// Mean particle velocity under the product measure, from the raw jump rates.
double product_measure_velocity(const ModelParams& p, double theta) {
    const auto pmf = stationary_gap_pmf(p, std::pow(p.q, theta));
    double v = 0.0;
    for (size_t m = 0; m < pmf.size(); ++m) {
        double r = 0.0, l = 0.0;
        for (int j = 1; j <= int(m); ++j) {
            r += j * phi_right(p, j, int(m));
            l += j * phi_left(p, j, int(m));
        }
        v += pmf[m] * (r - l);  // right jumps use the right gap, left jumps the left gap; both have law pmf
    }
    return v;
}

double mean_gap(const ModelParams& p, double theta) {
    const auto pmf = stationary_gap_pmf(p, std::pow(p.q, theta));
    double g = 0.0;
    for (size_t m = 0; m < pmf.size(); ++m) g += double(m) * pmf[m];
    return g;
}

const ModelParams kGeneric(0.5, 0.25, 0.7, 0.3);
const ModelParams kMadm(0.6, 0.6, 0.8, 0.2);
const ModelParams kQtasepLike(0.4, 0.0, 0.9, 0.1);

}  // namespace

TEST(Density, MadmClosedForm) {
    for (double th : {0.1, 0.7, 2.0, 5.0}) EXPECT_NEAR(density(kMadm, th), 1.0 - std::pow(0.6, th), 1e-12);
}

TEST(Density, MatchesMeanGap) {
    for (const auto& p : {kGeneric, kMadm, kQtasepLike})
        for (double th : {0.3, 1.0, 2.5}) EXPECT_NEAR(density(p, th), 1.0 / (1.0 + mean_gap(p, th)), 1e-10);
}

TEST(Flux, MatchesProductMeasureDrift) {
    for (const auto& p : {kGeneric, kMadm, kQtasepLike})
        for (double th : {0.3, 1.0, 2.5})
            EXPECT_NEAR(flux(p, th) / density(p, th), product_measure_velocity(p, th), 1e-8) << "theta " << th;
}

TEST(Flux, LimitsAtEmptyAndJammed) {
    // large theta jams the system, small theta empties it
    EXPECT_LT(std::abs(flux(kGeneric, 60.0)), 1e-12);
    EXPECT_GT(density(kGeneric, 60.0), 1.0 - 1e-12);
    EXPECT_LT(density(kGeneric, 1e-7), 1e-5);
    // left jumps of a nearly isolated particle have unbounded mean size, so the empty limit of j
    // is only zero when L = 0
    EXPECT_LT(std::abs(flux(ModelParams(0.5, 0.25, 1.0, 0.0), 1e-7)), 1e-5);
}

TEST(Flux, ChangesSignWithLeftJumps) {
    const ModelParams fig2(0.4, 0.4, 0.95, 0.05);
    bool neg = false, pos = false;
    for (double th : theta_grid(0.4, 200, 1e-6, 0.999)) {
        const double j = flux(fig2, th);
        neg |= j < 0.0;
        pos |= j > 0.0;
    }
    EXPECT_TRUE(neg);
    EXPECT_TRUE(pos);
}

TEST(Hydro, MadmIndependentPath) {
    for (double th : {0.2, 0.8, 1.7, 4.0}) {
        const auto h = pi_kappa_sigma(kMadm, th);
        const auto m = madm_intro(kMadm, th);
        EXPECT_NEAR(h.rho, m.rho, 1e-10);
        EXPECT_NEAR(h.pi, m.pi, 1e-10);
        EXPECT_NEAR(h.kappa, m.kappa, 1e-10);
    }
    EXPECT_THROW(madm_intro(kGeneric, 1.0), DomainError);
}

TEST(Hydro, VelocityIsFluxDerivative) {
    const double h = 1e-5;
    for (const auto& p : {kGeneric, kMadm, kQtasepLike})
        for (double th : {0.4, 1.0, 3.0}) {
            const double fd = (flux(p, th + h) - flux(p, th - h)) / (density(p, th + h) - density(p, th - h));
            EXPECT_NEAR(pi_kappa_sigma(p, th).pi, fd, 1e-6);
        }
}

TEST(Hydro, KappaIsInterceptOfTangent) {
    for (const auto& p : {kGeneric, kMadm, kQtasepLike})
        for (double th : {0.4, 1.0, 3.0}) {
            const auto h = pi_kappa_sigma(p, th);
            EXPECT_NEAR(h.kappa, h.j - h.rho * h.pi, 1e-10);
        }
}

TEST(Hydro, LoneParticleVelocity) {
    // with left jumps the lone-particle drift diverges, so only the right-only case has a limit
    const ModelParams p(0.5, 0.25, 1.0, 0.0);
    double v = 0.0;
    for (int j = 1; j <= 200; ++j) v += j * phi_right(p, j, kInf);
    EXPECT_NEAR(pi_kappa_sigma(p, 1e-7).pi, v, 1e-4);
}

TEST(Hydro, CurvatureAndScaleInvariants) {
    const double h = 1e-4;
    for (const auto& p : {kGeneric, kMadm, kQtasepLike})
        for (double th : {0.5, 1.0, 2.0}) {
            const auto c = pi_kappa_sigma(p, th);
            const auto a = pi_kappa_sigma(p, th + h), b = pi_kappa_sigma(p, th - h);
            EXPECT_NEAR(c.lambda, -(a.pi - b.pi) / (a.rho - b.rho), 1e-5 * std::max(1.0, std::abs(c.lambda)));
            EXPECT_NEAR(std::pow(c.sigma, 3), c.lambda * c.A * c.A / (2.0 * std::pow(c.rho, 3)), 1e-10);
            const double lq = std::log(p.q);
            const double f3 = f0_profile(p, th).d3(th).real();
            EXPECT_NEAR(std::pow(c.sigma, 3), -f3 / (2.0 * lq * lq * lq), 1e-9);
        }
}

TEST(Hydro, DensityIncreasesInTheta) {
    double prev = -1.0;
    for (double th : theta_grid(0.5, 100, 1e-6, 0.999)) {
        const double r = density(kGeneric, th);
        EXPECT_GT(r, prev);
        prev = r;
    }
    EXPECT_THROW(density(kGeneric, 0.0), DomainError);
}

TEST(F0, DoubleCriticalPoint) {
    for (const auto& p : {kGeneric, kMadm, kQtasepLike})
        for (double th : {0.5, 1.3}) {
            const auto f = f0_profile(p, th);
            EXPECT_LT(std::abs(f.d1(th)), 1e-10);
            EXPECT_LT(std::abs(f.d2(th)), 1e-10);
            EXPECT_GT(std::abs(f.d3(th)), 1e-6);
            const double h = 1e-4;
            const cplx fd = (f.value(th + h) - f.value(th - h)) / (2.0 * h);
            EXPECT_LT(std::abs(fd - f.d1(th)), 1e-7);
        }
}

TEST(JamPoint, RootOfKappa) {
    const ModelParams fig6(0.6, 0.6, 0.9, 0.1);
    const double t0 = theta0(fig6);
    EXPECT_LT(std::abs(kappa_at(fig6, t0)), 1e-10);
    EXPECT_NEAR(t0, 0.590912, 1e-6);
    EXPECT_NEAR(density(fig6, t0), 0.260553, 1e-6);
    EXPECT_THROW(theta0(ModelParams(0.6, 0.6, 1.0, 0.0)), DomainError);
    EXPECT_THROW(theta0(ModelParams(0.6, 0.6, 0.4, 0.6)), DomainError);
}

TEST(JamPoint, ThresholdExamples) {
    EXPECT_NEAR(r_min(QParam(0.1)), 0.657, 1e-3);
    EXPECT_NEAR(r_min(QParam(0.4)), 0.857, 1e-3);
    EXPECT_NEAR(r_min(QParam(0.6)), 0.908, 1e-3);
    EXPECT_NEAR(r_min(QParam(0.9)), 0.946, 1e-3);
    // at R = R_min the jam point sits exactly on the restrictive boundary
    for (double q : {0.2, 0.5, 0.8}) {
        const double r = r_min(QParam(q));
        const double t0 = theta0(ModelParams(q, q, r, 1.0 - r));
        EXPECT_NEAR(std::pow(q, t0), 2.0 * q / (1.0 + q), 1e-8);
    }
}

TEST(SteepDescent, AdmissibleExamples) {
    for (double q : {0.2, 0.5, 0.8}) {
        const ModelParams p(q, q, 1.0, 0.0);
        const double alpha = 0.5 * (2.0 * q / (1.0 + q) + 1.0);
        const auto r = steep_descent_scan(p, std::log(alpha) / std::log(q));
        EXPECT_TRUE(r.ok()) << "q " << q;
        EXPECT_GT(r.min_slope_line, 0.0);
    }
}

TEST(SteepDescent, RefusesOutsideRestrictiveRegion) {
    const ModelParams p(0.5, 0.5, 1.0, 0.0);
    const double alpha = 0.5 * (2.0 * 0.5 / 1.5);
    try {
        steep_descent_scan(p, std::log(alpha) / std::log(0.5));
        FAIL() << "expected refusal";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("2q/(1+q)"), std::string::npos);
    }
    EXPECT_THROW(steep_descent_scan(kGeneric, 1.0), DomainError);
}
