#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "qhahn/model.hpp"
#include "qhahn/qspecial.hpp"
#include "qhahn/sim.hpp"

namespace qhahn {

struct FanPosition {
    double theta, alpha, V;
    FanPosition(double q, double nu, double theta_) : theta(theta_), alpha(std::pow(q, theta_)) {
        if (!(theta_ > 0.0)) throw DomainError("fan parameter theta must be > 0");
        V = nu > 0.0 ? std::log(nu) / std::log(q) : INFINITY;
    }
};

struct HydroPoint {
    double theta = 0, rho = 0, j = 0, pi = 0, kappa = 0, sigma = 0, A = 0, lambda = 0;
};

namespace detail {

// sum_{m>=0} y_m e_k(c y_m) with y_m = x q^m and e_k(u) = E_k(u)/u, where E_k = (u d/du)^k [u/(1-u)]:
//   e_0 = 1/(1-u), e_1 = 1/(1-u)^2, e_2 = (1+u)/(1-u)^3, e_3 = (1+4u+u^2)/(1-u)^4.
// With c = 1 this is the Lambert sum behind Psi_q^{(k)}(Z); with c = nu it is Psi_q^{(k)}(Z+V)/nu
// with the constant removed, finite as nu -> 0. Converges for every x off the pole lattice.
inline cplx shifted_sum(cplx x, double c, double q, int k) {
    cplx s = 0.0;
    cplx y = x;
    for (int m = 0;; ++m) {
        if (m >= kMaxTerms) throw DomainError("shifted_sum: no convergence");
        const cplx u = c * y;
        const cplx d = 1.0 - u;
        if (std::abs(d) < 1e-14) throw DomainError("evaluation on a pole of the q-digamma function");
        cplx e;
        switch (k) {
            case 0: e = 1.0 / d; break;
            case 1: e = 1.0 / (d * d); break;
            case 2: e = (1.0 + u) / (d * d * d); break;
            case 3: e = (1.0 + 4.0 * u + u * u) / (d * d * d * d); break;
            default: throw DomainError("shifted_sum: order must be 0..3");
        }
        const cplx term = y * e;
        s += term;
        const double ay = std::abs(y);
        if (std::abs(u) < 0.5 && ay * q / (1.0 - q) * 4.0 * std::pow(2.0, k + 1) <= 1e-17 * std::max(std::abs(s), 1e-300))
            break;
        if (ay < 1e-300) break;
        y *= q;
    }
    return s;
}

// P[k] = Psi_q^{(k)}(Z), S[k] = (Psi_q^{(k)}(Z+V) + [k=0] log(1-q)) / nu, for q^Z = x.
struct PsiSums {
    cplx P[4], S[4];
};

inline PsiSums psi_sums(cplx x, double q, double nu) {
    PsiSums r;
    const double lq = std::log(q);
    double f = lq;
    for (int k = 0; k < 4; ++k) {
        r.P[k] = f * shifted_sum(x, 1.0, q, k);
        r.S[k] = f * shifted_sum(x, nu, q, k);
        f *= lq;
    }
    r.P[0] -= std::log1p(-q);
    return r;
}

inline void check_theta(double theta) {
    if (!(theta > 0.0)) throw DomainError("fan parameter theta must be > 0, got " + std::to_string(theta));
}

}  // namespace detail

// log q + Psi_q(theta) - Psi_q(theta+V)
inline double hydro_denominator(const ModelParams& p, const detail::PsiSums& s) {
    return std::log(p.q) + s.P[0].real() - (p.nu * s.S[0].real() - std::log1p(-p.q));
}

inline double density(const ModelParams& p, double theta) {
    detail::check_theta(theta);
    const auto s = detail::psi_sums(std::pow(p.q, theta), p.q, p.nu);
    return std::log(p.q) / hydro_denominator(p, s);
}

inline double flux(const ModelParams& p, double theta) {
    detail::check_theta(theta);
    const auto s = detail::psi_sums(std::pow(p.q, theta), p.q, p.nu);
    const double lq = std::log(p.q);
    const double rho = lq / hydro_denominator(p, s);
    return rho * (1.0 - p.q) / (lq * lq) * (p.R * s.S[1].real() - p.L * s.P[1].real());
}

inline HydroPoint pi_kappa_sigma(const ModelParams& p, double theta) {
    detail::check_theta(theta);
    const auto s = detail::psi_sums(std::pow(p.q, theta), p.q, p.nu);
    const double q = p.q, nu = p.nu, R = p.R, L = p.L, lq = std::log(q);
    const double P1 = s.P[1].real(), P2 = s.P[2].real(), P3 = s.P[3].real();
    const double S1 = s.S[1].real(), S2 = s.S[2].real(), S3 = s.S[3].real();
    const double D = hydro_denominator(p, s);
    const double dpsi = P1 - nu * S1;  // Psi'(theta) - Psi'(theta+V)
    const double mix2 = R * S2 - L * P2;
    HydroPoint h;
    h.theta = theta;
    h.rho = lq / D;
    h.j = h.rho * (1.0 - q) / (lq * lq) * (R * S1 - L * P1);
    h.pi = (1.0 - q) / (lq * lq) * (R * (S1 - S2 * D / dpsi) - L * (P1 - P2 * D / dpsi));
    h.kappa = (1.0 - q) / lq * mix2 / dpsi;
    h.A = lq * dpsi / (D * D * D);
    const double X = R * S3 - L * P3 - mix2 * (P2 - nu * S2) / dpsi;
    const double jpp = (1.0 - q) / (lq * lq * lq) * D * D * D / (dpsi * dpsi) * X;
    h.lambda = -jpp;
    const double s3 = (q - 1.0) / (2.0 * lq * lq * lq * lq) * X;
    if (!(s3 > 0.0)) throw DomainError("nonpositive fluctuation scale; parameters outside the model range");
    h.sigma = std::cbrt(s3);
    return h;
}

// nu = q forms written with Psi_q(theta+1); an independent path for the same quantities.
struct MadmIntro {
    double rho, pi, kappa;
};

inline MadmIntro madm_intro(const ModelParams& p, double theta) {
    detail::check_theta(theta);
    if (!p.is_madm()) throw DomainError("madm_intro requires nu = q");
    const QParam qp(p.q);
    const double q = p.q, lq = std::log(q), a = std::pow(q, theta);
    const double d1 = q_digamma(theta, qp, 1), d1s = q_digamma(theta + 1.0, qp, 1);
    const double d2 = q_digamma(theta, qp, 2), d2s = q_digamma(theta + 1.0, qp, 2);
    const double c = (1.0 - a) / (a * lq);
    MadmIntro m;
    m.rho = 1.0 - a;
    m.pi = (1.0 - q) / (lq * lq) * (p.R / q * (d1s - c * d2s) - p.L * (d1 - d2 * c));
    m.kappa = (1.0 - q) / (lq * lq * lq) * (1.0 - a) * (1.0 - a) / a * (p.R / q * d2s - p.L * d2);
    return m;
}

inline double kappa_at(const ModelParams& p, double theta) { return pi_kappa_sigma(p, theta).kappa; }

// theta values whose alpha = q^theta is log-spaced in [alpha_lo, alpha_hi]
inline std::vector<double> theta_grid(double q, int n, double alpha_lo, double alpha_hi) {
    if (n < 2 || !(alpha_lo > 0.0 && alpha_lo < alpha_hi && alpha_hi < 1.0))
        throw DomainError("theta_grid: need n >= 2 and 0 < alpha_lo < alpha_hi < 1");
    std::vector<double> th(n);
    const double a = std::log(alpha_lo), b = std::log(alpha_hi), lq = std::log(q);
    for (int i = 0; i < n; ++i) th[i] = (a + (b - a) * i / (n - 1)) / lq;
    std::sort(th.begin(), th.end());
    return th;
}

// Root of kappa: sign scan over 200 log-spaced theta, then bisection.
inline double theta0(const ModelParams& p) {
    if (!(p.R > p.L && p.L > 0.0)) throw DomainError("no jam point (check R > L > 0)");
    const double lq = std::log(p.q);
    const double lo = 1e-4, hi = std::log(1e-12) / lq;
    constexpr int kScan = 200;
    std::vector<double> th(kScan), kv(kScan);
    for (int i = 0; i < kScan; ++i) {
        th[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (kScan - 1));
        kv[i] = kappa_at(p, th[i]);
    }
    int changes = 0, at = -1;
    for (int i = 1; i < kScan; ++i)
        if ((kv[i - 1] < 0.0) != (kv[i] < 0.0)) {
            ++changes;
            at = i;
        }
    if (changes == 0) throw DomainError("no jam point (check R > L > 0)");
    if (changes > 1) throw DomainError("kappa has " + std::to_string(changes) + " sign changes; theta0 is not unique");
    double a = th[at - 1], b = th[at];
    double ka = kv[at - 1];
    while (b - a > 1e-12 * std::max(1.0, b)) {
        const double m = 0.5 * (a + b);
        const double km = kappa_at(p, m);
        if ((km < 0.0) == (ka < 0.0)) {
            a = m;
            ka = km;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// Threshold on R above which the jam point satisfies q^{theta0} > 2q/(1+q) (nu = q).
inline double r_min(QParam qp) {
    const double q = qp.q;
    const double tm = std::log(2.0 * q / (1.0 + q)) / std::log(q);
    const double a = q_digamma(tm, qp, 2), b = q_digamma(tm + 1.0, qp, 2);
    return q * a / (q * a + b);
}

// f0 and its derivatives with kappa, pi frozen at theta.
class F0Profile {
public:
    F0Profile(const ModelParams& p, double theta) : p_(p), theta_(theta) {
        const auto h = pi_kappa_sigma(p, theta);
        kappa_ = h.kappa;
        pi_ = h.pi;
    }

    double theta() const { return theta_; }
    double kappa() const { return kappa_; }
    double pi() const { return pi_; }

    cplx value(cplx Z) const { return eval(Z, 0); }
    cplx d1(cplx Z) const { return eval(Z, 1); }
    cplx d2(cplx Z) const { return eval(Z, 2); }
    cplx d3(cplx Z) const { return eval(Z, 3); }

    cplx eval(cplx Z, int order) const {
        const double q = p_.q, nu = p_.nu, R = p_.R, L = p_.L, lq = std::log(q);
        const cplx x = std::exp(Z * lq);
        if (std::abs(1.0 - x) < 1e-14) throw DomainError("f0: q^Z = 1 is a pole of log(1-q^Z)");
        const double c = (1.0 - q) / lq;
        auto S = [&](int k) {
            return std::pow(lq, k + 1) * detail::shifted_sum(x, nu, q, k);
        };
        auto P = [&](int k) {
            cplx v = std::pow(lq, k + 1) * detail::shifted_sum(x, 1.0, q, k);
            if (k == 0) v -= std::log1p(-q);
            return v;
        };
        switch (order) {
            case 0: {
                cplx logratio = 0.0, y = x;
                for (int m = 0; m < detail::kMaxTerms && std::abs(y) > 1e-18; ++m, y *= q)
                    logratio += std::log(1.0 - y) - std::log(1.0 - nu * y);
                cplx v = kappa_ * logratio + c * (R * S(0) - L * P(0)) - Z * lq * (kappa_ + pi_);
                if (nu > 0.0) v -= c * R / nu * std::log1p(-q);
                return v;
            }
            case 1: {
                const cplx psiv = nu * S(0) - std::log1p(-q);
                return kappa_ * (psiv - P(0)) + c * (R * S(1) - L * P(1)) - lq * (kappa_ + pi_);
            }
            case 2: return kappa_ * (nu * S(1) - P(1)) + c * (R * S(2) - L * P(2));
            case 3: return kappa_ * (nu * S(2) - P(2)) + c * (R * S(3) - L * P(3));
            default: throw DomainError("f0: derivative order must be 0..3");
        }
    }

private:
    ModelParams p_;
    double theta_, kappa_ = 0, pi_ = 0;
};

inline F0Profile f0_profile(const ModelParams& p, double theta) {
    detail::check_theta(theta);
    return F0Profile(p, theta);
}

struct SteepDescentReport {
    int grid = 0;
    bool circle_increasing = false;   // Re f0(W(u)) along the circle around 1 in the w = q^W plane
    bool line_decreasing = false;     // Re f0(theta + iu/|log q|)
    double min_slope_circle = 0;      // min forward-difference slope of Re f0(W(u))
    double min_slope_line = 0;        // min forward-difference slope of -Re f0(Z(u))
    double slope_at_zero_circle = 0;  // first difference quotient; vanishes with the grid step
    double slope_at_zero_line = 0;
    bool ok() const { return circle_increasing && line_decreasing; }
};

inline bool steep_descent_admissible(double q, double theta) {
    return std::pow(q, theta) > 2.0 * q / (1.0 + q);
}

inline SteepDescentReport steep_descent_scan(const ModelParams& p, double theta, int grid = 512) {
    if (!p.is_madm()) throw DomainError("steep_descent_scan requires nu = q");
    detail::check_theta(theta);
    if (grid < 2) throw DomainError("steep_descent_scan: grid must be >= 2");
    const double q = p.q, alpha = std::pow(q, theta), lq = std::log(q);
    if (!steep_descent_admissible(q, theta))
        throw DomainError("restrictive condition q^theta > 2q/(1+q) violated: alpha = " + std::to_string(alpha) +
                          ", 2q/(1+q) = " + std::to_string(2.0 * q / (1.0 + q)));
    const F0Profile f(p, theta);
    SteepDescentReport r;
    r.grid = grid;
    const double du = M_PI / grid;
    std::vector<double> circ(grid + 1), line(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        const double u = du * i;
        const cplx w = 1.0 - (1.0 - alpha) * std::exp(cplx(0.0, u));
        const cplx W = i == 0 ? cplx(theta, 0.0) : std::log(w) / lq;
        circ[i] = f.value(W).real();
        line[i] = f.value(cplx(theta, u / std::abs(lq))).real();
    }
    r.circle_increasing = r.line_decreasing = true;
    r.min_slope_circle = r.min_slope_line = INFINITY;
    for (int i = 1; i <= grid; ++i) {
        const double sc = (circ[i] - circ[i - 1]) / du;
        const double sl = (line[i - 1] - line[i]) / du;
        if (!(sc > 0.0)) r.circle_increasing = false;
        if (!(sl > 0.0)) r.line_decreasing = false;
        r.min_slope_circle = std::min(r.min_slope_circle, sc);
        r.min_slope_line = std::min(r.min_slope_line, sl);
        if (i == 1) {
            r.slope_at_zero_circle = sc;
            r.slope_at_zero_line = sl;
        }
    }
    return r;
}

inline void write_hydro_curve(std::ostream& os, const ModelParams& p, const std::vector<double>& thetas) {
    os << "theta,rho,j,pi,kappa,sigma\n";
    for (double th : thetas) {
        const auto h = pi_kappa_sigma(p, th);
        os << fmt17(th) << ',' << fmt17(h.rho) << ',' << fmt17(h.j) << ',' << fmt17(h.pi) << ','
           << fmt17(h.kappa) << ',' << fmt17(h.sigma) << '\n';
    }
}

inline void write_flux_curve(std::ostream& os, const ModelParams& p, const std::vector<double>& thetas) {
    os << "rho,j\n";
    std::vector<std::pair<double, double>> rows;
    for (double th : thetas) {
        const auto h = pi_kappa_sigma(p, th);
        rows.emplace_back(h.rho, h.j);
    }
    std::sort(rows.begin(), rows.end());
    for (auto& [r, j] : rows) os << fmt17(r) << ',' << fmt17(j) << '\n';
}

}  // namespace qhahn
