#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/airy.hpp>

#include "qhahn/hydro.hpp"
#include "qhahn/model.hpp"
#include "qhahn/qspecial.hpp"

namespace qhahn {

// Quadrature nodes with weights for the measure dw/(2 pi i) along the contour.
struct ContourSpec {
    enum class Kind { Circle, VLine };
    Kind kind = Kind::Circle;
    cplx center = 1.0;       // circle center
    double radius = 0.1;     // circle radius
    double anchor = 0.5;     // vline real part
    double half_length = 14; // vline |Im| cutoff
    int n_nodes = 0;
    std::vector<cplx> nodes, weights;

    // Trapezoid rule on a positively oriented circle.
    static ContourSpec circle(cplx center, double radius, int n) {
        ContourSpec c;
        c.kind = Kind::Circle;
        c.center = center;
        c.radius = radius;
        c.n_nodes = n;
        c.nodes.resize(n);
        c.weights.resize(n);
        for (int k = 0; k < n; ++k) {
            const cplx e = std::exp(cplx(0.0, 2.0 * M_PI * (k + 0.5) / n));
            c.nodes[k] = center + radius * e;
            c.weights[k] = radius * e / double(n);
        }
        return c;
    }

    // Trapezoid rule on anchor + i[-S, S], oriented upward; |pi/sin(pi s)| <= 2 pi e^{-pi |y|} bounds the tail.
    static ContourSpec vline(double anchor, double half_length, int n) {
        ContourSpec c;
        c.kind = Kind::VLine;
        c.anchor = anchor;
        c.half_length = half_length;
        c.n_nodes = n;
        c.nodes.resize(n);
        c.weights.resize(n);
        const double h = 2.0 * half_length / (n - 1);
        for (int k = 0; k < n; ++k) {
            c.nodes[k] = cplx(anchor, -half_length + h * k);
            c.weights[k] = h / (2.0 * M_PI) * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
        }
        return c;
    }
};

struct DetResult {
    cplx value = 1.0;
    int n_nodes = 0;
    int inner_nodes = 0;
    double est_error = 0.0;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline cplx log_qpoch_inf(cplx a, double q) {
    cplx s = 0.0;
    cplx aq = a;
    for (int k = 0; k < kMaxTerms && std::abs(aq) > 1e-18; ++k, aq *= q) {
        const cplx f = 1.0 - aq;
        if (std::abs(f) < 1e-14) throw DomainError("kernel_g: argument on a singular lattice");
        s += std::log(f);
    }
    return s;
}

}  // namespace detail

// log g(w); g has zeros/poles on q^{-k} and nu^{-1} q^{-k}.
inline cplx log_kernel_g(const ModelParams& p, int n, double t, cplx w) {
    const double q = p.q, nu = p.nu;
    const cplx lnu = nu > 0.0 ? detail::log_qpoch_inf(nu * w, q) : cplx(0.0);
    const cplx lw = detail::log_qpoch_inf(w, q);
    // sum_k (R/nu) nu w q^k/(1 - nu w q^k) - L w q^k/(1 - w q^k)
    const cplx expo = p.R * detail::shifted_sum(w, nu, q, 0) - p.L * detail::shifted_sum(w, 1.0, q, 0);
    return double(n) * (lnu - lw) + (q - 1.0) * t * expo - lnu;
}

inline cplx kernel_g(const ModelParams& p, int n, double t, cplx w) { return std::exp(log_kernel_g(p, n, t, w)); }

// g(w)/g(qw) in closed form.
inline cplx kernel_g_ratio(const ModelParams& p, int n, double t, cplx w) {
    const double q = p.q, nu = p.nu;
    const cplx a = 1.0 - nu * w, b = 1.0 - w;
    if (std::abs(a) < 1e-14 || std::abs(b) < 1e-14) throw DomainError("kernel ratio: singular point");
    return std::pow(a / b, n) * std::exp((q - 1.0) * t * (p.R * w / a - p.L * w / b)) / a;
}

// Contour pair for the Mellin-Barnes determinant: outer circle for w and the line Re Z = anchor with
// Z = s + log_q(w); the Nystrom matrix then factors through the Z nodes.
struct MbContours {
    cplx center = 1.0;
    double radius = 0.1;
    double anchor = 0.5;
    double half_length = 14.0;
    int outer_start = 32;
    int inner_start = 281;  // step 0.1 on [-14, 14]
    int outer_max = 512;
};

inline MbContours default_mb_contours(const ModelParams& p) {
    MbContours c;
    const double sq = std::sqrt(p.q);
    double r = (1.0 - sq) / (1.0 + sq);
    if (p.nu > 0.0) r = std::min(r, 1.0 / p.nu - 1.0);
    c.radius = 0.5 * r;
    return c;
}

namespace detail {

inline cplx fredholm_det(const Eigen::MatrixXcd& K, const std::vector<cplx>& wts) {
    const int N = int(K.rows());
    Eigen::VectorXcd sw(N);
    for (int i = 0; i < N; ++i) sw[i] = std::sqrt(wts[i]);
    Eigen::MatrixXcd M = sw.asDiagonal() * K * sw.asDiagonal();
    M += Eigen::MatrixXcd::Identity(N, N);
    return M.partialPivLu().determinant();
}

// Each refinement doubles the outer nodes and halves the inner step.
template <class Eval>
DetResult refine(Eval&& eval, int outer0, int inner0, int outer_max, double tol, const char* what) {
    DetResult r;
    int N = outer0, Ny = inner0;
    cplx prev = eval(N, Ny);
    double err = INFINITY;
    for (;;) {
        const int N2 = 2 * N, Ny2 = Ny > 0 ? 2 * Ny - 1 : 0;
        if (N2 > outer_max) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3g", err);
            throw ConvergenceError(std::string(what) + ": no convergence up to " + std::to_string(outer_max) +
                                   " outer nodes (last change " + buf + ")");
        }
        const cplx cur = eval(N2, Ny2);
        err = std::abs(cur - prev);
        if (std::getenv("QHAHN_TRACE")) std::fprintf(stderr, "%s N=%d Ny=%d value=%.12g%+.3gi change=%.3g\n", what, N2, Ny2, cur.real(), cur.imag(), err);
        N = N2;
        Ny = Ny2;
        prev = cur;
        if (err < tol) {
            r.value = cur;
            r.n_nodes = N;
            r.inner_nodes = Ny;
            r.est_error = err;
            return r;
        }
    }
}

}  // namespace detail

// One Nystrom level of det(I + K_zeta) with N outer and Ny inner nodes; log_mz = log(-zeta), principal branch.
inline cplx mellin_barnes_level(const ModelParams& p, int n, double t, cplx log_mz, const MbContours& c, int N, int Ny) {
    const double lq = std::log(p.q);
    const auto outer = ContourSpec::circle(c.center, c.radius, N);
    const auto inner = ContourSpec::vline(c.anchor, c.half_length, Ny);
    std::vector<cplx> W(N), lga(N), xz(Ny), lgz(Ny);
    for (int a = 0; a < N; ++a) {
        W[a] = std::log(outer.nodes[a]) / lq;
        lga[a] = log_kernel_g(p, n, t, outer.nodes[a]);
    }
    for (int y = 0; y < Ny; ++y) {
        xz[y] = std::exp(inner.nodes[y] * lq);
        lgz[y] = log_kernel_g(p, n, t, xz[y]);
    }
    Eigen::MatrixXcd C(N, Ny), B(Ny, N);
    for (int a = 0; a < N; ++a)
        for (int y = 0; y < Ny; ++y) {
            const cplx s = inner.nodes[y] - W[a];
            C(a, y) = inner.weights[y] * M_PI / std::sin(-M_PI * s) * std::exp(s * log_mz + lga[a] - lgz[y]);
        }
    for (int y = 0; y < Ny; ++y)
        for (int b = 0; b < N; ++b) B(y, b) = 1.0 / (xz[y] - outer.nodes[b]);
    const Eigen::MatrixXcd K = C * B;
    return detail::fredholm_det(K, outer.weights);
}

inline DetResult det_mellin_barnes_log(const ModelParams& p, int n, double t, cplx log_mz, const MbContours& c,
                                       double tol = 1e-8) {
    if (n < 1) throw DomainError("det_mellin_barnes: n must be >= 1");
    auto eval = [&](int N, int Ny) { return mellin_barnes_level(p, n, t, log_mz, c, N, Ny); };
    return detail::refine(eval, c.outer_start, c.inner_start, c.outer_max, tol, "det_mellin_barnes");
}

// E[1/(zeta q^{x_n+n}; q)_inf] as det(I + K_zeta) on the outer circle.
inline DetResult det_mellin_barnes(const ModelParams& p, int n, double t, cplx zeta, const MbContours& c,
                                   double tol = 1e-8) {
    if (zeta.imag() == 0.0 && zeta.real() > 0.0)
        throw DomainError("det_mellin_barnes: zeta must lie off the positive real axis");
    if (n < 1) throw DomainError("det_mellin_barnes: n must be >= 1");
    if (zeta == 0.0) return DetResult{1.0, 0, 0, 0.0};
    return det_mellin_barnes_log(p, n, t, std::log(-zeta), c, tol);
}

inline DetResult det_mellin_barnes(const ModelParams& p, int n, double t, cplx zeta, double tol = 1e-8) {
    return det_mellin_barnes(p, n, t, zeta, default_mb_contours(p), tol);
}

// Radius of the circle around 0 and 1 for the Cauchy form; it must stay inside 1/nu.
inline double default_cauchy_radius(const ModelParams& p) {
    return p.nu > 0.0 ? std::min(2.0, std::sqrt(1.0 / p.nu)) : 2.0;
}

inline DetResult det_cauchy(const ModelParams& p, int n, double t, cplx zeta, double radius, double tol,
                            int outer_max = 512) {
    if (!(radius > 1.0) || (p.nu > 0.0 && !(radius < 1.0 / p.nu)))
        throw DomainError("det_cauchy: circle must enclose 0 and 1 and exclude 1/nu");
    if (n < 1) throw DomainError("det_cauchy: n must be >= 1");
    const cplx poch = q_pochhammer(zeta, QParam(p.q), kInf);
    if (std::abs(poch) < 1e-300) throw DomainError("det_cauchy: (zeta;q)_inf vanishes");
    auto eval = [&](int N, int) {
        const auto c = ContourSpec::circle(0.0, radius, N);
        Eigen::MatrixXcd K(N, N);
        for (int a = 0; a < N; ++a) {
            const cplx ra = zeta * kernel_g_ratio(p, n, t, c.nodes[a]);
            for (int b = 0; b < N; ++b) K(a, b) = ra / (p.q * c.nodes[b] - c.nodes[a]);
        }
        return detail::fredholm_det(K, c.weights) / poch;
    };
    return detail::refine(eval, 64, 0, outer_max, tol, "det_cauchy");
}

inline DetResult det_cauchy(const ModelParams& p, int n, double t, cplx zeta, double tol = 1e-8) {
    return det_cauchy(p, n, t, zeta, default_cauchy_radius(p), tol, 512);
}

// Gauss-Legendre nodes and weights on [0, 1].
inline void gauss_legendre01(int m, std::vector<double>& x, std::vector<double>& w) {
    x.assign(m, 0.0);
    w.assign(m, 0.0);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= m; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = m * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = 0.5 * (1.0 - z);
        x[m - 1 - i] = 0.5 * (1.0 + z);
        w[i] = w[m - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

// F_GUE(x) = det(I - K_Ai) on L^2(x, inf). The half-line is mapped to [0,1) by s = x - 8 log(1-u),
// then Gauss-Legendre; nodes double until successive values agree to 1e-12.
inline double tw_cdf(double x) {
    if (x > 16.0) return 1.0;
    if (x < -14.0) return 0.0;
    auto eval = [x](int m) {
        std::vector<double> u, wu;
        gauss_legendre01(m, u, wu);
        std::vector<double> s(m), sw(m), ai(m), aip(m);
        for (int i = 0; i < m; ++i) {
            s[i] = x - 8.0 * std::log1p(-u[i]);
            sw[i] = std::sqrt(wu[i] * 8.0 / (1.0 - u[i]));
            ai[i] = boost::math::airy_ai(s[i]);
            aip[i] = boost::math::airy_ai_prime(s[i]);
        }
        Eigen::MatrixXd M(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double k;
                if (i == j || std::abs(s[i] - s[j]) < 1e-12)
                    k = aip[i] * aip[i] - s[i] * ai[i] * ai[i];
                else
                    k = (ai[i] * aip[j] - aip[i] * ai[j]) / (s[i] - s[j]);
                M(i, j) = (i == j ? 1.0 : 0.0) - sw[i] * k * sw[j];
            }
        return M.partialPivLu().determinant();
    };
    int m = 24;
    double prev = eval(m);
    for (; m <= 384;) {
        m *= 2;
        const double cur = eval(m);
        if (std::abs(cur - prev) < 1e-12) return std::clamp(cur, 0.0, 1.0);
        prev = cur;
    }
    return std::clamp(prev, 0.0, 1.0);
}

// sup |F_emp - F| over the sample; F evaluated once per distinct value.
template <class Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf) {
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size();) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        const double F = cdf(samples[i]);
        d = std::max({d, std::abs(double(j) / n - F), std::abs(double(i) / n - F)});
        i = j;
    }
    return d;
}

enum class ProbeMode { Bulk, FirstParticle };

struct ProbeRow {
    double t = 0;
    int n = 0;
    double log_minus_zeta = 0;  // log(-zeta)
    cplx det;
    double fgue = 0;            // F_GUE(-x)
    double diff = 0;            // |det - F_GUE(-x)|
    DetResult detail;
};

struct ProbeReport {
    ProbeMode mode = ProbeMode::Bulk;
    double theta = 0, x = 0, alpha = 0;
    HydroPoint hydro;
    std::vector<ProbeRow> rows;
};

// Fredholm determinant along the scaling zeta = -q^{-kappa t - pi t - t^{1/3} sigma x}, with the contours
// passed through the critical point: w = 1 - (1-alpha)(1-eta) e^{iu} and Re Z = theta. In first-particle
// mode n = 1 and theta = theta0; the extra Pochhammer factor of that kernel is the n = 1 power in g.
inline ProbeReport asymptotic_probe(const ModelParams& p, double theta, const std::vector<double>& ts, double x,
                                    ProbeMode mode = ProbeMode::Bulk, double eta = 0.3, double tol = 1e-7) {
    if (!p.is_madm()) throw DomainError("asymptotic_probe requires nu = q");
    ProbeReport rep;
    rep.mode = mode;
    rep.x = x;
    if (mode == ProbeMode::FirstParticle) {
        const double rm = r_min(QParam(p.q));
        if (!(p.R > rm && p.R < 1.0))
            throw DomainError("first-particle fluctuations need R_min(q) < R < 1 (R_min = " + std::to_string(rm) + ")");
        theta = theta0(p);
    }
    detail::check_theta(theta);
    const double q = p.q, alpha = std::pow(q, theta), lq = std::log(q);
    if (!(alpha > 2.0 * q / (1.0 + q)))
        throw DomainError("fluctuation theorem needs q^theta > 2q/(1+q)");
    const auto h = pi_kappa_sigma(p, theta);
    if (mode == ProbeMode::Bulk && h.kappa < 0.0) throw DomainError("fluctuation theorem needs kappa(theta) >= 0");
    rep.theta = theta;
    rep.alpha = alpha;
    rep.hydro = h;
    MbContours c;
    c.center = 1.0;
    c.radius = (1.0 - alpha) * (1.0 - eta);
    c.anchor = theta;
    c.outer_start = 32;
    c.inner_start = 281;
    c.outer_max = 512;
    for (double t : ts) {
        ProbeRow row;
        row.t = t;
        const double kap = mode == ProbeMode::Bulk ? h.kappa : 0.0;
        row.n = mode == ProbeMode::Bulk ? int(std::floor(h.kappa * t)) : 1;
        if (row.n < 1) throw DomainError("asymptotic_probe: floor(kappa t) must be >= 1");
        row.log_minus_zeta = -lq * (kap * t + h.pi * t + std::cbrt(t) * h.sigma * x);
        row.detail = det_mellin_barnes_log(p, row.n, t, cplx(row.log_minus_zeta, 0.0), c, tol);
        row.det = row.detail.value;
        row.fgue = tw_cdf(-x);
        row.diff = std::abs(row.det - row.fgue);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace qhahn
