#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "qhahn/qspecial.hpp"

namespace qhahn {

struct ModelParams {
    double q = 0.5;
    double nu = 0.25;
    double R = 0.7;
    double L = 0.3;

    ModelParams() = default;
    ModelParams(double q_, double nu_, double R_, double L_) : q(q_), nu(nu_), R(R_), L(L_) { validate(); }

    static ModelParams from_right(double q, double nu, double R) { return {q, nu, R, 1.0 - R}; }

    void validate() const {
        if (!(q > 0.0 && q < 1.0)) throw DomainError("q must lie in (0,1)");
        if (!(nu >= 0.0 && nu < 1.0)) throw DomainError("nu must lie in [0,1)");
        if (!(R >= 0.0) || !(L >= 0.0)) throw DomainError("R and L must be nonnegative");
        if (std::abs(R + L - 1.0) > 1e-12) throw DomainError("R + L must equal 1");
    }

    bool is_madm() const { return nu == q; }
};

// prod_{l=0}^{j-1} (1 - q^{m-l}) / (1 - nu q^{m-1-l})
//   = (nu;q)_{m-j} (q;q)_m / ((nu;q)_m (q;q)_{m-j}),
// built from the factors that do not cancel. Valid for any base q != 1.
inline double gap_ratio(double q, double nu, int j, int m) {
    double r = 1.0;
    for (int l = 0; l < j; ++l) r *= (1.0 - std::pow(q, m - l)) / (1.0 - nu * std::pow(q, m - 1 - l));
    return r;
}

namespace detail {
inline void check_jump(int j, int m) {
    if (j < 1) throw DomainError("jump size must be >= 1");
    if (m != kInf && j > m) throw DomainError("jump size exceeds the gap");
}
}

// nu^{j-1}/[j]_q * gap_ratio without the R factor; q and nu may be inverted (> 1).
inline double rate_right_unit(double q, double nu, int j, int m) {
    detail::check_jump(j, m);
    const double head = std::pow(nu, j - 1) / q_integer(j, q);
    if (head == 0.0) return 0.0;
    return m == kInf ? head : head * gap_ratio(q, nu, j, m);
}

inline double rate_left_unit(double q, double nu, int j, int m) {
    detail::check_jump(j, m);
    if (m == kInf) throw DomainError("left jumps are always gap-limited");
    return gap_ratio(q, nu, j, m) / q_integer(j, q);
}

inline double phi_right(const ModelParams& p, int j, int m) { return p.R * rate_right_unit(p.q, p.nu, j, m); }
inline double phi_left(const ModelParams& p, int j, int m) { return p.L * rate_left_unit(p.q, p.nu, j, m); }

inline double total_rate_right(const ModelParams& p, int m) {
    if (m == kInf) {
        if (p.nu == 0.0) return p.R;
        return p.R / p.nu * g_series(p.nu, p.q).value.real();
    }
    double s = 0.0;
    for (int j = 1; j <= m; ++j) s += phi_right(p, j, m);
    return s;
}

inline double total_rate_left(const ModelParams& p, int m) {
    double s = 0.0;
    for (int j = 1; j <= m; ++j) s += phi_left(p, j, m);
    return s;
}

// Discrete-time q-Hahn weights, only used for identity checks.
struct QHahnWeights {
    double q, mu, nu;
    QHahnWeights(double q_, double mu_, double nu_) : q(q_), mu(mu_), nu(nu_) {
        if (!(q > 0.0 && q < 1.0)) throw DomainError("q-Hahn weights need q in (0,1)");
        if (!(nu >= 0.0 && nu < mu && mu < 1.0)) throw DomainError("q-Hahn weights need 0 <= nu < mu < 1");
    }
};

// mu^j (nu/mu;q)_j (mu;q)_{m-j} / (nu;q)_m [m j]_q for any base; nu = inf is the degenerate 1{j=m}.
inline double qhahn_weight_raw(double q, double mu, double nu, int j, int m) {
    if (j < 0 || j > m) throw DomainError("q-Hahn weight: need 0 <= j <= m");
    if (std::isinf(nu)) return j == m ? 1.0 : 0.0;
    return std::pow(mu, j) * q_pochhammer(nu / mu, q, j) * q_pochhammer(mu, q, m - j) /
           q_pochhammer(nu, q, m) * q_binomial(m, j, q);
}

inline double qhahn_weight(const QHahnWeights& w, int j, int m) { return qhahn_weight_raw(w.q, w.mu, w.nu, j, m); }

// Weights with (q, mu, nu) replaced by their inverses.
inline double qhahn_weight_inverse(const QHahnWeights& w, int j, int m) {
    const double inu = w.nu == 0.0 ? INFINITY : 1.0 / w.nu;
    return qhahn_weight_raw(1.0 / w.q, 1.0 / w.mu, inu, j, m);
}

// Residuals are relative to max(|lhs|, |rhs|, 1): the inverted identities grow like q^{-my}.
struct SymmetryResiduals {
    double direct = 0;        // sum phi(j|m) q^{jy} vs swapped
    double inverse = 0;       // same with inverted parameters
    double right_rates = 0;   // degenerate identity for phi^R
    double left_rates = 0;    // degenerate identity for phi^L
};

inline SymmetryResiduals check_symmetry(const QHahnWeights& w, int m, int y) {
    const double q = w.q;
    SymmetryResiduals r;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); };
    auto side = [&](auto&& f, int a, int b, double base) {
        double s = 0.0;
        for (int j = 0; j <= a; ++j) s += f(j, a) * std::pow(base, double(j) * b);
        return s;
    };
    auto direct = [&](int j, int a) { return qhahn_weight(w, j, a); };
    auto inv = [&](int j, int a) { return qhahn_weight_inverse(w, j, a); };
    r.direct = rel(side(direct, m, y, q), side(direct, y, m, q));
    r.inverse = rel(side(inv, m, y, 1.0 / q), side(inv, y, m, 1.0 / q));
    auto rate_side = [&](bool right, int a, int b) {
        double s = 0.0;
        for (int j = 1; j <= a; ++j) {
            const double rate = right ? rate_right_unit(q, w.nu, j, a) : rate_left_unit(q, w.nu, j, a);
            s += rate * (std::pow(right ? q : 1.0 / q, double(j) * b) - 1.0);
        }
        return s;
    };
    r.right_rates = rel(rate_side(true, m, y), rate_side(true, y, m));
    r.left_rates = rel(rate_side(false, m, y), rate_side(false, y, m));
    return r;
}

}  // namespace qhahn
