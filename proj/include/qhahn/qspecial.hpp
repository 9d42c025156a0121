#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace qhahn {

using cplx = std::complex<double>;

// Sentinel for an infinite count (infinite products, the unbounded right gap of the lead particle).
inline constexpr int kInf = std::numeric_limits<int>::max();

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct QParam {
    double q;
    explicit QParam(double value) : q(value) {
        if (!(value > 0.0 && value < 1.0))
            throw DomainError("q must lie strictly inside (0,1), got " + std::to_string(value));
    }
    operator double() const { return q; }
};

template <class T>
struct SeriesValue {
    T value{};
    int terms_used = 0;
    double tail_bound = 0.0;
};

namespace detail {
inline constexpr double kTinyFactor = 1e-16;
inline constexpr int kMaxTerms = 200000;
}

// (a;q)_n. Works for any real base (the inverse-parameter identities use base > 1) when n is finite.
inline cplx q_pochhammer(cplx a, double q, int n) {
    cplx p = 1.0;
    cplx aqi = a;
    for (int i = 0; i < n; ++i) {
        p *= 1.0 - aqi;
        aqi *= q;
    }
    return p;
}

inline double q_pochhammer(double a, double q, int n) {
    double p = 1.0;
    double aqi = a;
    for (int i = 0; i < n; ++i) {
        p *= 1.0 - aqi;
        aqi *= q;
    }
    return p;
}

// (a;q)_inf, stops once |a q^k| < 1e-16 and reports a bound on the discarded factor.
inline SeriesValue<cplx> q_pochhammer_inf(cplx a, QParam qp) {
    const double q = qp.q;
    SeriesValue<cplx> out;
    cplx p = 1.0;
    cplx aqk = a;
    int k = 0;
    while (std::abs(aqk) >= detail::kTinyFactor) {
        if (k >= detail::kMaxTerms) throw DomainError("q_pochhammer_inf: too many factors");
        p *= 1.0 - aqk;
        aqk *= q;
        ++k;
    }
    // |log prod_{i>=k}(1 - a q^i)| <= sum |a q^i| / (1 - |a q^k|)
    const double r = std::abs(aqk);
    const double logb = r / ((1.0 - q) * (1.0 - r));
    out.value = p;
    out.terms_used = k;
    out.tail_bound = std::abs(p) * std::expm1(logb);
    return out;
}

inline cplx q_pochhammer(cplx a, QParam q, int n) {
    if (n == kInf) return q_pochhammer_inf(a, q).value;
    return q_pochhammer(a, q.q, n);
}

inline double q_integer(int n, double base) {
    if (n < 0) throw DomainError("q_integer: n must be >= 0");
    if (base <= 0.0 || base == 1.0) throw DomainError("q_integer: base must be positive and != 1");
    return (1.0 - std::pow(base, n)) / (1.0 - base);
}

inline double q_binomial(int n, int k, double q) {
    if (k < 0 || k > n) throw DomainError("q_binomial: need 0 <= k <= n");
    // product form prod_{i=1}^{k} (1-q^{n-k+i})/(1-q^i), fine for any base != 1
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= (1.0 - std::pow(q, n - k + i)) / (1.0 - std::pow(q, i));
    return r;
}

inline double q_binomial(int n, int k, QParam q) { return q_binomial(n, k, q.q); }

// sum_{k>=0} x q^k / (1 - x q^k); x may be anywhere off the lattice q^{-k}.
inline SeriesValue<cplx> lambert_shifted(cplx x, double q) {
    SeriesValue<cplx> out;
    cplx s = 0.0;
    cplx xqk = x;
    int k = 0;
    for (;; ++k) {
        if (k >= detail::kMaxTerms) throw DomainError("lambert_shifted: no convergence");
        const cplx den = 1.0 - xqk;
        if (std::abs(den) == 0.0) throw DomainError("lambert_shifted: argument on the pole lattice");
        const cplx term = xqk / den;
        s += term;
        const double a = std::abs(xqk);
        if (a < 0.5) {
            const double tail = a * q / ((1.0 - q) * (1.0 - a * q));
            if (tail <= 1e-17 * std::max(std::abs(s), 1e-300) || tail < 1e-300) {
                out.tail_bound = tail;
                break;
            }
        }
        xqk *= q;
    }
    out.value = s;
    out.terms_used = k + 1;
    return out;
}

// sum_{n>=1} n^order w^n c^{n-1} / (1 - q^n), |w c| < 1. With c = 1 this is the Lambert series
// behind the digamma derivatives; c = nu gives the 1/nu-scaled shifted version used by hydro.
inline SeriesValue<cplx> lambert_power(cplx w, double c, double q, int order) {
    SeriesValue<cplx> out;
    const double r = std::abs(w) * c;
    if (!(r < 1.0)) throw DomainError("lambert_power: |w c| must be < 1");
    cplx s = 0.0;
    cplx wn = w;          // w^n c^{n-1}
    double qn = q;        // q^n
    for (int n = 1;; ++n) {
        if (n >= detail::kMaxTerms) throw DomainError("lambert_power: no convergence");
        const double nk = std::pow(double(n), order);
        const cplx term = nk * wn / (1.0 - qn);
        s += term;
        // ratio of successive term moduli is bounded by r (1+1/n)^order / (1-q)
        const double ratio = r * std::pow(1.0 + 1.0 / n, order) / (1.0 - q * qn);
        if (ratio < 1.0) {
            const double tail = std::abs(term) * ratio / (1.0 - ratio);
            if (tail <= 1e-17 * std::abs(s) || std::abs(s) == 0.0) {
                out.tail_bound = tail;
                out.terms_used = n;
                break;
            }
        }
        wn *= w * c;
        qn *= q;
    }
    out.value = s;
    return out;
}

// Psi_q^{(order)} evaluated at the point z with q^z = x (avoids logs on complex arguments).
inline SeriesValue<cplx> q_digamma_at_power(cplx x, double q, int order) {
    const double lq = std::log(q);
    if (order == 0) {
        auto s = lambert_shifted(x, q);
        s.value = -std::log1p(-q) + lq * s.value;
        s.tail_bound *= std::abs(lq);
        return s;
    }
    auto s = lambert_power(x, 1.0, q, order);
    const double f = std::pow(lq, order + 1);
    s.value *= f;
    s.tail_bound *= std::abs(f);
    return s;
}

inline SeriesValue<cplx> q_digamma(cplx z, QParam q, int order = 0) {
    if (order < 0) throw DomainError("q_digamma: negative order");
    if (!(z.real() > 0.0)) throw DomainError("q_digamma: requires Re z > 0");
    return q_digamma_at_power(std::exp(z * std::log(q.q)), q.q, order);
}

inline double q_digamma(double z, QParam q, int order = 0) {
    return q_digamma(cplx(z, 0.0), q, order).value.real();
}

// G_b(z) = sum_{i>=1} z^i / [i]_b.
inline SeriesValue<cplx> g_series(cplx z, double base) {
    if (base <= 0.0 || base == 1.0) throw DomainError("g_series: base must be positive and != 1");
    const double radius = base < 1.0 ? 1.0 : base;
    const double az = std::abs(z);
    if (!(az < radius)) throw DomainError("g_series: |z| outside the disc of convergence");
    SeriesValue<cplx> out;
    if (az == 0.0) return out;
    cplx s = 0.0;
    cplx zi = z;
    double bi = base;  // base^i
    for (int i = 1;; ++i) {
        if (i >= detail::kMaxTerms) throw DomainError("g_series: no convergence");
        const double qi = (1.0 - bi) / (1.0 - base);
        const cplx term = zi / qi;
        s += term;
        // successive term ratio: |z| [i]/[i+1] <= |z| / min(1, base) bounded by az/radius for large i
        const double qn = (1.0 - bi * base) / (1.0 - base);
        const double ratio = az * qi / qn;
        const double rho = std::max(ratio, az / radius);
        if (rho < 1.0) {
            const double tail = std::abs(term) * rho / (1.0 - rho);
            if (tail <= 1e-17 * std::abs(s)) {
                out.tail_bound = tail;
                out.terms_used = i;
                break;
            }
        }
        zi *= z;
        bi *= base;
    }
    out.value = s;
    return out;
}

// Gamma_q(z) = (1-q)^{1-z} (q;q)_inf / (q^z;q)_inf
inline cplx q_gamma(cplx z, QParam qp) {
    const double q = qp.q;
    const cplx x = std::exp(z * std::log(q));
    // pole when q^z = q^{-n}: z = -n (mod 2 pi i / log q)
    const double nr = -z.real();
    const double period = 2.0 * M_PI / std::abs(std::log(q));
    if (nr > -0.5) {
        const long n = std::lround(nr);
        const double im = std::remainder(z.imag(), period);
        if (n >= 0 && std::abs(z.real() + double(n)) < 1e-14 && std::abs(im) < 1e-14)
            throw DomainError("q_gamma: pole at z = -" + std::to_string(n));
    }
    const cplx num = q_pochhammer_inf(q, qp).value;
    const cplx den = q_pochhammer_inf(x, qp).value;
    return std::exp((1.0 - z) * std::log1p(-q)) * num / den;
}

inline double q_gamma(double z, QParam q) { return q_gamma(cplx(z, 0.0), q).real(); }

}  // namespace qhahn
