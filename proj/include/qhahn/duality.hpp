#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qhahn/model.hpp"
#include "qhahn/sim.hpp"

namespace qhahn {

using WeylVector = std::vector<long>;  // n_1 >= n_2 >= ... >= n_k

// ---------------------------------------------------------------- duality functional

// prod_i q^{x_{n_i} + n_i}, zero when some n_i = 0 (a particle sitting at the absorbing site).
inline double duality_h(const ExclusionState& s, const WeylVector& n, double q) {
    long e = 0;
    for (long ni : n) {
        if (ni < 0) throw DomainError("duality_h: negative index");
        if (ni == 0) return 0.0;
        if (ni > s.size()) throw DomainError("duality_h: particle " + std::to_string(ni) + " outside the simulated range");
        e += s.position(int(ni)) + ni;
    }
    return std::pow(q, double(e));
}

// ---------------------------------------------------------------- Weyl-chamber state space

class WeylSpace {
public:
    WeylSpace(int k, int M) : k_(k), M_(M) {
        if (k < 1 || M < 0) throw DomainError("WeylSpace: need k >= 1, M >= 0");
        // colexicographic on (n_k, ..., n_1): n_1 varies slowest-last, i.e. sort by n_1, then n_2, ...
        WeylVector v(k, 0);
        enumerate(v, 0, M);
        std::sort(states_.begin(), states_.end(), [](const WeylVector& a, const WeylVector& b) {
            return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
        });
        for (size_t i = 0; i < states_.size(); ++i) index_[key(states_[i])] = i;
    }
    int k() const { return k_; }
    int window() const { return M_; }
    size_t size() const { return states_.size(); }
    const WeylVector& state(size_t i) const { return states_[i]; }
    long find(const WeylVector& v) const {
        auto it = index_.find(key(v));
        return it == index_.end() ? -1 : long(it->second);
    }

private:
    std::uint64_t key(const WeylVector& v) const {
        std::uint64_t h = 0;
        for (long x : v) h = h * std::uint64_t(M_ + 1) + std::uint64_t(x);
        return h;
    }
    void enumerate(WeylVector& v, int pos, long hi) {
        if (pos == k_) {
            states_.push_back(v);
            return;
        }
        for (long x = 0; x <= hi; ++x) {
            v[pos] = x;
            enumerate(v, pos + 1, x);
        }
    }
    int k_, M_;
    std::vector<WeylVector> states_;
    std::unordered_map<std::uint64_t, size_t> index_;
};

inline int default_window(double t) { return int(std::ceil(4.0 * t + 10.0)); }

// Generator of the k-particle AZRP on sites 0..M in ordered coordinates. Site 0 absorbs; moves past
// M are dropped (reflecting truncation), so every row sums to zero.
class TruncatedGenerator {
public:
    using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    TruncatedGenerator(const ModelParams& p, int k, int M, double left_rate_scale = 1.0) : space_(k, M) {
        std::vector<Eigen::Triplet<double>> trip;
        const size_t S = space_.size();
        for (size_t i = 0; i < S; ++i) {
            const WeylVector& n = space_.state(i);
            double diag = 0.0;
            size_t a = 0;
            while (a < n.size()) {
                size_t b = a;
                while (b + 1 < n.size() && n[b + 1] == n[a]) ++b;
                const long site = n[a];
                const int y = int(b - a + 1);
                if (site > 0) {
                    for (int j = 1; j <= y; ++j) {
                        // j particles to site-1: the last j indices of the cluster
                        WeylVector m = n;
                        for (size_t c = b + 1 - j; c <= b; ++c) m[c] = site - 1;
                        const double r = phi_right(p, j, y);
                        if (r > 0) {
                            trip.emplace_back(int(i), int(space_.find(m)), r);
                            diag -= r;
                        }
                        if (site + 1 <= M) {
                            WeylVector u = n;
                            for (size_t c = a; c < a + j; ++c) u[c] = site + 1;
                            const double l = left_rate_scale * phi_left(p, j, y);
                            if (l > 0) {
                                trip.emplace_back(int(i), int(space_.find(u)), l);
                                diag -= l;
                            }
                        }
                    }
                }
                a = b + 1;
            }
            trip.emplace_back(int(i), int(i), diag);
        }
        B_.resize(int(S), int(S));
        B_.setFromTriplets(trip.begin(), trip.end());
        B_.makeCompressed();
    }

    const WeylSpace& space() const { return space_; }
    const Sparse& matrix() const { return B_; }
    size_t size() const { return space_.size(); }

    double norm_inf() const {
        double w = 0.0;
        for (int r = 0; r < B_.outerSize(); ++r) {
            double s = 0.0;
            for (Sparse::InnerIterator it(B_, r); it; ++it) s += std::abs(it.value());
            w = std::max(w, s);
        }
        return w;
    }

private:
    WeylSpace space_;
    Sparse B_;
};

// exp(t A) v by Taylor steps with ||A|| h <= 1, each series run until terms fall below tol * |v|.
template <class Mat>
Eigen::VectorXd expm_action(const Mat& A, double anorm, const Eigen::VectorXd& v, double t, double tol = 1e-16) {
    if (t == 0.0) return v;
    const int steps = std::max(1, int(std::ceil(anorm * t)));
    const double h = t / steps;
    Eigen::VectorXd w = v;
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd term = w, sum = w;
        const double scale = std::max(w.lpNorm<Eigen::Infinity>(), 1e-300);
        for (int m = 1; m < 200; ++m) {
            term = (A * term) * (h / m);
            sum += term;
            if (term.lpNorm<Eigen::Infinity>() <= tol * scale) break;
        }
        w = sum;
    }
    return w;
}

struct BackwardResult {
    Eigen::VectorXd values;
    double boundary_mass = 0.0;  // largest probability of sitting on the window edge at time t
};

class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline BackwardResult solve_backward(const TruncatedGenerator& gen, const Eigen::VectorXd& h0, double t,
                                     bool strict = false, double boundary_tol = 1e-8) {
    BackwardResult out;
    const double an = gen.norm_inf();
    out.values = expm_action(gen.matrix(), an, h0, t);
    // companion run: backward solve of the edge indicator gives, for every start state,
    // the probability of being on the edge at time t
    Eigen::VectorXd edge = Eigen::VectorXd::Zero(Eigen::Index(gen.size()));
    for (size_t i = 0; i < gen.size(); ++i)
        if (gen.space().state(i)[0] == gen.space().window()) edge[Eigen::Index(i)] = 1.0;
    const Eigen::VectorXd reach = expm_action(gen.matrix(), an, edge, t);
    // only start states well inside the window are meaningful
    for (size_t i = 0; i < gen.size(); ++i)
        if (gen.space().state(i)[0] <= gen.space().window() / 2) out.boundary_mass = std::max(out.boundary_mass, reach[Eigen::Index(i)]);
    if (strict && out.boundary_mass > boundary_tol)
        throw TruncationError("solve_backward: window too small, edge mass " + std::to_string(out.boundary_mass));
    return out;
}

inline Eigen::VectorXd step_initial_h0(const WeylSpace& sp) {
    Eigen::VectorXd h(Eigen::Index(sp.size()));
    for (size_t i = 0; i < sp.size(); ++i) h[Eigen::Index(i)] = sp.state(i).back() >= 1 ? 1.0 : 0.0;
    return h;
}

// E^n[H(step, n(t))] for one Weyl vector n.
inline double backward_moment(const ModelParams& p, const WeylVector& n, double t, double left_rate_scale = 1.0,
                              double* boundary_mass = nullptr) {
    const int M = std::max<int>(default_window(t), int(n.front()) + 10);
    TruncatedGenerator gen(p, int(n.size()), M, left_rate_scale);
    auto res = solve_backward(gen, step_initial_h0(gen.space()), t);
    if (boundary_mass) *boundary_mass = res.boundary_mass;
    return res.values[gen.space().find(n)];
}

// ---------------------------------------------------------------- Monte Carlo side

struct DualityReport {
    double lhs = 0;  // Monte Carlo E[H(x(t), n)]
    double rhs = 0;  // backward equation
    double stderr_ = 0;
    double z = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
};

// Estimates E[H(x(t), n)] for several Weyl vectors from one batch of step-data trials.
inline std::vector<RunningStats> duality_monte_carlo(const ModelParams& p, const std::vector<WeylVector>& ns, double t,
                                                     std::uint64_t trials, std::uint64_t seed, int threads = 1,
                                                     SimOptions opt = {}) {
    struct Acc {
        std::vector<RunningStats> s;
        void merge(const Acc& o) {
            if (s.size() < o.s.size()) s.resize(o.s.size());
            for (size_t i = 0; i < o.s.size(); ++i) s[i].merge(o.s[i]);
        }
    };
    struct Worker {
        AepSimulator sim;
        int N;
    };
    auto acc = run_trials<Acc>(
        trials, seed, threads, [&] { return Worker{AepSimulator(p, opt), default_particle_count(p, t)}; },
        [&](Worker& w, std::uint64_t, std::uint64_t s, Acc& a) {
            run_step_trial(w.sim, w.N, s, [&](AepSimulator& sim, Rng& rng) { sim.advance(t, rng); });
            if (a.s.size() < ns.size()) a.s.resize(ns.size());
            for (size_t i = 0; i < ns.size(); ++i) a.s[i].add(duality_h(w.sim.state(), ns[i], p.q));
        });
    acc.s.resize(ns.size());
    return acc.s;
}

inline DualityReport duality_check(const ModelParams& p, const WeylVector& n, double t, std::uint64_t trials,
                                   std::uint64_t seed = 1, int threads = 1, SimOptions opt = {}) {
    if (n.size() > 3) throw DomainError("duality_check: k <= 3");
    if (t > 5) throw DomainError("duality_check: desk scale needs t <= 5");
    DualityReport r;
    r.trials = trials;
    r.seed = seed;
    r.rhs = backward_moment(p, n, t);
    const auto st = duality_monte_carlo(p, {n}, t, trials, seed, threads, opt);
    r.lhs = st[0].mean();
    r.stderr_ = st[0].stderr_mean();
    r.z = r.stderr_ > 0 ? (r.lhs - r.rhs) / r.stderr_ : (r.lhs == r.rhs ? 0.0 : INFINITY);
    return r;
}

// ---------------------------------------------------------------- boundary conditions

struct BoundaryCoefficients {
    double alpha, beta, gamma;
};

inline BoundaryCoefficients boundary_coefficients(double q, double nu) {
    const double d = 1.0 - q * nu;
    return {nu * (1.0 - q) / d, (q - nu) / d, (1.0 - q) / d};
}

// |alpha u(n - e_i - e_{i+1}) + beta u(n - e_{i+1}) + gamma u(n) - u(n - e_i)|, i is 1-based.
inline double boundary_condition_residual(const std::function<double(const std::vector<long>&)>& u, double q,
                                          double nu, int i, const std::vector<long>& n) {
    if (i < 1 || size_t(i) >= n.size()) throw DomainError("boundary residual: need 1 <= i < k");
    const auto c = boundary_coefficients(q, nu);
    auto shift = [&](bool a, bool b) {
        std::vector<long> m = n;
        if (a) m[i - 1] -= 1;
        if (b) m[i] -= 1;
        return m;
    };
    return std::abs(c.alpha * u(shift(true, true)) + c.beta * u(shift(false, true)) + c.gamma * u(n) - u(shift(true, false)));
}

// ---------------------------------------------------------------- nested contours

struct NestedContours {
    std::vector<double> radii;  // circles centred at 1, radii[0] outermost

    static NestedContours make(int k, double q, double nu) {
        const double cap = nu > 0.0 ? std::min(1.0, 1.0 / nu - 1.0) : 1.0;
        const double rmin = std::min(0.5, nu > 0.0 ? (1.0 / nu - 1.0) / 2.0 : 0.5) / 2.0;
        NestedContours c;
        c.radii.assign(k, rmin);
        for (int j = k - 2; j >= 0; --j) {
            const double lower = 1.0 - q + q * c.radii[j + 1];
            if (!(lower < cap))
                throw DomainError("nested contours infeasible: need 1-q+q r < min(1, 1/nu-1) (q=" + std::to_string(q) +
                                  ", nu=" + std::to_string(nu) + ", k=" + std::to_string(k) + ")");
            c.radii[j] = 0.5 * (lower + cap);
        }
        c.validate(q, nu);
        return c;
    }

    void validate(double q, double nu) const {
        const double cap = nu > 0.0 ? std::min(1.0, 1.0 / nu - 1.0) : 1.0;
        for (size_t a = 0; a < radii.size(); ++a) {
            if (!(radii[a] > 0.0 && radii[a] < cap)) throw DomainError("contour must contain 1 and exclude 0, 1/nu");
            for (size_t b = a + 1; b < radii.size(); ++b)
                if (!(radii[a] > 1.0 - q + q * radii[b])) throw DomainError("contours are not nested");
        }
    }
};

struct ContourMoment {
    double value = 0;
    int nodes = 0;      // per circle at the final level
    double change = 0;  // difference between the last two levels
};

namespace detail {

// The single-variable factor of the moment integrand (times the measure), i.e. the integrand with
// the cross terms removed.
inline cplx moment_factor(const ModelParams& p, long n, double t, cplx z) {
    const cplx a = 1.0 - p.nu * z;
    return std::pow(a / (1.0 - z), double(n)) *
           std::exp((p.q - 1.0) * t * (p.R * z / a - p.L * z / (1.0 - z))) / (z * a);
}

inline cplx nested_sum(const ModelParams& p, const std::vector<long>& n, double t, const NestedContours& c, int N) {
    const int k = int(n.size());
    std::vector<std::vector<cplx>> z(k), f(k);
    for (int a = 0; a < k; ++a) {
        z[a].resize(N);
        f[a].resize(N);
        for (int m = 0; m < N; ++m) {
            const cplx e = std::polar(1.0, 2.0 * M_PI * (m + 0.5) / N);
            z[a][m] = 1.0 + c.radii[a] * e;
            // (1/2 pi i) dz = r e^{i phi} dphi / (2 pi) -> weight r e^{i phi} / N
            f[a][m] = moment_factor(p, n[a], t, z[a][m]) * c.radii[a] * e / double(N);
        }
    }
    auto cross = [&](int A, int B, int ia, int ib) { return (z[A][ia] - z[B][ib]) / (z[A][ia] - p.q * z[B][ib]); };
    cplx s = 0.0;
    if (k == 1) {
        for (int m = 0; m < N; ++m) s += f[0][m];
    } else if (k == 2) {
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b) s += f[0][a] * f[1][b] * cross(0, 1, a, b);
    } else if (k == 3) {
        std::vector<cplx> c12(size_t(N) * N);
        for (int b = 0; b < N; ++b)
            for (int d = 0; d < N; ++d) c12[size_t(b) * N + d] = f[1][b] * f[2][d] * cross(1, 2, b, d);
        for (int a = 0; a < N; ++a) {
            cplx inner = 0.0;
            for (int b = 0; b < N; ++b) {
                const cplx x01 = cross(0, 1, a, b);
                for (int d = 0; d < N; ++d) inner += c12[size_t(b) * N + d] * x01 * cross(0, 2, a, d);
            }
            s += f[0][a] * inner;
        }
    } else {
        throw DomainError("nested contour quadrature supports k <= 3");
    }
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(p.q, k * (k - 1) / 2.0) * s;
}

}  // namespace detail

// The k-fold contour integral for an arbitrary integer vector n (no n_k <= 0 shortcut).
inline ContourMoment nested_contour_integral(const ModelParams& p, const std::vector<long>& n, double t,
                                             const NestedContours& c, double tol = 1e-9, int max_nodes = 1 << 14) {
    if (c.radii.size() != n.size()) throw DomainError("one contour per coordinate required");
    c.validate(p.q, p.nu);
    const int k = int(n.size());
    int N = k == 1 ? 64 : (k == 2 ? 64 : 32);
    // k = 3 costs N^3 per level, so it gets a lower ceiling
    if (k == 3) max_nodes = std::min(max_nodes, 1024);
    double prev = detail::nested_sum(p, n, t, c, N).real();
    double ch = INFINITY;
    for (;;) {
        const int N2 = 2 * N;
        if (N2 > max_nodes)
            throw DomainError("moment_contour: node doubling did not converge (last change " + std::to_string(ch) +
                              " at " + std::to_string(N) + " nodes)");
        const double cur = detail::nested_sum(p, n, t, c, N2).real();
        ch = std::abs(cur - prev);
        if (ch < tol) return {cur, N2, ch};
        prev = cur;
        N = N2;
    }
}

inline ContourMoment moment_contour(const ModelParams& p, const WeylVector& n, double t, const NestedContours& c,
                                    double tol = 1e-9) {
    if (n.size() > 3 || n.empty()) throw DomainError("moment_contour: 1 <= k <= 3");
    for (size_t i = 1; i < n.size(); ++i)
        if (n[i] > n[i - 1]) throw DomainError("moment_contour: n must be nonincreasing");
    if (n.back() <= 0) return {0.0, 0, 0.0};
    return nested_contour_integral(p, n, t, c, tol);
}

inline ContourMoment moment_contour(const ModelParams& p, const WeylVector& n, double t) {
    return moment_contour(p, n, t, NestedContours::make(int(n.size()), p.q, p.nu));
}

}  // namespace qhahn
