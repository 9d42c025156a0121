#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qhahn/fredholm.hpp"
#include "qhahn/hydro.hpp"
#include "qhahn/sim.hpp"

namespace qhahn {

// Monte Carlo estimate of E[1/(zeta q^{x_n(t)+n}; q)_inf] from step data; zeta real and nonpositive.
inline RunningStats eq_laplace_monte_carlo(const ModelParams& p, int n, double t, double zeta, std::uint64_t trials,
                                           std::uint64_t seed, int threads = 1) {
    if (zeta > 0.0) throw DomainError("eq_laplace_monte_carlo: zeta must be <= 0");
    struct Worker {
        AepSimulator sim;
        int N;
    };
    return run_trials<RunningStats>(
        trials, seed, threads,
        [&] { return Worker{AepSimulator(p), std::max(default_particle_count(p, t), n + 50)}; },
        [&](Worker& w, std::uint64_t, std::uint64_t s, RunningStats& acc) {
            run_step_trial(w.sim, w.N, s, [&](AepSimulator& sim, Rng& rng) { sim.advance(t, rng); });
            acc.add(eq_laplace_observable(w.sim.state(), zeta, n, p.q).real());
        });
}

// Positions x_n(t) from step data, one per trial, in trial order.
inline std::vector<long> particle_samples(const ModelParams& p, int n, double t, std::uint64_t trials,
                                          std::uint64_t seed, int threads = 1) {
    struct Acc {
        std::vector<long> v;
        void merge(const Acc& o) { v.insert(v.end(), o.v.begin(), o.v.end()); }
    };
    struct Worker {
        AepSimulator sim;
        int N;
    };
    return run_trials<Acc>(
               trials, seed, threads,
               [&] { return Worker{AepSimulator(p), std::max(default_particle_count(p, t), n + 50)}; },
               [&](Worker& w, std::uint64_t, std::uint64_t s, Acc& a) {
                   run_step_trial(w.sim, w.N, s, [&](AepSimulator& sim, Rng& rng) { sim.advance(t, rng); });
                   a.v.push_back(w.sim.state().position(n));
               })
        .v;
}

// theta with pi(theta) = x by bisection on [lo, hi]; pi decreases in theta.
inline double theta_at_velocity(const ModelParams& p, double x, double lo, double hi) {
    double plo = pi_kappa_sigma(p, lo).pi - x, phi = pi_kappa_sigma(p, hi).pi - x;
    if ((plo < 0.0) == (phi < 0.0)) throw DomainError("theta_at_velocity: velocity outside the bracket");
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double m = 0.5 * (lo + hi);
        const double pm = pi_kappa_sigma(p, m).pi - x;
        if ((pm < 0.0) == (plo < 0.0)) {
            lo = m;
            plo = pm;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

// Fan edges in the velocity variable: left edge pi at theta -> inf (L - R when nu = q), right edge pi at
// theta0 or at theta -> 0.
struct FanEdges {
    double x_left, x_right, theta_left, theta_right;
};

inline FanEdges fan_edges(const ModelParams& p) {
    FanEdges e;
    e.theta_left = std::log(1e-12) / std::log(p.q);
    e.x_left = pi_kappa_sigma(p, e.theta_left).pi;
    e.theta_right = p.L > 0.0 ? theta0(p) : std::log(1.0 - 1e-9) / std::log(p.q);
    e.x_right = pi_kappa_sigma(p, e.theta_right).pi;
    return e;
}

struct LlnReport {
    std::vector<double> x;            // velocity grid over the fan interior
    std::vector<double> kappa;        // parametric curve kappa(theta(x))
    std::vector<double> mean_count;   // trial mean of N_{xt}(t)/t
    double sup_distance = 0;          // sup over x of |mean_count - kappa|
    double mean_trial_sup = 0;        // trial mean of the per-trial sup distance
    std::vector<std::vector<long>> finals;  // final positions per trial (first n_keep particles)
};

// Compares the staircase x -> N_{xt}(t)/t (particles strictly right of xt) with the curve (pi, kappa),
// excluding a band of relative width `band` at each fan edge.
inline LlnReport lln_staircase(const ModelParams& p, double t, int trials, std::uint64_t seed, int grid = 200,
                               double band = 0.05, int n_keep = 0) {
    const auto e = fan_edges(p);
    const double w = e.x_right - e.x_left;
    LlnReport r;
    for (int i = 0; i < grid; ++i) {
        const double x = e.x_left + w * (band + (1.0 - 2.0 * band) * i / (grid - 1));
        const double th = theta_at_velocity(p, x, e.theta_right, e.theta_left);
        r.x.push_back(x);
        r.kappa.push_back(pi_kappa_sigma(p, th).kappa);
    }
    r.mean_count.assign(grid, 0.0);
    AepSimulator sim(p);
    int N = default_particle_count(p, t);
    for (int k = 0; k < trials; ++k) {
        run_step_trial(sim, N, trial_seed(seed, std::uint64_t(k)),
                       [&](AepSimulator& s, Rng& rng) { s.advance(t, rng); });
        const auto& xs = sim.state().x;  // decreasing
        double sup = 0.0;
        for (int i = 0; i < grid; ++i) {
            const double thr = r.x[i] * t;
            const auto cnt = std::upper_bound(xs.begin(), xs.end(), thr, [](double v, long a) { return double(a) <= v; }) -
                             xs.begin();
            const double c = double(cnt) / t;
            r.mean_count[i] += c / trials;
            sup = std::max(sup, std::abs(c - r.kappa[i]));
        }
        r.mean_trial_sup += sup / trials;
        if (n_keep > 0) r.finals.emplace_back(xs.begin(), xs.begin() + std::min<long>(n_keep, long(xs.size())));
    }
    for (int i = 0; i < grid; ++i) r.sup_distance = std::max(r.sup_distance, std::abs(r.mean_count[i] - r.kappa[i]));
    return r;
}

struct DensityJumpReport {
    double theta0 = 0, rho0 = 0, x_edge = 0;  // x_edge = pi(theta0) t
    double inside = 0;                        // particles per site on (x_edge - width, x_edge]
    double beyond = 0;                        // particles per site on (x_edge + width, x_edge + 2 width]
};

inline DensityJumpReport density_jump(const ModelParams& p, double t, int trials, std::uint64_t seed,
                                      double width = 50.0) {
    DensityJumpReport r;
    r.theta0 = theta0(p);
    const auto h = pi_kappa_sigma(p, r.theta0);
    r.rho0 = h.rho;
    r.x_edge = h.pi * t;
    AepSimulator sim(p);
    int N = default_particle_count(p, t);
    for (int k = 0; k < trials; ++k) {
        run_step_trial(sim, N, trial_seed(seed, std::uint64_t(k)),
                       [&](AepSimulator& s, Rng& rng) { s.advance(t, rng); });
        long in = 0, out = 0;
        for (long x : sim.state().x) {
            const double d = double(x) - r.x_edge;
            if (d > -width && d <= 0.0) ++in;
            if (d > width && d <= 2.0 * width) ++out;
        }
        r.inside += double(in) / width / trials;
        r.beyond += double(out) / width / trials;
    }
    return r;
}

struct FluctuationReport {
    double theta = 0, pi = 0, sigma = 0, t = 0;
    int n = 0;
    std::vector<double> scaled;  // -(x_n - pi t)/(sigma t^{1/3}); its law approaches F_GUE
    double ks = 0;
};

// Rescales positions so that the limit law is F_GUE: P(chi >= x) -> F_GUE(-x) means -chi ~ F_GUE.
inline FluctuationReport rescale_fluctuations(const ModelParams& p, double theta, int n, double t,
                                              const std::vector<long>& xs) {
    FluctuationReport r;
    const auto h = pi_kappa_sigma(p, theta);
    r.theta = theta;
    r.pi = h.pi;
    r.sigma = h.sigma;
    r.t = t;
    r.n = n;
    const double scale = h.sigma * std::cbrt(t);
    for (long x : xs) r.scaled.push_back(-(double(x) - h.pi * t) / scale);
    r.ks = ks_distance(r.scaled, [](double v) { return tw_cdf(v); });
    return r;
}

}  // namespace qhahn
