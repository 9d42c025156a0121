#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qhahn/model.hpp"
#include "qhahn/rng.hpp"

namespace qhahn {

// ---------------------------------------------------------------- states

struct ExclusionState {
    std::vector<long> x;     // x[n-1] is the position of particle n, strictly decreasing
    long wall = 0;           // frozen particle N+1
    int frontier_index = 0;  // deepest particle that has jumped (0: none yet)
    double time = 0.0;

    int size() const { return int(x.size()); }
    long position(int n) const { return x.at(n - 1); }
    int right_gap(int n) const { return n == 1 ? kInf : int(x[n - 2] - x[n - 1] - 1); }
    int left_gap(int n) const {
        const long below = n == size() ? wall : x[n];
        return int(x[n - 1] - below - 1);
    }
};

inline ExclusionState step_initial(int N) {
    if (N < 1) throw DomainError("step_initial: need N >= 1");
    ExclusionState s;
    s.x.resize(N);
    for (int n = 1; n <= N; ++n) s.x[n - 1] = -n;
    s.wall = -(N + 1);
    return s;
}

inline int default_particle_count(const ModelParams& p, double t) {
    return int(std::ceil(2.0 * (p.R - p.L + 1.0) * t)) + 100;
}

// P(gap = m) = alpha^m (nu;q)_m/(q;q)_m (alpha;q)_inf/(alpha nu;q)_inf, tabulated until tail < 1e-12.
inline std::vector<double> stationary_gap_pmf(const ModelParams& p, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("stationary measure needs alpha in (0,1)");
    const QParam qp(p.q);
    const double norm = (q_pochhammer_inf(alpha, qp).value / q_pochhammer_inf(alpha * p.nu, qp).value).real();
    std::vector<double> pmf;
    double w = norm, acc = 0.0;
    for (int m = 0;; ++m) {
        pmf.push_back(w);
        acc += w;
        if (1.0 - acc < 1e-13 && m > 0) break;
        if (m > 100000) throw DomainError("stationary_gap_pmf: no convergence");
        w *= alpha * (1.0 - p.nu * std::pow(p.q, m)) / (1.0 - std::pow(p.q, m + 1));
    }
    return pmf;
}

inline ExclusionState stationary_initial(const ModelParams& p, double alpha, int N, std::uint64_t seed) {
    const auto pmf = stationary_gap_pmf(p, alpha);
    std::vector<double> cdf(pmf.size());
    double acc = 0.0;
    for (size_t i = 0; i < pmf.size(); ++i) cdf[i] = (acc += pmf[i]);
    Rng rng(seed);
    auto draw = [&] {
        const double u = rng.uniform() * acc;
        return long(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    };
    ExclusionState s;
    s.x.resize(N);
    long pos = 0;
    for (int n = 0; n < N; ++n) {
        s.x[n] = pos;
        pos -= 1 + draw();
    }
    s.wall = pos;
    return s;
}

inline cplx eq_laplace_observable(const ExclusionState& s, cplx zeta, int n, double q) {
    const long e = s.position(n) + n;
    const cplx a = zeta * std::pow(q, double(e));
    cplx prod = 1.0, aq = a;
    for (int k = 0; std::abs(aq) >= 1e-16; ++k) {
        const cplx f = 1.0 - aq;
        if (f == 0.0) throw DomainError("eq_laplace_observable: zeta on the singular lattice");
        prod *= f;
        aq *= q;
        if (k > 100000) throw DomainError("eq_laplace_observable: no convergence");
    }
    return 1.0 / prod;
}

// ---------------------------------------------------------------- rate index

// Complete binary sum tree; parents are recomputed from children on update, so no drift accumulates.
class RateTree {
public:
    void resize(int n) {
        P_ = 1;
        while (P_ < n) P_ <<= 1;
        t_.assign(2 * size_t(P_), 0.0);
    }
    void clear() { std::fill(t_.begin(), t_.end(), 0.0); }
    int capacity() const { return P_; }
    double total() const { return t_[1]; }
    double get(int i) const { return t_[size_t(P_) + i]; }
    void set(int i, double v) {
        size_t k = size_t(P_) + i;
        t_[k] = v;
        for (k >>= 1; k >= 1; k >>= 1) t_[k] = t_[2 * k] + t_[2 * k + 1];
    }
    // index of the leaf whose cumulative interval contains u in [0, total)
    int sample(double u) const {
        size_t k = 1;
        while (k < size_t(P_)) {
            const double l = t_[2 * k];
            if ((u < l && l > 0.0) || t_[2 * k + 1] <= 0.0) {
                k = 2 * k;
            } else {
                u -= l;
                k = 2 * k + 1;
            }
        }
        return int(k - size_t(P_));
    }

private:
    int P_ = 1;
    std::vector<double> t_{0.0, 0.0};
};

// ---------------------------------------------------------------- jump menus

// Cumulative rates over jump sizes 1..m for one direction and gap.
inline std::vector<double> build_jump_menu(double scale, double q, double nu, int m, bool right) {
    std::vector<double> cum;
    if (scale == 0.0) return cum;
    double acc = 0.0;
    if (m == kInf) {
        // right jumps of the lead particle; tail after j terms <= scale nu^j/(1-nu)
        double nupow = 1.0;
        for (int j = 1;; ++j) {
            acc += scale * nupow / q_integer(j, q);
            cum.push_back(acc);
            nupow *= nu;
            if (scale * nupow / (1.0 - nu) < 1e-15 * acc) break;
        }
        return cum;
    }
    cum.reserve(m);
    double ratio = 1.0, nupow = 1.0;
    for (int j = 1; j <= m; ++j) {
        ratio *= (1.0 - std::pow(q, m - j + 1)) / (1.0 - nu * std::pow(q, m - j));
        const double head = right ? nupow : 1.0;
        const double term = scale * head * ratio / q_integer(j, q);
        if (right && term < 1e-18 * acc) break;  // geometric in nu, remainder negligible
        acc += term;
        cum.push_back(acc);
        nupow *= nu;
    }
    return cum;
}

class JumpTables {
public:
    static constexpr int kEager = 64;
    static constexpr int kCacheCap = 2048;

    JumpTables(const ModelParams& p, double left_scale = 1.0)
        : q_(p.q), nu_(p.nu), R_(p.R), L_(p.L * left_scale) {
        right_inf_ = build_jump_menu(R_, q_, nu_, kInf, true);
        grow(kEager);
    }

    double right_total(int gap) {
        if (gap == kInf) return right_inf_.empty() ? 0.0 : right_inf_.back();
        if (gap < int(rtot_.size())) return rtot_[gap];
        return total_of(menu(gap, true));
    }
    double left_total(int gap) {
        if (gap < int(ltot_.size())) return ltot_[gap];
        return total_of(menu(gap, false));
    }
    // jump size for a draw u in [0, total)
    int sample_right(int gap, double u) {
        if (gap == kInf) return pick(right_inf_, u);
        return pick(menu(gap, true), u);
    }
    int sample_left(int gap, double u) { return pick(menu(gap, false), u); }

private:
    static double total_of(const std::vector<double>& c) { return c.empty() ? 0.0 : c.back(); }
    static int pick(const std::vector<double>& c, double u) {
        auto it = std::upper_bound(c.begin(), c.end(), u);
        if (it == c.end()) --it;
        return int(it - c.begin()) + 1;
    }
    void grow(int upto) {
        for (int g = int(right_.size()); g <= upto; ++g) {
            right_.push_back(build_jump_menu(R_, q_, nu_, g, true));
            left_.push_back(build_jump_menu(L_, q_, nu_, g, false));
            rtot_.push_back(total_of(right_.back()));
            ltot_.push_back(total_of(left_.back()));
        }
    }
    const std::vector<double>& menu(int gap, bool right) {
        if (gap < int(right_.size())) return right ? right_[gap] : left_[gap];
        if (gap <= kCacheCap) {
            grow(gap);
            return right ? right_[gap] : left_[gap];
        }
        scratch_ = build_jump_menu(right ? R_ : L_, q_, nu_, gap, right);
        return scratch_;
    }

    double q_, nu_, R_, L_;
    std::vector<double> right_inf_;
    std::vector<std::vector<double>> right_, left_;
    std::vector<double> rtot_, ltot_;
    std::vector<double> scratch_;
};

// ---------------------------------------------------------------- AEP

struct SimOptions {
    int frontier_margin = 25;
    bool enforce_margin = true;
    double left_rate_scale = 1.0;  // test hook: perturbs left rates for mutation checks
};

class FrontierViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AepSimulator {
public:
    explicit AepSimulator(const ModelParams& p, SimOptions opt = {})
        : p_(p), opt_(opt), tables_(p, opt.left_rate_scale) {}

    void load(const ExclusionState& s) {
        s_ = s;
        if (tree_.capacity() < s_.size() || tree_.capacity() > 2 * s_.size() + 1) tree_.resize(s_.size());
        else tree_.clear();
        for (int n = 1; n <= s_.size(); ++n) tree_.set(n - 1, exit_rate(n));
        events_ = 0;
    }

    // step data, touching only the lead particle's rate
    void load_step(int N) {
        if (s_.size() != N) {
            s_ = step_initial(N);
            tree_.resize(N);
        } else {
            for (int n = 1; n <= N; ++n) s_.x[n - 1] = -n;
            s_.wall = -(N + 1);
            s_.time = 0.0;
            s_.frontier_index = 0;
            tree_.clear();
        }
        tree_.set(0, exit_rate(1));
        events_ = 0;
    }

    const ExclusionState& state() const { return s_; }
    ExclusionState& state() { return s_; }
    std::uint64_t events() const { return events_; }
    const ModelParams& params() const { return p_; }

    // Runs to t_end. obs(k) fires for each obs_times[k] in [time, t_end] with the state as of the
    // last event before it.
    template <class Obs>
    void advance(double t_end, Rng& rng, const std::vector<double>& obs_times, Obs&& obs) {
        size_t k = 0;
        while (k < obs_times.size() && obs_times[k] < s_.time) ++k;
        for (;;) {
            const double tot = tree_.total();
            const double tnext = tot > 0.0 ? s_.time + rng.exponential(tot) : INFINITY;
            while (k < obs_times.size() && obs_times[k] < tnext && obs_times[k] <= t_end) obs(k++);
            if (tnext > t_end) {
                s_.time = t_end;
                return;
            }
            s_.time = tnext;
            jump(rng, tot);
        }
    }

    void advance(double t_end, Rng& rng) {
        static const std::vector<double> none;
        advance(t_end, rng, none, [](size_t) {});
    }

    // max relative mismatch between maintained and freshly computed exit rates
    double audit() const {
        auto& self = const_cast<AepSimulator&>(*this);
        double worst = 0.0, sum = 0.0;
        for (int n = 1; n <= s_.size(); ++n) {
            const double fresh = self.exit_rate(n);
            sum += fresh;
            const double stored = tree_.get(n - 1);
            if (fresh != stored) worst = std::max(worst, std::abs(fresh - stored) / std::max(std::abs(fresh), 1e-300));
        }
        if (sum > 0.0) worst = std::max(worst, std::abs(sum - tree_.total()) / sum);
        return worst;
    }

private:
    double exit_rate(int n) {
        return tables_.right_total(s_.right_gap(n)) + tables_.left_total(s_.left_gap(n));
    }
    void refresh(int n) {
        if (n >= 1 && n <= s_.size()) tree_.set(n - 1, exit_rate(n));
    }

    void jump(Rng& rng, double tot) {
        const int n = tree_.sample(rng.uniform() * tot) + 1;
        const int gr = s_.right_gap(n), gl = s_.left_gap(n);
        const double rr = tables_.right_total(gr), lr = tables_.left_total(gl);
        const double v = rng.uniform() * (rr + lr);
        if (v < rr) s_.x[n - 1] += tables_.sample_right(gr, v);
        else s_.x[n - 1] -= tables_.sample_left(gl, std::min(v - rr, std::nextafter(lr, 0.0)));
        refresh(n - 1);
        refresh(n);
        refresh(n + 1);
        ++events_;
        if (n > s_.frontier_index) {
            s_.frontier_index = n;
            if (opt_.enforce_margin && s_.size() - n < opt_.frontier_margin)
                throw FrontierViolation("frontier reached particle " + std::to_string(n) + " of " +
                                        std::to_string(s_.size()) + " (margin " +
                                        std::to_string(opt_.frontier_margin) + ")");
        }
    }

    ModelParams p_;
    SimOptions opt_;
    JumpTables tables_;
    ExclusionState s_;
    RateTree tree_;
    std::uint64_t events_ = 0;
};

struct Observers {
    std::vector<double> times;  // strictly increasing
    std::vector<int> tracked;   // particle indices
    bool full = false;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<int> tracked;
    std::vector<std::vector<long>> positions;  // [time][tracked]
    std::vector<std::vector<double>> hvalues;  // q^{x_n + n}
    std::vector<ExclusionState> snapshots;     // filled when Observers::full
};

inline void check_increasing(const std::vector<double>& t) {
    for (size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw DomainError("observation times must be strictly increasing");
}

inline TrajectoryRecord evolve_aep(ExclusionState& state, const ModelParams& p, double t_end, const Observers& obs,
                                   Rng& rng, const SimOptions& opt = {}) {
    if (t_end < state.time) throw DomainError("evolve_aep: t_end precedes current time");
    check_increasing(obs.times);
    for (int n : obs.tracked)
        if (n < 1 || n > state.size()) throw DomainError("evolve_aep: tracked particle out of range");
    AepSimulator sim(p, opt);
    sim.load(state);
    TrajectoryRecord rec;
    rec.tracked = obs.tracked;
    sim.advance(t_end, rng, obs.times, [&](size_t k) {
        const auto& s = sim.state();
        rec.times.push_back(obs.times[k]);
        std::vector<long> pos;
        std::vector<double> h;
        for (int n : obs.tracked) {
            pos.push_back(s.position(n));
            h.push_back(std::pow(p.q, double(s.position(n) + n)));
        }
        rec.positions.push_back(std::move(pos));
        rec.hvalues.push_back(std::move(h));
        if (obs.full) {
            rec.snapshots.push_back(s);
            rec.snapshots.back().time = obs.times[k];
        }
    });
    state = sim.state();
    return rec;
}

// Step-data run that doubles N and retries the same seed whenever the frontier margin is hit.
template <class Body>
void run_step_trial(AepSimulator& sim, int& N, std::uint64_t seed, Body&& body) {
    for (;;) {
        Rng rng(seed);
        sim.load_step(N);
        try {
            body(sim, rng);
            return;
        } catch (const FrontierViolation&) {
            N *= 2;
        }
    }
}

// ---------------------------------------------------------------- AZRP

struct ZrpState {
    std::map<long, long> occupation;  // site -> positive count
    double time = 0.0;

    long total() const {
        long k = 0;
        for (auto& [s, c] : occupation) k += c;
        return k;
    }
    long at(long site) const {
        auto it = occupation.find(site);
        return it == occupation.end() ? 0 : it->second;
    }
    void add(long site, long c) {
        if (c == 0) return;
        long& v = occupation[site];
        v += c;
        if (v == 0) occupation.erase(site);
        if (v < 0) throw std::logic_error("negative occupation");
    }
    // ordered coordinates n_1 >= ... >= n_k
    std::vector<long> weyl() const {
        std::vector<long> n;
        for (auto it = occupation.rbegin(); it != occupation.rend(); ++it)
            for (long c = 0; c < it->second; ++c) n.push_back(it->first);
        return n;
    }
    static ZrpState from_weyl(const std::vector<long>& n) {
        ZrpState s;
        for (size_t i = 0; i < n.size(); ++i) {
            if (i > 0 && n[i] > n[i - 1]) throw DomainError("Weyl vector must be nonincreasing");
            s.add(n[i], 1);
        }
        return s;
    }
};

// Dual: right-type moves go to site-1, site 0 absorbs (the process dual to the AEP).
// Gap: occupations are the AEP gaps; site 1 is an infinite reservoir emitting right-type moves
// to site 2, right-type moves go to site+1, and the last site only emits left-type moves.
enum class ZrpOrientation { Dual, Gap };

struct ZrpRules {
    ZrpOrientation orientation = ZrpOrientation::Dual;
    long last_site = 0;  // Gap only
};

class AzrpSimulator {
public:
    AzrpSimulator(const ModelParams& p, ZrpRules rules = {}, SimOptions opt = {})
        : rules_(rules), tables_(p, opt.left_rate_scale) {}

    ZrpState& state() { return s_; }
    void load(const ZrpState& s) { s_ = s; }

    template <class Obs>
    void advance(double t_end, Rng& rng, const std::vector<double>& obs_times, Obs&& obs) {
        size_t k = 0;
        while (k < obs_times.size() && obs_times[k] < s_.time) ++k;
        for (;;) {
            collect();
            const double tot = cum_.empty() ? 0.0 : cum_.back();
            const double tnext = tot > 0.0 ? s_.time + rng.exponential(tot) : INFINITY;
            while (k < obs_times.size() && obs_times[k] < tnext && obs_times[k] <= t_end) obs(k++);
            if (tnext > t_end) {
                s_.time = t_end;
                return;
            }
            s_.time = tnext;
            const double u = rng.uniform() * tot;
            size_t c = size_t(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
            if (c == cum_.size()) --c;
            const Channel& ch = chans_[c];
            const double v = rng.uniform() * ch.rate;
            const int y = ch.gap;
            const int j = ch.right ? tables_.sample_right(y, v) : tables_.sample_left(y, std::min(v, std::nextafter(ch.rate, 0.0)));
            const bool gap_mode = rules_.orientation == ZrpOrientation::Gap;
            const long dest = ch.site + ((ch.right == gap_mode) ? 1 : -1);
            if (!(gap_mode && ch.site == 1)) s_.add(ch.site, -j);
            if (!(gap_mode && dest == 1)) s_.add(dest, j);
        }
    }

private:
    struct Channel {
        long site;
        int gap;
        bool right;
        double rate;
    };
    void collect() {
        chans_.clear();
        cum_.clear();
        double acc = 0.0;
        auto push = [&](long site, int gap, bool right, double rate) {
            if (rate <= 0.0) return;
            chans_.push_back({site, gap, right, rate});
            cum_.push_back(acc += rate);
        };
        if (rules_.orientation == ZrpOrientation::Dual) {
            for (auto& [site, c] : s_.occupation) {
                if (site == 0) continue;
                push(site, int(c), true, tables_.right_total(int(c)));
                push(site, int(c), false, tables_.left_total(int(c)));
            }
        } else {
            push(1, kInf, true, tables_.right_total(kInf));
            for (auto& [site, c] : s_.occupation) {
                if (site <= 1 || site > rules_.last_site) continue;
                if (site < rules_.last_site) push(site, int(c), true, tables_.right_total(int(c)));
                push(site, int(c), false, tables_.left_total(int(c)));
            }
        }
    }

    ZrpRules rules_;
    JumpTables tables_;
    ZrpState s_;
    std::vector<Channel> chans_;
    std::vector<double> cum_;
};

inline std::vector<ZrpState> evolve_azrp(ZrpState& state, const ModelParams& p, double t_end,
                                         const std::vector<double>& obs_times, Rng& rng, ZrpRules rules = {},
                                         const SimOptions& opt = {}) {
    if (t_end < state.time) throw DomainError("evolve_azrp: t_end precedes current time");
    check_increasing(obs_times);
    AzrpSimulator sim(p, rules, opt);
    sim.load(state);
    std::vector<ZrpState> out;
    sim.advance(t_end, rng, obs_times, [&](size_t k) {
        out.push_back(sim.state());
        out.back().time = obs_times[k];
    });
    state = sim.state();
    return out;
}

// ---------------------------------------------------------------- trial runner

struct RunningStats {
    double n = 0, sum = 0, sumsq = 0;
    void add(double v) {
        n += 1;
        sum += v;
        sumsq += v * v;
    }
    void merge(const RunningStats& o) {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return n > 0 ? sum / n : 0.0; }
    double variance() const { return n > 1 ? std::max(0.0, (sumsq - sum * sum / n) / (n - 1)) : 0.0; }
    double stderr_mean() const { return n > 1 ? std::sqrt(variance() / n) : 0.0; }
};

// Trials are cut into a fixed number of contiguous blocks; each block gets a fresh accumulator and the
// blocks are merged in index order, so results do not depend on the thread count.
template <class Acc, class Make, class Body>
Acc run_trials(std::uint64_t trials, std::uint64_t master_seed, int threads, Make make_worker, Body body,
               std::uint64_t blocks = 64) {
    if (trials == 0) return Acc{};
    blocks = std::min<std::uint64_t>(blocks, trials);
    std::vector<Acc> part(blocks);
    auto do_block = [&](auto& worker, std::uint64_t b) {
        const std::uint64_t lo = trials * b / blocks, hi = trials * (b + 1) / blocks;
        for (std::uint64_t i = lo; i < hi; ++i) body(worker, i, trial_seed(master_seed, i), part[b]);
    };
    threads = std::max(1, threads);
    if (threads == 1) {
        auto worker = make_worker();
        for (std::uint64_t b = 0; b < blocks; ++b) do_block(worker, b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                auto worker = make_worker();
                for (std::uint64_t b = t; b < blocks; b += threads) do_block(worker, b);
            });
        for (auto& th : pool) th.join();
    }
    Acc total{};
    for (auto& a : part) total.merge(a);
    return total;
}

// ---------------------------------------------------------------- output

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trajectory_header(std::ostream& os) { os << "trial,time,observable,index,value\n"; }

inline void write_trajectory_rows(std::ostream& os, std::uint64_t trial, const TrajectoryRecord& rec) {
    for (size_t k = 0; k < rec.times.size(); ++k)
        for (size_t i = 0; i < rec.tracked.size(); ++i) {
            os << trial << ',' << fmt17(rec.times[k]) << ",x," << rec.tracked[i] << ',' << rec.positions[k][i] << '\n';
            os << trial << ',' << fmt17(rec.times[k]) << ",h," << rec.tracked[i] << ',' << fmt17(rec.hvalues[k][i])
               << '\n';
        }
}

inline void write_histogram(std::ostream& os, const std::vector<double>& edges, const std::vector<std::uint64_t>& counts) {
    os << "bin_left,bin_right,count\n";
    for (size_t i = 0; i + 1 < edges.size(); ++i) os << fmt17(edges[i]) << ',' << fmt17(edges[i + 1]) << ',' << counts[i] << '\n';
}

}  // namespace qhahn
