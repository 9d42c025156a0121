// Experiment runner: simulate, hydro, verify, fluctuations, fredholm-eval, tw-cdf.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qhahn/checks.hpp"
#include "qhahn/config.hpp"
#include "qhahn/experiments.hpp"

namespace fs = std::filesystem;
using namespace qhahn;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const ExperimentConfig& c, const std::string& name) {
    std::ofstream os(fs::path(c.out) / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (fs::path(c.out) / name).string());
    return os;
}

void write_json(const ExperimentConfig& c, const std::string& name, const json& j) {
    auto os = open_out(c, name);
    os << j.dump(2) << '\n';
}

json params_json(const ExperimentConfig& c) { return {{"q", c.q}, {"nu", c.nu}, {"R", c.R}, {"L", c.L()}}; }

// ---------------------------------------------------------------- simulate

int cmd_simulate(const ExperimentConfig& c) {
    const ModelParams p = c.params();
    if (!(c.t > 0.0)) throw ConfigError("t must be > 0");
    const int n_obs = 10;
    std::vector<double> obs_times;
    for (int k = 1; k <= n_obs; ++k) obs_times.push_back(c.t * k / n_obs);

    struct Acc {
        std::string stair, traj, summary;
        void merge(const Acc& o) {
            stair += o.stair;
            traj += o.traj;
            summary += o.summary;
        }
    };
    struct Worker {
        AepSimulator sim;
        int N;
    };
    const auto acc = run_trials<Acc>(
        c.trials, c.seed, c.threads, [&] { return Worker{AepSimulator(p), default_particle_count(p, c.t)}; },
        [&](Worker& w, std::uint64_t trial, std::uint64_t seed, Acc& a) {
            TrajectoryRecord rec;
            run_step_trial(w.sim, w.N, seed, [&](AepSimulator& sim, Rng& rng) {
                rec = TrajectoryRecord{};
                rec.tracked = {1, 10, 100};
                sim.advance(c.t, rng, obs_times, [&](size_t k) {
                    const auto& s = sim.state();
                    rec.times.push_back(obs_times[k]);
                    std::vector<long> pos;
                    std::vector<double> h;
                    for (int n : rec.tracked) {
                        pos.push_back(s.position(n));
                        h.push_back(std::pow(p.q, double(s.position(n) + n)));
                    }
                    rec.positions.push_back(std::move(pos));
                    rec.hvalues.push_back(std::move(h));
                });
            });
            const auto& s = w.sim.state();
            std::ostringstream st, tr, su;
            for (int n = 1; n <= s.frontier_index; ++n)
                st << trial << ',' << n << ',' << fmt17(double(s.position(n)) / c.t) << ',' << fmt17(n / c.t) << '\n';
            write_trajectory_rows(tr, trial, rec);
            su << trial << ',' << seed << ',' << s.position(1) << ',' << fmt17(s.position(1) / c.t) << ','
               << s.frontier_index << ',' << w.sim.events() << '\n';
            a.stair += st.str();
            a.traj += tr.str();
            a.summary += su.str();
        });

    auto stair = open_out(c, "staircase.csv");
    stair << "trial,n,x_over_t,n_over_t\n" << acc.stair;
    auto traj = open_out(c, "trajectory.csv");
    write_trajectory_header(traj);
    traj << acc.traj;
    auto sum = open_out(c, "summary.csv");
    sum << "trial,seed,x1,x1_over_t,frontier_index,events\n" << acc.summary;
    std::cout << "simulate: " << c.trials << " trials written to " << c.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- hydro

int cmd_hydro(const ExperimentConfig& c) {
    const ModelParams p = c.params();
    const int pts = std::max(c.points, 2);
    const auto thetas = theta_grid(p.q, pts, 1e-6, 1.0 - 1e-6);
    {
        auto os = open_out(c, "hydro_curve.csv");
        write_hydro_curve(os, p, thetas);
    }
    {
        auto os = open_out(c, "flux.csv");
        write_flux_curve(os, p, thetas);
    }
    // density profile x -> rho over the fan; right edge at pi(theta0) when L > 0, where rho jumps to 0
    auto os = open_out(c, "profile.csv");
    os << "x,rho,theta,region\n";
    if (p.R > p.L) {
        const auto e = fan_edges(p);
        os << fmt17(e.x_left) << ",1,inf,jammed\n";
        const double a_lo = std::pow(p.q, e.theta_left), a_hi = std::pow(p.q, e.theta_right);
        auto grid = theta_grid(p.q, pts, a_lo, a_hi);
        std::vector<std::pair<double, std::string>> rows;
        for (double th : grid) {
            const auto h = pi_kappa_sigma(p, th);
            rows.emplace_back(h.pi, fmt17(h.pi) + ',' + fmt17(h.rho) + ',' + fmt17(th) + ",fan\n");
        }
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& r : rows) os << r.second;
        os << fmt17(e.x_right) << ",0,0,empty\n";
    } else {
        std::cerr << "hydro: R <= L, no rarefaction fan; profile.csv has only a header\n";
    }
    std::cout << "hydro: curves written to " << c.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- verify

json check_json(const CheckResult& r) {
    return {{"name", r.name},   {"hard", r.hard},           {"passed", r.passed},
            {"value", r.value}, {"threshold", r.threshold}, {"detail", r.detail}};
}

int cmd_verify(const ExperimentConfig& c) {
    std::vector<CheckResult> all;
    auto add = [&](std::vector<CheckResult> v) { all.insert(all.end(), v.begin(), v.end()); };
    add(identity_checks());
    add(critical_point_checks());
    add(steep_descent_checks());
    add(moment_checks());
    add(fredholm_checks());
    const auto cases = duality_grid(c.trials, c.seed, c.threads, c.left_rate_scale);
    add(duality_checks(cases, c.strict));

    json cases_json = json::array();
    for (const auto& d : cases)
        cases_json.push_back({{"params", {{"q", d.p.q}, {"nu", d.p.nu}, {"R", d.p.R}, {"L", d.p.L}}},
                              {"n", d.n},
                              {"lhs", d.lhs},
                              {"rhs", d.rhs},
                              {"stderr", d.stderr_},
                              {"z", d.z},
                              {"boundary_mass", d.boundary_mass}});
    json checks = json::array();
    int hard_failures = 0, soft_failures = 0;
    for (const auto& r : all) {
        checks.push_back(check_json(r));
        if (!r.passed) {
            (r.hard ? hard_failures : soft_failures)++;
            std::cerr << (r.hard ? "FAIL " : "warn ") << r.name << ": " << r.value << " (threshold " << r.threshold
                      << ")\n";
        }
    }
    write_json(c, "verify.json",
               {{"passed", hard_failures == 0},
                {"hard_failures", hard_failures},
                {"soft_failures", soft_failures},
                {"trials", c.trials},
                {"seed", c.seed},
                {"duality", cases_json},
                {"checks", checks}});
    std::cout << "verify: " << all.size() << " checks, " << hard_failures << " hard failures, " << soft_failures
              << " reported-only failures\n";
    return hard_failures == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- fluctuations

int cmd_fluctuations(const ExperimentConfig& c) {
    const ModelParams p = c.params();
    if (!p.is_madm()) throw ConfigError("fluctuation theorems are stated for nu = q");
    double theta = c.theta;
    int n = 1;
    if (c.mode == "first") {
        const double rm = r_min(QParam(p.q));
        if (!(p.R > rm && p.R < 1.0))
            throw ConfigError("first-particle fluctuation theorem requires R_min(q) < R < 1; R_min(" + fmt_short(p.q) +
                              ") = " + fmt17(rm) + ", R = " + fmt17(p.R));
        theta = theta0(p);
    } else if (c.mode == "bulk") {
        if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
        const auto h = pi_kappa_sigma(p, theta);
        if (h.kappa < 0.0)
            throw ConfigError("bulk fluctuation theorem requires kappa(theta) >= 0; kappa = " + fmt17(h.kappa));
        n = int(std::floor(h.kappa * c.t));
        if (n < 1) throw ConfigError("floor(kappa(theta) t) must be >= 1");
    } else {
        throw ConfigError("mode must be first or bulk");
    }
    if (!steep_descent_admissible(p.q, theta))
        throw ConfigError("fluctuation theorem requires q^theta > 2q/(1+q); q^theta = " + fmt17(std::pow(p.q, theta)));

    const auto xs = particle_samples(p, n, c.t, c.trials, c.seed, c.threads);
    const auto rep = rescale_fluctuations(p, theta, n, c.t, xs);
    auto sorted = rep.scaled;
    std::sort(sorted.begin(), sorted.end());
    {
        auto os = open_out(c, "fluctuations.csv");
        os << "x,empirical_cdf,tw_cdf\n";
        const int pts = std::max(c.points, 2);
        for (int i = 0; i < pts; ++i) {
            const double x = c.x_min + (c.x_max - c.x_min) * i / (pts - 1);
            const double F = sorted.empty() ? 0.0
                                            : double(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
                                                  double(sorted.size());
            os << fmt17(x) << ',' << fmt17(F) << ',' << fmt17(tw_cdf(x)) << '\n';
        }
    }
    {
        auto os = open_out(c, "samples.csv");
        os << "trial,position,scaled\n";
        for (size_t i = 0; i < xs.size(); ++i) os << i << ',' << xs[i] << ',' << fmt17(rep.scaled[i]) << '\n';
    }
    write_json(c, "fluctuations.json",
               {{"mode", c.mode},
                {"theta", theta},
                {"n", n},
                {"pi", rep.pi},
                {"sigma", rep.sigma},
                {"t", c.t},
                {"trials", c.trials},
                {"ks", rep.ks}});
    std::cout << "fluctuations: KS distance " << rep.ks << " over " << xs.size() << " samples\n";
    return kExitOk;
}

// ---------------------------------------------------------------- Fredholm and Tracy-Widom

int cmd_fredholm(const ExperimentConfig& c) {
    const ModelParams p = c.params();
    const cplx zeta(c.zeta_re, c.zeta_im);
    DetResult r;
    if (c.method == "mb") r = det_mellin_barnes(p, c.n, c.t, zeta, c.tol);
    else if (c.method == "cauchy") r = det_cauchy(p, c.n, c.t, zeta, c.tol);
    else throw ConfigError("method must be mb or cauchy");
    json params = params_json(c);
    params["n"] = c.n;
    params["t"] = c.t;
    params["zeta_re"] = c.zeta_re;
    params["zeta_im"] = c.zeta_im;
    params["method"] = c.method;
    const json j{{"value_re", r.value.real()}, {"value_im", r.value.imag()}, {"est_error", r.est_error},
                 {"n_nodes", r.n_nodes},       {"inner_nodes", r.inner_nodes}, {"params", params}};
    write_json(c, "fredholm.json", j);
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_tw(const ExperimentConfig& c) {
    if (!(c.x_max > c.x_min) || c.points < 2) throw ConfigError("need x-max > x-min and points >= 2");
    auto os = open_out(c, "tw_cdf.csv");
    os << "x,F\n";
    for (int i = 0; i < c.points; ++i) {
        const double x = c.x_min + (c.x_max - c.x_min) * i / (c.points - 1);
        os << fmt17(x) << ',' << fmt17(tw_cdf(x)) << '\n';
    }
    std::cout << "tw-cdf: " << c.points << " points written to " << c.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- option plumbing

// Subcommand defaults sit below presets, which sit below a loaded sidecar, which sits below explicit flags.
ExperimentConfig subcommand_defaults(const std::string& sub) {
    ExperimentConfig c;
    c.subcommand = sub;
    if (sub == "verify") c.trials = 2000000;
    if (sub == "fluctuations") {
        c.q = c.nu = 0.4;
        c.R = 0.95;
        c.theta = 0.5;  // q^theta must exceed 2q/(1+q)
        c.t = 100.0;
        c.trials = 1000;
        c.points = 201;
    }
    if (sub == "hydro") c.points = 400;
    if (sub == "tw-cdf") c.points = 201;
    if (sub == "fredholm-eval") {
        c.n = 2;
        c.t = 2.0;
    }
    return c;
}

struct Binding {
    std::string flag;
    std::function<void(ExperimentConfig&, const ExperimentConfig&)> copy;
};

#define QHAHN_BIND(flag, field) Binding{flag, [](ExperimentConfig& d, const ExperimentConfig& s) { d.field = s.field; }}

struct SubcommandSpec {
    CLI::App* app;
    ExperimentConfig raw;
    std::vector<Binding> bindings;
    std::string preset;
    std::string config_file;
    std::function<int(const ExperimentConfig&)> run;
};

void add_common(SubcommandSpec& s) {
    auto* a = s.app;
    auto& r = s.raw;
    a->add_option("--q", r.q, "q in (0,1)");
    a->add_option("--nu", r.nu, "nu in [0,1)");
    a->add_option("--R", r.R, "right asymmetry; L = 1 - R");
    a->add_option("--theta", r.theta, "fan parameter theta > 0");
    a->add_option("--t", r.t, "time horizon");
    a->add_option("--trials", r.trials, "Monte Carlo trials");
    a->add_option("--seed", r.seed, "master seed");
    a->add_option("--out", r.out, "output directory");
    a->add_flag("--strict", r.strict, "escalate truncation warnings to failures");
    a->add_option("--threads", r.threads, "worker threads")->check(CLI::PositiveNumber);
    a->add_option("--preset", s.preset, "fig2 | fig3 | fig5 | fig6");
    a->add_option("--config", s.config_file, "resolved configuration sidecar to start from");
    s.bindings = {QHAHN_BIND("--q", q),         QHAHN_BIND("--nu", nu),         QHAHN_BIND("--R", R),
                  QHAHN_BIND("--theta", theta), QHAHN_BIND("--t", t),           QHAHN_BIND("--trials", trials),
                  QHAHN_BIND("--seed", seed),   QHAHN_BIND("--out", out),       QHAHN_BIND("--strict", strict),
                  QHAHN_BIND("--threads", threads)};
}

void add_extra(SubcommandSpec& s, const std::vector<std::string>& which) {
    auto* a = s.app;
    auto& r = s.raw;
    for (const auto& w : which) {
        if (w == "n") a->add_option("--n", r.n, "particle index"), s.bindings.push_back(QHAHN_BIND("--n", n));
        if (w == "zeta") {
            a->add_option("--zeta-re", r.zeta_re, "Re zeta");
            a->add_option("--zeta-im", r.zeta_im, "Im zeta");
            s.bindings.push_back(QHAHN_BIND("--zeta-re", zeta_re));
            s.bindings.push_back(QHAHN_BIND("--zeta-im", zeta_im));
        }
        if (w == "method") a->add_option("--method", r.method, "mb | cauchy"), s.bindings.push_back(QHAHN_BIND("--method", method));
        if (w == "tol") a->add_option("--tol", r.tol, "refinement tolerance"), s.bindings.push_back(QHAHN_BIND("--tol", tol));
        if (w == "mode") a->add_option("--mode", r.mode, "first | bulk"), s.bindings.push_back(QHAHN_BIND("--mode", mode));
        if (w == "grid") {
            a->add_option("--x-min", r.x_min, "grid start");
            a->add_option("--x-max", r.x_max, "grid end");
            a->add_option("--points", r.points, "grid size");
            s.bindings.push_back(QHAHN_BIND("--x-min", x_min));
            s.bindings.push_back(QHAHN_BIND("--x-max", x_max));
            s.bindings.push_back(QHAHN_BIND("--points", points));
        }
        if (w == "points") a->add_option("--points", r.points, "grid size"), s.bindings.push_back(QHAHN_BIND("--points", points));
        if (w == "mutation") {
            // mutation hook for the duality grid; intentionally undocumented
            a->add_option("--left-rate-scale", r.left_rate_scale)->group("");
            s.bindings.push_back(QHAHN_BIND("--left-rate-scale", left_rate_scale));
        }
    }
}

ExperimentConfig resolve(const SubcommandSpec& s) {
    const std::string sub = s.app->get_name();
    ExperimentConfig c = subcommand_defaults(sub);
    if (!s.preset.empty() && !apply_preset(c, s.preset)) throw ConfigError("unknown preset '" + s.preset + "'");
    if (!s.config_file.empty()) {
        std::ifstream is(s.config_file);
        if (!is) throw ConfigError("cannot read " + s.config_file);
        c = from_sidecar(json::parse(is));
        if (c.subcommand != sub) throw ConfigError("config was written by '" + c.subcommand + "', not '" + sub + "'");
    }
    for (const auto& b : s.bindings)
        if (s.app->count(b.flag) > 0) b.copy(c, s.raw);
    c.params();  // validates
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"q-Hahn exclusion / zero-range experiment runner"};
    app.require_subcommand(1);
    std::vector<SubcommandSpec> specs;
    specs.reserve(6);
    auto make = [&](const std::string& name, const std::string& help, std::function<int(const ExperimentConfig&)> run,
                    std::vector<std::string> extra) {
        specs.push_back({app.add_subcommand(name, help), {}, {}, {}, {}, std::move(run)});
        specs.back().raw = subcommand_defaults(name);
        add_common(specs.back());
        add_extra(specs.back(), extra);
    };
    make("simulate", "step-data Monte Carlo: staircase, trajectory and summary CSVs", cmd_simulate, {});
    make("hydro", "hydrodynamic curves: theta -> (rho, j, pi, kappa, sigma), flux and density profile", cmd_hydro,
         {"points"});
    make("verify", "property grid (identities, critical point, steep descent, duality, Fredholm)", cmd_verify,
         {"mutation"});
    make("fluctuations", "rescaled first-particle or bulk statistics against F_GUE", cmd_fluctuations,
         {"mode", "grid"});
    make("fredholm-eval", "Fredholm determinant for the e_q-Laplace transform", cmd_fredholm,
         {"n", "zeta", "method", "tol"});
    make("tw-cdf", "GUE Tracy-Widom distribution on a grid", cmd_tw, {"grid"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    for (auto& s : specs) {
        if (!s.app->parsed()) continue;
        ExperimentConfig c;
        try {
            c = resolve(s);
            fs::create_directories(c.out);
            write_json(c, c.subcommand + "_config.json", to_sidecar(c));
        } catch (const std::exception& e) {
            std::cerr << "invalid configuration: " << e.what() << '\n';
            return kExitInvalid;
        }
        try {
            return s.run(c);
        } catch (const ConfigError& e) {
            std::cerr << "invalid configuration: " << e.what() << '\n';
            return kExitInvalid;
        } catch (const DomainError& e) {
            std::cerr << "invalid configuration: " << e.what() << '\n';
            return kExitInvalid;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitFailure;
        }
    }
    return kExitInvalid;
}
