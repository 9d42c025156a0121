#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "qhahn/model.hpp"

namespace qhahn {

// Fully resolved experiment configuration; every CLI run echoes it as a JSON sidecar.
struct ExperimentConfig {
    std::string subcommand;
    std::string preset;  // empty when none
    double q = 0.5;
    double nu = 0.25;
    double R = 0.7;
    double theta = 1.0;
    double t = 1.0;
    std::uint64_t trials = 1;
    std::uint64_t seed = 1;
    std::string out = ".";
    bool strict = false;
    int threads = 1;
    // subcommand specific
    int n = 1;
    double zeta_re = -0.3;
    double zeta_im = 0.0;
    double x = 0.0;
    std::string mode = "bulk";      // fluctuations: first | bulk
    std::string method = "mb";      // fredholm-eval: mb | cauchy
    double tol = 1e-8;
    double x_min = -6.0;
    double x_max = 4.0;
    int points = 101;
    double left_rate_scale = 1.0;   // verify: mutation hook

    double L() const { return 1.0 - R; }
    ModelParams params() const { return ModelParams(q, nu, R, L()); }

    bool operator==(const ExperimentConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentConfig, subcommand, preset, q, nu, R, theta, t, trials, seed,
                                                out, strict, threads, n, zeta_re, zeta_im, x, mode, method, tol, x_min,
                                                x_max, points, left_rate_scale)

inline nlohmann::json to_sidecar(const ExperimentConfig& c) {
    nlohmann::json j = c;
    j["L"] = c.L();
    return j;
}

inline ExperimentConfig from_sidecar(const nlohmann::json& j) {
    nlohmann::json k = j;
    k.erase("L");
    return k.get<ExperimentConfig>();
}

// Named parameter sets for the figure reproductions. Returns false for an unknown name.
inline bool apply_preset(ExperimentConfig& c, const std::string& name) {
    if (name == "fig2") {
        c.q = c.nu = 0.4;
        c.R = 0.95;
    } else if (name == "fig3") {
        c.q = c.nu = 0.6;
        c.R = 0.8;
    } else if (name == "fig5") {
        c.q = c.nu = 0.4;
        c.R = 1.0;
        c.t = 500.0;
        c.trials = 20;
    } else if (name == "fig6") {
        c.q = c.nu = 0.6;
        c.R = 0.9;
        c.t = 1500.0;
        c.trials = 20;
    } else {
        return false;
    }
    c.preset = name;
    return true;
}

}  // namespace qhahn
