#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qhahn/config.hpp"
#include "qhahn/fredholm.hpp"
#include "qhahn/hydro.hpp"

using namespace qhahn;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("qhahn_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path out(const std::string& sub) const { return dir_ / sub; }

    // Exit status of the CLI; stdout and stderr are discarded.
    static int run(const std::string& args) {
        const std::string cmd = std::string(QHAHN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
        const int st = std::system(cmd.c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream is(p);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    // Rows of a CSV without its header, split on commas.
    static std::vector<std::vector<std::string>> rows(const fs::path& p) {
        std::ifstream is(p);
        std::string line;
        std::getline(is, line);
        std::vector<std::vector<std::string>> r;
        while (std::getline(is, line)) {
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            r.push_back(cells);
        }
        return r;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ExitCodesForInvalidInput) {
    EXPECT_EQ(run("hydro --q 1.5 --out " + out("a").string()), 2);
    EXPECT_EQ(run("hydro --preset nope --out " + out("b").string()), 2);
    EXPECT_EQ(run("nosuchcommand"), 2);
    EXPECT_EQ(run("simulate --threads 0 --out " + out("c").string()), 2);
    EXPECT_EQ(run("fredholm-eval --method other --out " + out("d").string()), 2);
}

TEST_F(CliTest, FirstParticleModeRefusedBelowThreshold) {
    EXPECT_EQ(run("fluctuations --preset fig6 --mode first --trials 2 --out " + out("f").string()), 2);
    EXPECT_FALSE(fs::exists(out("f") / "fluctuations.csv"));
}

TEST_F(CliTest, BulkModeRefusedOutsideSteepDescentRegion) {
    EXPECT_EQ(run("fluctuations --theta 3 --trials 2 --out " + out("f").string()), 2);
}

TEST_F(CliTest, TwCdfMatchesLibrary) {
    ASSERT_EQ(run("tw-cdf --x-min -4 --x-max 2 --points 7 --out " + out("tw").string()), 0);
    const auto r = rows(out("tw") / "tw_cdf.csv");
    ASSERT_EQ(r.size(), 7u);
    for (const auto& row : r) EXPECT_NEAR(std::stod(row[1]), tw_cdf(std::stod(row[0])), 1e-15);
}

TEST_F(CliTest, Fig3DensityClosedForm) {
    ASSERT_EQ(run("hydro --preset fig3 --points 50 --out " + out("h").string()), 0);
    const auto r = rows(out("h") / "hydro_curve.csv");
    ASSERT_EQ(r.size(), 50u);
    for (const auto& row : r) EXPECT_NEAR(std::stod(row[1]), 1.0 - std::pow(0.6, std::stod(row[0])), 1e-12);
}

TEST_F(CliTest, Fig2FluxChangesSign) {
    ASSERT_EQ(run("hydro --preset fig2 --out " + out("h").string()), 0);
    bool neg = false, pos = false;
    for (const auto& row : rows(out("h") / "flux.csv")) {
        const double j = std::stod(row[1]);
        neg |= j < 0.0;
        pos |= j > 0.0;
    }
    EXPECT_TRUE(neg);
    EXPECT_TRUE(pos);
}

TEST_F(CliTest, ProfileJumpsAtJamPoint) {
    ASSERT_EQ(run("hydro --preset fig6 --out " + out("h").string()), 0);
    const auto r = rows(out("h") / "profile.csv");
    ASSERT_GE(r.size(), 3u);
    EXPECT_EQ(r.front()[3], "jammed");
    EXPECT_EQ(r.back()[3], "empty");
    const ModelParams p(0.6, 0.6, 0.9, 0.1);
    const double rho0 = density(p, theta0(p));
    const auto& last_fan = r[r.size() - 2];
    EXPECT_NEAR(std::stod(last_fan[1]), rho0, 1e-9);
    EXPECT_EQ(std::stod(r.back()[1]), 0.0);
    EXPECT_NEAR(std::stod(r.back()[0]), std::stod(last_fan[0]), 1e-9);
    // with R < L there is no rarefaction fan
    ASSERT_EQ(run("hydro --R 0.4 --out " + out("g").string()), 0);
    EXPECT_TRUE(rows(out("g") / "profile.csv").empty());
}

TEST_F(CliTest, SimulateStaircaseIsStrictlyDecreasing) {
    ASSERT_EQ(run("simulate --preset fig5 --t 30 --trials 2 --out " + out("s").string()), 0);
    const auto r = rows(out("s") / "staircase.csv");
    ASSERT_FALSE(r.empty());
    for (size_t i = 1; i < r.size(); ++i) {
        if (r[i][0] != r[i - 1][0]) continue;
        EXPECT_LT(std::stod(r[i][2]), std::stod(r[i - 1][2]));
    }
    EXPECT_EQ(rows(out("s") / "summary.csv").size(), 2u);
    EXPECT_FALSE(rows(out("s") / "trajectory.csv").empty());
}

TEST_F(CliTest, ZeroTrialsWritesHeadersOnly) {
    ASSERT_EQ(run("simulate --trials 0 --out " + out("s").string()), 0);
    for (const char* f : {"staircase.csv", "trajectory.csv", "summary.csv"}) {
        EXPECT_TRUE(fs::exists(out("s") / f));
        EXPECT_TRUE(rows(out("s") / f).empty()) << f;
    }
}

TEST_F(CliTest, ReproducibleAcrossRunsAndThreadCounts) {
    const std::string common = "simulate --t 5 --trials 6 --seed 42 --out ";
    ASSERT_EQ(run(common + out("a").string()), 0);
    ASSERT_EQ(run(common + out("b").string()), 0);
    ASSERT_EQ(run(common + out("c").string() + " --threads 3"), 0);
    for (const char* f : {"staircase.csv", "trajectory.csv", "summary.csv"}) {
        EXPECT_EQ(slurp(out("a") / f), slurp(out("b") / f)) << f;
        EXPECT_EQ(slurp(out("a") / f), slurp(out("c") / f)) << f;
    }
}

TEST_F(CliTest, SidecarRoundTrip) {
    ASSERT_EQ(run("simulate --preset fig5 --t 8 --trials 3 --seed 5 --out " + out("a").string()), 0);
    const auto sidecar = out("a") / "simulate_config.json";
    ASSERT_TRUE(fs::exists(sidecar));
    ASSERT_EQ(run("simulate --config " + sidecar.string() + " --out " + out("b").string()), 0);
    EXPECT_EQ(slurp(out("a") / "staircase.csv"), slurp(out("b") / "staircase.csv"));
    auto ja = nlohmann::json::parse(slurp(sidecar)), jb = nlohmann::json::parse(slurp(out("b") / "simulate_config.json"));
    ja.erase("out");
    jb.erase("out");
    EXPECT_EQ(ja, jb);
    EXPECT_NEAR(ja["L"].get<double>(), 0.0, 1e-15);
    // a sidecar from another subcommand is rejected
    EXPECT_EQ(run("hydro --config " + sidecar.string() + " --out " + out("c").string()), 2);
}

TEST(ConfigSidecar, InProcessRoundTrip) {
    ExperimentConfig c;
    c.subcommand = "hydro";
    ASSERT_TRUE(apply_preset(c, "fig6"));
    c.seed = 99;
    const auto j = to_sidecar(c);
    EXPECT_NEAR(j["L"].get<double>(), 0.1, 1e-15);
    EXPECT_EQ(from_sidecar(j), c);
    EXPECT_FALSE(apply_preset(c, "fig4"));
}

TEST_F(CliTest, FredholmEvalMatchesLibrary) {
    ASSERT_EQ(run("fredholm-eval --zeta-re -0.3 --out " + out("f").string()), 0);
    const auto j = nlohmann::json::parse(slurp(out("f") / "fredholm.json"));
    const auto ref = det_mellin_barnes(ModelParams(0.5, 0.25, 0.7, 0.3), 2, 2.0, -0.3);
    EXPECT_NEAR(j["value_re"].get<double>(), ref.value.real(), 1e-14);
    EXPECT_EQ(j["n_nodes"].get<int>(), ref.n_nodes);
    ASSERT_EQ(run("fredholm-eval --method cauchy --zeta-re -0.3 --out " + out("g").string()), 0);
    const auto k = nlohmann::json::parse(slurp(out("g") / "fredholm.json"));
    EXPECT_NEAR(k["value_re"].get<double>(), ref.value.real(), 1e-6);
}

TEST_F(CliTest, FluctuationsCdfIsNondecreasing) {
    ASSERT_EQ(run("fluctuations --t 20 --trials 50 --points 40 --out " + out("f").string()), 0);
    const auto r = rows(out("f") / "fluctuations.csv");
    ASSERT_EQ(r.size(), 40u);
    for (size_t i = 1; i < r.size(); ++i) {
        EXPECT_GE(std::stod(r[i][1]), std::stod(r[i - 1][1]));
        EXPECT_GE(std::stod(r[i][2]), std::stod(r[i - 1][2]));
    }
    EXPECT_EQ(rows(out("f") / "samples.csv").size(), 50u);
    const auto j = nlohmann::json::parse(slurp(out("f") / "fluctuations.json"));
    EXPECT_GT(j["ks"].get<double>(), 0.0);
}

TEST_F(CliTest, VerifyPassesAtModestTrialCount) {
    EXPECT_EQ(run("verify --trials 200000 --threads 4 --out " + out("v").string()), 0);
    const auto j = nlohmann::json::parse(slurp(out("v") / "verify.json"));
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_EQ(j["duality"].size(), 12u);
}
