#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("bptns_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string &args) {
    const std::string cmd = std::string(BPTNS_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// observable -> value for one step of a results.csv
std::map<std::string, double> at_step(const fs::path &csv, int step) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::map<std::string, double> out;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string theta, st, chi, obs, val;
        std::getline(ss, theta, ',');
        std::getline(ss, st, ',');
        std::getline(ss, chi, ',');
        std::getline(ss, obs, ',');
        std::getline(ss, val, ',');
        if (std::stoi(st) == step) {
            out[obs] = std::stod(val);
        }
    }
    return out;
}

}  // namespace

TEST(Cli, ZeroFieldKeepsEveryQubitUp) {
    const auto out = scratch() / "zero";
    ASSERT_EQ(run("simulate --lattice eagle127 --theta 0 --steps 20 --chi 8 --out " + out.string()), 0);
    const auto z = at_step(out / "results.csv", 20);
    ASSERT_EQ(z.size(), 128u);
    for (const auto &[obs, v] : z) {
        EXPECT_EQ(v, 1.0) << obs;
    }
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
    EXPECT_TRUE(fs::exists(out / "steps.jsonl"));
}

TEST(Cli, CompareAgainstExactIsTight) {
    const auto d = scratch();
    ASSERT_EQ(run("exact --lattice 'grid 1x2' --theta 0.6 --steps 5 --out " + (d / "ex").string()), 0);
    ASSERT_EQ(run("simulate --lattice 'grid 1x2' --theta 0.6 --steps 5 --chi 32 --out " + (d / "sim").string()), 0);
    EXPECT_EQ(run("compare " + (d / "ex/results.csv").string() + " " + (d / "sim/results.csv").string() +
                  " --max-diff 1e-8 --out " + (d / "cmp").string()),
              0);
    EXPECT_NE(slurp(d / "cmp/results.csv").find("abs_diff"), std::string::npos);
}

TEST(Cli, SimulateMatchesTableauAtHalfPi) {
    // Six steps keep the light cone of every site from wrapping the hexagon.
    const auto d = scratch();
    ASSERT_EQ(run("simulate --lattice 'grid 1x1' --theta pi/2 --steps 6 --chi 64 --out " + (d / "hp").string()), 0);
    ASSERT_EQ(run("clifford --lattice 'grid 1x1' --theta pi/2 --steps 6 --out " + (d / "cl").string()), 0);
    for (int step : {1, 4, 6}) {
        const auto a = at_step(d / "hp/results.csv", step);
        const auto b = at_step(d / "cl/results.csv", step);
        ASSERT_EQ(a.size(), b.size());
        for (const auto &[obs, v] : b) {
            EXPECT_NEAR(a.at(obs), v, 1e-10) << obs << " step " << step;
        }
    }
}

TEST(Cli, IdenticalRunsAreBitIdentical) {
    const auto d = scratch();
    const std::string args = "mps --lattice 'grid 1x2' --theta 0.7 --steps 4 --chi 8 --target 10 --out ";
    ASSERT_EQ(run(args + (d / "r1").string()), 0);
    ASSERT_EQ(run(args + (d / "r2").string()), 0);
    setenv("BPTNS_THREADS", "3", 1);
    ASSERT_EQ(run(args + (d / "r3").string()), 0);
    unsetenv("BPTNS_THREADS");
    EXPECT_EQ(slurp(d / "r1/results.csv"), slurp(d / "r2/results.csv"));
    EXPECT_EQ(slurp(d / "r1/results.csv"), slurp(d / "r3/results.csv"));
}

TEST(Cli, ConfigFileSuppliesFlags) {
    const auto d = scratch();
    std::ofstream(d / "run.toml") << "[infinite]\ntheta = \"0.9\"\nsteps = 3\nchis = [4, 8]\n";
    ASSERT_EQ(run("--config " + (d / "run.toml").string() + " infinite --out " + (d / "inf").string()), 0);
    const std::string csv = slurp(d / "inf/results.csv");
    EXPECT_EQ(csv.rfind("theta_h,step,chi,z_site3,entropy,extrapolated_entropy,band\n", 0), 0u);
    EXPECT_NE(csv.find("0.9,3,8,"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
    const auto out = (scratch() / "bad").string();
    EXPECT_EQ(run("simulate --lattice hexagon --out " + out), 2);
    EXPECT_EQ(run("simulate --no-such-flag"), 2);
    EXPECT_EQ(run("clifford --theta 0.3 --out " + out), 2);
    EXPECT_EQ(run("diagnose --method magic --out " + out), 2);
    EXPECT_EQ(run(""), 2);
}

TEST(Cli, NumericFailureExitsThree) {
    const auto d = scratch();
    ASSERT_EQ(run("exact --lattice 'grid 1x1' --theta 0.4 --steps 2 --out " + (d / "a").string()), 0);
    ASSERT_EQ(run("simulate --lattice 'grid 1x1' --theta 0.4 --steps 2 --chi 1 --out " + (d / "b").string()), 0);
    EXPECT_EQ(run("compare " + (d / "a/results.csv").string() + " " + (d / "b/results.csv").string() +
                  " --max-diff 1e-12 --out " + (d / "c").string()),
              3);
    EXPECT_EQ(run("simulate --lattice 'grid 1x1' --theta 0.9 --steps 3 --bp-max-iters 1 --bp-tol 1e-15 "
                  "--no-gauge-every-step --strict --chi 4 --out " +
                  (d / "s").string()),
              3);
}
