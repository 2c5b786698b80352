#include <epct/config.hpp>

#include <json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = EPCT_SCENARIO_DIR;

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("epct_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args, const std::string& sub = "out") {
        const std::string cmd = std::string("\"") + EPCT_CLI_PATH + "\" --quiet --out \"" + (dir_ / sub).string() +
                                "\" " + args + " > \"" + (dir_ / "stdout.txt").string() + "\" 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path out(const std::string& file, const std::string& sub = "out") const { return dir_ / sub / file; }

    nlohmann::json json_at(const fs::path& p) const {
        std::ifstream in(p);
        return nlohmann::json::parse(in);
    }

    std::string scenario(const std::string& name) const { return "\"" + (kScenarios / name).string() + "\""; }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, ClassifyExitCodes) {
    EXPECT_EQ(run("classify " + scenario("subcritical_variable.cfg")), 0);
    EXPECT_EQ(json_at(out("verdict.json"))["verdict"], "subcritical");
    EXPECT_EQ(run("classify " + scenario("witness_supercritical.cfg")), 2);
    const auto v = json_at(out("verdict.json"));
    EXPECT_EQ(v["verdict"], "supercritical");
    EXPECT_DOUBLE_EQ(v["witness"].get<double>(), 0.25);
    EXPECT_EQ(run("classify " + scenario("variable_gap.cfg")), 3);
    EXPECT_EQ(run("classify " + scenario("bad_k.cfg")), 1);
    EXPECT_EQ(run("classify /nonexistent/file.cfg"), 1);
}

TEST_F(Cli, ManifestRecordsInputs) {
    ASSERT_EQ(run("classify " + scenario("alignment.cfg")), 0);
    const auto m = json_at(out("manifest.json"));
    EXPECT_EQ(m["command"], "classify");
    EXPECT_EQ(m["version"], "1.0.0");
    const std::string text = epct::detail::read_file(kScenarios / "alignment.cfg");
    EXPECT_EQ(m["input_hash"], "fnv1a64:" + epct::hex64(epct::fnv1a("classify\n" + text)));
}

TEST_F(Cli, SimulateExitCodesAndOutputs) {
    EXPECT_EQ(run("simulate " + scenario("equilibrium.cfg") + " --horizon 2"), 0);
    auto report = json_at(out("run_report.json"));
    EXPECT_EQ(report["outcome"], "GlobalToHorizon");
    EXPECT_TRUE(report["t_c"].is_null());
    EXPECT_TRUE(fs::exists(out("trajectory.csv")));
    EXPECT_TRUE(fs::exists(out("manifest.json")));

    EXPECT_EQ(run("simulate " + scenario("witness_supercritical.cfg") + " --chars 64"), 2);
    report = json_at(out("run_report.json"));
    EXPECT_EQ(report["outcome"], "Breakdown");
    EXPECT_NEAR(report["t_c"].get<double>(), std::acosh(2.0), 1e-4);

    EXPECT_EQ(run("simulate " + scenario("equilibrium.cfg") + " --chars 8"), 1);
    EXPECT_EQ(run("simulate " + scenario("bad_k.cfg")), 1);
}

TEST_F(Cli, SimulateIsDeterministic) {
    const std::string args = "simulate " + scenario("subcritical_variable.cfg") + " --horizon 2 --chars 32";
    ASSERT_EQ(run(args, "a"), 0);
    ASSERT_EQ(run(args, "b"), 0);
    EXPECT_EQ(epct::detail::read_file(out("trajectory.csv", "a")), epct::detail::read_file(out("trajectory.csv", "b")));
    const auto header = epct::detail::read_file(out("trajectory.csv", "a")).substr(0, 25);
    EXPECT_EQ(header, "t,alpha,x,u,E,rho,slope\n0");
}

TEST_F(Cli, SweepConstantBackground) {
    ASSERT_EQ(run("sweep " + scenario("sweep_constant.cfg")), 0);
    const auto s = json_at(out("sweep.json"));
    EXPECT_NEAR(s["midpoint"].get<double>(), (1.0 + std::sqrt(5.0)) / 2.0, 5e-3);
    EXPECT_EQ(s["within_bounds"], true);
    EXPECT_TRUE(fs::exists(out("sweep.csv")));
    EXPECT_EQ(run("sweep " + scenario("sweep_constant.cfg") + " --lo 2 --hi 3"), 1);
    EXPECT_EQ(run("sweep " + scenario("sweep_constant.cfg") + " --param nothing.here"), 1);
}

TEST_F(Cli, PhaseExports) {
    ASSERT_EQ(run("phase --system pq --gamma 2 --beta 3 --k -1 --grid -1,3,5,0,2,4"), 0);
    const auto p = json_at(out("phase.json"));
    EXPECT_DOUBLE_EQ(p["critical_point"][0].get<double>(), 1.5);
    EXPECT_DOUBLE_EQ(p["critical_point"][1].get<double>(), 0.5);
    const auto csv = epct::detail::read_file(out("direction_field.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
    EXPECT_TRUE(fs::exists(out("separatrix.csv")));
    EXPECT_EQ(run("phase --system ws"), 1);
    EXPECT_EQ(run("phase --gamma 0"), 1);
    EXPECT_EQ(run("phase --grid 1,2,3"), 1);
}

TEST_F(Cli, VerifyExitCodes) {
    EXPECT_EQ(run("verify --suite roots"), 0);
    EXPECT_EQ(run("verify --suite nonsense"), 1);
    fs::create_directories(dir_ / "empty");
    EXPECT_EQ(run("verify --suite bounds --scenarios \"" + (dir_ / "empty").string() + "\""), 4);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("classify"), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("--help"), 0);
}
