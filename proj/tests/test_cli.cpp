#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dmlk/csv.hpp"
#include "dmlk/dgp.hpp"

using namespace dmlk;
namespace fs = std::filesystem;

#ifndef DMLK_CLI_PATH
#error "DMLK_CLI_PATH must point at the built binary"
#endif

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("dmlk_cli_" + std::to_string(std::rand()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DMLK_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

const char* kMiniConfig =
    "design = lowdim\n"
    "n = 100\n"
    "r2 = 0.75\n"
    "learners = lin\n"
    "b_reps = 2\n"
    "base_seed = 17\n";

}  // namespace

TEST_CASE("run-sim writes the artifact set for a minimal grid") {
    TempDir dir;
    {
        std::ofstream out(dir.file("mini.cfg"));
        out << kMiniConfig;
    }
    REQUIRE(run_cli("run-sim --config " + dir.file("mini.cfg") + " --out " + dir.file("out")) == 0);
    const std::string reps = slurp(dir.file("out/reps.csv"));
    REQUIRE(count_lines(reps) == 3);  // header + 2 replications
    const std::string cells = slurp(dir.file("out/cells.csv"));
    REQUIRE(count_lines(cells) == 2);  // header + 1 cell
    REQUIRE(fs::exists(dir.file("out/regimes.csv")));
    REQUIRE(fs::exists(dir.file("out/design.csv")));
    REQUIRE(fs::exists(dir.file("out/report.md")));
}

TEST_CASE("run-sim output is byte-identical across runs") {
    TempDir dir;
    {
        std::ofstream out(dir.file("mini.cfg"));
        out << kMiniConfig;
    }
    REQUIRE(run_cli("run-sim --config " + dir.file("mini.cfg") + " --out " + dir.file("a")) == 0);
    REQUIRE(run_cli("run-sim --config " + dir.file("mini.cfg") + " --out " + dir.file("b")) == 0);
    REQUIRE(slurp(dir.file("a/reps.csv")) == slurp(dir.file("b/reps.csv")));
    REQUIRE(slurp(dir.file("a/cells.csv")) == slurp(dir.file("b/cells.csv")));
}

TEST_CASE("report regenerates aggregates byte-identically") {
    TempDir dir;
    {
        std::ofstream out(dir.file("mini.cfg"));
        out << kMiniConfig;
    }
    REQUIRE(run_cli("run-sim --config " + dir.file("mini.cfg") + " --out " + dir.file("orig")) == 0);
    REQUIRE(run_cli("report --reps " + dir.file("orig/reps.csv") + " --out " + dir.file("re")) == 0);
    for (const char* name : {"cells.csv", "regimes.csv", "design.csv", "report.md"})
        REQUIRE(slurp(dir.file(std::string("orig/") + name)) == slurp(dir.file(std::string("re/") + name)));
}

TEST_CASE("invalid configuration exits with the validation code") {
    TempDir dir;
    {
        std::ofstream out(dir.file("bad.cfg"));
        out << "design = lowdim\nn = 100\nr2 = 0.75\nlearners = lin\nb_reps = 2\nalpha = 1.5\n";
    }
    REQUIRE(run_cli("run-sim --config " + dir.file("bad.cfg") + " --out " + dir.file("out")) == 2);
    REQUIRE_FALSE(fs::exists(dir.file("out/reps.csv")));
}

TEST_CASE("diagnose runs on an exported dataset and emits json") {
    TempDir dir;
    const DgpSpec spec = make_spec(Design::LowDim, 10, 0.5, 0.75);
    SeededStream stream(808);
    write_dataset_csv(dir.file("data.csv"), gen_sample(spec, 120, stream));

    REQUIRE(run_cli("diagnose --data " + dir.file("data.csv") + " --learner lin --seed 3 --json " +
                    dir.file("diag.json")) == 0);
    const std::string json = slurp(dir.file("diag.json"));
    REQUIRE(json.find("\"theta_hat\"") != std::string::npos);
    REQUIRE(json.find("\"kappa\"") != std::string::npos);
    REQUIRE(json.find("\"regime\"") != std::string::npos);
}

TEST_CASE("diagnose rejects too-small samples with the validation code") {
    TempDir dir;
    {
        std::ofstream out(dir.file("tiny.csv"));
        out << "y,d,x1\n1,2,3\n2,1,0\n0,1,2\n";
    }
    REQUIRE(run_cli("diagnose --data " + dir.file("tiny.csv") + " --folds 5") == 2);
}

TEST_CASE("degenerate treatment exits with the runtime code") {
    TempDir dir;
    {
        std::ofstream out(dir.file("flat.csv"));
        out << "y,d,x1\n";
        SeededStream s(1);
        for (int i = 0; i < 40; ++i) out << s.normal() << ",5," << s.normal() << "\n";
    }
    REQUIRE(run_cli("diagnose --data " + dir.file("flat.csv") + " --learner lin") == 3);
}

TEST_CASE("report on a malformed file exits with the runtime code") {
    TempDir dir;
    {
        std::ofstream out(dir.file("junk.csv"));
        out << "not,a,reps,file\n1,2,3,4\n";
    }
    REQUIRE(run_cli("report --reps " + dir.file("junk.csv") + " --out " + dir.file("out")) == 3);
    REQUIRE(run_cli("report --reps " + dir.file("missing.csv") + " --out " + dir.file("out")) == 3);
}
