// End-to-end runs of the command-line tool: simulate -> calibrate ->
// predict/evaluate, exit-code mapping, and byte-identical reruns.

#include "confseg/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#ifndef CONFSEG_CLI_PATH
#error "CONFSEG_CLI_PATH must be defined by the build"
#endif

namespace {

namespace fs = std::filesystem;

struct CliDir {
    fs::path dir;
    CliDir() {
        dir = fs::temp_directory_path() / ("confseg_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~CliDir() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(CONFSEG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("simulate/calibrate/evaluate round trip through the CLI") {
    CliDir tmp;
    const std::string calib = tmp.path("calib.json");
    const std::string test = tmp.path("test.json");
    const std::string selector = tmp.path("selector.json");
    const std::string report = tmp.path("report.json");
    const std::string csv = tmp.path("report.csv");

    REQUIRE(run("simulate --seed 11 --n-queries 60 --out " + calib) == 0);
    REQUIRE(run("simulate --seed 12 --n-queries 40 --out " + test) == 0);

    REQUIRE(run("calibrate --data " + calib +
                " --alpha 0.2 --tau 0.7 --eta 0.9 --out-selector " + selector) == 0);
    CHECK(fs::exists(selector));

    REQUIRE(run("evaluate --selector " + selector + " --test-data " + test + " --report " +
                report + " --csv " + csv) == 0);
    const confseg::EvaluationReport r = confseg::load_report_json(report);
    CHECK(r.rows.size() == 40);
    CHECK(r.theta_tilde.has_value());

    // Re-running the pipeline with the same seeds gives byte-identical output.
    const std::string report2 = tmp.path("report2.json");
    const std::string selector2 = tmp.path("selector2.json");
    const std::string calib2 = tmp.path("calib2.json");
    REQUIRE(run("simulate --seed 11 --n-queries 60 --out " + calib2) == 0);
    CHECK(slurp(calib) == slurp(calib2));
    REQUIRE(run("calibrate --data " + calib2 +
                " --alpha 0.2 --tau 0.7 --eta 0.9 --out-selector " + selector2) == 0);
    CHECK(slurp(selector) == slurp(selector2));
    REQUIRE(run("evaluate --selector " + selector2 + " --test-data " + test + " --report " +
                report2) == 0);
    CHECK(slurp(report) == slurp(report2));

    // predict emits a set for a known query id.
    const std::string pred = tmp.path("pred.json");
    REQUIRE(run("predict --selector " + selector + " --data " + test +
                " --query q00000 --out " + pred) == 0);
    CHECK(fs::exists(pred));
}

TEST_CASE("crc calibration and baselines run through the CLI") {
    CliDir tmp;
    const std::string calib = tmp.path("calib.json");
    const std::string test = tmp.path("test.json");
    REQUIRE(run("simulate --seed 21 --n-queries 80 --out " + calib) == 0);
    REQUIRE(run("simulate --seed 22 --n-queries 40 --out " + test) == 0);

    const std::string crc_sel = tmp.path("crc.json");
    const std::string crc_report = tmp.path("crc_report.json");
    REQUIRE(run("calibrate --data " + calib + " --alpha 0.2 --tau 0.7 --eta 0.9 --algo crc "
                "--split-frac 0.5 --seed 5 --out-selector " + crc_sel) == 0);
    REQUIRE(run("evaluate --selector " + crc_sel + " --test-data " + test + " --report " +
                crc_report) == 0);

    const std::string single_report = tmp.path("single.json");
    REQUIRE(run("baseline --kind single --data " + calib + " --test-data " + test +
                " --tau 0.7 --report " + single_report) == 0);

    const std::string dil_report = tmp.path("dilation.json");
    REQUIRE(run("baseline --kind dilation --data " + calib + " --test-data " + test +
                " --tau 0.7 --level 0.8 --dmax 30 --report " + dil_report) == 0);
}

TEST_CASE("exit codes map infeasibility and io failures") {
    CliDir tmp;
    const std::string calib = tmp.path("calib.json");
    REQUIRE(run("simulate --seed 31 --n-queries 50 --out " + calib) == 0);

    // An unattainable (alpha, tau) pair: alpha tiny, tau nearly 1.
    CHECK(run("calibrate --data " + calib + " --alpha 0.01 --tau 0.99 --eta 0.9 "
              "--out-selector " + tmp.path("never.json")) == 2);

    // Missing and malformed inputs are schema/O errors.
    CHECK(run("calibrate --data " + tmp.path("absent.json") +
              " --alpha 0.2 --tau 0.7 --out-selector " + tmp.path("x.json")) == 3);
    const std::string garbage = tmp.path("garbage.json");
    std::ofstream(garbage) << "{not json";
    CHECK(run("evaluate --selector " + garbage + " --test-data " + calib + " --report " +
              tmp.path("r.json")) == 3);

    // Matrix cache: a second calibrate run reuses the cache file.
    const std::string cache = tmp.path("cache.csv");
    REQUIRE(run("calibrate --data " + calib + " --alpha 0.2 --tau 0.7 --matrix-cache " + cache +
                " --out-selector " + tmp.path("s1.json")) == 0);
    REQUIRE(fs::exists(cache));
    const std::string before = slurp(cache);
    REQUIRE(run("calibrate --data " + calib + " --alpha 0.2 --tau 0.7 --matrix-cache " + cache +
                " --out-selector " + tmp.path("s2.json")) == 0);
    CHECK(slurp(cache) == before);
    CHECK(slurp(tmp.path("s1.json")) == slurp(tmp.path("s2.json")));
}
