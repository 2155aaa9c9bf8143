#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "kolmo/assimilation.hpp"
#include "kolmo/snapshot_io.hpp"

namespace fs = std::filesystem;
using namespace kolmo;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "kolmo_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(KOLMO_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Trace without the wall-clock column.
std::string trace_without_time(const fs::path& p) {
    std::istringstream is(slurp(p));
    std::string line, out;
    while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

const std::string kSmall = "--n 32 --spinup 0.2 ";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes reproducible snapshots") {
    fs::remove_all(kRoot);
    const fs::path a = kRoot / "nested" / "a", b = kRoot / "b";
    REQUIRE(run("simulate " + kSmall + "--out " + a.string()) == 0);
    REQUIRE(run("simulate " + kSmall + "--out " + b.string()) == 0);
    std::size_t count = 0;
    for (const auto& e : fs::directory_iterator(a / "snapshots")) {
        ++count;
        CHECK(slurp(e.path()) == slurp(b / "snapshots" / e.path().filename()));
    }
    CHECK(count == 11);
    CHECK(slurp(a / "truth.kda") == slurp(b / "truth.kda"));
    CHECK(fs::exists(a / "manifest.txt"));
}

TEST_CASE("interp assimilation is the bicubic baseline") {
    const fs::path out = kRoot / "interp";
    REQUIRE(run("assimilate " + kSmall + "--method interp --k 4 --out " + out.string()) == 0);
    for (const char* f : {"estimate.kda", "trace.csv", "spectrum.csv", "manifest.txt"}) CHECK(fs::exists(out / f));

    REQUIRE(run("observe " + kSmall + "--k 4 --out " + (kRoot / "obs").string()) == 0);
    const ObservationSet obs = read_observations(kRoot / "obs" / "observations.kobs");
    const SpectralField expected = interp_estimate(obs);
    const SpectralField got = read_vorticity(out / "estimate.kda");
    double diff = 0.0;
    for (std::size_t i = 0; i < got.coeffs.size(); ++i) diff = std::max(diff, std::abs(got.coeffs[i] - expected.coeffs[i]));
    CHECK(diff <= 1e-9);
}

TEST_CASE("sweep expands to the cartesian product") {
    const fs::path out = kRoot / "sweep";
    REQUIRE(run("assimilate " + kSmall + "--method interp --k 4,8 --sigma 0,0.1,0.2 --threads 2 --out " + out.string()) == 0);
    std::size_t runs = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        if (fs::exists(e.path() / "estimate.kda")) ++runs;
    }
    CHECK(runs == 6);
}

TEST_CASE("replay reproduces a run from its manifest") {
    const fs::path out = kRoot / "vanilla";
    REQUIRE(run("assimilate " + kSmall + "--method vanilla --k 4 --vanilla_steps 5 --out " + out.string()) == 0);
    const std::string first = trace_without_time(out / "trace.csv");
    fs::remove(out / "trace.csv");
    REQUIRE(run("replay " + (out / "manifest.txt").string()) == 0);
    CHECK(trace_without_time(out / "trace.csv") == first);
}

TEST_CASE("rollout of the truth against itself") {
    const fs::path sim = kRoot / "nested" / "a";
    const fs::path out = kRoot / "rollout";
    const std::string truth = (sim / "truth.kda").string();
    REQUIRE(run("rollout --n 32 --truth_file " + truth + " --estimate_file " + truth + " --rollout_horizon 0.2 --out " +
                out.string()) == 0);
    std::istringstream is(slurp(out / "rollout.csv"));
    std::string line;
    std::getline(is, line);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        CHECK(std::stod(line.substr(line.find(',') + 1)) == 0.0);
        ++rows;
    }
    CHECK(rows == 5);
    CHECK(fs::exists(out / "rollout_estimate_t0.1.kda"));
}

TEST_CASE("verify passes and catches an adjoint fault") {
    CHECK(run("verify") == 0);
    CHECK(run("verify --inject-adjoint-fault") != 0);
}

TEST_CASE("exit codes") {
    CHECK(run("assimilate --bogus 1") == 2);
    CHECK(run("assimilate --n 33 --out " + (kRoot / "bad").string()) == 2);
    CHECK(run("assimilate --n 32 --k 64 --out " + (kRoot / "bad").string()) == 2);
    CHECK(run("nonsense") == 2);
    CHECK(run("simulate --n 32 --dt 1 --spinup 30 --out " + (kRoot / "blowup").string()) == 3);
}

}
