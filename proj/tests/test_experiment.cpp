#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qti/errors.hpp"
#include "qti/experiment.hpp"

using namespace qti;
namespace fs = std::filesystem;

namespace {

std::string read(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qti_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

const char* kTinyInvert = R"(mode = invert
seed = 11
[system]
mass = 1
beads = 4
truth = coeffs(0.2, -0.3)
[prior]
truncation = 2
[observables]
train = gaussian(-1, 1), gaussian(0, 1), gaussian(1, 1)
test = gaussian(0.5, 1), hermite(1, 1)
[noise]
scale = 0.01
[sampler]
n_steps = 600
n_burnin = 100
[inversion]
n_proposals = 12
n_runs = 3
t_ac = 2
snapshot_every = 4
[output]
x_points = 5
max_lag = 4
)";

int run_cli(const std::string& args) {
    const int status = std::system((std::string(QTI_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(GitBlob, KnownHashes) {
    EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Experiment, InvertWritesAllOutputs) {
    const fs::path dir = scratch("invert");
    const auto manifest = run_experiment(parse_config(kTinyInvert), {dir, 1, false});
    for (const char* f : {"config.cfg", "y_star.csv", "chain_run0.csv", "chain_run2.csv", "snapshots_run1.jsonl",
                          "acceptance.csv", "predictions.csv", "potential.csv", "autocorrelation.csv", "summary.json",
                          "manifest.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["input_hash"], git_blob_sha1(read(dir / "config.cfg")));
    for (const auto& out : manifest["outputs"]) EXPECT_EQ(out["sha1"], git_blob_sha1(read(dir / out["file"].get<std::string>())));

    // 13 chain records plus the header.
    std::istringstream chain(read(dir / "chain_run0.csv"));
    std::string line;
    int lines = 0;
    std::getline(chain, line);
    EXPECT_EQ(line, "iteration,phi,accepted,y_hat_0,y_hat_1,y_hat_2,test_0,test_1");
    while (std::getline(chain, line)) ++lines;
    EXPECT_EQ(lines, 13);
    EXPECT_NE(read(dir / "predictions.csv").find("\"gaussian(0.5, 1)\""), std::string::npos);
    fs::remove_all(dir);
}

TEST(Experiment, OutputsIndependentOfWorkers) {
    const fs::path a = scratch("w1"), b = scratch("w3");
    const auto cfg = parse_config(kTinyInvert);
    const auto m1 = run_experiment(cfg, {a, 1, false});
    const auto m3 = run_experiment(cfg, {b, 3, false});
    EXPECT_EQ(m1["outputs"], m3["outputs"]);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Experiment, ReplayIsBitwiseIdentical) {
    const fs::path a = scratch("orig"), b = scratch("replay");
    const auto manifest = run_experiment(parse_config(kTinyInvert), {a, 2, false});
    const auto again = replay_manifest(manifest, {b, 1, false});
    EXPECT_TRUE(again["replay"]["identical"].get<bool>());
    EXPECT_EQ(again["outputs"], manifest["outputs"]);

    auto tampered = manifest;
    tampered["outputs"][1]["sha1"] = git_blob_sha1("x");
    EXPECT_FALSE(replay_manifest(tampered, {b, 1, false})["replay"]["identical"].get<bool>());
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Experiment, SeedChangesOutputs) {
    const fs::path a = scratch("s1"), b = scratch("s2");
    auto cfg = parse_config(kTinyInvert);
    const auto m1 = run_experiment(cfg, {a, 1, false});
    cfg.seed = 12;
    const auto m2 = run_experiment(cfg, {b, 1, false});
    EXPECT_NE(m1["outputs"], m2["outputs"]);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    {
        std::ofstream(dir / "good.cfg") << kTinyInvert;
        std::ofstream(dir / "bad.cfg") << "mode = invert\nseed = 1\n";
        std::string div = kTinyInvert;
        div.replace(div.find("n_burnin = 100"), 14, "n_burnin = 100\ndt = 1.5");
        std::ofstream(dir / "diverge.cfg") << div;
    }
    const std::string out = " --out " + (dir / "out").string();
    EXPECT_EQ(run_cli("invert --config " + (dir / "good.cfg").string() + out), 0);
    EXPECT_EQ(run_cli("replay --manifest " + (dir / "out" / "manifest.json").string() + " --out " +
                      (dir / "replayed").string()),
              0);
    EXPECT_EQ(run_cli("invert --config " + (dir / "bad.cfg").string() + out), 2);
    EXPECT_EQ(run_cli("forward --config " + (dir / "good.cfg").string() + out), 2);
    EXPECT_EQ(run_cli("invert --config " + (dir / "missing.cfg").string() + out), 1);
    EXPECT_EQ(run_cli("invert --config " + (dir / "diverge.cfg").string() + out), 3);
    EXPECT_TRUE(fs::exists(dir / "out" / "acceptance.csv"));
    EXPECT_EQ(run_cli("frobnicate"), 2);
    fs::remove_all(dir);
}
