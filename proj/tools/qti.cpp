#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qti/errors.hpp"
#include "qti/experiment.hpp"

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kNumerical = 3 };

int report(int code, const std::string& kind, const std::string& message) {
    nlohmann::json err = {{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << err.dump() << "\n";
    return code;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int default_workers() {
    if (const char* env = std::getenv("QTI_WORKERS")) {
        char* end = nullptr;
        const long k = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && k > 0) return static_cast<int>(k);
        throw qti::ConfigError("QTI_WORKERS must be a positive integer, got '" + std::string(env) + "'");
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian inversion of potentials from quantum thermal averages"};
    app.set_version_flag("--version", std::string(qti::kVersion));
    app.require_subcommand(1);

    std::string config_path, manifest_path, out_dir = "out";
    long long seed = -1;
    bool paper_scale = false;
    int workers = 0;

    for (const char* name : {"forward", "invert", "stability", "twolevel"}) {
        auto* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--seed", seed, "override the master seed")->check(CLI::NonNegativeNumber);
        sub->add_flag("--paper-scale", paper_scale, "10 runs x 1600 proposals");
        sub->add_option("--workers", workers, "worker threads (default: QTI_WORKERS or 1)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory");
    }
    auto* replay = app.add_subcommand("replay", "re-run an experiment from its manifest and compare outputs");
    replay->add_option("--manifest", manifest_path, "manifest.json of a previous run")->required();
    replay->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    replay->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        qti::RunOptions opt;
        opt.out_dir = out_dir;
        opt.workers = workers > 0 ? workers : default_workers();
        CLI::App* sub = app.get_subcommands().front();

        if (sub == replay) {
            const auto manifest = nlohmann::json::parse(read_file(manifest_path));
            const auto result = qti::replay_manifest(manifest, opt);
            const bool same = result["replay"]["identical"];
            std::cout << (same ? "identical" : "DIFFERENT") << ": " << result["replay"]["mismatches"].dump() << "\n";
            return same ? kOk : kNumerical;
        }

        qti::ExperimentConfig cfg = qti::parse_config(read_file(config_path));
        if (qti::mode_name(cfg.mode) != sub->get_name())
            throw qti::ConfigError("config mode is '" + std::string(qti::mode_name(cfg.mode)) +
                                   "' but the command is '" + sub->get_name() + "'");
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (paper_scale) cfg.apply_paper_scale();
        opt.paper_scale = paper_scale;
        const auto manifest = qti::run_experiment(cfg, opt);
        std::cout << "wrote " << manifest["outputs"].size() << " files to " << opt.out_dir.string() << " in "
                  << manifest["wall_clock_seconds"].get<double>() << " s\n";
        return kOk;
    } catch (const qti::ConfigError& e) {
        return report(kConfig, "config", e.what());
    } catch (const nlohmann::json::exception& e) {
        return report(kConfig, "manifest", e.what());
    } catch (const qti::Error& e) {
        return report(kNumerical, "numerical", e.what());
    } catch (const std::exception& e) {
        return report(kIo, "io", e.what());
    }
}
