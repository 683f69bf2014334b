#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qti/config.hpp"

namespace qti {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    std::filesystem::path out_dir = "out";
    int workers = 1;
    bool paper_scale = false;
};

// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(std::string_view content);

// Runs the experiment, writes its CSV/JSON outputs and manifest.json into
// opt.out_dir and returns the manifest. Outputs depend only on the config, not
// on the worker count. Throws DivergenceError when any chain failed (after the
// outputs, including the failure records, have been written).
nlohmann::json run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

// Re-runs the config stored in a manifest into opt.out_dir and compares the
// output hashes. The returned manifest carries a "replay" block with the
// comparison result.
nlohmann::json replay_manifest(const nlohmann::json& manifest, const RunOptions& opt);

}  // namespace qti
