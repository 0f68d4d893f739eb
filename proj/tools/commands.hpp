#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spotvol/config.hpp"

namespace spotvol::cli {

enum ExitCode : int { kOk = 0, kError = 1, kWarnings = 2 };

struct Invocation {
    std::string command;
    RunConfig config;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> fit_path;
};

/// Runs one subcommand, writes its outputs and manifest.json into out_dir and
/// returns kOk or kWarnings. Errors propagate as exceptions.
int run(const Invocation& inv);

/// Rebuilds the invocation recorded in a manifest.
Invocation from_manifest(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out_dir);

}  // namespace spotvol::cli
