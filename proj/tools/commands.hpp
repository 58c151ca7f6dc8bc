// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace gradstft::cli {

struct RunOptions {
  // Relative paths inside the config resolve against this directory.
  std::filesystem::path config_dir = ".";
  // Overrides [run] seed.
  std::optional<std::uint64_t> seed;
};

struct OutputFile {
  std::string name;
  std::string contents;
};

// Runs one of sparsity, classify, adaptive or render and returns the files it
// produces, in a fixed order. Nothing is written. Throws CliError.
std::vector<OutputFile> run_command(const std::string& command, const RunConfig& config,
                                    const RunOptions& options);

// Creates dir if needed and writes every file atomically.
void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files);

// Text for --help listing every config key with its default.
std::string config_reference();

}  // namespace gradstft::cli
