// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gradstft/signals_io.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "gradstft: error[" << kind << "]: " << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gradstft::cli;

  CLI::App app{"Differentiable STFT experiments", "gradstft"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command, "sparsity, classify, adaptive or render")
      ->required()
      ->check(CLI::IsMember({"sparsity", "classify", "adaptive", "render"}));
  app.add_option("config", config_path, "Run configuration file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random draw of the run");
  app.footer(config_reference());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    std::string text;
    try {
      text = gradstft::read_file(config_path);
    } catch (const std::exception& e) {
      throw CliError("config", e.what(), kExitConfig);
    }
    const RunConfig config = RunConfig::parse(text);

    RunOptions options;
    options.config_dir = std::filesystem::path(config_path).parent_path();
    if (options.config_dir.empty()) options.config_dir = ".";
    if (*seed_opt) options.seed = seed;

    std::filesystem::path dir = config.get_string("output", "dir", "gradstft-out");
    if (*out_opt) dir = out_dir;

    const auto files = run_command(command, config, options);
    write_outputs(dir, files);
    for (const auto& f : files) std::cout << (dir / f.name).string() << '\n';
    return 0;
  } catch (const CliError& e) {
    return fail(e.kind(), e.what(), e.exit_code());
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
