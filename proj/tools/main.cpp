#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "freespectra/cli.hpp"
#include "freespectra/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectra of polynomials in semicircular and deterministic matrices"};
  std::string config_path;
  std::string out_dir = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker thread cap (default: FREESPECTRA_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Override the configured seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : fsp::kExitError;
  }

  fsp::RunConfig cfg;
  try {
    cfg = fsp::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return fsp::kExitError;
  }
  if (seed) cfg.seed = *seed;

  fsp::RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.threads = 1;
  if (threads) {
    ctx.threads = *threads;
  } else if (const char* env = std::getenv("FREESPECTRA_THREADS")) {
    try {
      ctx.threads = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed FREESPECTRA_THREADS='" << env << "'\n";
    }
  }
  return fsp::run(cfg, ctx);
}
