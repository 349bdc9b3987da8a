#include "CLI11.hpp"

#include "bismut/scenario.hpp"

#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo gradient estimation for functional S(P)DEs"};
  app.require_subcommand(1);

  std::string config;
  bool check = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  std::string out_dir;

  CLI::App* run = app.add_subcommand("run", "run a scenario config (file path or golden:<id>)");
  run->add_option("config", config, "scenario config path or golden:<id>")->required();
  run->add_flag("--check", check, "validate the run and exit 3 on failure");
  run->add_option("--seed", seed, "override mc.seed")->each([&](const std::string&) {
    seed_set = true;
  });
  run->add_option("--threads", threads, "worker threads (must not change results)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (fallback: $BISMUT_OUT_DIR, then ./out)");

  CLI::App* golden = app.add_subcommand("list-golden", "list bundled scenarios");
  std::string emit_dir;
  golden->add_option("--write", emit_dir, "write every golden config into this directory");

  CLI11_PARSE(app, argc, argv);

  if (golden->parsed()) {
    for (const auto& g : bismut::list_golden()) {
      std::printf("%-20s %s\n", g.id.c_str(), g.description.c_str());
    }
    if (!emit_dir.empty()) {
      std::filesystem::create_directories(emit_dir);
      for (const auto& g : bismut::list_golden()) {
        std::ofstream out(std::filesystem::path(emit_dir) / (g.id + ".json"));
        out << g.config_json << '\n';
      }
      std::printf("wrote %zu configs to %s\n", bismut::list_golden().size(), emit_dir.c_str());
    }
    return 0;
  }

  bismut::RunOptions opts;
  opts.check = check;
  if (seed_set) opts.seed = seed;
  opts.threads = threads;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  return bismut::run_scenario(config, opts);
}
