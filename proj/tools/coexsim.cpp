#include <CLI11.hpp>

#include <iostream>

#include "coex/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ZigBee coexistence simulator and fingerprint identification"};
  app.require_subcommand(1);

  std::string config, out, trace;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "run one scenario config");
  run->add_option("--config", config, "scenario config file")->required();
  run->add_option("--seed", seed, "master seed")->required();
  run->add_option("--out", out, "output directory")->required();

  auto* fixtures = app.add_subcommand("fixtures", "run the shipped fixture suite");
  fixtures->add_option("--out", out, "output directory")->required();
  std::string fixture_dir = coex::default_fixture_dir().string();
  fixtures->add_option("--fixtures", fixture_dir, "fixture directory");

  auto* replay = app.add_subcommand("replay", "classify a recorded trace");
  replay->add_option("--trace", trace, "trace CSV")->required();
  replay->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? coex::kExitOk : coex::kExitValidation;
  }

  try {
    if (*run) {
      const auto report = coex::cmd_run(config, seed, out);
      report.write_summary(std::cout);
      return coex::kExitOk;
    }
    if (*replay) {
      const auto report = coex::cmd_replay(trace, out);
      report.write_summary(std::cout);
      return coex::kExitOk;
    }
    const auto rows = coex::cmd_fixtures(out, fixture_dir);
    bool ok = true;
    for (const auto& r : rows) {
      std::cout << (r.pass ? "pass  " : "FAIL  ") << r.name << "  expected: " << r.expected
                << "  observed: " << r.observed << '\n';
      ok = ok && r.pass;
    }
    return ok ? coex::kExitOk : coex::kExitFixtureMismatch;
  } catch (const coex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return coex::kExitValidation;
  } catch (const coex::TraceFormatError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return coex::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return coex::kExitValidation;
  }
}
