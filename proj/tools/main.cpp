// gvarfsv command-line tool.
//
//   gvarfsv <command> [--config FILE] [--seed N] [--out DIR] [--threads N] [--horizon H]
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
// 4 I/O error, 1 anything else. Failures print one JSON object to stderr.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gvarfsv/commands.hpp"
#include "gvarfsv/config.hpp"
#include "gvarfsv/errors.hpp"
#include "json.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message,
         const std::vector<std::string>& problems = {}) {
  nlohmann::json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  if (!problems.empty()) j["problems"] = problems;
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian multi-region VAR with factor stochastic volatility"};
  app.set_version_flag("--version", std::string(GVARFSV_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<int> horizon;
  for (const auto& name : gvarfsv::kCommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration (defaults apply when omitted)");
    sub->add_option("--seed", seed, "random seed (sampler and simulation)");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--horizon", horizon, "impulse-response horizon in quarters")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(2, "usage", e.what());
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    gvarfsv::RunConfig config =
        config_path.empty() ? gvarfsv::parse_run_config("{}") : gvarfsv::load_run_config(config_path);
    gvarfsv::apply_overrides(config, gvarfsv::overrides_from_env(),
                             gvarfsv::Overrides{seed, out, threads, horizon});
    gvarfsv::run_command(command, config);
  } catch (const gvarfsv::ConfigError& e) {
    return fail(2, "config", e.what(), e.problems());
  } catch (const gvarfsv::InputError& e) {
    return fail(2, "input", e.what());
  } catch (const gvarfsv::NumericalError& e) {
    return fail(3, "numerical", e.what());
  } catch (const gvarfsv::IoError& e) {
    return fail(4, "io", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
  return 0;
}
