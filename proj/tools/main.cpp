#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyclecert/builtin_systems.hpp"
#include "cyclecert/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "cyclecert - certification toolkit for stable periodic responses of "
      "periodically forced planar systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool verbose = false;

  CLI::App* run = app.add_subcommand(
      "run", "execute a scenario described by a JSON config file");
  run->add_option("config", config_path, "path to the scenario config")
      ->required();
  run->add_option("--out", out_dir,
                  "output directory (replaces output_dir from the config)");
  run->add_option("--override", overrides,
                  "dotted key=value assignment applied to the config before "
                  "validation, e.g. options.n_theta=128 (repeatable)");
  run->add_flag("--verbose", verbose, "print per-stage progress lines");

  CLI::App* list =
      app.add_subcommand("list-systems", "print the builtin system catalog");
  CLI::App* selftest = app.add_subcommand(
      "selftest",
      "run the built-in reference checks against the worked examples");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const cyclecert::Scenario scenario = cyclecert::load_scenario(
          config_path, overrides,
          out_dir.empty() ? std::nullopt
                          : std::optional<std::string>(out_dir));
      const cyclecert::RunResult result =
          cyclecert::run_scenario(scenario, verbose, &std::cout);
      std::cout << result.summary << "\n";
      return result.exit_code;
    }
    if (list->parsed()) {
      for (const cyclecert::SystemInfo& info : cyclecert::list_systems()) {
        std::cout << info.name << "\n  " << info.summary << "\n";
        for (const cyclecert::ParamSpec& param : info.params) {
          std::cout << "  " << param.key << " = " << param.default_value
                    << "\n";
        }
      }
      return 0;
    }
    if (selftest->parsed()) {
      return cyclecert::run_selftest(std::cout) == 0 ? 0 : 1;
    }
  } catch (const cyclecert::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
