#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffbias/error.hpp"
#include "diffbias/experiment.hpp"

// Exit codes: 0 success, 1 a check errored or a report is inconsistent,
// 2 bad config or input, 3 numerical/training/sampling failure.
int main(int argc, char** argv) {
  CLI::App app{"Fit, sample and verify denoisers in closed-form and small-network settings"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "Write the configured dataset(s) to CSV"},
      {"fit", "Fit the configured denoiser and save it as JSON"},
      {"sample", "Run DDIM with a saved denoiser"},
      {"verify", "Run the configured checks and write reports"},
      {"report", "Rebuild the summary from stored reports"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", config_path, "Experiment JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "Override a config value, e.g. --set sampler.steps=20");
    sub->add_option("--out,-o", out_dir, "Output directory (overrides output_dir)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    auto config = diffbias::ExperimentConfig::load(config_path);
    for (const auto& o : overrides) config.set(o);
    if (!out_dir.empty()) config.root["output_dir"] = out_dir;
    return diffbias::run_command(command, config);
  } catch (const diffbias::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed config or file: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
