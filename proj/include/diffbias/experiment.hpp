#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diffbias/dataset.hpp"
#include "diffbias/denoiser.hpp"
#include "diffbias/verification.hpp"

namespace diffbias {

/// Parsed experiment file. The JSON is kept as-is so that a run directory can
/// hold an exact copy; typed accessors read from it on demand.
///
/// Sections: dataset, denoiser, sampler, verify, output_dir.
struct ExperimentConfig {
  nlohmann::json root = nlohmann::json::object();

  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig parse(const std::string& text);

  /// Apply "a.b.c=value"; value is parsed as JSON, falling back to a string.
  void set(const std::string& assignment);

  std::filesystem::path output_dir() const;
  const nlohmann::json& section(const std::string& name) const;
};

/// Datasets described by a dataset section. "matched_pair" yields two,
/// everything else one.
std::vector<Dataset> build_datasets(const nlohmann::json& dataset_section);

/// Mixture spec behind a gmm/preset/matched_pair section, if any.
std::optional<GmmSpec> dataset_spec(const nlohmann::json& dataset_section);

/// Fit the family described by a denoiser section.
DenoiserPtr fit_denoiser(const nlohmann::json& denoiser_section, const Dataset& data,
                         const std::optional<GmmSpec>& spec = std::nullopt);

/// Fit diagnostics (condition numbers, losses, spectra) for a fitted denoiser.
nlohmann::json fit_diagnostics(const Denoiser& denoiser);

/// Run one verify-section entry.
VerificationReport run_check(const nlohmann::json& entry, const ExperimentConfig& config,
                             const std::optional<std::filesystem::path>& artifacts);

/// Markdown table with one row per criterion.
std::string summary_markdown(const std::vector<VerificationReport>& reports,
                             const std::vector<std::optional<Verdict>>& expected);

/// Commands. Each writes into config.output_dir() (plus a config.json copy)
/// and returns the process exit code.
int cmd_gen_data(const ExperimentConfig& config);
int cmd_fit(const ExperimentConfig& config);
int cmd_sample(const ExperimentConfig& config);
int cmd_verify(const ExperimentConfig& config);
int cmd_report(const ExperimentConfig& config);

int run_command(const std::string& command, const ExperimentConfig& config);

}  // namespace diffbias
