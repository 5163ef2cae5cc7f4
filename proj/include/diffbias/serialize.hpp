#pragma once

#include <filesystem>

#include "diffbias/denoiser.hpp"

namespace diffbias {

inline constexpr const char* kDenoiserFormat = "diffbias.denoiser";
inline constexpr int kDenoiserFormatVersion = 1;

/// {"format", "version", "descriptor", "params"}.
nlohmann::json denoiser_to_json(const Denoiser& denoiser);
/// Dispatches on descriptor.family. ValidationError for unknown families or
/// a format/version mismatch.
DenoiserPtr denoiser_from_json(const nlohmann::json& j);

void save_denoiser(const Denoiser& denoiser, const std::filesystem::path& path);
DenoiserPtr load_denoiser(const std::filesystem::path& path);

/// Write text, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace diffbias
