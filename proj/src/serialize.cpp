#include "diffbias/serialize.hpp"

#include <fstream>
#include <sstream>

#include "diffbias/error.hpp"
#include "diffbias/linear_denoiser.hpp"
#include "diffbias/mlp_denoiser.hpp"
#include "diffbias/patchwise.hpp"
#include "diffbias/polynomial_denoiser.hpp"

namespace diffbias {

nlohmann::json denoiser_to_json(const Denoiser& denoiser) {
  return {{"format", kDenoiserFormat},
          {"version", kDenoiserFormatVersion},
          {"descriptor", denoiser.descriptor()},
          {"params", denoiser.parameters()}};
}

DenoiserPtr denoiser_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kDenoiserFormat) throw ValidationError("not a serialized denoiser");
  if (j.value("version", -1) != kDenoiserFormatVersion)
    throw ValidationError("unsupported denoiser format version " + j.value("version", nlohmann::json()).dump());
  const auto& desc = j.at("descriptor");
  const auto& params = j.at("params");
  const auto family = desc.at("family").get<std::string>();
  if (family == "linear") return std::make_unique<LinearDenoiser>(LinearDenoiser::from_parameters(params));
  if (family == "gaussian_mixture_exact") return std::make_unique<GmmDenoiser>(GmmDenoiser::from_parameters(params));
  if (family == "polynomial")
    return std::make_unique<PolynomialDenoiser>(PolynomialDenoiser::from_parameters(params));
  if (family == "mlp_bottleneck")
    return std::make_unique<MlpBottleneckDenoiser>(MlpBottleneckDenoiser::from_parameters(desc, params));
  if (family == "patchwise") return std::make_unique<PatchwiseDenoiser>(PatchwiseDenoiser::from_parameters(params));
  throw ValidationError("unknown denoiser family '" + family + "'");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_denoiser(const Denoiser& denoiser, const std::filesystem::path& path) {
  write_text_file(path, denoiser_to_json(denoiser).dump() + "\n");
}

DenoiserPtr load_denoiser(const std::filesystem::path& path) {
  return denoiser_from_json(nlohmann::json::parse(read_text_file(path)));
}

}  // namespace diffbias
