#pragma once

#include <filesystem>
#include <string>

#include "diffbias/linalg.hpp"

namespace diffbias {

struct ScatterOptions {
  std::string title;
  std::string target_label = "target";
  std::string generated_label = "generated";
  int width = 640;
  int height = 640;
  /// Points per layer beyond this are thinned by taking every k-th row.
  Index max_points = 4000;
};

/// Two-layer scatter of the first two coordinates: target in gray, generated
/// in color, axes fitted to both, with a legend.
std::string scatter_svg(const Matrix& target, const Matrix& generated, const ScatterOptions& options = {});
void write_scatter_svg(const std::filesystem::path& path, const Matrix& target, const Matrix& generated,
                       const ScatterOptions& options = {});

}  // namespace diffbias
