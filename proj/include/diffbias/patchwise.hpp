#pragma once

#include <vector>

#include "diffbias/denoiser.hpp"

namespace diffbias {

/// One entry of a sigma-dependent patch map: used for sigma >= min_sigma
/// (the entry with the largest qualifying min_sigma wins).
struct PatchLevel {
  double min_sigma = 0.0;
  int patch_size = 1;
  int stride = 1;
};

/// Side length s of a square image with d = s^2 pixels; ValidationError otherwise.
int image_side(int dim);

/// Top-left offsets along one axis: 0, stride, 2 stride, ... plus side - patch
/// so the last row/column is always covered.
std::vector<int> patch_offsets(int side, int patch, int stride);

/// Every patch of every image (row-major pixels), one row per patch.
Matrix extract_patches(const Matrix& images, int side, int patch, int stride);

/// Breakpoints at sigma = 0.5 and 0.15 times `scale`: full image above the
/// first, side/2 patches between, side/4 patches below; overlapping with
/// stride patch/2.
std::vector<PatchLevel> default_patch_schedule(int side, double scale);

/// Applies a base denoiser to every patch of the noisy image and averages
/// overlapping predictions.
class PatchwiseDenoiser final : public Denoiser {
 public:
  struct Level {
    PatchLevel patch;
    DenoiserPtr base;
  };

  PatchwiseDenoiser(int side, std::vector<Level> levels);
  static PatchwiseDenoiser from_parameters(const nlohmann::json& params);

  int dim() const override { return side_ * side_; }
  Vector denoise(const Vector& y, double sigma) const override;
  Matrix denoise_batch(const Matrix& ys, double sigma) const override;
  nlohmann::json descriptor() const override;
  nlohmann::json parameters() const override;
  /// Derived from the base frame of the first level, so it depends on patch
  /// statistics only.
  const Frame& frame() const override { return frame_; }

  int side() const { return side_; }
  const std::vector<Level>& levels() const { return levels_; }
  const Level& level_for(double sigma) const;

 private:
  int side_;
  std::vector<Level> levels_;
  Frame frame_;
};

PatchwiseDenoiser fit_patchwise(const Dataset& images, const DenoiserFactory& base_factory, int patch_size,
                                int stride);
PatchwiseDenoiser fit_patchwise(const Dataset& images, const DenoiserFactory& base_factory,
                                const std::vector<PatchLevel>& schedule);

}  // namespace diffbias
