#include "diffbias/patchwise.hpp"

#include <algorithm>
#include <cmath>

#include "diffbias/error.hpp"
#include "diffbias/serialize.hpp"

namespace diffbias {

int image_side(int dim) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (dim < 1 || side * side != dim)
    throw ValidationError("patchwise denoising needs a square image; dimension " + std::to_string(dim) +
                          " is not a perfect square");
  return side;
}

std::vector<int> patch_offsets(int side, int patch, int stride) {
  if (patch < 1 || patch > side) throw ValidationError("patch size must satisfy 1 <= p <= side");
  if (stride < 1) throw ValidationError("stride must be >= 1");
  std::vector<int> out;
  for (int o = 0; o + patch <= side; o += stride) out.push_back(o);
  if (out.back() != side - patch) out.push_back(side - patch);
  return out;
}

Matrix extract_patches(const Matrix& images, int side, int patch, int stride) {
  if (images.cols() != static_cast<Index>(side) * side) throw ValidationError("image width mismatch");
  const auto offsets = patch_offsets(side, patch, stride);
  const auto per_image = static_cast<Index>(offsets.size() * offsets.size());
  Matrix out(images.rows() * per_image, patch * patch);
  Index row = 0;
  for (Index i = 0; i < images.rows(); ++i)
    for (int r0 : offsets)
      for (int c0 : offsets) {
        for (int r = 0; r < patch; ++r)
          for (int c = 0; c < patch; ++c) out(row, r * patch + c) = images(i, (r0 + r) * side + (c0 + c));
        ++row;
      }
  return out;
}

std::vector<PatchLevel> default_patch_schedule(int side, double scale) {
  std::vector<PatchLevel> levels;
  levels.push_back({0.5 * scale, side, side});
  const int half = std::max(1, side / 2);
  levels.push_back({0.15 * scale, half, std::max(1, half / 2)});
  const int quarter = std::max(1, side / 4);
  levels.push_back({0.0, quarter, std::max(1, quarter / 2)});
  return levels;
}

// ---- denoiser ---------------------------------------------------------------

PatchwiseDenoiser::PatchwiseDenoiser(int side, std::vector<Level> levels) : side_(side), levels_(std::move(levels)) {
  if (levels_.empty()) throw ValidationError("patchwise denoiser needs at least one level");
  for (const auto& l : levels_) {
    patch_offsets(side_, l.patch.patch_size, l.patch.stride);
    if (!l.base || l.base->dim() != l.patch.patch_size * l.patch.patch_size)
      throw ValidationError("base denoiser dimension must equal patch_size^2");
  }
  std::stable_sort(levels_.begin(), levels_.end(),
                   [](const Level& a, const Level& b) { return a.patch.min_sigma > b.patch.min_sigma; });

  const auto& top = levels_.front();
  const int p = top.patch.patch_size;
  const auto offsets = patch_offsets(side_, p, top.patch.stride);
  Vector center = Vector::Zero(dim());
  Vector count = Vector::Zero(dim());
  for (int r0 : offsets)
    for (int c0 : offsets)
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) {
          center((r0 + r) * side_ + c0 + c) += top.base->frame().center(r * p + c);
          count((r0 + r) * side_ + c0 + c) += 1.0;
        }
  frame_ = Frame{center.cwiseQuotient(count), top.base->frame().scale};
}

const PatchwiseDenoiser::Level& PatchwiseDenoiser::level_for(double sigma) const {
  for (const auto& l : levels_)
    if (sigma >= l.patch.min_sigma) return l;
  return levels_.back();
}

Matrix PatchwiseDenoiser::denoise_batch(const Matrix& ys, double sigma) const {
  const auto& level = level_for(sigma);
  const int p = level.patch.patch_size;
  const auto offsets = patch_offsets(side_, p, level.patch.stride);
  const Matrix patches = extract_patches(ys, side_, p, level.patch.stride);
  const Matrix denoised = level.base->denoise_batch(patches, sigma);

  Matrix out = Matrix::Zero(ys.rows(), ys.cols());
  Vector count = Vector::Zero(dim());
  for (int r0 : offsets)
    for (int c0 : offsets)
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) count((r0 + r) * side_ + c0 + c) += 1.0;
  Index row = 0;
  for (Index i = 0; i < ys.rows(); ++i)
    for (int r0 : offsets)
      for (int c0 : offsets) {
        for (int r = 0; r < p; ++r)
          for (int c = 0; c < p; ++c) out(i, (r0 + r) * side_ + c0 + c) += denoised(row, r * p + c);
        ++row;
      }
  return out.array().rowwise() / count.transpose().array();
}

Vector PatchwiseDenoiser::denoise(const Vector& y, double sigma) const {
  return denoise_batch(y.transpose(), sigma).row(0).transpose();
}

nlohmann::json PatchwiseDenoiser::descriptor() const {
  auto levels = nlohmann::json::array();
  for (const auto& l : levels_)
    levels.push_back({{"min_sigma", l.patch.min_sigma},
                      {"patch_size", l.patch.patch_size},
                      {"stride", l.patch.stride},
                      {"base", l.base->descriptor()}});
  return {{"family", "patchwise"}, {"dim", dim()}, {"side", side_}, {"levels", levels}};
}

nlohmann::json PatchwiseDenoiser::parameters() const {
  auto levels = nlohmann::json::array();
  for (const auto& l : levels_)
    levels.push_back({{"min_sigma", l.patch.min_sigma},
                      {"patch_size", l.patch.patch_size},
                      {"stride", l.patch.stride},
                      {"base", denoiser_to_json(*l.base)}});
  return {{"side", side_}, {"levels", levels}};
}

PatchwiseDenoiser PatchwiseDenoiser::from_parameters(const nlohmann::json& params) {
  std::vector<Level> levels;
  for (const auto& j : params.at("levels"))
    levels.push_back({PatchLevel{j.at("min_sigma").get<double>(), j.at("patch_size").get<int>(),
                                 j.at("stride").get<int>()},
                      denoiser_from_json(j.at("base"))});
  return PatchwiseDenoiser(params.at("side").get<int>(), std::move(levels));
}

PatchwiseDenoiser fit_patchwise(const Dataset& images, const DenoiserFactory& base_factory,
                                const std::vector<PatchLevel>& schedule) {
  const int side = image_side(images.dim());
  if (schedule.empty()) throw ValidationError("patch schedule is empty");
  std::vector<PatchwiseDenoiser::Level> levels;
  for (const auto& level : schedule) {
    const Dataset patches(extract_patches(images.points(), side, level.patch_size, level.stride),
                          images.name() + ".patches" + std::to_string(level.patch_size));
    levels.push_back({level, base_factory(patches)});
  }
  return PatchwiseDenoiser(side, std::move(levels));
}

PatchwiseDenoiser fit_patchwise(const Dataset& images, const DenoiserFactory& base_factory, int patch_size,
                                int stride) {
  return fit_patchwise(images, base_factory, std::vector<PatchLevel>{{0.0, patch_size, stride}});
}

}  // namespace diffbias
