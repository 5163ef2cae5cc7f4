#pragma once

#include <filesystem>
#include <vector>

#include "diffbias/denoiser.hpp"
#include "diffbias/schedule.hpp"

namespace diffbias {

/// Tweedie: grad log p_sigma(y) = (denoise(y, sigma) - y) / sigma^2.
Vector score_from_denoiser(const Denoiser& denoiser, const Vector& y, double sigma);

struct SamplerRun {
  NoiseSchedule schedule;
  nlohmann::json descriptor;
  std::uint64_t seed = 0;
  Index n_samples = 0;
  /// n x d generated points in data coordinates.
  Matrix samples;
  /// States after each step in data coordinates (empty unless requested);
  /// trajectory[0] is the initial noise mapped through the frame.
  std::vector<Matrix> trajectory;

  /// The samples as a Dataset (needs n >= 2).
  Dataset outputs(std::string name = "generated") const { return Dataset(samples, std::move(name)); }
  nlohmann::json sidecar() const;
};

/// Deterministic DDIM in the denoiser's frame. Sample i starts from
/// z_T ~ N(0, I) drawn from Rng(seed, i). Each step evaluates
/// x0 = denoise(z_t / sqrt(abar_t), sigma_t) (mapped through the frame) and
/// moves to z_{t-1} = sqrt(abar_{t-1}) x0 + sqrt(1 - abar_{t-1}) eps_hat;
/// the last step returns x0 itself.
/// Throws SamplingError on a non-finite state.
SamplerRun ddim_sample(const Denoiser& denoiser, const NoiseSchedule& schedule, Index n, std::uint64_t seed,
                       bool keep_trajectory = false);

/// 10 steps for the linear family, 50 otherwise.
int default_sampling_steps(const std::string& family);

/// Samples to `csv_path`, sidecar JSON next to it (same stem, .json).
void write_run(const SamplerRun& run, const std::filesystem::path& csv_path);

}  // namespace diffbias
