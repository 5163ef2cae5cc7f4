#include "diffbias/sampler.hpp"

#include <cmath>

#include "diffbias/error.hpp"
#include "diffbias/rng.hpp"
#include "diffbias/serialize.hpp"

namespace diffbias {

Vector score_from_denoiser(const Denoiser& denoiser, const Vector& y, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  return (denoiser.denoise(y, sigma) - y) / (sigma * sigma);
}

int default_sampling_steps(const std::string& family) { return family == "linear" ? 10 : 50; }

SamplerRun ddim_sample(const Denoiser& denoiser, const NoiseSchedule& schedule, Index n, std::uint64_t seed,
                       bool keep_trajectory) {
  if (n < 1) throw ValidationError("need at least one sample");
  if (schedule.steps < 1) throw ValidationError("schedule has no steps");
  const Frame& frame = denoiser.frame();
  const int d = denoiser.dim();
  const double s = frame.scale;
  auto to_data = [&](const Matrix& z) -> Matrix { return (s * z).rowwise() + frame.center.transpose(); };

  Matrix z(n, d);
  for (Index i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    for (int k = 0; k < d; ++k) z(i, k) = rng.normal();
  }

  SamplerRun run;
  run.schedule = schedule;
  run.descriptor = denoiser.descriptor();
  run.seed = seed;
  run.n_samples = n;
  if (keep_trajectory) run.trajectory.push_back(to_data(z));

  for (int t = schedule.steps; t >= 1; --t) {
    const auto ti = static_cast<std::size_t>(t);
    const double a = schedule.alpha_bar[ti];
    const double a_prev = schedule.alpha_bar[ti - 1];
    const double sigma = s * schedule.sigma[ti];
    const Matrix x0_raw = denoiser.denoise_batch(to_data(z / std::sqrt(a)), sigma);
    const Matrix x0 = (x0_raw.rowwise() - frame.center.transpose()) / s;
    if (t == 1) {
      z = x0;
    } else {
      const Matrix eps = (z - std::sqrt(a) * x0) / std::sqrt(1.0 - a);
      z = std::sqrt(a_prev) * x0 + std::sqrt(1.0 - a_prev) * eps;
    }
    if (!z.allFinite())
      throw SamplingError("non-finite sampler state at step " + std::to_string(t) + " (sigma=" +
                              std::to_string(sigma) + ")",
                          t, sigma);
    if (keep_trajectory) run.trajectory.push_back(to_data(z));
  }
  run.samples = to_data(z);
  return run;
}

nlohmann::json SamplerRun::sidecar() const {
  return {{"schedule",
           {{"kind", "cosine"},
            {"steps", schedule.steps},
            {"offset", kCosineOffset},
            {"alpha_bar_clamp", kAlphaBarClamp},
            {"alpha_bar", schedule.alpha_bar},
            {"sigma", schedule.sigma}}},
          {"descriptor", descriptor},
          {"seed", seed},
          {"n_samples", n_samples},
          {"sampler",
           {{"method", "ddim"},
            {"eta", 0.0},
            {"state_conversion", "y = z_t / sqrt(alpha_bar_t), sigma_t = sqrt((1 - alpha_bar_t) / alpha_bar_t)"},
            {"final_step", "returns the denoiser estimate x0"},
            {"initial_noise", "sample i uses Rng(seed, stream=i)"},
            {"standardization", "isotropic frame: denoiser frame center and scale"}}}};
}

void write_run(const SamplerRun& run, const std::filesystem::path& csv_path) {
  write_csv(run.samples, csv_path);
  auto sidecar_path = csv_path;
  sidecar_path.replace_extension(".json");
  write_text_file(sidecar_path, run.sidecar().dump(2) + "\n");
}

}  // namespace diffbias
