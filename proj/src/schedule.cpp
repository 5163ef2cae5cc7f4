#include "diffbias/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "diffbias/error.hpp"

namespace diffbias {

NoiseSchedule cosine_schedule(int steps) {
  if (steps < 1) throw ValidationError("schedule needs at least one step");
  const double s = kCosineOffset;
  const double half_pi = 0.5 * std::numbers::pi;
  const double base = std::cos(s / (1.0 + s) * half_pi);
  NoiseSchedule out;
  out.steps = steps;
  out.alpha_bar.resize(static_cast<std::size_t>(steps) + 1);
  out.sigma.resize(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    const double frac = static_cast<double>(t) / steps;
    const double c = std::cos((frac + s) / (1.0 + s) * half_pi);
    const double ab = std::clamp((c * c) / (base * base), kAlphaBarClamp, 1.0 - kAlphaBarClamp);
    out.alpha_bar[static_cast<std::size_t>(t)] = ab;
    out.sigma[static_cast<std::size_t>(t)] = std::sqrt((1.0 - ab) / ab);
  }
  return out;
}

}  // namespace diffbias
