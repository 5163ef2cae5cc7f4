#pragma once

#include <vector>

namespace diffbias {

/// Discretized variance-preserving schedule with T steps. Index t runs
/// 0..T; alpha_bar[t] is the retained-signal fraction and
/// sigma[t] = sqrt((1 - alpha_bar[t]) / alpha_bar[t]) the matching additive
/// noise level for y = x + sigma * eta.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;
};

inline constexpr double kCosineOffset = 0.008;
inline constexpr double kAlphaBarClamp = 1e-5;

/// alpha_bar(t) = cos^2(((t/T + s)/(1 + s)) pi/2) / cos^2((s/(1 + s)) pi/2),
/// s = 0.008, clamped to [1e-5, 1 - 1e-5].
NoiseSchedule cosine_schedule(int steps);

}  // namespace diffbias
