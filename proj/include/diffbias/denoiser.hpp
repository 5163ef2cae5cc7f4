#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <json.hpp>

#include "diffbias/dataset.hpp"
#include "diffbias/linalg.hpp"

namespace diffbias {

/// Affine standardization carried by every fitted denoiser: the training
/// data's mean and an isotropic scale sqrt(trace(cov) / d). The sampler
/// works in these coordinates.
struct Frame {
  Vector center;
  double scale = 1.0;
};

Frame frame_of(const Dataset& data);
Frame frame_of(const Vector& mean, const Matrix& cov);
nlohmann::json frame_to_json(const Frame& frame);
Frame frame_from_json(const nlohmann::json& j);

/// Sigma-conditioned estimate of the clean signal x from y = x + sigma * eta.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual int dim() const = 0;
  virtual Vector denoise(const Vector& y, double sigma) const = 0;
  /// Row-wise batch version; the default loops over rows.
  virtual Matrix denoise_batch(const Matrix& ys, double sigma) const;

  /// Family name plus hyperparameters.
  virtual nlohmann::json descriptor() const = 0;
  /// Everything needed to rebuild the denoiser bit-exactly.
  virtual nlohmann::json parameters() const = 0;
  virtual const Frame& frame() const = 0;
};

using DenoiserPtr = std::unique_ptr<Denoiser>;
using DenoiserFactory = std::function<DenoiserPtr(const Dataset&)>;

/// Monte-Carlo E|S(x + sigma eta, sigma) - x|^2 over the dataset with
/// `replicates` noise draws per point.
double denoising_mse(const Denoiser& denoiser, const Dataset& data, double sigma,
                     int replicates, std::uint64_t seed);

/// Central-difference Jacobian of y -> denoise(y, sigma).
Matrix finite_difference_jacobian(const Denoiser& denoiser, const Vector& y, double sigma,
                                  double step = 1e-4);

/// Max over probes of the number of Jacobian singular values above
/// tol * (largest singular value at that probe).
int jacobian_rank(const Denoiser& denoiser, const std::vector<Vector>& probes, double sigma,
                  double tol, double step = 1e-4);

/// Singular values (descending) of a small dense matrix via the symmetric
/// eigendecomposition of M^T M.
Vector singular_values(const Matrix& m);

}  // namespace diffbias
