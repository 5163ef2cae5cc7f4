#pragma once

#include <optional>

#include "diffbias/denoiser.hpp"
#include "diffbias/stats.hpp"

namespace diffbias {

/// Shrinkage denoiser mu + sum_{i<=k} lambda_i / (lambda_i + sigma^2) u_i u_i^T (y - mu).
///
/// With the rank unset the sum runs over every mode and the map is the MMSE
/// estimator for N(mu, Sigma). With rank k it is the optimal rank-k linear
/// denoiser: the best rank-k approximation of Sigma (Sigma + sigma^2 I)^{-1/2}
/// composed with (Sigma + sigma^2 I)^{-1/2}, which keeps the top-k gains.
class LinearDenoiser final : public Denoiser {
 public:
  LinearDenoiser(Vector mean, EigenDecomposition eig, std::optional<int> rank, Frame frame);

  /// Analytic denoiser for N(mean, cov) (no estimation involved).
  static LinearDenoiser gaussian(const Vector& mean, const Matrix& cov,
                                 std::optional<int> rank = std::nullopt);
  static LinearDenoiser from_parameters(const nlohmann::json& params);

  int dim() const override { return static_cast<int>(mean_.size()); }
  Vector denoise(const Vector& y, double sigma) const override;
  Matrix denoise_batch(const Matrix& ys, double sigma) const override;
  nlohmann::json descriptor() const override;
  nlohmann::json parameters() const override;
  const Frame& frame() const override { return frame_; }

  const Vector& mean() const { return mean_; }
  const EigenDecomposition& eig() const { return eig_; }
  std::optional<int> rank() const { return rank_; }
  int effective_rank() const { return rank_.value_or(dim()); }

  /// Per-mode gains lambda_i / (lambda_i + sigma^2), zero beyond the rank.
  Vector gains(double sigma) const;
  /// The d x d operator L with denoise(y) = mu + L (y - mu).
  Matrix operator_matrix(double sigma) const;

 private:
  Vector mean_;
  EigenDecomposition eig_;
  std::optional<int> rank_;
  Frame frame_;
};

/// Full-rank fit: empirical mean and eigendecomposition of the empirical covariance.
LinearDenoiser fit_linear(const Dataset& data);
/// Rank-constrained fit; throws ValidationError unless 1 <= k <= d.
LinearDenoiser fit_rank_k_linear(const Dataset& data, int k);

/// Exact posterior mean E[x | y] for a Gaussian-mixture target; its score is
/// the true noisy-marginal score, so sampling with it reproduces the target.
class GmmDenoiser final : public Denoiser {
 public:
  explicit GmmDenoiser(GmmSpec spec);
  static GmmDenoiser from_parameters(const nlohmann::json& params);

  int dim() const override { return spec_.dim(); }
  Vector denoise(const Vector& y, double sigma) const override;
  nlohmann::json descriptor() const override;
  nlohmann::json parameters() const override;
  const Frame& frame() const override { return frame_; }

 private:
  GmmSpec spec_;
  std::vector<EigenDecomposition> eigs_;
  Frame frame_;
};

}  // namespace diffbias
