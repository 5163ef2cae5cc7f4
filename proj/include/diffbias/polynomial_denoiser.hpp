#pragma once

#include <optional>
#include <string>

#include "diffbias/denoiser.hpp"

namespace diffbias {

enum class FeatureKind { Monomial, RandomPower };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// h(u) without the constant term. Monomial: every monomial of total degree
/// 1..k. RandomPower: elementwise k-th power of R [u; 1] for a frozen matrix R.
class FeatureMap {
 public:
  static FeatureMap monomial(int dim, int degree);
  /// R is width x (d + 1) with i.i.d. N(0, 1/d) entries drawn from `seed`.
  static FeatureMap random_power(int dim, int degree, int width, std::uint64_t seed);

  FeatureKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const;
  const std::vector<MultiIndex>& exponents() const { return exponents_; }
  const Matrix& projection() const { return projection_; }

  Vector operator()(const Vector& u) const;
  /// Row-wise features of the rows of `us`.
  Matrix apply(const Matrix& us) const;

  nlohmann::json to_json() const;
  static FeatureMap from_json(const nlohmann::json& j);

 private:
  FeatureKind kind_ = FeatureKind::Monomial;
  int dim_ = 0;
  int degree_ = 1;
  std::vector<MultiIndex> exponents_;
  Matrix projection_;
};

/// First and second moments entering the closed-form least-squares fit
/// f(y) = A h(y) + b with A = Sigma_xh Sigma_h^{-1}, b = mu_x - A mu_h.
struct FeatureMoments {
  Vector mu_x;
  Matrix sigma_x;
  Vector mu_h;
  Matrix sigma_h;
  Matrix sigma_xh;  // Cov(x, h(y)), d x F
};

/// One fitted noise level.
struct PolynomialLevel {
  double sigma = 0.0;
  Matrix weights;  // A, d x F
  Vector offset;   // b
  double ridge = 0.0;
  double condition = 0.0;
  double train_mse = 0.0;
};

struct PolynomialFitOptions {
  int degree = 3;
  /// Empty means default_sigma_grid(frame.scale).
  std::vector<double> sigma_grid;
  /// Unset means 1e-6 * trace(Sigma_h) / dim(Sigma_h) at each level.
  std::optional<double> ridge;
  /// Antithetic noise pairs per data point and level.
  int noise_replicates = 4;
  std::uint64_t seed = 0;
  /// Input normalization; defaults to the training data's frame.
  std::optional<Frame> frame;
};

inline constexpr int kMaxExactPolynomialDim = 4;
inline constexpr int kDefaultGridLevels = 20;
inline constexpr double kDefaultRidgeFactor = 1e-6;

/// `levels` log-spaced sigmas spanning [sigma_1, sigma_T] of the cosine
/// schedule with `steps` steps, in data units (times `scale`).
std::vector<double> default_sigma_grid(double scale, int steps = 50, int levels = kDefaultGridLevels);

/// Polynomial denoiser fitted separately on a grid of noise levels; a query
/// uses the level nearest in log-sigma. Inputs are normalized per level as
/// u = (y - c) / sqrt(s^2 + sigma^2), an affine change that leaves the
/// polynomial span unchanged.
class PolynomialDenoiser final : public Denoiser {
 public:
  PolynomialDenoiser(FeatureMap features, Frame frame, std::vector<PolynomialLevel> levels);
  static PolynomialDenoiser from_parameters(const nlohmann::json& params);

  int dim() const override { return features_.dim(); }
  Vector denoise(const Vector& y, double sigma) const override;
  Matrix denoise_batch(const Matrix& ys, double sigma) const override;
  nlohmann::json descriptor() const override;
  nlohmann::json parameters() const override;
  const Frame& frame() const override { return frame_; }

  const FeatureMap& features() const { return features_; }
  const std::vector<PolynomialLevel>& levels() const { return levels_; }
  std::size_t nearest_level(double sigma) const;
  int degree() const { return features_.degree(); }

 private:
  FeatureMap features_;
  Frame frame_;
  std::vector<PolynomialLevel> levels_;
};

/// Normalization radius sqrt(s^2 + sigma^2) used for level `sigma`.
double normalization_radius(const Frame& frame, double sigma);

/// Throws ValidationError for even or non-positive degree.
void require_odd_degree(int degree);

/// Sample route: x from the data, y = x + sigma eta with antithetic noise
/// pairs (+eta, -eta), features of the normalized y.
FeatureMoments estimate_feature_moments(const Dataset& data, const FeatureMap& features, const Frame& frame,
                                        double sigma, int replicates, std::uint64_t seed);

/// Moment route: the same quantities assembled from raw moments of x (order
/// up to 2 * degree) and the Gaussian noise moments. Monomial features only.
FeatureMoments feature_moments_from_table(const MomentTable& raw_moments, const FeatureMap& features,
                                          const Frame& frame, double sigma);

/// Ridge-regularized closed-form solve for one level. With ridge 0 and a
/// numerically singular Sigma_h, throws NumericalError carrying the
/// condition estimate.
PolynomialLevel solve_level(const FeatureMoments& moments, double sigma, std::optional<double> ridge);

PolynomialDenoiser fit_polynomial_exact(const Dataset& data, const PolynomialFitOptions& options);
PolynomialDenoiser fit_polynomial_rf(const Dataset& data, int width, const PolynomialFitOptions& options);
/// Fit from a moment table alone (no noise sampling).
PolynomialDenoiser fit_polynomial_from_moments(const MomentTable& raw_moments, const Frame& frame,
                                               const PolynomialFitOptions& options);

}  // namespace diffbias
