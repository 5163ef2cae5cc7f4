#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "diffbias/dataset.hpp"
#include "diffbias/error.hpp"
#include "diffbias/linear_denoiser.hpp"
#include "diffbias/polynomial_denoiser.hpp"
#include "diffbias/rng.hpp"
#include "diffbias/stats.hpp"

using namespace diffbias;

namespace {

Matrix diag2(double a, double b) { return (Matrix(2, 2) << a, 0, 0, b).finished(); }

Dataset scaled_gaussian(const Vector& sd, Index n, std::uint64_t seed) {
  Matrix pts = isotropic_gaussian(static_cast<int>(sd.size()), n, seed).points();
  pts = pts * sd.asDiagonal();
  return Dataset(pts);
}

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

// Raw moments E[x^k], k = 0..max, of N(0, 1): (k - 1)!! for even k.
MomentTable standard_normal_table(int max_order) {
  std::map<MultiIndex, double> values;
  for (int k = 0; k <= max_order; ++k) {
    double m = 0.0;
    if (k % 2 == 0) {
      m = 1.0;
      for (int j = k - 1; j > 0; j -= 2) m *= j;
    }
    values[{k}] = m;
  }
  return MomentTable(1, max_order, values);
}

}  // namespace

TEST_CASE("linear denoiser limits") {
  const auto data = sample_gmm(three_component_preset(), 2000, 1);
  const auto d = fit_linear(data);
  const Vector y = data.point(3);
  CHECK((d.denoise(y, 1e-8) - y).norm() < 1e-5);
  CHECK((d.denoise(y, 1e6) - data.mean()).norm() < 1e-4);
  CHECK(d.dim() == 2);
}

TEST_CASE("linear denoiser applies the Wiener gain on diag(4, 1) data") {
  const auto data = scaled_gaussian(vec2(2.0, 1.0), 100000, 2);
  const auto d = fit_linear(data);
  const Vector y = vec2(1, 1);
  // Oracle: mu + Sigma (Sigma + I)^{-1} (y - mu) with a Cholesky solve.
  const Matrix s = data.covariance();
  const Vector oracle = data.mean() + s * (s + Matrix::Identity(2, 2)).llt().solve(y - data.mean());
  CHECK((d.denoise(y, 1.0) - oracle).norm() < 1e-10);
  CHECK(std::abs(d.denoise(y, 1.0)(0) - 0.8) < 0.02);
  CHECK(std::abs(d.denoise(y, 1.0)(1) - 0.5) < 0.02);
}

TEST_CASE("gains decrease monotonically in sigma") {
  const auto d = fit_linear(sample_gmm(three_component_preset(), 1000, 3));
  Vector prev = d.gains(1e-3);
  for (double s = 2e-3; s < 1e3; s *= 1.5) {
    const Vector g = d.gains(s);
    CHECK((g.array() < prev.array()).all());
    prev = g;
  }
}

TEST_CASE("rank-k linear denoiser") {
  const auto data = sample_gmm(three_component_preset(), 2000, 4);
  const auto full = fit_linear(data);
  const auto same = fit_rank_k_linear(data, 2);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vector y = vec2(3 * rng.normal(), 3 * rng.normal());
    CHECK((same.denoise(y, 0.7) - full.denoise(y, 0.7)).norm() < 1e-12);
  }
  CHECK_THROWS_AS(fit_rank_k_linear(data, 0), ValidationError);
  CHECK_THROWS_AS(fit_rank_k_linear(data, 3), ValidationError);

  const auto k1 = LinearDenoiser::gaussian(Vector::Zero(2), diag2(4, 1), 1);
  CHECK((k1.operator_matrix(1.0) - diag2(0.8, 0.0)).norm() < 1e-12);

  const auto r1 = fit_rank_k_linear(data, 1);
  const Vector u1 = r1.eig().eigenvectors.col(0);
  for (int i = 0; i < 20; ++i) {
    const Vector y = vec2(3 * rng.normal(), 3 * rng.normal());
    const Vector delta = r1.denoise(y, 0.5) - data.mean();
    CHECK((delta - u1 * u1.dot(delta)).norm() < 1e-10);
  }
}

TEST_CASE("single-component mixture denoiser equals the Gaussian one") {
  GmmSpec spec;
  spec.weights = {1.0};
  spec.means = {vec2(1.0, -0.5)};
  spec.covariances = {(Matrix(2, 2) << 2, 0.6, 0.6, 1).finished()};
  const GmmDenoiser g(spec);
  const auto lin = LinearDenoiser::gaussian(spec.means[0], spec.covariances[0]);
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const Vector y = vec2(3 * rng.normal(), 3 * rng.normal());
    CHECK((g.denoise(y, 0.8) - lin.denoise(y, 0.8)).norm() < 1e-10);
  }
}

TEST_CASE("polynomial degree must be odd") {
  const auto data = sample_gmm(three_component_preset(), 200, 5);
  PolynomialFitOptions o;
  o.degree = 2;
  o.sigma_grid = {0.5};
  CHECK_THROWS_WITH_AS(fit_polynomial_exact(data, o), doctest::Contains("odd"), ValidationError);
  CHECK_THROWS_AS(fit_polynomial_rf(data, 8, o), ValidationError);
  o.degree = 0;
  CHECK_THROWS_AS(fit_polynomial_exact(data, o), ValidationError);
  o.degree = 1;
  CHECK_THROWS_AS(fit_polynomial_exact(isotropic_gaussian(5, 100, 1), o), ValidationError);
}

TEST_CASE("degree-1 polynomial matches the linear denoiser") {
  const auto data = sample_gmm(three_component_preset(), 5000, 6);
  PolynomialFitOptions o;
  o.degree = 1;
  o.noise_replicates = 32;
  o.seed = 3;
  o.sigma_grid = default_sigma_grid(frame_of(data).scale);
  const auto poly = fit_polynomial_exact(data, o);
  const auto lin = fit_linear(data);
  double worst = 0;
  const double scale = frame_of(data).scale;
  for (double s : o.sigma_grid)
    for (Index i = 0; i < 32; ++i) {
      const Vector y = data.point(i);
      worst = std::max(worst, (poly.denoise(y, s) - lin.denoise(y, s)).norm() / scale);
    }
  CHECK(worst < 1e-2);
}

TEST_CASE("moment route matches analytic feature covariances for N(0, 1)") {
  // u = y / sqrt(1 + sigma^2) is standard normal and Cov(x, u) = 1 / r, so
  // Cov(u^a, u^b) and E[x u^a] follow from normal moments and Stein's lemma.
  const double sigma = 0.7;
  const double r = std::sqrt(1 + sigma * sigma);
  const Frame frame{Vector::Zero(1), 1.0};
  const auto features = FeatureMap::monomial(1, 3);
  const auto m = feature_moments_from_table(standard_normal_table(6), features, frame, sigma);
  REQUIRE(features.size() == 3);
  auto power_of = [&](int f) { return features.exponents()[static_cast<std::size_t>(f)][0]; };
  const double normal_moment[] = {1, 0, 1, 0, 3, 0, 15};
  for (int a = 0; a < 3; ++a) {
    const int pa = power_of(a);
    CHECK(std::abs(m.mu_h(a) - normal_moment[pa]) < 1e-12);
    for (int b = 0; b < 3; ++b) {
      const int pb = power_of(b);
      const double cov = normal_moment[pa + pb] - normal_moment[pa] * normal_moment[pb];
      CHECK(std::abs(m.sigma_h(a, b) - cov) < 1e-12);
    }
    const double exu = pa >= 1 ? pa * normal_moment[pa - 1] / r : 0.0;
    CHECK(std::abs(m.sigma_xh(0, a) - exu) < 1e-12);
  }

  PolynomialFitOptions o;
  o.degree = 1;
  o.sigma_grid = {sigma};
  o.ridge = 0.0;
  const auto den = fit_polynomial_from_moments(standard_normal_table(2), frame, o);
  const Vector y = Vector::Constant(1, 1.3);
  CHECK(std::abs(den.denoise(y, sigma)(0) - 1.3 / (1 + sigma * sigma)) < 1e-12);
}

TEST_CASE("constant data with a positive ridge denoises to the constant") {
  const Matrix pts = Matrix::Constant(50, 2, 1.25);
  const Dataset data(pts);
  PolynomialFitOptions o;
  o.degree = 3;
  o.sigma_grid = {0.1, 1.0};
  o.ridge = 1e-3;
  const auto d = fit_polynomial_exact(data, o);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const Vector y = vec2(1.25 + rng.normal(), 1.25 + rng.normal());
    CHECK((d.denoise(y, 1.0) - Vector::Constant(2, 1.25)).norm() < 1e-6);
  }
}

TEST_CASE("singular feature covariance without ridge is a numerical error") {
  const Dataset data(Matrix::Constant(50, 1, 2.0));
  PolynomialFitOptions o;
  o.degree = 3;
  o.sigma_grid = {1e-8};
  o.ridge = 0.0;
  CHECK_THROWS_AS(fit_polynomial_exact(data, o), NumericalError);
}

TEST_CASE("width-1 random features in 1-D recover the Wiener gain") {
  const Dataset data(isotropic_gaussian(1, 20000, 7).points() * 2.0);
  PolynomialFitOptions o;
  o.degree = 1;
  o.sigma_grid = {1.0};
  o.noise_replicates = 16;
  o.seed = 9;
  const auto d = fit_polynomial_rf(data, 1, o);
  const double lambda = data.covariance()(0, 0);
  const double gain = (d.denoise(Vector::Constant(1, 1.0), 1.0)(0) - d.denoise(Vector::Constant(1, -1.0), 1.0)(0)) / 2;
  CHECK(std::abs(gain - lambda / (lambda + 1.0)) < 1e-3);

  const auto again = fit_polynomial_rf(data, 1, o);
  CHECK(again.levels()[0].weights == d.levels()[0].weights);
  CHECK(again.features().projection() == d.features().projection());
  CHECK(d.descriptor().at("feature_map") == "random_power");
}

TEST_CASE("degree-3 random features beat the linear denoiser at sigma = 0.1") {
  const auto data = sample_gmm(three_component_preset(), 2000, 8);
  PolynomialFitOptions o;
  o.degree = 3;
  o.sigma_grid = {0.1};
  o.noise_replicates = 2;
  o.seed = 4;
  const auto rf = fit_polynomial_rf(data, 1024, o);
  const auto lin = fit_linear(data);
  const double mse_rf = denoising_mse(rf, data, 0.1, 2, 99);
  const double mse_lin = denoising_mse(lin, data, 0.1, 2, 99);
  CHECK(mse_rf < mse_lin);
}

TEST_CASE("sigma lookup uses the nearest level in log sigma") {
  const auto data = sample_gmm(three_component_preset(), 500, 9);
  PolynomialFitOptions o;
  o.degree = 1;
  o.sigma_grid = {0.1, 1.0};
  const auto d = fit_polynomial_exact(data, o);
  CHECK(d.nearest_level(0.05) == 0);
  CHECK(d.nearest_level(0.3) == 0);
  CHECK(d.nearest_level(0.33) == 1);
  CHECK(d.nearest_level(50.0) == 1);
  const auto grid = default_sigma_grid(1.0);
  CHECK(grid.size() == 20);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("Jacobian rank of linear denoisers") {
  const auto data = sample_gmm(three_component_preset(), 1000, 10);
  const std::vector<Vector> probes = {data.point(0), data.point(1), data.point(2)};
  CHECK(jacobian_rank(fit_linear(data), probes, 0.5, 0.01) == 2);
  CHECK(jacobian_rank(fit_rank_k_linear(data, 1), probes, 0.5, 0.01) == 1);
  const auto lin = fit_linear(data);
  CHECK((finite_difference_jacobian(lin, data.point(0), 0.5) - lin.operator_matrix(0.5)).norm() < 1e-8);
}
