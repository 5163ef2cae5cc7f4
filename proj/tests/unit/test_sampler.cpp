#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "diffbias/dataset.hpp"
#include "diffbias/error.hpp"
#include "diffbias/linear_denoiser.hpp"
#include "diffbias/sampler.hpp"
#include "diffbias/serialize.hpp"
#include "diffbias/stats.hpp"

using namespace diffbias;

namespace {

// Returns a fixed point for every input; optionally NaN below a noise level.
class ConstantDenoiser final : public Denoiser {
 public:
  ConstantDenoiser(Vector c, double nan_below = 0.0) : c_(std::move(c)), nan_below_(nan_below) {
    frame_ = Frame{Vector::Zero(c_.size()), 1.0};
  }
  int dim() const override { return static_cast<int>(c_.size()); }
  Vector denoise(const Vector&, double sigma) const override {
    if (sigma < nan_below_) return Vector::Constant(c_.size(), std::numeric_limits<double>::quiet_NaN());
    return c_;
  }
  nlohmann::json descriptor() const override { return {{"family", "constant"}}; }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }
  const Frame& frame() const override { return frame_; }

 private:
  Vector c_;
  double nan_below_;
  Frame frame_;
};

class IdentityDenoiser final : public Denoiser {
 public:
  explicit IdentityDenoiser(int d) : frame_{Vector::Zero(d), 1.0} {}
  int dim() const override { return static_cast<int>(frame_.center.size()); }
  Vector denoise(const Vector& y, double) const override { return y; }
  nlohmann::json descriptor() const override { return {{"family", "identity"}}; }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }
  const Frame& frame() const override { return frame_; }

 private:
  Frame frame_;
};

Matrix spd2() { return (Matrix(2, 2) << 2.0, 0.6, 0.6, 1.0).finished(); }
Vector mean2() { return (Vector(2) << 1.0, -0.5).finished(); }

// Covariance the deterministic sampler produces from the exact N(mu, cov)
// denoiser. Per eigenmode (standardized variance l) the estimate is
// x0 = g z with g = l sqrt(a) / (l a + 1 - a); the step maps z to
// (sqrt(a') g + sqrt(1 - a') (1 - sqrt(a) g) / sqrt(1 - a)) z and the last
// step to g z.
Matrix ddim_gaussian_cov(const Matrix& cov, const NoiseSchedule& sched) {
  const int d = static_cast<int>(cov.rows());
  const double s2 = cov.trace() / d;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  Vector var(d);
  for (int i = 0; i < d; ++i) {
    const double l = eig.eigenvalues()(i) / s2;
    double f = 1.0;
    for (int t = sched.steps; t >= 1; --t) {
      const double a = sched.alpha_bar[t], ap = sched.alpha_bar[t - 1];
      const double g = l * std::sqrt(a) / (l * a + 1 - a);
      f *= t == 1 ? g : std::sqrt(ap) * g + std::sqrt(1 - ap) * (1 - std::sqrt(a) * g) / std::sqrt(1 - a);
    }
    var(i) = s2 * f * f;
  }
  return eig.eigenvectors() * var.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

TEST_CASE("cosine schedule endpoints and monotonicity") {
  for (int T : {1, 10, 50, 1000}) {
    const auto s = cosine_schedule(T);
    REQUIRE(s.alpha_bar.size() == static_cast<std::size_t>(T) + 1);
    CHECK(s.alpha_bar.front() >= 0.999);
    CHECK(s.alpha_bar.back() <= 1e-3);
    CHECK(s.alpha_bar.back() == doctest::Approx(kAlphaBarClamp));
    for (int t = 1; t <= T; ++t) {
      CHECK(s.sigma[t] >= s.sigma[t - 1]);
      if (s.alpha_bar[t] > kAlphaBarClamp) CHECK(s.sigma[t] > s.sigma[t - 1]);
      CHECK(s.sigma[t] == doctest::Approx(std::sqrt((1 - s.alpha_bar[t]) / s.alpha_bar[t])));
    }
  }
  const auto s = cosine_schedule(2);
  // Midpoint: cos^2((0.5 + 0.008) / 1.008 * pi / 2) / cos^2(0.008 / 1.008 * pi / 2).
  const double c = std::cos(0.508 / 1.008 * M_PI / 2), b = std::cos(0.008 / 1.008 * M_PI / 2);
  CHECK(s.alpha_bar[1] == doctest::Approx(c * c / (b * b)).epsilon(1e-14));
  CHECK_THROWS_AS(cosine_schedule(0), ValidationError);
}

TEST_CASE("score from a denoiser") {
  const Vector y = (Vector(2) << 0.3, -1.2).finished();
  CHECK(score_from_denoiser(IdentityDenoiser(2), y, 0.7).norm() == 0.0);

  const auto g = LinearDenoiser::gaussian(mean2(), spd2());
  for (double sigma : {0.1, 1.0, 5.0}) {
    const Matrix k = spd2() + sigma * sigma * Matrix::Identity(2, 2);
    const Vector oracle = -k.ldlt().solve(y - mean2());
    CHECK((score_from_denoiser(g, y, sigma) - oracle).norm() < 1e-8 * oracle.norm());
  }

  const ConstantDenoiser c(Vector::Zero(2));
  const Vector s1 = score_from_denoiser(c, y, 0.5);
  const Vector s2 = score_from_denoiser(c, y, 1.0);
  CHECK((s2 - 0.25 * s1).norm() < 1e-14);
  CHECK_THROWS_AS(score_from_denoiser(c, y, 0.0), ValidationError);
}

TEST_CASE("DDIM on a standard normal is a known scalar map") {
  // For unit-variance data in its own frame the exact denoiser gives
  // x0 = sqrt(abar) z, each interior step multiplies z by
  // cos(theta_t - theta_{t-1}) with abar = cos^2 theta, and the last step by
  // sqrt(abar_1).
  const auto g = LinearDenoiser::gaussian(Vector::Zero(1), Matrix::Identity(1, 1));
  for (int T : {1, 5, 50}) {
    const auto sched = cosine_schedule(T);
    double factor = std::sqrt(sched.alpha_bar[1]);
    for (int t = 2; t <= T; ++t)
      factor *= std::cos(std::acos(std::sqrt(sched.alpha_bar[t])) - std::acos(std::sqrt(sched.alpha_bar[t - 1])));
    const auto run = ddim_sample(g, sched, 64, 3, true);
    CHECK((run.samples - factor * run.trajectory.front()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("exact Gaussian score reproduces the Gaussian up to step discretization") {
  const auto g = LinearDenoiser::gaussian(mean2(), spd2());
  const auto sched = cosine_schedule(50);
  const auto run = ddim_sample(g, sched, 10000, 1);
  const Vector m = empirical_mean(run.samples);
  const Matrix c = empirical_cov(run.samples);
  CHECK((m - mean2()).norm() < 0.03 * std::sqrt(spd2().trace() / 2));
  const Matrix oracle = ddim_gaussian_cov(spd2(), sched);
  CHECK((c - oracle).norm() / oracle.norm() < 0.03);
  // The 50-step shrink is a few percent and vanishes as steps grow.
  CHECK((oracle - spd2()).norm() / spd2().norm() < 0.10);
  const Matrix fine = ddim_gaussian_cov(spd2(), cosine_schedule(2000));
  CHECK((fine - spd2()).norm() / spd2().norm() < 0.01);
}

TEST_CASE("a single step returns the denoiser output at the top level") {
  const auto g = LinearDenoiser::gaussian(mean2(), spd2());
  const auto sched = cosine_schedule(1);
  const auto run = ddim_sample(g, sched, 20, 4, true);
  REQUIRE(run.trajectory.size() == 2);
  const Frame& f = g.frame();
  const Matrix z = ((run.trajectory[0].rowwise() - f.center.transpose()) / f.scale);
  const Matrix y = ((z / std::sqrt(sched.alpha_bar[1])) * f.scale).rowwise() + f.center.transpose();
  const Matrix expected = g.denoise_batch(y, f.scale * sched.sigma[1]);
  CHECK((run.samples - expected).cwiseAbs().maxCoeff() < 1e-12);
  // Nearly all signal is gone at the top, so the output sits near the mean.
  CHECK((empirical_mean(run.samples) - mean2()).norm() < 0.05);
  CHECK(empirical_cov(run.samples).norm() < 1e-3);
}

TEST_CASE("sampling is deterministic per sample index") {
  const auto g = LinearDenoiser::gaussian(mean2(), spd2());
  const auto sched = cosine_schedule(10);
  const auto a = ddim_sample(g, sched, 10, 7);
  const auto b = ddim_sample(g, sched, 10, 7);
  CHECK(a.samples == b.samples);
  const auto prefix = ddim_sample(g, sched, 4, 7);
  CHECK(prefix.samples == a.samples.topRows(4));
  CHECK(ddim_sample(g, sched, 10, 8).samples != a.samples);
}

TEST_CASE("halving the step count barely moves the output mean") {
  const auto g = LinearDenoiser::gaussian(mean2(), spd2());
  const auto fine = ddim_sample(g, cosine_schedule(50), 10000, 12);
  const auto coarse = ddim_sample(g, cosine_schedule(25), 10000, 12);
  const double gap = (empirical_mean(fine.samples) - empirical_mean(coarse.samples)).norm();
  CHECK(gap < 0.01 * g.frame().scale);
}

TEST_CASE("more steps bring a linear fit closer to the data covariance") {
  const auto data = sample_gmm(three_component_preset(), 3000, 2);
  const auto lin = fit_linear(data);
  const Matrix target = empirical_cov(data);
  double previous = 1e300;
  for (int T : {10, 25, 50, 200}) {
    const auto run = ddim_sample(lin, cosine_schedule(T), 10000, 5);
    const Matrix predicted = ddim_gaussian_cov(target, cosine_schedule(T));
    const Matrix c = empirical_cov(run.samples);
    CHECK((c - predicted).norm() / predicted.norm() < 0.03);
    const double err = (predicted - target).norm() / target.norm();
    CHECK(err < previous);
    previous = err;
  }
}

TEST_CASE("trajectory stays bounded") {
  const auto data = sample_gmm(three_component_preset(), 2000, 3);
  const auto lin = fit_linear(data);
  const auto run = ddim_sample(lin, cosine_schedule(50), 500, 6, true);
  REQUIRE(run.trajectory.size() == 51);
  const double diameter = (data.points().colwise().maxCoeff() - data.points().colwise().minCoeff()).norm();
  for (const auto& state : run.trajectory)
    CHECK((state.rowwise() - lin.frame().center.transpose()).rowwise().norm().maxCoeff() < 10 * diameter);
  CHECK(run.trajectory.back() == run.samples);
}

TEST_CASE("non-finite states raise a sampling error") {
  const ConstantDenoiser bad(Vector::Zero(2), 0.5);
  const auto sched = cosine_schedule(10);
  try {
    ddim_sample(bad, sched, 3, 1);
    FAIL("expected a sampling error");
  } catch (const SamplingError& e) {
    CHECK(e.sigma() < 0.5);
    CHECK(e.step() >= 1);
    CHECK(sched.sigma[static_cast<std::size_t>(e.step())] < 0.5);
    CHECK(sched.sigma[static_cast<std::size_t>(e.step()) + 1] >= 0.5);
  }
  CHECK_THROWS_AS(ddim_sample(bad, sched, 0, 1), ValidationError);
}

TEST_CASE("default step counts and run files") {
  CHECK(default_sampling_steps("linear") == 10);
  CHECK(default_sampling_steps("polynomial") == 50);
  CHECK(default_sampling_steps("mlp_bottleneck") == 50);

  const auto g = LinearDenoiser::gaussian(mean2(), spd2());
  const auto run = ddim_sample(g, cosine_schedule(10), 6, 9);
  const auto dir = std::filesystem::temp_directory_path() / "diffbias_sampler_test";
  std::filesystem::create_directories(dir);
  write_run(run, dir / "samples.csv");
  REQUIRE(std::filesystem::exists(dir / "samples.json"));
  const auto side = nlohmann::json::parse(read_text_file(dir / "samples.json"));
  CHECK(side.at("seed") == 9);
  CHECK(side.at("n_samples") == 6);
  CHECK(side.at("schedule").at("steps") == 10);
  CHECK(side.at("schedule").at("alpha_bar").size() == 11);
  CHECK(side.at("sampler").at("eta") == 0.0);
  CHECK(side.at("descriptor").at("family") == "linear");
  CHECK(read_csv(dir / "samples.csv").size() == 6);
  std::filesystem::remove_all(dir);
}
