#include "diffbias/denoiser.hpp"

#include <cmath>

#include "diffbias/error.hpp"
#include "diffbias/rng.hpp"
#include "diffbias/stats.hpp"

namespace diffbias {

Frame frame_of(const Vector& mean, const Matrix& cov) {
  const double var = cov.trace() / static_cast<double>(cov.rows());
  return Frame{mean, var > 0.0 ? std::sqrt(var) : 1.0};
}

Frame frame_of(const Dataset& data) { return frame_of(data.mean(), data.covariance()); }

nlohmann::json frame_to_json(const Frame& frame) {
  return {{"center", std::vector<double>(frame.center.data(), frame.center.data() + frame.center.size())},
          {"scale", frame.scale}};
}

Frame frame_from_json(const nlohmann::json& j) {
  const auto c = j.at("center").get<std::vector<double>>();
  return Frame{Eigen::Map<const Vector>(c.data(), static_cast<Index>(c.size())), j.at("scale").get<double>()};
}

Matrix Denoiser::denoise_batch(const Matrix& ys, double sigma) const {
  Matrix out(ys.rows(), ys.cols());
  for (Index i = 0; i < ys.rows(); ++i) out.row(i) = denoise(ys.row(i).transpose(), sigma).transpose();
  return out;
}

double denoising_mse(const Denoiser& denoiser, const Dataset& data, double sigma, int replicates,
                     std::uint64_t seed) {
  if (replicates < 1) throw ValidationError("denoising_mse needs >= 1 replicate");
  Rng rng(seed);
  const Index n = data.size();
  const int d = data.dim();
  double total = 0.0;
  for (int r = 0; r < replicates; ++r) {
    Matrix ys = data.points();
    for (Index i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) ys(i, k) += sigma * rng.normal();
    const Matrix xs = denoiser.denoise_batch(ys, sigma);
    total += (xs - data.points()).rowwise().squaredNorm().sum();
  }
  return total / (static_cast<double>(n) * replicates);
}

Matrix finite_difference_jacobian(const Denoiser& denoiser, const Vector& y, double sigma, double step) {
  const int d = denoiser.dim();
  Matrix jac(d, d);
  Vector probe = y;
  for (int k = 0; k < d; ++k) {
    probe(k) = y(k) + step;
    const Vector plus = denoiser.denoise(probe, sigma);
    probe(k) = y(k) - step;
    const Vector minus = denoiser.denoise(probe, sigma);
    probe(k) = y(k);
    jac.col(k) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

Vector singular_values(const Matrix& m) {
  const Matrix gram = m.transpose() * m;
  return eig_sym(0.5 * (gram + gram.transpose())).eigenvalues.cwiseMax(0.0).cwiseSqrt();
}

int jacobian_rank(const Denoiser& denoiser, const std::vector<Vector>& probes, double sigma, double tol,
                  double step) {
  if (probes.empty()) throw ValidationError("jacobian_rank needs at least one probe");
  int best = 0;
  for (const auto& y : probes) {
    const Vector sv = singular_values(finite_difference_jacobian(denoiser, y, sigma, step));
    int rank = 0;
    for (Index k = 0; k < sv.size(); ++k)
      if (sv(k) > tol * sv(0)) ++rank;
    best = std::max(best, rank);
  }
  return best;
}

}  // namespace diffbias
