#include "diffbias/linear_denoiser.hpp"

#include <cmath>
#include <limits>

#include "diffbias/error.hpp"

namespace diffbias {

namespace {

nlohmann::json eig_to_json(const EigenDecomposition& eig) {
  const Index d = eig.eigenvalues.size();
  std::vector<double> values(eig.eigenvalues.data(), eig.eigenvalues.data() + d);
  std::vector<double> vectors(static_cast<std::size_t>(d * d));
  for (Index c = 0; c < d; ++c)
    for (Index r = 0; r < d; ++r) vectors[static_cast<std::size_t>(c * d + r)] = eig.eigenvectors(r, c);
  return {{"eigenvalues", values}, {"eigenvectors_colmajor", vectors}};
}

EigenDecomposition eig_from_json(const nlohmann::json& j) {
  const auto values = j.at("eigenvalues").get<std::vector<double>>();
  const auto vectors = j.at("eigenvectors_colmajor").get<std::vector<double>>();
  const auto d = static_cast<Index>(values.size());
  if (static_cast<Index>(vectors.size()) != d * d) throw ValidationError("eigenvector block has wrong size");
  EigenDecomposition eig{Eigen::Map<const Vector>(values.data(), d), Eigen::Map<const Matrix>(vectors.data(), d, d)};
  return eig;
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

LinearDenoiser::LinearDenoiser(Vector mean, EigenDecomposition eig, std::optional<int> rank, Frame frame)
    : mean_(std::move(mean)), eig_(std::move(eig)), rank_(rank), frame_(std::move(frame)) {
  if (eig_.dim() != mean_.size()) throw ValidationError("linear denoiser mean/eigen dimension mismatch");
  if (rank_ && (*rank_ < 1 || *rank_ > dim())) throw ValidationError("rank k must satisfy 1 <= k <= d");
}

LinearDenoiser LinearDenoiser::gaussian(const Vector& mean, const Matrix& cov, std::optional<int> rank) {
  return LinearDenoiser(mean, eig_sym(cov), rank, frame_of(mean, cov));
}

Vector LinearDenoiser::gains(double sigma) const {
  const double s2 = sigma * sigma;
  Vector g(dim());
  const int k = effective_rank();
  for (int i = 0; i < dim(); ++i) {
    const double lambda = std::max(0.0, eig_.eigenvalues(i));
    g(i) = (i < k && lambda > 0.0) ? lambda / (lambda + s2) : 0.0;
  }
  return g;
}

Matrix LinearDenoiser::operator_matrix(double sigma) const {
  return eig_.eigenvectors * gains(sigma).asDiagonal() * eig_.eigenvectors.transpose();
}

Vector LinearDenoiser::denoise(const Vector& y, double sigma) const {
  const Vector g = gains(sigma);
  const Vector coeff = eig_.eigenvectors.transpose() * (y - mean_);
  return mean_ + eig_.eigenvectors * g.cwiseProduct(coeff);
}

Matrix LinearDenoiser::denoise_batch(const Matrix& ys, double sigma) const {
  const Vector g = gains(sigma);
  const Matrix coeff = (ys.rowwise() - mean_.transpose()) * eig_.eigenvectors;
  return (coeff * g.asDiagonal() * eig_.eigenvectors.transpose()).rowwise() + mean_.transpose();
}

nlohmann::json LinearDenoiser::descriptor() const {
  nlohmann::json d = {{"family", "linear"}, {"dim", dim()}};
  d["rank"] = rank_ ? nlohmann::json(*rank_) : nlohmann::json(nullptr);
  return d;
}

nlohmann::json LinearDenoiser::parameters() const {
  nlohmann::json p = {{"mean", to_std(mean_)}, {"eig", eig_to_json(eig_)}, {"frame", frame_to_json(frame_)}};
  p["rank"] = rank_ ? nlohmann::json(*rank_) : nlohmann::json(nullptr);
  return p;
}

LinearDenoiser LinearDenoiser::from_parameters(const nlohmann::json& p) {
  std::optional<int> rank;
  if (!p.at("rank").is_null()) rank = p.at("rank").get<int>();
  return LinearDenoiser(to_vector(p.at("mean").get<std::vector<double>>()), eig_from_json(p.at("eig")), rank,
                        frame_from_json(p.at("frame")));
}

LinearDenoiser fit_linear(const Dataset& data) {
  return LinearDenoiser(data.mean(), eig_sym(data.covariance()), std::nullopt, frame_of(data));
}

LinearDenoiser fit_rank_k_linear(const Dataset& data, int k) {
  if (k < 1 || k > data.dim()) throw ValidationError("rank k must satisfy 1 <= k <= d");
  return LinearDenoiser(data.mean(), eig_sym(data.covariance()), k, frame_of(data));
}

// ---- exact mixture denoiser -------------------------------------------------

GmmDenoiser::GmmDenoiser(GmmSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (const auto& c : spec_.covariances) eigs_.push_back(eig_sym(c));
  frame_ = frame_of(spec_.mixture_mean(), spec_.mixture_covariance());
}

Vector GmmDenoiser::denoise(const Vector& y, double sigma) const {
  const double s2 = sigma * sigma;
  const std::size_t m = spec_.components();
  std::vector<double> log_resp(m, -std::numeric_limits<double>::infinity());
  std::vector<Vector> posterior(m);
  for (std::size_t c = 0; c < m; ++c) {
    const auto& eig = eigs_[c];
    const Vector coeff = eig.eigenvectors.transpose() * (y - spec_.means[c]);
    double logdet = 0.0;
    double quad = 0.0;
    Vector shrunk(coeff.size());
    for (Index i = 0; i < coeff.size(); ++i) {
      const double lambda = std::max(0.0, eig.eigenvalues(i));
      const double var = lambda + s2;
      logdet += std::log(var);
      quad += coeff(i) * coeff(i) / var;
      shrunk(i) = coeff(i) * lambda / var;
    }
    posterior[c] = spec_.means[c] + eig.eigenvectors * shrunk;
    if (spec_.weights[c] > 0.0) log_resp[c] = std::log(spec_.weights[c]) - 0.5 * (logdet + quad);
  }
  const double top = *std::max_element(log_resp.begin(), log_resp.end());
  double norm = 0.0;
  Vector out = Vector::Zero(dim());
  for (std::size_t c = 0; c < m; ++c) {
    const double w = std::exp(log_resp[c] - top);
    norm += w;
    out += w * posterior[c];
  }
  return out / norm;
}

nlohmann::json GmmDenoiser::descriptor() const {
  return {{"family", "gaussian_mixture_exact"}, {"dim", dim()}, {"components", spec_.components()}};
}

nlohmann::json GmmDenoiser::parameters() const { return {{"spec", spec_}}; }

GmmDenoiser GmmDenoiser::from_parameters(const nlohmann::json& p) {
  return GmmDenoiser(p.at("spec").get<GmmSpec>());
}

}  // namespace diffbias
