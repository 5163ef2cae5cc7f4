#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffbias/linalg.hpp"

namespace diffbias {

/// Fixed-dimension point cloud, one point per row. Immutable once built;
/// the first and second empirical moments are computed on construction.
class Dataset {
 public:
  /// Requires at least two rows, at least one column and finite entries.
  explicit Dataset(Matrix points, std::string name = "data");

  const Matrix& points() const { return points_; }
  Vector point(Index i) const { return points_.row(i).transpose(); }
  Index size() const { return points_.rows(); }
  int dim() const { return static_cast<int>(points_.cols()); }
  const std::string& name() const { return name_; }

  const Vector& mean() const { return mean_; }
  /// Unbiased (n-1) sample covariance.
  const Matrix& covariance() const { return cov_; }

  Dataset renamed(std::string name) const { return Dataset(points_, std::move(name)); }
  /// Rows [first, first + count).
  Dataset head(Index count) const;

 private:
  Matrix points_;
  std::string name_;
  Vector mean_;
  Matrix cov_;
};

/// Gaussian mixture description. Weights must form a probability vector and
/// each covariance must be symmetric positive semidefinite.
struct GmmSpec {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;

  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  std::size_t components() const { return weights.size(); }

  /// Throws ValidationError when the spec breaks an invariant.
  void validate() const;

  Vector mixture_mean() const;
  /// Population covariance sum_i w_i (C_i + m_i m_i^T) - mu mu^T.
  Matrix mixture_covariance() const;
};

void to_json(nlohmann::json& j, const GmmSpec& spec);
void from_json(const nlohmann::json& j, GmmSpec& spec);

/// n i.i.d. draws from the mixture; bit-identical for equal seeds.
Dataset sample_gmm(const GmmSpec& spec, Index n, std::uint64_t seed, std::string name = "gmm");

/// The fixed three-component 2-D mixture used as the default target.
GmmSpec three_component_preset();

struct MatchedPair {
  GmmSpec three_component;
  GmmSpec two_component;
  Dataset three;
  Dataset two;
};

/// Offset of the symmetric two-component mixture along the leading
/// eigenvector: delta = sqrt(fraction * lambda_1) * u_1.
inline constexpr double kMatchedPairOffsetFraction = 0.8;

/// Build a 2-component mixture N(mu +/- delta, Sigma - delta delta^T) whose
/// analytic mean and covariance equal those of `three_component`.
GmmSpec matched_two_component(const GmmSpec& three_component,
                              double offset_fraction = kMatchedPairOffsetFraction);

/// Matched-moment pair drawn from the preset three-component mixture.
MatchedPair matched_moment_pair(std::uint64_t seed, Index n = 10000);
MatchedPair matched_moment_pair(const GmmSpec& three_component, std::uint64_t seed, Index n);

/// n draws of N(0, I_dim).
Dataset isotropic_gaussian(int dim, Index n, std::uint64_t seed);

/// Tiny synthetic side x side images (row-major pixels): random mixtures of
/// three low-frequency cosines, a constant offset and pixel noise.
Dataset smooth_random_images(Index n, int side, std::uint64_t seed);

/// Multi-index of exponents, one per coordinate.
using MultiIndex = std::vector<int>;

/// All multi-indices of total order in [min_order, max_order], ordered by
/// total order and then with larger leading exponents first.
std::vector<MultiIndex> multi_indices(int dim, int max_order, int min_order = 0);

/// Raw mixed moments E[prod_i x_i^{j_i}] for every total order <= max_order.
class MomentTable {
 public:
  MomentTable(int dim, int max_order, std::map<MultiIndex, double> values);

  int dim() const { return dim_; }
  int max_order() const { return max_order_; }
  /// Throws ValidationError for an index outside the table.
  double at(const MultiIndex& index) const;
  const std::map<MultiIndex, double>& values() const { return values_; }

 private:
  int dim_;
  int max_order_;
  std::map<MultiIndex, double> values_;
};

MomentTable moments(const Dataset& data, int max_order);

/// CSV with a header row x0,x1,... and shortest round-trip decimal values.
void write_csv(const Dataset& data, const std::filesystem::path& path);
void write_csv(const Matrix& points, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path, std::string name = "");
std::string format_double(double value);

}  // namespace diffbias
