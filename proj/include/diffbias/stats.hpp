#pragma once

#include <cstdint>
#include <vector>

#include "diffbias/dataset.hpp"
#include "diffbias/linalg.hpp"

namespace diffbias {

// ---- moments ---------------------------------------------------------------

Vector empirical_mean(const Matrix& points);
/// Unbiased covariance; throws ValidationError for fewer than two rows.
Matrix empirical_cov(const Matrix& points);

Vector empirical_mean(const Dataset& data);
Matrix empirical_cov(const Dataset& data);

// ---- symmetric eigendecomposition -------------------------------------------

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns. Each eigenvector has its largest-magnitude entry positive (the
/// first such entry on ties), which makes the decomposition reproducible.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  Matrix reconstruct() const;
};

/// Cyclic Jacobi rotations. Throws ValidationError when `m` is not square or
/// not symmetric to 1e-8 (relative to its largest entry).
EigenDecomposition eig_sym(const Matrix& m);

/// sum_{i<=k} lambda_i u_i u_i^T; throws ValidationError unless 1 <= k <= d.
Matrix rank_k_approx(const Matrix& m, int k);
Matrix rank_k_approx(const EigenDecomposition& eig, int k);

// ---- two-sample statistics --------------------------------------------------

/// V-statistic 2E|A-B| - E|A-A'| - E|B-B'| over all pairs.
double energy_distance(const Matrix& a, const Matrix& b);
double energy_distance(const Dataset& a, const Dataset& b);

struct PermutationTestOptions {
  int permutations = 200;
  std::uint64_t seed = 0;
  /// Each sample is reduced to at most this many points by a seeded random
  /// subset before pooling; 0 disables the cap.
  Index max_per_sample = 2000;
};

struct PermutationTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  /// 95th percentile of the permutation null.
  double null_q95 = 0.0;
  int permutations = 0;
  Index n_a = 0;
  Index n_b = 0;

  bool rejects(double alpha) const { return p_value < alpha; }
};

/// Energy-distance permutation test with p = (1 + #{null >= observed}) / (1 + B).
PermutationTestResult energy_permutation_test(const Dataset& a, const Dataset& b,
                                              const PermutationTestOptions& options = {});

// ---- memorization -----------------------------------------------------------

inline constexpr double kMemorizationRatio = 1.0 / 3.0;

struct MemorizationReport {
  /// Per generated point: nearest-train distance / median train NN distance.
  std::vector<double> ratios;
  double median_train_nn = 0.0;
  double threshold = kMemorizationRatio;
  double memorized_fraction = 0.0;
};

MemorizationReport nn_memorization(const Dataset& generated, const Dataset& train,
                                   double threshold = kMemorizationRatio);

// ---- intrinsic dimension ----------------------------------------------------

/// Smallest k whose top-k covariance eigenvalues hold >= threshold of the
/// total variance (global PCA).
int intrinsic_dim(const Dataset& data, double variance_threshold);

struct LocalDimensionOptions {
  int neighbors = 50;
  int anchors = 100;
  std::uint64_t seed = 0;
};

struct LocalDimension {
  int dim = 0;
  /// Normalized neighborhood spectra averaged over anchors (sums to 1).
  Vector mean_spectrum;
};

/// Local PCA: for each anchor, the normalized covariance spectrum of its
/// nearest neighbors; spectra are averaged and thresholded like the global
/// estimator.
LocalDimension local_intrinsic_dim(const Dataset& data, double variance_threshold,
                                   const LocalDimensionOptions& options = {});

/// Smallest k with cumulative normalized spectrum >= threshold.
int dimension_from_spectrum(const Vector& descending_spectrum, double variance_threshold);

}  // namespace diffbias
