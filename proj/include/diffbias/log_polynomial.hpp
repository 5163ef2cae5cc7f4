#pragma once

#include <optional>
#include <vector>

#include "diffbias/dataset.hpp"
#include "diffbias/linalg.hpp"

namespace diffbias {

/// Regular grid of cells^dim nodes (dim 1 or 2) spanning center +/- box_sd * sd,
/// first and last node on the box edges. Each node owns the cell within half a
/// width of it. Node (i0, i1) has flat index i0 * cells + i1.
struct DensityGrid {
  int dim = 0;
  int cells = 0;
  Vector center;
  Vector sd;
  Vector lo;     // first node
  Vector width;  // node spacing per axis

  Index size() const;
  /// Node positions, one row per cell.
  Matrix centers() const;
  /// Flat cell index, or -1 outside the box.
  Index locate(const Vector& x) const;
};

struct LogPolynomialOptions {
  int cells = 200;
  double box_sd = 4.0;
  double penalty = 1e-4;
  int max_iterations = 200;
  double tolerance = 1e-10;
};

/// Grid over the sample's mean +/- box_sd per-coordinate standard deviations.
DensityGrid make_grid(const Matrix& points, int cells, double box_sd);

/// Cell masses of a histogram (points outside the box dropped), normalized.
Vector histogram(const Matrix& points, const DensityGrid& grid);

/// Separable Gaussian smoothing of cell masses with per-axis bandwidth
/// `bandwidth` (data units), zero outside the box, renormalized.
Vector smooth_masses(const DensityGrid& grid, const Vector& masses, const Vector& bandwidth);

/// Scott-type bandwidth n^{-1/6} * sd per axis.
Vector default_bandwidth(const DensityGrid& grid, Index n);

/// sum p log(p / q) over cells with p > 0.
double grid_kl(const Vector& p, const Vector& q);

/// Density proportional to exp(theta . phi(z)) on the grid, phi the
/// monomials of z = (x - center) / sd with total degree 1..degree.
struct LogPolynomialFit {
  int degree = 0;
  std::vector<MultiIndex> exponents;
  Vector theta;
  Vector masses;  // normalized cell masses of the fitted density
  double mean_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Penalized maximum likelihood (penalty * |theta|^2) by damped Newton, with
/// the normalizer computed by quadrature over the grid.
LogPolynomialFit fit_log_polynomial(const Matrix& points, int degree, const DensityGrid& grid,
                                    const LogPolynomialOptions& options = {});

/// Smoothed-histogram vs smoothed-model comparison on the same grid.
struct FamilyFit {
  LogPolynomialFit fit;
  double kl = 0.0;
};

/// Fits the family and returns KL(smoothed histogram || smoothed fit).
FamilyFit family_grid_kl(const Matrix& points, int degree, const DensityGrid& grid,
                         const LogPolynomialOptions& options = {});

/// KL(smoothed histogram of `points` || smoothed histogram of `reference`).
double reference_grid_kl(const Matrix& points, const Matrix& reference, const DensityGrid& grid);

}  // namespace diffbias
