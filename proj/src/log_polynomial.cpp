#include "diffbias/log_polynomial.hpp"

#include <cmath>
#include <limits>

#include "diffbias/error.hpp"

namespace diffbias {

Index DensityGrid::size() const {
  Index n = 1;
  for (int k = 0; k < dim; ++k) n *= cells;
  return n;
}

Matrix DensityGrid::centers() const {
  Matrix out(size(), dim);
  for (Index idx = 0; idx < size(); ++idx) {
    Index rest = idx;
    for (int k = dim - 1; k >= 0; --k) {
      out(idx, k) = lo(k) + static_cast<double>(rest % cells) * width(k);
      rest /= cells;
    }
  }
  return out;
}

Index DensityGrid::locate(const Vector& x) const {
  Index idx = 0;
  for (int k = 0; k < dim; ++k) {
    const double pos = std::floor((x(k) - lo(k)) / width(k) + 0.5);
    if (!(pos >= 0.0 && pos < cells)) return -1;
    idx = idx * cells + static_cast<Index>(pos);
  }
  return idx;
}

DensityGrid make_grid(const Matrix& points, int cells, double box_sd) {
  if (points.cols() < 1 || points.cols() > 2) throw ValidationError("grid density fits support dimension 1 or 2");
  if (cells < 2) throw ValidationError("grid needs at least 2 cells per axis");
  if (points.rows() < 2) throw ValidationError("grid needs at least 2 points");
  DensityGrid g;
  g.dim = static_cast<int>(points.cols());
  g.cells = cells;
  g.center = points.colwise().mean().transpose();
  const Matrix centered = points.rowwise() - g.center.transpose();
  g.sd = (centered.colwise().squaredNorm() / static_cast<double>(points.rows())).cwiseSqrt().transpose();
  if ((g.sd.array() <= 0.0).any()) throw ValidationError("grid needs positive spread on every axis");
  g.lo = g.center - box_sd * g.sd;
  g.width = (2.0 * box_sd / (cells - 1)) * g.sd;
  return g;
}

Vector histogram(const Matrix& points, const DensityGrid& grid) {
  Vector mass = Vector::Zero(grid.size());
  double inside = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    const Index idx = grid.locate(points.row(i).transpose());
    if (idx < 0) continue;
    mass(idx) += 1.0;
    inside += 1.0;
  }
  if (inside == 0.0) throw ValidationError("no points fall inside the density grid");
  return mass / inside;
}

Vector default_bandwidth(const DensityGrid& grid, Index n) {
  return std::pow(static_cast<double>(n), -1.0 / 6.0) * grid.sd;
}

Vector smooth_masses(const DensityGrid& grid, const Vector& masses, const Vector& bandwidth) {
  Vector cur = masses;
  const int c = grid.cells;
  for (int axis = 0; axis < grid.dim; ++axis) {
    const double h = bandwidth(axis) / grid.width(axis);
    const int radius = static_cast<int>(std::ceil(4.0 * h));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int j = -radius; j <= radius; ++j) {
      const double v = h > 0.0 ? std::exp(-0.5 * (j / h) * (j / h)) : (j == 0 ? 1.0 : 0.0);
      kernel[static_cast<std::size_t>(j + radius)] = v;
      ksum += v;
    }
    for (auto& v : kernel) v /= ksum;

    // Stride between neighbours along this axis in the flat layout.
    Index stride = 1;
    for (int k = grid.dim - 1; k > axis; --k) stride *= c;
    Vector next = Vector::Zero(cur.size());
    for (Index idx = 0; idx < cur.size(); ++idx) {
      const int pos = static_cast<int>((idx / stride) % c);
      double acc = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        const int q = pos + j;
        if (q < 0 || q >= c) continue;
        acc += kernel[static_cast<std::size_t>(j + radius)] * cur(idx + static_cast<Index>(j) * stride);
      }
      next(idx) = acc;
    }
    cur = std::move(next);
  }
  return cur / cur.sum();
}

double grid_kl(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw ValidationError("grid_kl needs equal-size grids");
  double kl = 0.0;
  for (Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) kl += p(i) * std::log(p(i) / std::max(q(i), std::numeric_limits<double>::min()));
  return kl;
}

namespace {

Matrix monomial_features(const Matrix& points, const DensityGrid& grid, const std::vector<MultiIndex>& exps) {
  const Matrix z = (points.rowwise() - grid.center.transpose()).array().rowwise() / grid.sd.transpose().array();
  Matrix out(points.rows(), static_cast<Index>(exps.size()));
  for (Index i = 0; i < points.rows(); ++i)
    for (std::size_t f = 0; f < exps.size(); ++f) {
      double v = 1.0;
      for (int k = 0; k < grid.dim; ++k) v *= std::pow(z(i, k), exps[f][static_cast<std::size_t>(k)]);
      out(i, static_cast<Index>(f)) = v;
    }
  return out;
}

// Log-normalized cell masses for log-weights l.
double log_normalizer(const Vector& l) {
  const double top = l.maxCoeff();
  return top + std::log((l.array() - top).exp().sum());
}

}  // namespace

LogPolynomialFit fit_log_polynomial(const Matrix& points, int degree, const DensityGrid& grid,
                                    const LogPolynomialOptions& options) {
  if (degree < 1) throw ValidationError("log-polynomial degree must be >= 1");
  if (points.cols() != grid.dim) throw ValidationError("points and grid dimension differ");
  LogPolynomialFit fit;
  fit.degree = degree;
  fit.exponents = multi_indices(grid.dim, degree, 1);

  // Likelihood uses the in-box points, matching the histogram it is compared to.
  std::vector<Index> inside;
  for (Index i = 0; i < points.rows(); ++i)
    if (grid.locate(points.row(i).transpose()) >= 0) inside.push_back(i);
  if (inside.empty()) throw ValidationError("no points fall inside the density grid");
  const Matrix kept = points(inside, Eigen::all);

  const Matrix fgrid = monomial_features(grid.centers(), grid, fit.exponents);
  const Vector fbar = monomial_features(kept, grid, fit.exponents).colwise().mean().transpose();
  const Index f = fgrid.cols();
  const double pen = options.penalty;

  auto objective = [&](const Vector& th) { return fbar.dot(th) - log_normalizer(fgrid * th) - pen * th.squaredNorm(); };

  Vector theta = Vector::Zero(f);
  double obj = objective(theta);
  for (int it = 0; it < options.max_iterations; ++it) {
    fit.iterations = it + 1;
    const Vector l = fgrid * theta;
    const Vector q = (l.array() - log_normalizer(l)).exp().matrix();
    const Vector eq = fgrid.transpose() * q;
    const Matrix cov = fgrid.transpose() * q.asDiagonal() * fgrid - eq * eq.transpose();
    const Vector grad = fbar - eq - 2.0 * pen * theta;
    const Matrix hess = cov + 2.0 * pen * Matrix::Identity(f, f);
    const Vector step = hess.ldlt().solve(grad);
    double alpha = 1.0;
    double next = objective(theta + step);
    while (!(next >= obj) && alpha > 1e-8) {
      alpha *= 0.5;
      next = objective(theta + alpha * step);
    }
    if (!(next >= obj)) {
      fit.converged = true;  // no ascent direction left at working precision
      break;
    }
    theta += alpha * step;
    obj = next;
    if ((alpha * step).cwiseAbs().maxCoeff() < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  const Vector l = fgrid * theta;
  fit.theta = theta;
  fit.masses = (l.array() - log_normalizer(l)).exp().matrix();
  fit.mean_log_likelihood = obj + pen * theta.squaredNorm();
  return fit;
}

FamilyFit family_grid_kl(const Matrix& points, int degree, const DensityGrid& grid,
                         const LogPolynomialOptions& options) {
  FamilyFit out;
  out.fit = fit_log_polynomial(points, degree, grid, options);
  const Vector bw = default_bandwidth(grid, points.rows());
  out.kl = grid_kl(smooth_masses(grid, histogram(points, grid), bw), smooth_masses(grid, out.fit.masses, bw));
  return out;
}

double reference_grid_kl(const Matrix& points, const Matrix& reference, const DensityGrid& grid) {
  const Vector bw = default_bandwidth(grid, points.rows());
  return grid_kl(smooth_masses(grid, histogram(points, grid), bw),
                 smooth_masses(grid, histogram(reference, grid), bw));
}

}  // namespace diffbias
