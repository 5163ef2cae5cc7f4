#include "diffbias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diffbias/error.hpp"
#include "diffbias/rng.hpp"

namespace diffbias {

Vector empirical_mean(const Matrix& points) {
  if (points.rows() < 1) throw ValidationError("mean of empty point set");
  return points.colwise().mean().transpose();
}

Matrix empirical_cov(const Matrix& points) {
  if (points.rows() < 2) throw ValidationError("covariance needs at least 2 points");
  const Vector mu = empirical_mean(points);
  const Matrix centered = points.rowwise() - mu.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(points.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

Vector empirical_mean(const Dataset& data) { return data.mean(); }
Matrix empirical_cov(const Dataset& data) { return data.covariance(); }

// ---- Jacobi -----------------------------------------------------------------

Matrix EigenDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

EigenDecomposition eig_sym(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ValidationError("eig_sym needs a square matrix");
  if (!m.allFinite()) throw ValidationError("eig_sym input is not finite");
  const Index n = m.rows();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw ValidationError("eig_sym input is not symmetric");

  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double total = a.squaredNorm();

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * total || off == 0.0) break;

    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Index c = 0; c < n; ++c) {
    const Index src = order[static_cast<std::size_t>(c)];
    out.eigenvalues(c) = a(src, src);
    Vector col = v.col(src);
    Index arg = 0;
    for (Index k = 1; k < n; ++k)
      if (std::abs(col(k)) > std::abs(col(arg)) * (1.0 + 1e-12)) arg = k;
    if (col(arg) < 0.0) col = -col;
    out.eigenvectors.col(c) = col;
  }
  return out;
}

Matrix rank_k_approx(const EigenDecomposition& eig, int k) {
  if (k < 1 || k > eig.dim()) throw ValidationError("rank k must satisfy 1 <= k <= d");
  const auto u = eig.eigenvectors.leftCols(k);
  Matrix out = u * eig.eigenvalues.head(k).asDiagonal() * u.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix rank_k_approx(const Matrix& m, int k) {
  if (k < 1 || k > m.rows()) throw ValidationError("rank k must satisfy 1 <= k <= d");
  return rank_k_approx(eig_sym(m), k);
}

// ---- energy distance --------------------------------------------------------

namespace {

double mean_pairwise(const Matrix& a, const Matrix& b) {
  double sum = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (Index j = 0; j < b.rows(); ++j) row += (a.row(i) - b.row(j)).norm();
    sum += row;
  }
  return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

Matrix random_subset(const Matrix& points, Index cap, Rng& rng) {
  if (cap <= 0 || points.rows() <= cap) return points;
  std::vector<Index> idx(static_cast<std::size_t>(points.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(cap));
  std::sort(idx.begin(), idx.end());
  Matrix out(cap, points.cols());
  for (Index i = 0; i < cap; ++i) out.row(i) = points.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

double energy_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ValidationError("energy_distance dimension mismatch");
  if (a.rows() == 0 || b.rows() == 0) throw ValidationError("energy_distance of empty sample");
  const double value = 2.0 * mean_pairwise(a, b) - mean_pairwise(a, a) - mean_pairwise(b, b);
  return std::max(0.0, value);
}

double energy_distance(const Dataset& a, const Dataset& b) {
  return energy_distance(a.points(), b.points());
}

PermutationTestResult energy_permutation_test(const Dataset& a, const Dataset& b,
                                              const PermutationTestOptions& options) {
  if (a.dim() != b.dim()) throw ValidationError("permutation test dimension mismatch");
  if (options.permutations < 1) throw ValidationError("permutation test needs >= 1 shuffle");
  Rng subset_rng(options.seed, 0);
  const Matrix sa = random_subset(a.points(), options.max_per_sample, subset_rng);
  const Matrix sb = random_subset(b.points(), options.max_per_sample, subset_rng);
  const Index na = sa.rows();
  const Index nb = sb.rows();
  const Index n = na + nb;
  Matrix pooled(n, sa.cols());
  pooled << sa, sb;

  // Packed strict upper triangle, row by row.
  std::vector<double> dist(static_cast<std::size_t>(n * (n - 1) / 2));
  double total = 0.0;
  {
    std::size_t at = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const double d = (pooled.row(i) - pooled.row(j)).norm();
        dist[at++] = d;
        total += d;
      }
  }

  const double fa = static_cast<double>(na);
  const double fb = static_cast<double>(nb);
  // With W_A, W_B the within-group sums over unordered pairs and
  // C = total - W_A - W_B the cross sum, the V-statistic is
  // 2C/(na nb) - 2W_A/na^2 - 2W_B/nb^2.
  auto statistic = [&](const std::vector<std::uint8_t>& in_b) {
    double wa = 0.0;
    double wb = 0.0;
    std::size_t at = 0;
    for (Index i = 0; i < n; ++i) {
      double row_a = 0.0;
      double row_b = 0.0;
      for (Index j = i + 1; j < n; ++j) {
        const double d = dist[at++];
        const double lb = in_b[static_cast<std::size_t>(j)];
        row_b += d * lb;
        row_a += d * (1.0 - lb);
      }
      if (in_b[static_cast<std::size_t>(i)]) wb += row_b; else wa += row_a;
    }
    const double cross = total - wa - wb;
    return 2.0 * cross / (fa * fb) - 2.0 * wa / (fa * fa) - 2.0 * wb / (fb * fb);
  };

  std::vector<std::uint8_t> labels(static_cast<std::size_t>(n), 0);
  std::fill(labels.begin() + na, labels.end(), 1);

  PermutationTestResult result;
  result.statistic = statistic(labels);
  result.permutations = options.permutations;
  result.n_a = na;
  result.n_b = nb;

  std::vector<double> null(static_cast<std::size_t>(options.permutations));
  int exceed = 0;
  for (int p = 0; p < options.permutations; ++p) {
    Rng prng(options.seed, static_cast<std::uint64_t>(p) + 1);
    std::vector<std::uint8_t> perm = labels;
    shuffle(perm.begin(), perm.end(), prng);
    null[static_cast<std::size_t>(p)] = statistic(perm);
    if (null[static_cast<std::size_t>(p)] >= result.statistic) ++exceed;
  }
  result.p_value = (1.0 + exceed) / (1.0 + options.permutations);
  std::sort(null.begin(), null.end());
  const auto q = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(null.size()))) - 1;
  result.null_q95 = null[std::min(q, null.size() - 1)];
  return result;
}

// ---- memorization -----------------------------------------------------------

MemorizationReport nn_memorization(const Dataset& generated, const Dataset& train, double threshold) {
  if (generated.dim() != train.dim()) throw ValidationError("nn_memorization dimension mismatch");
  const Matrix& g = generated.points();
  const Matrix& t = train.points();

  std::vector<double> train_nn(static_cast<std::size_t>(t.rows()));
  for (Index i = 0; i < t.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < t.rows(); ++j)
      if (j != i) best = std::min(best, (t.row(i) - t.row(j)).squaredNorm());
    train_nn[static_cast<std::size_t>(i)] = std::sqrt(best);
  }
  std::vector<double> sorted = train_nn;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

  MemorizationReport report;
  report.median_train_nn = median;
  report.threshold = threshold;
  report.ratios.resize(static_cast<std::size_t>(g.rows()));
  Index memorized = 0;
  for (Index i = 0; i < g.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < t.rows(); ++j) best = std::min(best, (g.row(i) - t.row(j)).squaredNorm());
    const double dist = std::sqrt(best);
    const double ratio = median > 0.0 ? dist / median : (dist > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    report.ratios[static_cast<std::size_t>(i)] = ratio;
    if (ratio < threshold) ++memorized;
  }
  report.memorized_fraction = static_cast<double>(memorized) / static_cast<double>(g.rows());
  return report;
}

// ---- intrinsic dimension ----------------------------------------------------

int dimension_from_spectrum(const Vector& spectrum, double threshold) {
  const double total = spectrum.cwiseMax(0.0).sum();
  if (total <= 0.0) return 0;
  double acc = 0.0;
  for (Index k = 0; k < spectrum.size(); ++k) {
    acc += std::max(0.0, spectrum(k));
    if (acc >= threshold * total) return static_cast<int>(k + 1);
  }
  return static_cast<int>(spectrum.size());
}

int intrinsic_dim(const Dataset& data, double variance_threshold) {
  if (!(variance_threshold > 0.0 && variance_threshold < 1.0))
    throw ValidationError("variance threshold must lie in (0, 1)");
  return dimension_from_spectrum(eig_sym(data.covariance()).eigenvalues, variance_threshold);
}

LocalDimension local_intrinsic_dim(const Dataset& data, double variance_threshold,
                                   const LocalDimensionOptions& options) {
  if (!(variance_threshold > 0.0 && variance_threshold < 1.0))
    throw ValidationError("variance threshold must lie in (0, 1)");
  const Index n = data.size();
  const int d = data.dim();
  const Index k = std::min<Index>(options.neighbors, n);
  if (k < 2) throw ValidationError("local PCA needs at least 2 neighbors");
  const Matrix& pts = data.points();

  std::vector<Index> anchors(static_cast<std::size_t>(n));
  std::iota(anchors.begin(), anchors.end(), 0);
  Rng rng(options.seed);
  shuffle(anchors.begin(), anchors.end(), rng);
  anchors.resize(static_cast<std::size_t>(std::min<Index>(options.anchors, n)));

  Vector spectrum = Vector::Zero(d);
  std::vector<std::pair<double, Index>> dists(static_cast<std::size_t>(n));
  for (Index a : anchors) {
    for (Index j = 0; j < n; ++j)
      dists[static_cast<std::size_t>(j)] = {(pts.row(j) - pts.row(a)).squaredNorm(), j};
    std::partial_sort(dists.begin(), dists.begin() + k, dists.end());
    Matrix local(k, d);
    for (Index j = 0; j < k; ++j) local.row(j) = pts.row(dists[static_cast<std::size_t>(j)].second);
    const Vector ev = eig_sym(empirical_cov(local)).eigenvalues.cwiseMax(0.0);
    const double total = ev.sum();
    if (total > 0.0) spectrum += ev / total;
    else spectrum(0) += 1.0;  // coincident neighbors: zero-dimensional, counts toward the first mode
  }
  spectrum /= static_cast<double>(anchors.size());
  return LocalDimension{dimension_from_spectrum(spectrum, variance_threshold), spectrum};
}

}  // namespace diffbias
