#include "diffbias/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "diffbias/error.hpp"
#include "diffbias/rng.hpp"
#include "diffbias/stats.hpp"

namespace diffbias {

Dataset::Dataset(Matrix points, std::string name) : points_(std::move(points)), name_(std::move(name)) {
  if (points_.cols() < 1) throw ValidationError("dataset needs dimension >= 1");
  if (points_.rows() < 2) throw ValidationError("dataset needs at least 2 points");
  if (!points_.allFinite()) throw ValidationError("dataset contains non-finite values");
  mean_ = empirical_mean(points_);
  cov_ = empirical_cov(points_);
}

Dataset Dataset::head(Index count) const {
  if (count > size()) count = size();
  return Dataset(points_.topRows(count), name_);
}

// ---- GmmSpec ----------------------------------------------------------------

void GmmSpec::validate() const {
  if (weights.empty()) throw ValidationError("GMM needs at least one component");
  if (means.size() != weights.size() || covariances.size() != weights.size())
    throw ValidationError("GMM weights, means and covariances must have equal length");
  const int d = dim();
  if (d < 1) throw ValidationError("GMM dimension must be >= 1");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("GMM weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("GMM weights must sum to 1");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (means[i].size() != d) throw ValidationError("GMM means must share one dimension");
    const Matrix& c = covariances[i];
    if (c.rows() != d || c.cols() != d) throw ValidationError("GMM covariance has wrong shape");
    const auto eig = eig_sym(c);
    if (eig.eigenvalues(d - 1) < -1e-10)
      throw ValidationError("GMM covariance " + std::to_string(i) + " is not PSD");
  }
}

Vector GmmSpec::mixture_mean() const {
  Vector mu = Vector::Zero(dim());
  for (std::size_t i = 0; i < weights.size(); ++i) mu += weights[i] * means[i];
  return mu;
}

Matrix GmmSpec::mixture_covariance() const {
  const Vector mu = mixture_mean();
  Matrix second = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < weights.size(); ++i)
    second += weights[i] * (covariances[i] + means[i] * means[i].transpose());
  Matrix cov = second - mu * mu.transpose();
  return 0.5 * (cov + cov.transpose());
}

void to_json(nlohmann::json& j, const GmmSpec& spec) {
  j = nlohmann::json::object();
  j["weights"] = spec.weights;
  auto means = nlohmann::json::array();
  for (const auto& m : spec.means) means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  j["means"] = means;
  auto covs = nlohmann::json::array();
  for (const auto& c : spec.covariances) {
    auto rows = nlohmann::json::array();
    for (Index r = 0; r < c.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(c.cols()));
      for (Index k = 0; k < c.cols(); ++k) row[static_cast<std::size_t>(k)] = c(r, k);
      rows.push_back(row);
    }
    covs.push_back(rows);
  }
  j["covariances"] = covs;
}

void from_json(const nlohmann::json& j, GmmSpec& spec) {
  spec.weights = j.at("weights").get<std::vector<double>>();
  spec.means.clear();
  spec.covariances.clear();
  for (const auto& m : j.at("means")) {
    const auto v = m.get<std::vector<double>>();
    spec.means.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  }
  for (const auto& c : j.at("covariances")) {
    const auto rows = c.get<std::vector<std::vector<double>>>();
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<Index>(rows[r].size()) != m.cols()) throw ValidationError("ragged covariance");
      for (std::size_t k = 0; k < rows[r].size(); ++k)
        m(static_cast<Index>(r), static_cast<Index>(k)) = rows[r][k];
    }
    spec.covariances.push_back(std::move(m));
  }
}

Dataset sample_gmm(const GmmSpec& spec, Index n, std::uint64_t seed, std::string name) {
  if (n < 2) throw ValidationError("sample_gmm needs n >= 2");
  spec.validate();
  const int d = spec.dim();
  std::vector<Matrix> factors;
  for (const auto& c : spec.covariances) {
    const auto eig = eig_sym(c);
    const Vector root = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    factors.push_back(eig.eigenvectors * root.asDiagonal());
  }
  std::vector<double> cumulative(spec.weights.size());
  std::partial_sum(spec.weights.begin(), spec.weights.end(), cumulative.begin());

  Rng rng(seed);
  Matrix points(n, d);
  Vector z(d);
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform() * cumulative.back();
    std::size_t comp = 0;
    while (comp + 1 < cumulative.size() && (u >= cumulative[comp] || spec.weights[comp] == 0.0)) ++comp;
    for (int k = 0; k < d; ++k) z(k) = rng.normal();
    points.row(i) = (spec.means[comp] + factors[comp] * z).transpose();
  }
  return Dataset(std::move(points), std::move(name));
}

GmmSpec three_component_preset() {
  GmmSpec spec;
  spec.weights = {0.4, 0.35, 0.25};
  spec.means = {(Vector(2) << -2.5, -1.0).finished(), (Vector(2) << 2.5, -1.0).finished(),
                (Vector(2) << 0.0, 2.0).finished()};
  spec.covariances = {(Matrix(2, 2) << 0.35, 0.10, 0.10, 0.25).finished(),
                      (Matrix(2, 2) << 0.30, -0.08, -0.08, 0.30).finished(),
                      (Matrix(2, 2) << 0.25, 0.0, 0.0, 0.40).finished()};
  return spec;
}

GmmSpec matched_two_component(const GmmSpec& three, double offset_fraction) {
  three.validate();
  if (!(offset_fraction > 0.0 && offset_fraction < 1.0))
    throw ValidationError("offset fraction must lie in (0, 1)");
  const Vector mu = three.mixture_mean();
  const Matrix sigma = three.mixture_covariance();
  const auto eig = eig_sym(sigma);
  const Vector delta = std::sqrt(offset_fraction * eig.eigenvalues(0)) * eig.eigenvectors.col(0);
  Matrix inner = sigma - delta * delta.transpose();
  inner = 0.5 * (inner + inner.transpose());

  GmmSpec two;
  two.weights = {0.5, 0.5};
  two.means = {mu + delta, mu - delta};
  two.covariances = {inner, inner};
  return two;
}

MatchedPair matched_moment_pair(std::uint64_t seed, Index n) {
  return matched_moment_pair(three_component_preset(), seed, n);
}

MatchedPair matched_moment_pair(const GmmSpec& three, std::uint64_t seed, Index n) {
  GmmSpec two = matched_two_component(three);
  Dataset a = sample_gmm(three, n, derive_seed(seed, 3), "gmm3");
  Dataset b = sample_gmm(two, n, derive_seed(seed, 2), "gmm2");
  return MatchedPair{three, std::move(two), std::move(a), std::move(b)};
}

// ---- moments ----------------------------------------------------------------

namespace {

void enumerate_order(int dim, int remaining, int coord, MultiIndex& current,
                     std::vector<MultiIndex>& out) {
  if (coord == dim - 1) {
    current[static_cast<std::size_t>(coord)] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[static_cast<std::size_t>(coord)] = e;
    enumerate_order(dim, remaining - e, coord + 1, current, out);
  }
}

}  // namespace

std::vector<MultiIndex> multi_indices(int dim, int max_order, int min_order) {
  if (dim < 1) throw ValidationError("multi_indices needs dim >= 1");
  std::vector<MultiIndex> out;
  MultiIndex current(static_cast<std::size_t>(dim), 0);
  for (int order = std::max(0, min_order); order <= max_order; ++order)
    enumerate_order(dim, order, 0, current, out);
  return out;
}

MomentTable::MomentTable(int dim, int max_order, std::map<MultiIndex, double> values)
    : dim_(dim), max_order_(max_order), values_(std::move(values)) {}

double MomentTable::at(const MultiIndex& index) const {
  const auto it = values_.find(index);
  if (it == values_.end()) throw ValidationError("moment index outside table");
  return it->second;
}

MomentTable moments(const Dataset& data, int max_order) {
  if (max_order < 1) throw ValidationError("moments needs max_order >= 1");
  const int d = data.dim();
  const auto indices = multi_indices(d, max_order);
  std::vector<double> sums(indices.size(), 0.0);
  Matrix powers(d, max_order + 1);
  const Matrix& pts = data.points();
  for (Index i = 0; i < data.size(); ++i) {
    for (int k = 0; k < d; ++k) {
      powers(k, 0) = 1.0;
      for (int p = 1; p <= max_order; ++p) powers(k, p) = powers(k, p - 1) * pts(i, k);
    }
    for (std::size_t m = 0; m < indices.size(); ++m) {
      double prod = 1.0;
      for (int k = 0; k < d; ++k) prod *= powers(k, indices[m][static_cast<std::size_t>(k)]);
      sums[m] += prod;
    }
  }
  std::map<MultiIndex, double> values;
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t m = 0; m < indices.size(); ++m) values.emplace(indices[m], sums[m] * inv_n);
  return MomentTable(d, max_order, std::move(values));
}

// ---- CSV --------------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_csv(const Matrix& pts, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (Index k = 0; k < pts.cols(); ++k) out << (k ? "," : "") << 'x' << k;
  out << '\n';
  for (Index i = 0; i < pts.rows(); ++i) {
    for (Index k = 0; k < pts.cols(); ++k) out << (k ? "," : "") << format_double(pts(i, k));
    out << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) { write_csv(data.points(), path); }

Dataset read_csv(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty dataset file " + path.string());
  const auto columns = static_cast<Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Index count = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw ValidationError("malformed number in " + path.string());
      values.push_back(v);
      ++count;
      p = res.ptr;
      if (p < end && *p == ',') ++p;
    }
    if (count != columns)
      throw ValidationError("row " + std::to_string(rows + 1) + " has wrong column count");
    ++rows;
  }
  Matrix pts(rows, columns);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < columns; ++k) pts(i, k) = values[static_cast<std::size_t>(i * columns + k)];
  if (name.empty()) name = path.stem().string();
  return Dataset(std::move(pts), std::move(name));
}

Dataset isotropic_gaussian(int dim, Index n, std::uint64_t seed) {
  if (dim < 1) throw ValidationError("dimension must be >= 1");
  Matrix x(n, dim);
  Rng rng(seed);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) x(i, k) = rng.normal();
  return Dataset(std::move(x), "gaussian_" + std::to_string(dim) + "d");
}

Dataset smooth_random_images(Index n, int side, std::uint64_t seed) {
  if (side < 1) throw ValidationError("image side must be >= 1");
  Matrix out(n, side * side);
  Rng rng(seed);
  const double pi = std::numbers::pi;
  for (Index i = 0; i < n; ++i) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal(), e = rng.normal();
    for (int r = 0; r < side; ++r)
      for (int col = 0; col < side; ++col) {
        const double u = (r + 0.5) / side, v = (col + 0.5) / side;
        out(i, r * side + col) = a * std::cos(pi * u) + b * std::cos(pi * v) + c * std::cos(pi * (u + v)) +
                                 0.3 * e + 0.1 * rng.normal();
      }
  }
  return Dataset(std::move(out), "smooth_images_" + std::to_string(side));
}

}  // namespace diffbias
