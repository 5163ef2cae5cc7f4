#include "diffbias/polynomial_denoiser.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "diffbias/error.hpp"
#include "diffbias/rng.hpp"
#include "diffbias/schedule.hpp"

namespace diffbias {

namespace {

constexpr Index kChunkRows = 2048;

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) throw ValidationError("matrix block has wrong size");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

double gaussian_moment(int q) {
  if (q % 2) return 0.0;
  double v = 1.0;
  for (int i = q - 1; i > 1; i -= 2) v *= i;
  return v;
}

double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

MultiIndex add(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

int total_order(const MultiIndex& a) {
  int s = 0;
  for (int e : a) s += e;
  return s;
}

}  // namespace

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::Monomial ? "monomial" : "random_power";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "monomial") return FeatureKind::Monomial;
  if (name == "random_power") return FeatureKind::RandomPower;
  throw ValidationError("unknown feature map '" + name + "'");
}

void require_odd_degree(int degree) {
  if (degree < 1 || degree % 2 == 0)
    throw ValidationError("polynomial degree must be odd and positive (got " + std::to_string(degree) +
                          "): an even-degree denoiser integrates to an odd-degree log-density, "
                          "which is not integrable");
}

// ---- FeatureMap -------------------------------------------------------------

FeatureMap FeatureMap::monomial(int dim, int degree) {
  if (dim < 1 || degree < 1) throw ValidationError("feature map needs dim >= 1 and degree >= 1");
  FeatureMap f;
  f.kind_ = FeatureKind::Monomial;
  f.dim_ = dim;
  f.degree_ = degree;
  f.exponents_ = multi_indices(dim, degree, 1);
  return f;
}

FeatureMap FeatureMap::random_power(int dim, int degree, int width, std::uint64_t seed) {
  if (dim < 1 || degree < 1) throw ValidationError("feature map needs dim >= 1 and degree >= 1");
  if (width < 1) throw ValidationError("random feature width must be >= 1");
  FeatureMap f;
  f.kind_ = FeatureKind::RandomPower;
  f.dim_ = dim;
  f.degree_ = degree;
  // Last column multiplies a constant input, so (R [u; 1])^k carries every
  // order up to k. On centered u a pure power of R u would span only the
  // homogeneous degree-k forms.
  f.projection_.resize(width, dim + 1);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Index r = 0; r < width; ++r)
    for (Index c = 0; c <= dim; ++c) f.projection_(r, c) = scale * rng.normal();
  return f;
}

int FeatureMap::size() const {
  return kind_ == FeatureKind::Monomial ? static_cast<int>(exponents_.size())
                                        : static_cast<int>(projection_.rows());
}

Matrix FeatureMap::apply(const Matrix& us) const {
  if (kind_ == FeatureKind::RandomPower) {
    Matrix p = us * projection_.leftCols(dim_).transpose();
    p.rowwise() += projection_.col(dim_).transpose();
    const Matrix base = p;
    for (int k = 1; k < degree_; ++k) p = p.cwiseProduct(base);
    return p;
  }
  const Index n = us.rows();
  Matrix out(n, size());
  Matrix powers(dim_, degree_ + 1);
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < dim_; ++k) {
      powers(k, 0) = 1.0;
      for (int p = 1; p <= degree_; ++p) powers(k, p) = powers(k, p - 1) * us(i, k);
    }
    for (std::size_t f = 0; f < exponents_.size(); ++f) {
      double v = 1.0;
      for (int k = 0; k < dim_; ++k) v *= powers(k, exponents_[f][static_cast<std::size_t>(k)]);
      out(i, static_cast<Index>(f)) = v;
    }
  }
  return out;
}

Vector FeatureMap::operator()(const Vector& u) const { return apply(u.transpose()).row(0).transpose(); }

nlohmann::json FeatureMap::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind_)}, {"dim", dim_}, {"degree", degree_}};
  if (kind_ == FeatureKind::RandomPower) j["projection"] = matrix_to_json(projection_);
  return j;
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
  const auto kind = feature_kind_from_string(j.at("kind").get<std::string>());
  const int dim = j.at("dim").get<int>();
  const int degree = j.at("degree").get<int>();
  if (kind == FeatureKind::Monomial) return monomial(dim, degree);
  FeatureMap f;
  f.kind_ = kind;
  f.dim_ = dim;
  f.degree_ = degree;
  f.projection_ = matrix_from_json(j.at("projection"));
  if (f.projection_.cols() != dim + 1) throw ValidationError("random feature projection must have dim + 1 columns");
  return f;
}

// ---- grid -------------------------------------------------------------------

std::vector<double> default_sigma_grid(double scale, int steps, int levels) {
  if (levels < 1) throw ValidationError("sigma grid needs >= 1 level");
  const auto schedule = cosine_schedule(steps);
  const double lo = std::log(schedule.sigma[1]);
  const double hi = std::log(schedule.sigma[static_cast<std::size_t>(steps)]);
  std::vector<double> grid(static_cast<std::size_t>(levels));
  for (int i = 0; i < levels; ++i) {
    const double frac = levels == 1 ? 0.0 : static_cast<double>(i) / (levels - 1);
    grid[static_cast<std::size_t>(i)] = scale * std::exp(lo + frac * (hi - lo));
  }
  return grid;
}

double normalization_radius(const Frame& frame, double sigma) {
  return std::sqrt(frame.scale * frame.scale + sigma * sigma);
}

// ---- moment estimation ------------------------------------------------------

FeatureMoments estimate_feature_moments(const Dataset& data, const FeatureMap& features, const Frame& frame,
                                        double sigma, int replicates, std::uint64_t seed) {
  if (replicates < 1) throw ValidationError("need at least one noise replicate");
  if (features.dim() != data.dim()) throw ValidationError("feature map dimension mismatch");
  const Index n = data.size();
  const int d = data.dim();
  const Index total = 2 * replicates * n;
  const double radius = normalization_radius(frame, sigma);

  // Rows: replicate r, sign s, point i -> row (2r + s) n + i.
  Matrix us(total, d);
  Matrix xs(total, d);
  for (int r = 0; r < replicates; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    for (Index i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) {
        const double eta = rng.normal();
        const double x = data.points()(i, k);
        us((2 * r) * n + i, k) = (x + sigma * eta - frame.center(k)) / radius;
        us((2 * r + 1) * n + i, k) = (x - sigma * eta - frame.center(k)) / radius;
        xs((2 * r) * n + i, k) = x;
        xs((2 * r + 1) * n + i, k) = x;
      }
    }
  }

  const int f = features.size();
  FeatureMoments m;
  m.mu_x = xs.colwise().mean().transpose();
  m.mu_h = Vector::Zero(f);
  for (Index start = 0; start < total; start += kChunkRows) {
    const Index rows = std::min(kChunkRows, total - start);
    m.mu_h += features.apply(us.middleRows(start, rows)).colwise().sum().transpose();
  }
  m.mu_h /= static_cast<double>(total);

  m.sigma_h = Matrix::Zero(f, f);
  m.sigma_xh = Matrix::Zero(d, f);
  for (Index start = 0; start < total; start += kChunkRows) {
    const Index rows = std::min(kChunkRows, total - start);
    const Matrix h = features.apply(us.middleRows(start, rows)).rowwise() - m.mu_h.transpose();
    const Matrix x = xs.middleRows(start, rows).rowwise() - m.mu_x.transpose();
    m.sigma_h.noalias() += h.transpose() * h;
    m.sigma_xh.noalias() += x.transpose() * h;
  }
  m.sigma_h /= static_cast<double>(total);
  m.sigma_h = 0.5 * (m.sigma_h + m.sigma_h.transpose());
  m.sigma_xh /= static_cast<double>(total);
  const Matrix xc = xs.rowwise() - m.mu_x.transpose();
  m.sigma_x = (xc.transpose() * xc) / static_cast<double>(total);
  return m;
}

FeatureMoments feature_moments_from_table(const MomentTable& table, const FeatureMap& features,
                                          const Frame& frame, double sigma) {
  if (features.kind() != FeatureKind::Monomial)
    throw ValidationError("moment route needs monomial features");
  const int d = features.dim();
  const int k = features.degree();
  if (table.dim() != d) throw ValidationError("moment table dimension mismatch");
  if (table.max_order() < 2 * k) throw ValidationError("moment table must reach order 2 * degree");
  const double radius = normalization_radius(frame, sigma);

  // shifted(l, p) = E[(sigma eta - c_l)^p]
  Matrix shifted(d, 2 * k + 1);
  for (int l = 0; l < d; ++l)
    for (int p = 0; p <= 2 * k; ++p) {
      double v = 0.0;
      for (int q = 0; q <= p; ++q)
        v += binomial(p, q) * std::pow(sigma, q) * gaussian_moment(q) * std::pow(-frame.center(l), p - q);
      shifted(l, p) = v;
    }

  // E[extra-monomial(x) * prod_l u_l^{a_l}], expanding each
  // u_l = (x_l + (sigma eta_l - c_l)) / radius binomially.
  auto expect = [&](const MultiIndex& a, const MultiIndex& extra) {
    double sum = 0.0;
    MultiIndex m(static_cast<std::size_t>(d), 0);
    std::function<void(int, double)> rec = [&](int l, double coef) {
      if (l == d) {
        sum += coef * table.at(add(m, extra));
        return;
      }
      const int al = a[static_cast<std::size_t>(l)];
      for (int ml = 0; ml <= al; ++ml) {
        m[static_cast<std::size_t>(l)] = ml;
        rec(l + 1, coef * binomial(al, ml) * shifted(l, al - ml));
      }
    };
    rec(0, 1.0);
    return sum / std::pow(radius, total_order(a));
  };

  const auto& ex = features.exponents();
  const int f = features.size();
  const MultiIndex zero(static_cast<std::size_t>(d), 0);
  auto unit = [&](int i) {
    MultiIndex e = zero;
    e[static_cast<std::size_t>(i)] = 1;
    return e;
  };

  FeatureMoments m;
  m.mu_x.resize(d);
  m.sigma_x.resize(d, d);
  for (int i = 0; i < d; ++i) m.mu_x(i) = table.at(unit(i));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m.sigma_x(i, j) = table.at(add(unit(i), unit(j))) - m.mu_x(i) * m.mu_x(j);

  m.mu_h.resize(f);
  for (int i = 0; i < f; ++i) m.mu_h(i) = expect(ex[static_cast<std::size_t>(i)], zero);
  m.sigma_h.resize(f, f);
  for (int i = 0; i < f; ++i)
    for (int j = i; j < f; ++j) {
      const double v = expect(add(ex[static_cast<std::size_t>(i)], ex[static_cast<std::size_t>(j)]), zero) -
                       m.mu_h(i) * m.mu_h(j);
      m.sigma_h(i, j) = v;
      m.sigma_h(j, i) = v;
    }
  m.sigma_xh.resize(d, f);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < f; ++j)
      m.sigma_xh(i, j) = expect(ex[static_cast<std::size_t>(j)], unit(i)) - m.mu_x(i) * m.mu_h(j);
  return m;
}

PolynomialLevel solve_level(const FeatureMoments& m, double sigma, std::optional<double> ridge) {
  const Index f = m.sigma_h.rows();
  const double lambda = ridge.value_or(kDefaultRidgeFactor * m.sigma_h.trace() / static_cast<double>(f));
  if (lambda < 0.0) throw ValidationError("ridge must be nonnegative");
  const Matrix system = m.sigma_h + lambda * Matrix::Identity(f, f);
  const Eigen::LDLT<Matrix> ldlt(system);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  const double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      rcond < 1e3 * std::numeric_limits<double>::epsilon())
    throw NumericalError("feature covariance is numerically singular at sigma=" + std::to_string(sigma) +
                             " (condition estimate " + std::to_string(condition) + "); use a positive ridge",
                         condition);

  PolynomialLevel level;
  level.sigma = sigma;
  level.ridge = lambda;
  level.condition = condition;
  level.weights = ldlt.solve(m.sigma_xh.transpose()).transpose();
  level.offset = m.mu_x - level.weights * m.mu_h;
  level.train_mse = m.sigma_x.trace() - 2.0 * (level.weights * m.sigma_xh.transpose()).trace() +
                    (level.weights * m.sigma_h * level.weights.transpose()).trace();
  return level;
}

// ---- denoiser ---------------------------------------------------------------

PolynomialDenoiser::PolynomialDenoiser(FeatureMap features, Frame frame, std::vector<PolynomialLevel> levels)
    : features_(std::move(features)), frame_(std::move(frame)), levels_(std::move(levels)) {
  if (levels_.empty()) throw ValidationError("polynomial denoiser needs at least one level");
  require_odd_degree(features_.degree());
}

std::size_t PolynomialDenoiser::nearest_level(double sigma) const {
  const double target = std::log(sigma);
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const double gap = std::abs(std::log(levels_[i].sigma) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

Matrix PolynomialDenoiser::denoise_batch(const Matrix& ys, double sigma) const {
  const auto& level = levels_[nearest_level(sigma)];
  const double radius = normalization_radius(frame_, level.sigma);
  const Matrix us = (ys.rowwise() - frame_.center.transpose()) / radius;
  return (features_.apply(us) * level.weights.transpose()).rowwise() + level.offset.transpose();
}

Vector PolynomialDenoiser::denoise(const Vector& y, double sigma) const {
  return denoise_batch(y.transpose(), sigma).row(0).transpose();
}

nlohmann::json PolynomialDenoiser::descriptor() const {
  nlohmann::json d = {{"family", "polynomial"},
                      {"dim", dim()},
                      {"degree", degree()},
                      {"feature_map", to_string(features_.kind())},
                      {"levels", levels_.size()},
                      {"sigma_lookup", "nearest level in log sigma"}};
  if (features_.kind() == FeatureKind::RandomPower) {
    d["width"] = features_.size();
    d["note"] = "features are the pure elementwise power (R [u; 1])^k plus an intercept";
  }
  return d;
}

nlohmann::json PolynomialDenoiser::parameters() const {
  auto levels = nlohmann::json::array();
  for (const auto& l : levels_)
    levels.push_back({{"sigma", l.sigma},
                      {"weights", matrix_to_json(l.weights)},
                      {"offset", std::vector<double>(l.offset.data(), l.offset.data() + l.offset.size())},
                      {"ridge", l.ridge},
                      {"condition", l.condition},
                      {"train_mse", l.train_mse}});
  return {{"features", features_.to_json()}, {"frame", frame_to_json(frame_)}, {"levels", levels}};
}

PolynomialDenoiser PolynomialDenoiser::from_parameters(const nlohmann::json& p) {
  std::vector<PolynomialLevel> levels;
  for (const auto& j : p.at("levels")) {
    PolynomialLevel l;
    l.sigma = j.at("sigma").get<double>();
    l.weights = matrix_from_json(j.at("weights"));
    const auto off = j.at("offset").get<std::vector<double>>();
    l.offset = Eigen::Map<const Vector>(off.data(), static_cast<Index>(off.size()));
    l.ridge = j.at("ridge").get<double>();
    l.condition = j.at("condition").get<double>();
    l.train_mse = j.at("train_mse").get<double>();
    levels.push_back(std::move(l));
  }
  return PolynomialDenoiser(FeatureMap::from_json(p.at("features")), frame_from_json(p.at("frame")),
                            std::move(levels));
}

// ---- fitting ----------------------------------------------------------------

namespace {

PolynomialDenoiser fit_with_features(const Dataset& data, FeatureMap features,
                                     const PolynomialFitOptions& options) {
  const Frame frame = options.frame.value_or(frame_of(data));
  const auto grid = options.sigma_grid.empty() ? default_sigma_grid(frame.scale) : options.sigma_grid;
  std::vector<PolynomialLevel> levels;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw ValidationError("sigma grid entries must be positive");
    const auto moments = estimate_feature_moments(data, features, frame, grid[i], options.noise_replicates,
                                                  derive_seed(options.seed, i));
    levels.push_back(solve_level(moments, grid[i], options.ridge));
  }
  return PolynomialDenoiser(std::move(features), frame, std::move(levels));
}

}  // namespace

PolynomialDenoiser fit_polynomial_exact(const Dataset& data, const PolynomialFitOptions& options) {
  require_odd_degree(options.degree);
  if (data.dim() > kMaxExactPolynomialDim)
    throw ValidationError("exact monomial features are limited to dimension <= 4");
  return fit_with_features(data, FeatureMap::monomial(data.dim(), options.degree), options);
}

PolynomialDenoiser fit_polynomial_rf(const Dataset& data, int width, const PolynomialFitOptions& options) {
  require_odd_degree(options.degree);
  if (width < 1) throw ValidationError("random feature width must be >= 1");
  auto features = FeatureMap::random_power(data.dim(), options.degree, width,
                                           derive_seed(options.seed, 0x52465eedull));
  return fit_with_features(data, std::move(features), options);
}

PolynomialDenoiser fit_polynomial_from_moments(const MomentTable& table, const Frame& frame,
                                               const PolynomialFitOptions& options) {
  require_odd_degree(options.degree);
  auto features = FeatureMap::monomial(table.dim(), options.degree);
  const auto grid = options.sigma_grid.empty() ? default_sigma_grid(frame.scale) : options.sigma_grid;
  std::vector<PolynomialLevel> levels;
  for (double sigma : grid) levels.push_back(solve_level(feature_moments_from_table(table, features, frame, sigma),
                                                         sigma, options.ridge));
  return PolynomialDenoiser(std::move(features), frame, std::move(levels));
}

}  // namespace diffbias
