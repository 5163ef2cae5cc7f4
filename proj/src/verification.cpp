#include "diffbias/verification.hpp"

#include <cmath>
#include <numeric>

#include "diffbias/error.hpp"
#include "diffbias/linear_denoiser.hpp"
#include "diffbias/log_polynomial.hpp"
#include "diffbias/patchwise.hpp"
#include "diffbias/polynomial_denoiser.hpp"
#include "diffbias/rng.hpp"
#include "diffbias/sampler.hpp"
#include "diffbias/stats.hpp"

namespace diffbias {

// ---- config -----------------------------------------------------------------

#define DIFFBIAS_CONFIG_FIELDS(X)                                                           \
  X(permutations) X(alpha) X(permutation_cap) X(mean_tol) X(cov_tol) X(rank_tail_tol)        \
  X(spectrum_tol) X(coefficient_tol) X(moment_route_tol) X(moment_route_floor)               \
  X(family_kl_tol) X(jacobian_tol) X(jacobian_probes) X(local_dim_threshold)                  \
  X(local_neighbors) X(local_anchors) X(memorized_high) X(memorized_low)                      \
  X(memorization_slack) X(sampling_steps) X(patch_tol)

nlohmann::json VerificationConfig::to_json() const {
  nlohmann::json j;
#define X(f) j[#f] = f;
  DIFFBIAS_CONFIG_FIELDS(X)
#undef X
  return j;
}

VerificationConfig VerificationConfig::from_json(const nlohmann::json& j) {
  VerificationConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("thresholds must be an object");
  const auto known = c.to_json();
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ValidationError("unknown threshold '" + key + "'");
#define X(f) \
  if (j.contains(#f)) j.at(#f).get_to(c.f);
  DIFFBIAS_CONFIG_FIELDS(X)
#undef X
  return c;
}

#undef DIFFBIAS_CONFIG_FIELDS

// ---- reports ----------------------------------------------------------------

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::NotBinding: return "NOT_BINDING";
    case Verdict::Error: return "ERROR";
  }
  return "ERROR";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "PASS") return Verdict::Pass;
  if (s == "FAIL") return Verdict::Fail;
  if (s == "NOT_BINDING") return Verdict::NotBinding;
  if (s == "ERROR") return Verdict::Error;
  throw ValidationError("unknown verdict '" + s + "'");
}

bool Criterion::holds() const {
  if (!std::isfinite(statistic)) return false;
  if (op == "<") return statistic < threshold;
  if (op == "<=") return statistic <= threshold;
  if (op == ">") return statistic > threshold;
  if (op == ">=") return statistic >= threshold;
  throw ValidationError("unknown comparison '" + op + "'");
}

void VerificationReport::require(std::string name, double statistic, std::string op, double threshold) {
  criteria.push_back({std::move(name), statistic, std::move(op), threshold});
}

void VerificationReport::decide() {
  if (verdict == Verdict::NotBinding || verdict == Verdict::Error) return;
  verdict = recompute_verdict(*this);
}

Verdict recompute_verdict(const VerificationReport& report) {
  if (report.verdict == Verdict::NotBinding || report.verdict == Verdict::Error) return report.verdict;
  if (report.criteria.empty()) return Verdict::Fail;
  for (const auto& c : report.criteria)
    if (!c.holds()) return Verdict::Fail;
  return Verdict::Pass;
}

nlohmann::json VerificationReport::to_json() const {
  auto crit = nlohmann::json::array();
  for (const auto& c : criteria)
    crit.push_back({{"name", c.name},
                    {"statistic", c.statistic},
                    {"op", c.op},
                    {"threshold", c.threshold},
                    {"holds", c.holds()}});
  return {{"check", check},     {"claim", claim}, {"verdict", to_string(verdict)}, {"inputs", inputs},
          {"criteria", crit},   {"statistics", statistics}, {"notes", notes}};
}

VerificationReport VerificationReport::from_json(const nlohmann::json& j) {
  VerificationReport r;
  r.check = j.at("check").get<std::string>();
  r.claim = j.value("claim", "");
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  r.inputs = j.value("inputs", nlohmann::json::object());
  r.statistics = j.value("statistics", nlohmann::json::object());
  r.notes = j.value("notes", std::vector<std::string>{});
  for (const auto& c : j.at("criteria"))
    r.criteria.push_back({c.at("name").get<std::string>(), c.at("statistic").get<double>(),
                          c.at("op").get<std::string>(), c.at("threshold").get<double>()});
  return r;
}

VerificationReport error_report(const std::string& check, const std::string& message) {
  VerificationReport r;
  r.check = check;
  r.verdict = Verdict::Error;
  r.notes.push_back(message);
  return r;
}

// ---- shared measurements ------------------------------------------------------

MomentErrors moment_errors(const Matrix& generated, const Vector& mean, const Matrix& cov) {
  const double scale = std::sqrt(cov.trace() / static_cast<double>(cov.rows()));
  MomentErrors e;
  e.mean = (empirical_mean(generated) - mean).norm() / scale;
  e.cov = (empirical_cov(generated) - cov).norm() / cov.norm();
  return e;
}

Dataset gaussian_draw(const Vector& mean, const Matrix& cov, Index n, std::uint64_t seed) {
  GmmSpec spec{{1.0}, {mean}, {cov}};
  return sample_gmm(spec, n, seed, "gaussian_reference");
}

double moment_route_discrepancy(const Dataset& data, int degree, const Frame& frame, double sigma,
                                int replicates, std::uint64_t seed, double floor) {
  const auto features = FeatureMap::monomial(data.dim(), degree);
  const auto by_table = feature_moments_from_table(moments(data, 2 * degree), features, frame, sigma);
  const auto by_sample = estimate_feature_moments(data, features, frame, sigma, replicates, seed);
  const double top = by_table.sigma_h.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Index i = 0; i < by_table.sigma_h.rows(); ++i)
    for (Index j = 0; j < by_table.sigma_h.cols(); ++j) {
      const double ref = std::max(std::abs(by_table.sigma_h(i, j)), floor * top);
      worst = std::max(worst, std::abs(by_sample.sigma_h(i, j) - by_table.sigma_h(i, j)) / ref);
    }
  return worst;
}

namespace {

PermutationTestOptions perm_options(const VerificationConfig& c, std::uint64_t seed) {
  return {c.permutations, seed, c.permutation_cap};
}

SamplerRun sample(const Denoiser& d, const CheckContext& ctx, Index n, std::uint64_t seed,
                  VerificationReport& report, const std::string& label) {
  if (ctx.config.sampling_steps < 1) throw ValidationError("sampling_steps must be >= 1");
  auto run = ddim_sample(d, cosine_schedule(ctx.config.sampling_steps), n, seed);
  if (ctx.artifacts) {
    const auto path = *ctx.artifacts / (report.check + "." + label + ".csv");
    write_run(run, path);
    report.inputs["artifacts"].push_back(path.filename().string());
  }
  return run;
}

nlohmann::json base_inputs(const CheckContext& ctx) {
  return {{"n", ctx.n}, {"seed", ctx.seed}, {"thresholds", ctx.config.to_json()}};
}

void record_test(VerificationReport& r, const std::string& prefix, const PermutationTestResult& t) {
  r.statistics[prefix + ".energy_statistic"] = t.statistic;
  r.statistics[prefix + ".null_q95"] = t.null_q95;
  r.statistics[prefix + ".n_a"] = t.n_a;
  r.statistics[prefix + ".n_b"] = t.n_b;
}

void require_moments(VerificationReport& r, const std::string& prefix, const MomentErrors& e,
                     const VerificationConfig& c) {
  r.require(prefix + ".mean_error", e.mean, "<=", c.mean_tol);
  r.require(prefix + ".cov_error", e.cov, "<=", c.cov_tol);
}

}  // namespace

// ---- checks -----------------------------------------------------------------

VerificationReport check_exact_gaussian_score(const Vector& mean, const Matrix& cov, const CheckContext& ctx) {
  VerificationReport r;
  r.check = "exact_gaussian_score";
  r.claim = "sampling with the exact score of N(mu, Sigma) reproduces N(mu, Sigma)";
  r.inputs = base_inputs(ctx);
  const auto denoiser = LinearDenoiser::gaussian(mean, cov);
  r.inputs["denoiser"] = denoiser.descriptor();
  const auto run = sample(denoiser, ctx, ctx.n, derive_seed(ctx.seed, 1), r, "generated");
  require_moments(r, "generated_vs_target", moment_errors(run.samples, mean, cov), ctx.config);
  const auto reference = gaussian_draw(mean, cov, ctx.n, derive_seed(ctx.seed, 2));
  const auto test = energy_permutation_test(run.outputs(), reference, perm_options(ctx.config, derive_seed(ctx.seed, 3)));
  record_test(r, "generated_vs_target", test);
  r.require("generated_vs_target.p_value", test.p_value, ">=", ctx.config.alpha);
  r.decide();
  return r;
}

VerificationReport check_linear_gaussian(const Dataset& data, const CheckContext& ctx,
                                         const LinearGaussianOptions& options) {
  VerificationReport r;
  r.check = "linear_gaussian";
  r.claim = "a linear denoiser generates the Gaussian with the data's mean and covariance";
  r.inputs = base_inputs(ctx);
  r.inputs["dataset"] = data.name();
  std::optional<LinearDenoiser> fitted;
  const Denoiser* denoiser = options.denoiser;
  if (!denoiser) {
    fitted = fit_linear(data);
    denoiser = &*fitted;
  } else {
    r.notes.push_back("denoiser supplied by caller instead of fit_linear(data)");
  }
  r.inputs["denoiser"] = denoiser->descriptor();
  const auto run = sample(*denoiser, ctx, ctx.n, derive_seed(ctx.seed, 1), r, "generated");
  const auto generated = run.outputs();
  require_moments(r, "generated_vs_data", moment_errors(run.samples, data.mean(), data.covariance()), ctx.config);

  const auto reference = gaussian_draw(data.mean(), data.covariance(), ctx.n, derive_seed(ctx.seed, 2));
  const auto gauss = energy_permutation_test(generated, reference, perm_options(ctx.config, derive_seed(ctx.seed, 3)));
  record_test(r, "generated_vs_gaussian", gauss);
  r.require("generated_vs_gaussian.p_value", gauss.p_value, ">=", ctx.config.alpha);

  const auto target = energy_permutation_test(generated, data, perm_options(ctx.config, derive_seed(ctx.seed, 4)));
  record_test(r, "generated_vs_data", target);
  if (options.require_target_rejection)
    r.require("generated_vs_data.p_value", target.p_value, "<", ctx.config.alpha);
  else
    r.statistics["generated_vs_data.p_value"] = target.p_value;
  r.decide();
  return r;
}

VerificationReport check_linear_matched_pair(const Dataset& a, const Dataset& b, const CheckContext& ctx) {
  VerificationReport r;
  r.check = "linear_matched_pair";
  r.claim = "linear denoisers fitted to two laws with equal mean and covariance generate the same law";
  r.inputs = base_inputs(ctx);
  r.inputs["datasets"] = {a.name(), b.name()};
  const auto da = fit_linear(a);
  const auto db = fit_linear(b);
  r.inputs["denoiser"] = da.descriptor();
  const auto ga = sample(da, ctx, ctx.n, derive_seed(ctx.seed, 1), r, "generated_a");
  const auto gb = sample(db, ctx, ctx.n, derive_seed(ctx.seed, 2), r, "generated_b");
  r.statistics["data_mean_gap"] = (a.mean() - b.mean()).norm() / std::sqrt(a.covariance().trace() / a.dim());
  r.statistics["data_cov_gap"] = (a.covariance() - b.covariance()).norm() / a.covariance().norm();

  const auto pair = energy_permutation_test(ga.outputs(), gb.outputs(), perm_options(ctx.config, derive_seed(ctx.seed, 3)));
  record_test(r, "generated_a_vs_generated_b", pair);
  r.require("generated_a_vs_generated_b.p_value", pair.p_value, ">=", ctx.config.alpha);

  require_moments(r, "generated_a_vs_data_a", moment_errors(ga.samples, a.mean(), a.covariance()), ctx.config);
  require_moments(r, "generated_b_vs_data_b", moment_errors(gb.samples, b.mean(), b.covariance()), ctx.config);

  const auto ta = energy_permutation_test(ga.outputs(), a, perm_options(ctx.config, derive_seed(ctx.seed, 4)));
  const auto tb = energy_permutation_test(gb.outputs(), b, perm_options(ctx.config, derive_seed(ctx.seed, 5)));
  record_test(r, "generated_a_vs_data_a", ta);
  record_test(r, "generated_b_vs_data_b", tb);
  r.require("generated_a_vs_data_a.p_value", ta.p_value, "<", ctx.config.alpha);
  r.require("generated_b_vs_data_b.p_value", tb.p_value, "<", ctx.config.alpha);
  r.decide();
  return r;
}

VerificationReport check_rank_k(const Dataset& data, int k, const CheckContext& ctx,
                                std::optional<int> denoiser_rank) {
  const int d = data.dim();
  if (k < 1 || k > d) throw ValidationError("rank k must satisfy 1 <= k <= d");
  VerificationReport r;
  r.check = "rank_k";
  r.claim = "a rank-k linear denoiser generates a Gaussian whose covariance is the rank-k approximation "
            "of the data covariance";
  r.inputs = base_inputs(ctx);
  r.inputs["dataset"] = data.name();
  r.inputs["k"] = k;
  const int fit_k = denoiser_rank.value_or(k);
  const auto denoiser = fit_rank_k_linear(data, fit_k);
  r.inputs["denoiser"] = denoiser.descriptor();
  if (fit_k != k) r.notes.push_back("denoiser rank differs from the hypothesis rank");

  const auto& eig = denoiser.eig();
  if (fit_k < d) {
    const double gap = eig.eigenvalues(fit_k - 1) - eig.eigenvalues(fit_k);
    if (gap <= 1e-12 * std::max(1.0, std::abs(eig.eigenvalues(0))))
      r.notes.push_back("eigenvalues tie at the truncation point; the kept direction follows the eigenvector "
                        "order convention");
  }

  const auto run = sample(denoiser, ctx, ctx.n, derive_seed(ctx.seed, 1), r, "generated");
  const Matrix expected = rank_k_approx(eig, k);
  const Matrix cov = empirical_cov(run.samples);
  const double scale = std::sqrt(data.covariance().trace() / d);
  r.require("mean_error", (empirical_mean(run.samples) - data.mean()).norm() / scale, "<=", ctx.config.mean_tol);
  r.require("cov_error_vs_rank_k", (cov - expected).norm() / expected.norm(), "<=", ctx.config.cov_tol);

  const Vector generated_spectrum = eig_sym(cov).eigenvalues;
  double spectrum_error = 0.0;
  for (int i = 0; i < k; ++i)
    spectrum_error = std::max(spectrum_error, std::abs(generated_spectrum(i) - eig.eigenvalues(i)) /
                                                  std::abs(eig.eigenvalues(i)));
  r.require("top_k_spectrum_error", spectrum_error, "<", ctx.config.spectrum_tol);
  if (k < d)
    r.require("tail_to_top_eigenvalue", std::max(0.0, generated_spectrum(k)) / generated_spectrum(0), "<",
              ctx.config.rank_tail_tol);
  r.statistics["generated_spectrum"] =
      std::vector<double>(generated_spectrum.data(), generated_spectrum.data() + generated_spectrum.size());
  r.decide();
  return r;
}

VerificationReport check_moment_dependence(const Dataset& a, const Dataset& b, const CheckContext& ctx,
                                           const MomentDependenceOptions& options) {
  require_odd_degree(options.degree);
  if (a.dim() != b.dim()) throw ValidationError("datasets must share a dimension");
  VerificationReport r;
  r.check = "moment_dependence";
  r.claim = "an exact polynomial denoiser of degree k depends on the data only through its first 2k moments";
  r.inputs = base_inputs(ctx);
  r.inputs["datasets"] = {a.name(), b.name()};
  r.inputs["degree"] = options.degree;

  const Frame frame = frame_of(a);
  PolynomialFitOptions fit;
  fit.degree = options.degree;
  fit.sigma_grid = default_sigma_grid(frame.scale, ctx.config.sampling_steps);
  fit.noise_replicates = options.noise_replicates;
  fit.seed = derive_seed(ctx.seed, 5);
  fit.frame = frame;
  const auto fa = fit_polynomial_exact(a, fit);
  const auto fb = fit_polynomial_exact(b, fit);
  r.inputs["denoiser"] = fa.descriptor();

  // Relative to |[A, b - c]| the gap blows up at high sigma, where A -> 0
  // and b -> the sample mean, so it is measured in data-scale units.
  const double unit = frame.scale * std::sqrt(static_cast<double>(a.dim()));
  double coefficient_gap = 0.0;
  for (std::size_t l = 0; l < fa.levels().size(); ++l) {
    const auto& la = fa.levels()[l];
    const auto& lb = fb.levels()[l];
    Matrix diff(la.weights.rows(), la.weights.cols() + 1);
    diff << la.weights - lb.weights, la.offset - lb.offset;
    coefficient_gap = std::max(coefficient_gap, diff.norm() / unit);
  }
  r.require("coefficient_gap", coefficient_gap, "<=", ctx.config.coefficient_tol);

  const double sigma = options.route_sigma.value_or(0.1 * frame.scale);
  r.inputs["route_sigma"] = sigma;
  r.inputs["route_replicates"] = options.route_replicates;
  r.require("moment_route_discrepancy",
            moment_route_discrepancy(a, options.degree, frame, sigma, options.route_replicates,
                                     derive_seed(ctx.seed, 6), ctx.config.moment_route_floor),
            "<", ctx.config.moment_route_tol);

  // Supplementary: closeness of the generated laws (not asserted).
  const Index m = std::min<Index>(ctx.n, 2000);
  const auto ga = sample(fa, ctx, m, derive_seed(ctx.seed, 1), r, "generated_a");
  const auto gb = sample(fb, ctx, m, derive_seed(ctx.seed, 2), r, "generated_b");
  r.statistics["generated_energy_distance"] = energy_distance(ga.samples, gb.samples);
  r.notes.push_back("generated-sample closeness is reported, not asserted");
  r.decide();
  return r;
}

VerificationReport check_log_polynomial_family(const Dataset& data, const CheckContext& ctx,
                                               const LogPolynomialCheckOptions& options) {
  require_odd_degree(options.degree);
  if (data.dim() > 2) throw ValidationError("log-polynomial family check needs dimension <= 2");
  VerificationReport r;
  r.check = "log_polynomial_family";
  r.claim = "a polynomial denoiser of degree k generates a log-polynomial law of degree k + 1";
  r.inputs = base_inputs(ctx);
  r.inputs["dataset"] = data.name();
  r.inputs["degree"] = options.degree;

  PolynomialFitOptions fit;
  fit.degree = options.degree;
  fit.noise_replicates = options.noise_replicates;
  fit.seed = derive_seed(ctx.seed, 5);
  fit.sigma_grid = default_sigma_grid(frame_of(data).scale, ctx.config.sampling_steps);
  const auto denoiser = fit_polynomial_exact(data, fit);
  r.inputs["denoiser"] = denoiser.descriptor();
  const auto run = sample(denoiser, ctx, ctx.n, derive_seed(ctx.seed, 1), r, "generated");

  const LogPolynomialOptions grid_options;
  const auto grid = make_grid(run.samples, grid_options.cells, grid_options.box_sd);
  const auto family = family_grid_kl(run.samples, options.degree + 1, grid, grid_options);
  r.require("family_grid_kl", family.kl, "<=", ctx.config.family_kl_tol);
  r.statistics["family_fit_iterations"] = family.fit.iterations;
  r.statistics["family_fit_converged"] = family.fit.converged;
  if (options.degree > 1) {
    const auto gaussian = family_grid_kl(run.samples, 2, grid, grid_options);
    r.require("family_minus_gaussian_grid_kl", family.kl - gaussian.kl, "<", 0.0);
    r.statistics["gaussian_grid_kl"] = gaussian.kl;
  }
  const double target_kl = reference_grid_kl(run.samples, data.points(), grid);
  if (options.require_target_rejection)
    r.require("target_grid_kl", target_kl, ">", ctx.config.family_kl_tol);
  else
    r.statistics["target_grid_kl"] = target_kl;
  r.decide();
  return r;
}

VerificationReport check_manifold(const Dataset& data, const MlpOptions& mlp, const CheckContext& ctx) {
  VerificationReport r;
  r.check = "manifold";
  r.claim = "a denoiser with an h-wide bottleneck generates samples on an h-dimensional manifold";
  r.inputs = base_inputs(ctx);
  r.inputs["dataset"] = data.name();
  r.inputs["h"] = mlp.bottleneck;
  if (mlp.bottleneck >= data.dim()) {
    r.verdict = Verdict::NotBinding;
    r.notes.push_back("bottleneck h is not below the data dimension, so it constrains nothing");
    return r;
  }
  const auto denoiser = fit_mlp(data, mlp);
  r.inputs["denoiser"] = denoiser.descriptor();
  r.statistics["final_probe_loss"] = denoiser.log().final_probe_loss;
  r.statistics["initial_probe_loss"] = denoiser.log().initial_probe_loss;

  // Probes: noisy data points at the schedule's middle noise level.
  const auto schedule = cosine_schedule(ctx.config.sampling_steps);
  const double sigma = denoiser.frame().scale * schedule.sigma[static_cast<std::size_t>(schedule.steps / 2)];
  Rng rng(derive_seed(ctx.seed, 7));
  std::vector<Vector> probes;
  for (int i = 0; i < ctx.config.jacobian_probes; ++i) {
    Vector y = data.point(static_cast<Index>(rng.below(static_cast<std::uint64_t>(data.size()))));
    for (Index k = 0; k < y.size(); ++k) y(k) += sigma * rng.normal();
    probes.push_back(std::move(y));
  }
  r.inputs["probe_sigma"] = sigma;
  r.require("jacobian_rank", jacobian_rank(denoiser, probes, sigma, ctx.config.jacobian_tol), "<=",
            mlp.bottleneck);

  const auto run = sample(denoiser, ctx, ctx.n, derive_seed(ctx.seed, 1), r, "generated");
  const auto local = local_intrinsic_dim(
      run.outputs(), ctx.config.local_dim_threshold,
      {ctx.config.local_neighbors, ctx.config.local_anchors, derive_seed(ctx.seed, 8)});
  r.require("local_intrinsic_dim", local.dim, "<=", mlp.bottleneck);
  r.statistics["local_mean_spectrum"] =
      std::vector<double>(local.mean_spectrum.data(), local.mean_spectrum.data() + local.mean_spectrum.size());
  r.decide();
  return r;
}

VerificationReport check_memorization_tradeoff(const Dataset& data, const std::vector<int>& h_values,
                                               const MlpOptions& mlp, const CheckContext& ctx) {
  if (h_values.empty()) throw ValidationError("need at least one bottleneck width");
  for (std::size_t i = 1; i < h_values.size(); ++i)
    if (h_values[i] >= h_values[i - 1]) throw ValidationError("h_values must be strictly decreasing");
  VerificationReport r;
  r.check = "memorization_tradeoff";
  r.claim = "narrowing the bottleneck moves a denoiser from memorizing training points to generating new ones";
  r.inputs = base_inputs(ctx);
  r.inputs["dataset"] = data.name();
  r.inputs["h_values"] = h_values;
  r.inputs["training_points"] = data.size();

  std::vector<double> fractions;
  for (int h : h_values) {
    MlpOptions o = mlp;
    o.bottleneck = h;
    const auto denoiser = fit_mlp(data, o);
    if (!r.inputs.contains("denoiser")) r.inputs["denoiser"] = denoiser.descriptor();
    const auto run = sample(denoiser, ctx, ctx.n, derive_seed(ctx.seed, 1), r, "generated_h" + std::to_string(h));
    const auto mem = nn_memorization(run.outputs(), data);
    fractions.push_back(mem.memorized_fraction);
    r.statistics["final_probe_loss_h" + std::to_string(h)] = denoiser.log().final_probe_loss;
  }
  r.statistics["memorized_fraction"] = fractions;
  r.statistics["memorization_ratio"] = kMemorizationRatio;
  r.require("memorized_fraction_h" + std::to_string(h_values.front()), fractions.front(), ">",
            ctx.config.memorized_high);
  r.require("memorized_fraction_h" + std::to_string(h_values.back()), fractions.back(), "<",
            ctx.config.memorized_low);
  double worst_rise = -1.0;
  for (std::size_t i = 1; i < fractions.size(); ++i) worst_rise = std::max(worst_rise, fractions[i] - fractions[i - 1]);
  if (fractions.size() > 1) r.require("largest_increase_as_h_shrinks", worst_rise, "<=", ctx.config.memorization_slack);
  r.decide();
  return r;
}

Dataset shuffle_tiles(const Dataset& images, int tile, std::uint64_t seed) {
  const int side = image_side(images.dim());
  if (tile < 1 || side % tile != 0) throw ValidationError("tile size must divide the image side");
  const int per_axis = side / tile;
  Matrix out(images.size(), images.dim());
  std::vector<int> order(static_cast<std::size_t>(per_axis * per_axis));
  for (Index i = 0; i < images.size(); ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    std::iota(order.begin(), order.end(), 0);
    shuffle(order.begin(), order.end(), rng);
    for (int dst = 0; dst < per_axis * per_axis; ++dst) {
      const int src = order[static_cast<std::size_t>(dst)];
      const int sr = (src / per_axis) * tile, sc = (src % per_axis) * tile;
      const int dr = (dst / per_axis) * tile, dc = (dst % per_axis) * tile;
      for (int r = 0; r < tile; ++r)
        for (int c = 0; c < tile; ++c) out(i, (dr + r) * side + dc + c) = images.points()(i, (sr + r) * side + sc + c);
    }
  }
  return Dataset(std::move(out), images.name() + ".tiles_shuffled");
}

VerificationReport check_patch_dependence(const Dataset& a, const Dataset& b, int patch_size, int stride,
                                          const CheckContext& ctx, int probes) {
  if (a.dim() != b.dim()) throw ValidationError("image sets must share a dimension");
  VerificationReport r;
  r.check = "patch_dependence";
  r.claim = "a patchwise denoiser depends on the data only through its patch distribution";
  r.inputs = base_inputs(ctx);
  r.inputs["datasets"] = {a.name(), b.name()};
  r.inputs["patch_size"] = patch_size;
  r.inputs["stride"] = stride;
  const DenoiserFactory linear = [](const Dataset& patches) -> DenoiserPtr {
    return std::make_unique<LinearDenoiser>(fit_linear(patches));
  };
  const auto da = fit_patchwise(a, linear, patch_size, stride);
  const auto db = fit_patchwise(b, linear, patch_size, stride);
  r.inputs["denoiser"] = da.descriptor();

  const Frame& frame = da.frame();
  Rng rng(derive_seed(ctx.seed, 9));
  Matrix ys(probes, a.dim());
  for (Index i = 0; i < ys.rows(); ++i)
    for (Index k = 0; k < ys.cols(); ++k) ys(i, k) = frame.center(k) + 2.0 * frame.scale * rng.normal();
  double worst = 0.0;
  for (double factor : {0.05, 0.5, 5.0}) {
    const double sigma = factor * frame.scale;
    worst = std::max(worst, (da.denoise_batch(ys, sigma) - db.denoise_batch(ys, sigma)).cwiseAbs().maxCoeff());
  }
  r.require("max_output_gap", worst, "<=", ctx.config.patch_tol);
  r.statistics["global_cov_gap"] = (a.covariance() - b.covariance()).norm() / a.covariance().norm();
  r.decide();
  return r;
}

}  // namespace diffbias
