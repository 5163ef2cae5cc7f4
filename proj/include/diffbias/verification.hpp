#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diffbias/dataset.hpp"
#include "diffbias/denoiser.hpp"
#include "diffbias/mlp_denoiser.hpp"

namespace diffbias {

/// Every threshold used by the checks. Defaults are the pinned acceptance
/// values; configs may override individual fields.
struct VerificationConfig {
  int permutations = 200;
  double alpha = 0.05;
  Index permutation_cap = 2000;
  double mean_tol = 0.05;          // |mean_gen - mean_ref| / data scale
  double cov_tol = 0.10;           // Frobenius relative
  double rank_tail_tol = 0.05;     // lambda_{k+1} / lambda_1 of generated cov
  double spectrum_tol = 0.10;      // relative error on the top-k eigenvalues
  double coefficient_tol = 0.05;   // max-level gap of [A b], in data-scale units
  double moment_route_tol = 0.02;  // Sigma_h from moments vs from samples
  double moment_route_floor = 0.01;
  double family_kl_tol = 0.10;     // nats, grid KL
  double jacobian_tol = 0.01;
  int jacobian_probes = 20;
  double local_dim_threshold = 0.99;
  int local_neighbors = 50;
  int local_anchors = 100;
  double memorized_high = 0.9;
  double memorized_low = 0.5;
  double memorization_slack = 0.05;
  int sampling_steps = 50;
  double patch_tol = 1e-6;

  nlohmann::json to_json() const;
  /// Fields missing from `j` keep their defaults; unknown fields are rejected.
  static VerificationConfig from_json(const nlohmann::json& j);
};

enum class Verdict { Pass, Fail, NotBinding, Error };
std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

/// statistic `op` threshold, op one of "<", "<=", ">", ">=".
struct Criterion {
  std::string name;
  double statistic = 0.0;
  std::string op;
  double threshold = 0.0;
  bool holds() const;
};

struct VerificationReport {
  std::string check;
  /// One-sentence statement of the property being tested.
  std::string claim;
  nlohmann::json inputs = nlohmann::json::object();
  /// Supplementary named values (criteria statistics are in `criteria`).
  nlohmann::json statistics = nlohmann::json::object();
  std::vector<Criterion> criteria;
  Verdict verdict = Verdict::Fail;
  std::vector<std::string> notes;

  void require(std::string name, double statistic, std::string op, double threshold);
  /// Pass iff every criterion holds; leaves NotBinding and Error untouched.
  void decide();
  nlohmann::json to_json() const;
  static VerificationReport from_json(const nlohmann::json& j);
};

/// Re-derive the verdict from the criteria alone.
Verdict recompute_verdict(const VerificationReport& report);

/// Error report for a check that threw.
VerificationReport error_report(const std::string& check, const std::string& message);

// ---- shared measurements ------------------------------------------------------

struct MomentErrors {
  double mean = 0.0;  // |m_a - m_b| / scale(b)
  double cov = 0.0;   // |C_a - C_b|_F / |C_b|_F
};
MomentErrors moment_errors(const Matrix& generated, const Vector& mean, const Matrix& cov);

/// n draws of N(mean, cov).
Dataset gaussian_draw(const Vector& mean, const Matrix& cov, Index n, std::uint64_t seed);

/// Largest entrywise discrepancy between the two Sigma_h routes at noise
/// level sigma, relative to max(|entry|, floor * max|entry|) of the moment
/// route.
double moment_route_discrepancy(const Dataset& data, int degree, const Frame& frame, double sigma,
                                int replicates, std::uint64_t seed, double floor);

// ---- checks -----------------------------------------------------------------

struct CheckContext {
  Index n = 10000;
  std::uint64_t seed = 0;
  VerificationConfig config;
  /// When set, every sampler run is written there as <check>.<label>.csv
  /// with its JSON sidecar.
  std::optional<std::filesystem::path> artifacts;
};

/// Sampler with the analytic N(mean, cov) denoiser reproduces N(mean, cov).
VerificationReport check_exact_gaussian_score(const Vector& mean, const Matrix& cov, const CheckContext& ctx);

struct LinearGaussianOptions {
  /// Also require the generated law to differ from the data (non-Gaussian targets).
  bool require_target_rejection = true;
  /// Use this denoiser instead of fit_linear(data) (negative controls).
  const Denoiser* denoiser = nullptr;
};
VerificationReport check_linear_gaussian(const Dataset& data, const CheckContext& ctx,
                                         const LinearGaussianOptions& options = {});

/// Linear denoisers fitted to two datasets with equal first and second
/// moments generate the same law.
VerificationReport check_linear_matched_pair(const Dataset& a, const Dataset& b, const CheckContext& ctx);

/// Generated covariance equals the rank-k approximation of the data's.
/// `denoiser_rank` defaults to k; a smaller value is the negative control.
VerificationReport check_rank_k(const Dataset& data, int k, const CheckContext& ctx,
                                std::optional<int> denoiser_rank = std::nullopt);

struct MomentDependenceOptions {
  int degree = 1;
  /// Level at which the two Sigma_h routes are compared; default is
  /// 0.1 * data scale, where the entrywise comparison is not swamped by
  /// noise-variance sampling error.
  std::optional<double> route_sigma;
  int noise_replicates = 4;
  int route_replicates = 32;
};
/// Exact polynomial fits on two datasets with shared frame and noise seeds
/// agree when the datasets share their first 2 * degree moments. The gap is
/// max over levels of |[A_a - A_b, b_a - b_b]|_F / (scale * sqrt(d)), i.e. in
/// units of the data scale.
VerificationReport check_moment_dependence(const Dataset& a, const Dataset& b, const CheckContext& ctx,
                                           const MomentDependenceOptions& options = {});

struct LogPolynomialCheckOptions {
  int degree = 3;
  bool require_target_rejection = false;
  int noise_replicates = 4;
};
/// Samples from a polynomial denoiser of degree k fit a log-polynomial
/// density of degree k + 1.
VerificationReport check_log_polynomial_family(const Dataset& data, const CheckContext& ctx,
                                               const LogPolynomialCheckOptions& options = {});

/// Bottleneck-h denoiser has Jacobian rank <= h and generates samples of
/// local dimension <= h. NotBinding when h >= d.
VerificationReport check_manifold(const Dataset& data, const MlpOptions& mlp, const CheckContext& ctx);

/// Memorized fraction falls as the bottleneck narrows. `h_values` in
/// descending order; `mlp.bottleneck` is overridden per entry.
VerificationReport check_memorization_tradeoff(const Dataset& data, const std::vector<int>& h_values,
                                               const MlpOptions& mlp, const CheckContext& ctx);

/// Patchwise linear denoisers fitted on two image sets with the same patch
/// statistics agree on every probe input.
VerificationReport check_patch_dependence(const Dataset& a, const Dataset& b, int patch_size, int stride,
                                          const CheckContext& ctx, int probes = 16);

/// Rearranges each image's non-overlapping tiles by a seeded permutation;
/// the multiset of tiles is unchanged.
Dataset shuffle_tiles(const Dataset& images, int tile, std::uint64_t seed);

}  // namespace diffbias
