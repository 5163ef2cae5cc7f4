#include "diffbias/experiment.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "diffbias/error.hpp"
#include "diffbias/linear_denoiser.hpp"
#include "diffbias/mlp_denoiser.hpp"
#include "diffbias/patchwise.hpp"
#include "diffbias/polynomial_denoiser.hpp"
#include "diffbias/sampler.hpp"
#include "diffbias/serialize.hpp"
#include "diffbias/stats.hpp"
#include "diffbias/svg.hpp"

namespace fs = std::filesystem;

namespace diffbias {

namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

// j[key] with null treated as missing.
template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix matrix_from_rows(const json& rows) {
  const auto r = static_cast<Index>(rows.size());
  if (r == 0) throw ValidationError("empty matrix");
  const auto c = static_cast<Index>(rows.at(0).size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    if (static_cast<Index>(rows.at(static_cast<std::size_t>(i)).size()) != c) throw ValidationError("ragged matrix");
    for (Index k = 0; k < c; ++k) m(i, k) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

Dataset rescaled(const Dataset& d, double factor) {
  const Matrix pts = ((d.points().rowwise() - d.mean().transpose()) * factor).rowwise() + d.mean().transpose();
  return Dataset(pts, d.name() + ".rescaled");
}

std::size_t train_index(const json& denoiser_section, std::size_t available) {
  const auto which = get_or<std::string>(denoiser_section, "train_on", "a");
  if (which == "a") return 0;
  if (which == "b" && available > 1) return 1;
  throw ValidationError("denoiser.train_on must be 'a' or, for a matched pair, 'b'");
}

void copy_config(const ExperimentConfig& config) {
  write_text_file(config.output_dir() / "config.json", config.root.dump(2) + "\n");
  const json versions = {{"diffbias", kToolVersion},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                         {"denoiser_format_version", kDenoiserFormatVersion}};
  write_text_file(config.output_dir() / "versions.json", versions.dump(2) + "\n");
}

MlpOptions mlp_options(const json& s, const MlpOptions& defaults = {}) {
  MlpOptions o = defaults;
  o.bottleneck = get_or(s, "bottleneck", o.bottleneck);
  o.bottleneck = get_or(s, "h", o.bottleneck);
  o.width = get_or(s, "width", o.width);
  o.epochs = get_or(s, "epochs", o.epochs);
  o.lr = get_or(s, "lr", o.lr);
  o.batch = get_or(s, "batch", o.batch);
  o.schedule_steps = get_or(s, "schedule_steps", o.schedule_steps);
  o.seed = get_or<std::uint64_t>(s, "seed", o.seed);
  return o;
}

std::optional<Verdict> expected_verdict(const json& entry) {
  const auto e = get_opt<std::string>(entry, "expect");
  if (!e) return std::nullopt;
  return verdict_from_string(*e);
}

}  // namespace

// ---- config -----------------------------------------------------------------

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  try {
    c.root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!c.root.is_object()) throw ValidationError("config must be a JSON object");
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) { return parse(read_text_file(path)); }

void ExperimentConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::stringstream ss(path);
  std::vector<std::string> keys;
  for (std::string key; std::getline(ss, key, '.');) {
    if (key.empty()) throw ValidationError("empty key in override '" + path + "'");
    keys.push_back(key);
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    json& next = (*node)[keys[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ValidationError("override path '" + path + "' passes through a non-object");
    node = &next;
  }
  (*node)[keys.back()] = value;
}

fs::path ExperimentConfig::output_dir() const { return get_or<std::string>(root, "output_dir", "run"); }

const json& ExperimentConfig::section(const std::string& name) const {
  static const json empty = json::object();
  if (!root.contains(name) || root.at(name).is_null()) return empty;
  return root.at(name);
}

// ---- datasets -----------------------------------------------------------------

std::optional<GmmSpec> dataset_spec(const json& s) {
  const auto kind = get_or<std::string>(s, "kind", "preset");
  if (kind == "preset") return three_component_preset();
  if (kind == "gmm") return s.at("spec").get<GmmSpec>();
  if (kind == "matched_pair") return s.contains("spec") ? s.at("spec").get<GmmSpec>() : three_component_preset();
  return std::nullopt;
}

std::vector<Dataset> build_datasets(const json& s) {
  const auto kind = get_or<std::string>(s, "kind", "preset");
  const auto n = get_or<Index>(s, "n", 5000);
  const auto seed = get_or<std::uint64_t>(s, "seed", 0);
  if (kind == "preset") return {sample_gmm(three_component_preset(), n, seed, "three_component")};
  if (kind == "gmm") {
    auto spec = s.at("spec").get<GmmSpec>();
    spec.validate();
    return {sample_gmm(spec, n, seed, get_or<std::string>(s, "name", "gmm"))};
  }
  if (kind == "matched_pair") {
    const auto three = *dataset_spec(s);
    const auto fraction = get_or(s, "offset_fraction", kMatchedPairOffsetFraction);
    const auto two = matched_two_component(three, fraction);
    return {sample_gmm(three, n, derive_seed(seed, 3), "three_component"),
            sample_gmm(two, n, derive_seed(seed, 2), "two_component")};
  }
  if (kind == "gaussian") return {isotropic_gaussian(get_or(s, "dim", 2), n, seed)};
  if (kind == "images") return {smooth_random_images(n, get_or(s, "side", 8), seed)};
  if (kind == "csv") {
    const auto path = s.at("path").get<std::string>();
    return {read_csv(path, get_or<std::string>(s, "name", fs::path(path).stem().string()))};
  }
  throw ValidationError("unknown dataset kind '" + kind + "'");
}

// ---- denoisers ----------------------------------------------------------------

DenoiserPtr fit_denoiser(const json& s, const Dataset& data, const std::optional<GmmSpec>& spec) {
  const auto family = get_or<std::string>(s, "family", "linear");
  if (family == "linear") {
    const auto rank = get_opt<int>(s, "rank");
    return std::make_unique<LinearDenoiser>(rank ? fit_rank_k_linear(data, *rank) : fit_linear(data));
  }
  if (family == "gaussian_mixture_exact") {
    if (!spec) throw ValidationError("gaussian_mixture_exact needs a mixture dataset (preset, gmm or matched_pair)");
    return std::make_unique<GmmDenoiser>(*spec);
  }
  if (family == "polynomial") {
    PolynomialFitOptions o;
    o.degree = get_or(s, "degree", 3);
    o.ridge = get_opt<double>(s, "ridge");
    o.noise_replicates = get_or(s, "noise_replicates", o.noise_replicates);
    o.seed = get_or<std::uint64_t>(s, "seed", 0);
    const int levels = get_or(s, "grid_levels", kDefaultGridLevels);
    const int steps = get_or(s, "schedule_steps", 50);
    require_odd_degree(o.degree);
    o.sigma_grid = default_sigma_grid(frame_of(data).scale, steps, levels);
    const auto features = get_or<std::string>(s, "feature_map", "monomial");
    if (feature_kind_from_string(features) == FeatureKind::RandomPower)
      return std::make_unique<PolynomialDenoiser>(fit_polynomial_rf(data, get_or(s, "width", 1024), o));
    return std::make_unique<PolynomialDenoiser>(fit_polynomial_exact(data, o));
  }
  if (family == "mlp_bottleneck") return std::make_unique<MlpBottleneckDenoiser>(fit_mlp(data, mlp_options(s)));
  if (family == "patchwise") {
    const json base = s.contains("base") ? s.at("base") : json{{"family", "linear"}};
    if (get_or<std::string>(base, "family", "linear") == "patchwise")
      throw ValidationError("patchwise base cannot itself be patchwise");
    const DenoiserFactory factory = [base](const Dataset& patches) { return fit_denoiser(base, patches); };
    const int side = image_side(data.dim());
    if (s.contains("schedule") && !s.at("schedule").is_null()) {
      std::vector<PatchLevel> schedule;
      if (s.at("schedule").is_string()) {
        if (s.at("schedule").get<std::string>() != "default") throw ValidationError("schedule must be 'default' or a list");
        schedule = default_patch_schedule(side, frame_of(data).scale);
      } else {
        for (const auto& l : s.at("schedule"))
          schedule.push_back({l.at("min_sigma").get<double>(), l.at("patch_size").get<int>(), l.at("stride").get<int>()});
      }
      return std::make_unique<PatchwiseDenoiser>(fit_patchwise(data, factory, schedule));
    }
    const int patch = get_or(s, "patch_size", side);
    return std::make_unique<PatchwiseDenoiser>(fit_patchwise(data, factory, patch, get_or(s, "stride", patch)));
  }
  throw ValidationError("unknown denoiser family '" + family + "'");
}

json fit_diagnostics(const Denoiser& d) {
  json out = {{"descriptor", d.descriptor()}};
  if (const auto* lin = dynamic_cast<const LinearDenoiser*>(&d)) {
    out["eigenvalues"] = to_std(lin->eig().eigenvalues);
  } else if (const auto* poly = dynamic_cast<const PolynomialDenoiser*>(&d)) {
    json levels = json::array();
    for (const auto& l : poly->levels())
      levels.push_back({{"sigma", l.sigma}, {"ridge", l.ridge}, {"condition", l.condition}, {"train_mse", l.train_mse}});
    out["levels"] = levels;
  } else if (const auto* mlp = dynamic_cast<const MlpBottleneckDenoiser*>(&d)) {
    out["training"] = mlp->log().to_json();
  } else if (const auto* patch = dynamic_cast<const PatchwiseDenoiser*>(&d)) {
    json levels = json::array();
    for (const auto& l : patch->levels()) levels.push_back(fit_diagnostics(*l.base));
    out["levels"] = levels;
  }
  return out;
}

// ---- checks -------------------------------------------------------------------

VerificationReport run_check(const json& entry, const ExperimentConfig& config,
                             const std::optional<fs::path>& artifacts) {
  const auto& verify = config.section("verify");
  const auto name = entry.at("check").get<std::string>();
  CheckContext ctx;
  ctx.n = get_or<Index>(entry, "n", get_or<Index>(verify, "n", 10000));
  ctx.seed = get_or<std::uint64_t>(entry, "seed", get_or<std::uint64_t>(verify, "seed", 0));
  json thresholds = verify.contains("thresholds") ? verify.at("thresholds") : json::object();
  if (entry.contains("thresholds")) thresholds.update(entry.at("thresholds"));
  ctx.config = VerificationConfig::from_json(thresholds);
  ctx.artifacts = artifacts;

  const auto& dsec = entry.contains("dataset") ? entry.at("dataset") : config.section("dataset");
  const auto datasets = build_datasets(dsec);
  const Dataset& data = datasets.front();
  auto pair = [&]() -> std::pair<Dataset, Dataset> {
    if (datasets.size() < 2) throw ValidationError(name + " needs a matched_pair dataset");
    if (get_or<std::string>(entry, "control", "") == "unmatched")
      return {datasets[0], rescaled(datasets[1], get_or(entry, "rescale", 1.5))};
    return {datasets[0], datasets[1]};
  };

  VerificationReport report;
  if (name == "exact_gaussian_score") {
    const Vector mean = entry.contains("mean") ? vector_from(entry.at("mean")) : data.mean();
    const Matrix cov = entry.contains("cov") ? matrix_from_rows(entry.at("cov")) : data.covariance();
    report = check_exact_gaussian_score(mean, cov, ctx);
  } else if (name == "linear_gaussian") {
    LinearGaussianOptions o;
    o.require_target_rejection = get_or(entry, "require_target_rejection", true);
    std::optional<GmmDenoiser> exact;
    if (get_or<std::string>(entry, "control", "") == "exact_score") {
      const auto spec = dataset_spec(dsec);
      if (!spec) throw ValidationError("exact_score control needs a mixture dataset");
      exact.emplace(*spec);
      o.denoiser = &*exact;
    }
    report = check_linear_gaussian(data, ctx, o);
  } else if (name == "linear_matched_pair") {
    const auto [a, b] = pair();
    report = check_linear_matched_pair(a, b, ctx);
  } else if (name == "rank_k") {
    report = check_rank_k(data, entry.at("k").get<int>(), ctx, get_opt<int>(entry, "denoiser_rank"));
  } else if (name == "moment_dependence") {
    const auto [a, b] = pair();
    MomentDependenceOptions o;
    o.degree = get_or(entry, "degree", 1);
    o.route_sigma = get_opt<double>(entry, "route_sigma");
    o.noise_replicates = get_or(entry, "noise_replicates", o.noise_replicates);
    o.route_replicates = get_or(entry, "route_replicates", o.route_replicates);
    report = check_moment_dependence(a, b, ctx, o);
  } else if (name == "log_polynomial_family") {
    LogPolynomialCheckOptions o;
    o.degree = get_or(entry, "degree", 3);
    o.require_target_rejection = get_or(entry, "require_target_rejection", false);
    o.noise_replicates = get_or(entry, "noise_replicates", o.noise_replicates);
    report = check_log_polynomial_family(data, ctx, o);
  } else if (name == "manifold") {
    report = check_manifold(data, mlp_options(entry), ctx);
  } else if (name == "memorization_tradeoff") {
    report = check_memorization_tradeoff(data, entry.at("h_values").get<std::vector<int>>(), mlp_options(entry), ctx);
  } else if (name == "patch_dependence") {
    const int side = image_side(data.dim());
    const int tile = get_or(entry, "tile", std::max(1, side / 2));
    const auto shuffled = shuffle_tiles(data, tile, derive_seed(ctx.seed, 10));
    const int patch = get_or(entry, "patch_size", tile);
    report = check_patch_dependence(data, shuffled, patch, get_or(entry, "stride", patch), ctx,
                                    get_or(entry, "probes", 16));
  } else {
    throw ValidationError("unknown check '" + name + "'");
  }
  if (entry.contains("label")) report.inputs["label"] = entry.at("label");
  if (entry.contains("control")) report.inputs["control"] = entry.at("control");
  return report;
}

std::string summary_markdown(const std::vector<VerificationReport>& reports,
                             const std::vector<std::optional<Verdict>>& expected) {
  std::ostringstream s;
  s << "| check | statistic | value | threshold | criterion | verdict | expected |\n";
  s << "|---|---|---|---|---|---|---|\n";
  int with_expectation = 0;
  int matching = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::string label = r.check;
    if (r.inputs.contains("label")) label += " (" + r.inputs.at("label").get<std::string>() + ")";
    std::string want;
    if (i < expected.size() && expected[i]) {
      want = to_string(*expected[i]);
      ++with_expectation;
      if (*expected[i] == r.verdict) ++matching;
    }
    if (r.criteria.empty()) {
      s << "| " << label << " | - | - | - | - | " << to_string(r.verdict) << " | " << want << " |\n";
      continue;
    }
    for (const auto& c : r.criteria) {
      std::ostringstream v;
      v.precision(6);
      v << c.statistic;
      std::ostringstream t;
      t.precision(6);
      t << c.op << ' ' << c.threshold;
      s << "| " << label << " | " << c.name << " | " << v.str() << " | " << t.str() << " | "
        << (c.holds() ? "holds" : "violated") << " | " << to_string(r.verdict) << " | " << want << " |\n";
    }
  }
  if (with_expectation > 0)
    s << "\n" << matching << " of " << with_expectation << " checks match their expected verdict.\n";
  return s.str();
}

// ---- commands -------------------------------------------------------------------

int cmd_gen_data(const ExperimentConfig& config) {
  const auto out = config.output_dir();
  copy_config(config);
  const auto& s = config.section("dataset");
  const auto datasets = build_datasets(s);
  json meta = {{"section", s}};
  if (const auto spec = dataset_spec(s)) meta["spec"] = *spec;
  if (datasets.size() == 2) {
    write_csv(datasets[0], out / "data_a.csv");
    write_csv(datasets[1], out / "data_b.csv");
    const auto three = *dataset_spec(s);
    const auto two = matched_two_component(three, get_or(s, "offset_fraction", kMatchedPairOffsetFraction));
    meta["two_component_spec"] = two;
    meta["analytic_moments"] = {
        {"mean_a", to_std(three.mixture_mean())},
        {"mean_b", to_std(two.mixture_mean())},
        {"cov_a", matrix_rows(three.mixture_covariance())},
        {"cov_b", matrix_rows(two.mixture_covariance())},
        {"max_mean_gap", (three.mixture_mean() - two.mixture_mean()).cwiseAbs().maxCoeff()},
        {"max_cov_gap", (three.mixture_covariance() - two.mixture_covariance()).cwiseAbs().maxCoeff()}};
  } else {
    write_csv(datasets[0], out / "data.csv");
  }
  json shapes = json::array();
  for (const auto& d : datasets) shapes.push_back({{"name", d.name()}, {"n", d.size()}, {"dim", d.dim()}});
  meta["datasets"] = shapes;
  write_text_file(out / "dataset.json", meta.dump(2) + "\n");
  std::cout << "wrote " << datasets.size() << " dataset(s) to " << out.string() << "\n";
  return 0;
}

int cmd_fit(const ExperimentConfig& config) {
  const auto out = config.output_dir();
  copy_config(config);
  const auto& dsec = config.section("dataset");
  const auto datasets = build_datasets(dsec);
  const auto& section = config.section("denoiser");
  const auto& data = datasets.at(train_index(section, datasets.size()));
  const auto denoiser = fit_denoiser(section, data, dataset_spec(dsec));
  save_denoiser(*denoiser, out / "denoiser.json");
  write_text_file(out / "fit_diagnostics.json", fit_diagnostics(*denoiser).dump(2) + "\n");
  std::cout << "fitted " << denoiser->descriptor().at("family").get<std::string>() << " denoiser on "
            << data.name() << " -> " << (out / "denoiser.json").string() << "\n";
  return 0;
}

int cmd_sample(const ExperimentConfig& config) {
  const auto out = config.output_dir();
  copy_config(config);
  const auto& s = config.section("sampler");
  const fs::path path = get_or<std::string>(s, "denoiser", (out / "denoiser.json").string());
  const auto denoiser = load_denoiser(path);
  const auto family = denoiser->descriptor().at("family").get<std::string>();
  const int steps = get_or(s, "steps", default_sampling_steps(family));
  const auto n = get_or<Index>(s, "n", 2000);
  const auto seed = get_or<std::uint64_t>(s, "seed", 0);
  const auto run = ddim_sample(*denoiser, cosine_schedule(steps), n, seed);
  write_run(run, out / "samples.csv");
  if (denoiser->dim() == 2) {
    const auto datasets = build_datasets(config.section("dataset"));
    const auto& target = datasets.at(train_index(config.section("denoiser"), datasets.size()));
    ScatterOptions o;
    o.title = family + " denoiser, " + std::to_string(steps) + " DDIM steps";
    o.target_label = "target (" + target.name() + ")";
    write_scatter_svg(out / "samples.svg", target.points(), run.samples, o);
  }
  std::cout << "sampled " << n << " points with " << steps << " steps -> " << (out / "samples.csv").string() << "\n";
  return 0;
}

int cmd_verify(const ExperimentConfig& config) {
  const auto out = config.output_dir();
  copy_config(config);
  const auto& verify = config.section("verify");
  if (!verify.contains("checks") || !verify.at("checks").is_array())
    throw ValidationError("verify.checks must be a list");
  std::vector<VerificationReport> reports;
  std::vector<std::optional<Verdict>> expected;
  bool errored = false;
  const auto dir = out / "reports";
  // Stale reports from an earlier run would otherwise leak into `report`.
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::size_t index = 0;
  for (const auto& entry : verify.at("checks")) {
    ++index;
    const auto name = entry.value("check", std::string("unnamed"));
    VerificationReport r;
    try {
      r = run_check(entry, config, get_or(verify, "write_samples", true) ? std::optional<fs::path>(dir) : std::nullopt);
    } catch (const std::exception& e) {
      r = error_report(name, e.what());
    }
    errored = errored || r.verdict == Verdict::Error;
    expected.push_back(expected_verdict(entry));
    std::ostringstream file;
    file << (index < 10 ? "0" : "") << index << "_" << name << ".json";
    write_text_file(dir / file.str(), r.to_json().dump(2) + "\n");
    std::cout << to_string(r.verdict) << "  " << name
              << (entry.contains("label") ? " (" + entry.at("label").get<std::string>() + ")" : "") << "\n";
    reports.push_back(std::move(r));
  }
  const auto table = summary_markdown(reports, expected);
  write_text_file(out / "summary.md", table);
  std::cout << table;
  return errored ? 1 : 0;
}

int cmd_report(const ExperimentConfig& config) {
  const auto dir = config.output_dir() / "reports";
  if (!fs::exists(dir)) throw ValidationError("no reports under " + dir.string() + "; run verify first");
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir))
    if (f.path().extension() == ".json" && f.path().stem().string().find('.') == std::string::npos)
      files.push_back(f.path());
  std::sort(files.begin(), files.end());
  std::vector<VerificationReport> reports;
  std::vector<std::optional<Verdict>> expected;
  bool bad = false;
  const auto& checks = config.section("verify").value("checks", json::array());
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto r = VerificationReport::from_json(json::parse(read_text_file(files[i])));
    if (recompute_verdict(r) != r.verdict) {
      std::cerr << files[i].string() << ": stored verdict does not follow from its criteria\n";
      bad = true;
    }
    bad = bad || r.verdict == Verdict::Error;
    expected.push_back(i < checks.size() ? expected_verdict(checks[i]) : std::nullopt);
    reports.push_back(std::move(r));
  }
  const auto table = summary_markdown(reports, expected);
  write_text_file(config.output_dir() / "summary.md", table);
  std::cout << table;
  return bad ? 1 : 0;
}

int run_command(const std::string& command, const ExperimentConfig& config) {
  if (command == "gen-data") return cmd_gen_data(config);
  if (command == "fit") return cmd_fit(config);
  if (command == "sample") return cmd_sample(config);
  if (command == "verify") return cmd_verify(config);
  if (command == "report") return cmd_report(config);
  throw ValidationError("unknown command '" + command + "'");
}

}  // namespace diffbias
