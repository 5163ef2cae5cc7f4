#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "diffbias/dataset.hpp"
#include "diffbias/error.hpp"
#include "diffbias/experiment.hpp"
#include "diffbias/linear_denoiser.hpp"
#include "diffbias/serialize.hpp"

using namespace diffbias;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("diffbias_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig config_in(const fs::path& dir, json root) {
  ExperimentConfig c;
  c.root = std::move(root);
  c.root["output_dir"] = dir.string();
  return c;
}

json linear_root() {
  return {{"dataset", {{"kind", "preset"}, {"n", 500}, {"seed", 1}}},
          {"denoiser", {{"family", "linear"}}},
          {"sampler", {{"n", 300}, {"seed", 2}}}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DIFFBIAS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing and overrides") {
  auto c = ExperimentConfig::parse(R"({
    // comments are allowed
    "dataset": {"kind": "preset", "n": 100},
    "sampler": {"steps": 10}
  })");
  CHECK(c.output_dir() == fs::path("run"));
  c.set("sampler.steps=20");
  c.set("dataset.name=plain text");
  c.set("verify.thresholds.cov_tol=0.2");
  c.set("denoiser={\"family\": \"linear\"}");
  CHECK(c.section("sampler").at("steps") == 20);
  CHECK(c.section("dataset").at("name") == "plain text");
  CHECK(c.section("verify").at("thresholds").at("cov_tol") == 0.2);
  CHECK(c.section("denoiser").at("family") == "linear");
  CHECK(c.section("missing").empty());
  CHECK_THROWS_AS(c.set("no_equals_sign"), ValidationError);
  CHECK_THROWS_AS(c.set("a..b=1"), ValidationError);
  CHECK_THROWS_AS(c.set("dataset.n.deeper=1"), ValidationError);
}

TEST_CASE("gen-data is reproducible and writes what was asked") {
  const auto dir = scratch("gen");
  const auto c = config_in(dir, linear_root());
  REQUIRE(run_command("gen-data", c) == 0);
  const auto first = read_text_file(dir / "data.csv");
  REQUIRE(run_command("gen-data", c) == 0);
  CHECK(read_text_file(dir / "data.csv") == first);
  CHECK(read_csv(dir / "data.csv").size() == 500);
  const auto meta = json::parse(read_text_file(dir / "dataset.json"));
  CHECK(meta.at("datasets")[0].at("n") == 500);
  CHECK(meta.contains("spec"));
  CHECK(json::parse(read_text_file(dir / "config.json")) == c.root);
  fs::remove_all(dir);
}

TEST_CASE("gen-data for a matched pair records matching analytic moments") {
  const auto dir = scratch("pair");
  const auto c = config_in(dir, {{"dataset", {{"kind", "matched_pair"}, {"n", 400}, {"seed", 3}}}});
  REQUIRE(run_command("gen-data", c) == 0);
  CHECK(read_csv(dir / "data_a.csv").size() == 400);
  CHECK(read_csv(dir / "data_b.csv").size() == 400);
  const auto m = json::parse(read_text_file(dir / "dataset.json")).at("analytic_moments");
  CHECK(m.at("max_mean_gap").get<double>() < 1e-12);
  CHECK(m.at("max_cov_gap").get<double>() < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("fit saves a denoiser that reloads bit-exactly") {
  const auto dir = scratch("fit");
  const auto c = config_in(dir, linear_root());
  REQUIRE(run_command("fit", c) == 0);
  const auto loaded = load_denoiser(dir / "denoiser.json");
  const auto direct = fit_linear(build_datasets(c.section("dataset")).front());
  const Matrix y = sample_gmm(three_component_preset(), 20, 9).points();
  CHECK(loaded->denoise_batch(y, 0.4) == direct.denoise_batch(y, 0.4));
  const auto diag = json::parse(read_text_file(dir / "fit_diagnostics.json"));
  CHECK(diag.at("eigenvalues").size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("fit rejects invalid family settings") {
  auto root = linear_root();
  root["denoiser"] = {{"family", "polynomial"}, {"degree", 2}};
  const auto dir = scratch("even");
  CHECK_THROWS_AS(run_command("fit", config_in(dir, root)), ValidationError);
  root["denoiser"] = {{"family", "no_such_family"}};
  CHECK_THROWS_AS(run_command("fit", config_in(dir, root)), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("MLP fit diagnostics carry the full loss curve") {
  auto root = linear_root();
  root["denoiser"] = {{"family", "mlp_bottleneck"}, {"h", 1}, {"width", 16}, {"epochs", 7}, {"seed", 4}};
  const auto dir = scratch("mlp");
  REQUIRE(run_command("fit", config_in(dir, root)) == 0);
  const auto diag = json::parse(read_text_file(dir / "fit_diagnostics.json"));
  CHECK(diag.at("training").at("loss_curve").size() == 7);
  CHECK(diag.at("descriptor").at("family") == "mlp_bottleneck");
  fs::remove_all(dir);
}

TEST_CASE("sample is byte-reproducible and draws a panel for 2-D data") {
  const auto dir = scratch("sample");
  const auto c = config_in(dir, linear_root());
  REQUIRE(run_command("fit", c) == 0);
  REQUIRE(run_command("sample", c) == 0);
  const auto first = read_text_file(dir / "samples.csv");
  REQUIRE(run_command("sample", c) == 0);
  CHECK(read_text_file(dir / "samples.csv") == first);
  CHECK(read_csv(dir / "samples.csv").size() == 300);
  CHECK(fs::exists(dir / "samples.svg"));
  const auto side = json::parse(read_text_file(dir / "samples.json"));
  CHECK(side.at("schedule").at("steps") == 10);
  CHECK(side.at("seed") == 2);
  fs::remove_all(dir);
}

TEST_CASE("verify exit codes, reports and summary") {
  const auto dir = scratch("verify");
  auto root = linear_root();
  root["verify"] = {{"n", 1000},
                    {"seed", 5},
                    {"thresholds", {{"permutation_cap", 500}}},
                    {"checks",
                     {{{"check", "linear_gaussian"}, {"expect", "PASS"}},
                      {{"check", "linear_gaussian"}, {"control", "exact_score"}, {"label", "ctl"}, {"expect", "FAIL"}}}}};
  const auto c = config_in(dir, root);
  CHECK(run_command("verify", c) == 0);
  CHECK(fs::exists(dir / "reports" / "01_linear_gaussian.json"));
  CHECK(fs::exists(dir / "reports" / "02_linear_gaussian.json"));
  const auto r2 = VerificationReport::from_json(json::parse(read_text_file(dir / "reports" / "02_linear_gaussian.json")));
  CHECK(r2.verdict == Verdict::Fail);
  CHECK(r2.inputs.at("label") == "ctl");
  const auto summary = read_text_file(dir / "summary.md");
  CHECK(summary.find("| check | statistic |") == 0);
  CHECK(summary.find("2 of 2 checks match their expected verdict.") != std::string::npos);

  // report re-derives verdicts and flags edited ones.
  CHECK(run_command("report", c) == 0);
  auto edited = json::parse(read_text_file(dir / "reports" / "01_linear_gaussian.json"));
  edited["criteria"][0]["statistic"] = 1e6;
  write_text_file(dir / "reports" / "01_linear_gaussian.json", edited.dump());
  CHECK(run_command("report", c) == 1);

  auto erroring = root;
  erroring["verify"]["checks"] = {{{"check", "rank_k"}, {"k", 5}}};
  CHECK(run_command("verify", config_in(dir, erroring)) == 1);
  const auto err = json::parse(read_text_file(dir / "reports" / "01_rank_k.json"));
  CHECK(err.at("verdict") == "ERROR");
  CHECK_FALSE(err.at("notes").empty());
  CHECK_FALSE(fs::exists(dir / "reports" / "02_linear_gaussian.json"));
  fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("binary");
  const auto good = dir / "good.json";
  auto root = linear_root();
  root["output_dir"] = (dir / "out").string();
  write_text_file(good, root.dump());
  CHECK(run_cli("gen-data -c " + good.string()) == 0);
  CHECK(fs::exists(dir / "out" / "data.csv"));
  CHECK(run_cli("gen-data -c " + good.string() + " --set dataset.n=50 -o " + (dir / "other").string()) == 0);
  CHECK(read_csv(dir / "other" / "data.csv").size() == 50);

  const auto malformed = dir / "malformed.json";
  write_text_file(malformed, "{ not json");
  CHECK(run_cli("gen-data -c " + malformed.string()) == 2);
  CHECK(run_cli("gen-data -c " + good.string() + " --set dataset.kind=nonsense") == 2);
  CHECK(run_cli("sample -c " + good.string() + " --set sampler.denoiser=" + (dir / "missing.json").string()) == 2);

  auto erroring = root;
  erroring["verify"] = {{"checks", {{{"check", "rank_k"}, {"k", 5}}}}};
  const auto err = dir / "err.json";
  write_text_file(err, erroring.dump());
  CHECK(run_cli("verify -c " + err.string()) == 1);
  CHECK(run_cli("report -c " + (dir / "nonexistent.json").string()) != 0);
  CHECK(run_cli("") != 0);
  fs::remove_all(dir);
}
