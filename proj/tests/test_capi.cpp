#include <doctest.h>

#include "mvlab/mvlab.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "version": 1,
  "seed": 5,
  "dim": 1,
  "model": {"family": "linear_meanfield", "params": {"a": 1, "c": 0.5, "gamma_f": 0.2, "g_scale": 0.3}},
  "levy": {"split_radius": 1.0,
           "small": {"rate": 1.0, "sampler": {"family": "annulus", "inner": 0.1, "outer": 0.5}},
           "big": {"rate": 1.0, "sampler": {"family": "annulus", "inner": 1.5, "outer": 2.0}}},
  "initial": {"family": "uniform_box", "lo": -1, "hi": 1},
  "solver": {"T": 0.5, "h": 0.05, "m": 8},
  "experiment": {"n": 6}
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / ("mvlab_capi_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("version and subcommand names") {
  CHECK(std::string(mvl_version()).size() > 0);
  CHECK(mvl_subcommand_valid("poc") == 1);
  CHECK(mvl_subcommand_valid("check-assumptions") == 1);
  CHECK(mvl_subcommand_valid("plot") == 0);
  CHECK(mvl_subcommand_valid(nullptr) == 0);
}

TEST_CASE("config handles") {
  mvl_config* cfg = nullptr;
  REQUIRE(mvl_config_parse(kConfig, &cfg) == MVL_OK);
  CHECK(mvl_config_seed(cfg) == 5);
  const uint64_t h = mvl_config_hash(cfg);
  CHECK(mvl_config_set_seed(cfg, 6) == MVL_OK);
  CHECK(mvl_config_seed(cfg) == 6);
  CHECK(mvl_config_hash(cfg) != h);
  CHECK(mvl_config_warning_count(cfg) == 0);
  mvl_config_free(cfg);
}

TEST_CASE("invalid configs report every violation") {
  mvl_config* cfg = nullptr;
  std::string bad = kConfig;
  bad.replace(bad.find("\"m\": 8"), 6, "\"m\": 1");
  bad.replace(bad.find("\"h\": 0.05"), 9, "\"h\": -1.0");
  CHECK(mvl_config_parse(bad.c_str(), &cfg) == MVL_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(mvl_last_violation_count() >= 2);
  CHECK(std::string(mvl_last_error()).find("m>=2 required") != std::string::npos);
  CHECK(mvl_last_violation(1000) == nullptr);
  CHECK(mvl_config_parse("{", &cfg) == MVL_ERR_CONFIG);
  CHECK(mvl_config_load("/nonexistent/config.json", &cfg) == MVL_ERR_IO);
  CHECK(mvl_config_parse(nullptr, &cfg) == MVL_ERR_ARGUMENT);
}

TEST_CASE("p equal to beta is rejected for poc") {
  mvl_config* cfg = nullptr;
  const char* dir = std::getenv("MVLAB_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  REQUIRE(mvl_config_load((fs::path(dir) / "c03_weak_poc_cubic.json").c_str(), &cfg) == MVL_OK);
  mvl_config_free(cfg);
  std::string text = slurp(fs::path(dir) / "c03_weak_poc_cubic.json");
  const auto pos = text.find("\"p\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 6, "\"p\": 2");
  CHECK(mvl_config_parse(text.c_str(), &cfg) == MVL_ERR_CONFIG);
  CHECK(std::string(mvl_last_error()).find("p<beta required") != std::string::npos);
}

TEST_CASE("run argument checks") {
  mvl_config* cfg = nullptr;
  REQUIRE(mvl_config_parse(kConfig, &cfg) == MVL_OK);
  mvl_result* res = nullptr;
  const auto dir = scratch("args");
  CHECK(mvl_run(cfg, "nope", dir.c_str(), 1, &res) == MVL_ERR_ARGUMENT);
  CHECK(mvl_run(cfg, "simulate", dir.c_str(), 0, &res) == MVL_ERR_ARGUMENT);
  CHECK(mvl_run(nullptr, "simulate", dir.c_str(), 1, &res) == MVL_ERR_ARGUMENT);
  // poc needs an n grid.
  CHECK(mvl_run(cfg, "poc", dir.c_str(), 1, &res) == MVL_ERR_CONFIG);
  CHECK(res == nullptr);
  mvl_config_free(cfg);
}

TEST_CASE("selftest run writes a passing table") {
  mvl_config* cfg = nullptr;
  REQUIRE(mvl_config_parse(kConfig, &cfg) == MVL_OK);
  mvl_result* res = nullptr;
  const auto dir = scratch("selftest");
  REQUIRE(mvl_run(cfg, "wasserstein-selftest", dir.c_str(), 1, &res) == MVL_OK);
  CHECK(mvl_result_passed(res) == 1);
  CHECK(std::string(mvl_result_summary_json(res)).find("\"pass\": true") != std::string::npos);
  CHECK(fs::exists(dir / "selftest.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  mvl_result_free(res);
  mvl_config_free(cfg);
}

TEST_CASE("reruns are byte-identical across worker counts") {
  mvl_config* cfg = nullptr;
  REQUIRE(mvl_config_parse(kConfig, &cfg) == MVL_OK);
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  for (const auto& [dir, jobs] : {std::pair{a, 1}, std::pair{b, 3}}) {
    mvl_result* res = nullptr;
    REQUIRE(mvl_run(cfg, "simulate", dir.c_str(), jobs, &res) == MVL_OK);
    mvl_result_free(res);
  }
  for (const char* f : {"paths.csv", "flow.csv", "jumps.csv", "simulate.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f).size() > 0);
  }
  mvl_config_free(cfg);
}

TEST_CASE("numeric entry points") {
  double v = 0.0;
  CHECK(mvl_phi_rate(1.0, 2.0, 4, &v) == MVL_OK);
  CHECK(v == doctest::Approx(-0.25));
  CHECK(mvl_phi_rate(2.0, 2.0, 1, &v) == MVL_ERR_DOMAIN);
  const double x[] = {0.0, 0.0, 1.0, 0.0};
  const double y[] = {0.0, 1.0, 1.0, 1.0};
  CHECK(mvl_wasserstein(x, y, 2, 2, 2.0, &v) == MVL_OK);
  CHECK(v == doctest::Approx(1.0));
  CHECK(mvl_wasserstein(x, y, 0, 2, 2.0, &v) == MVL_ERR_ARGUMENT);
  CHECK(mvl_wasserstein(x, y, 2, 2, 0.5, &v) == MVL_ERR_DOMAIN);
}
