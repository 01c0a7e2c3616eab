#include "mvlab/mvlab.h"

#include "mvlab/chaos.hpp"
#include "mvlab/config.hpp"
#include "mvlab/runner.hpp"
#include "mvlab/wasserstein.hpp"

#include <exception>
#include <string>
#include <vector>

struct mvl_config {
  mvlab::ExperimentConfig config;
};

struct mvl_result {
  bool passed = false;
  std::string summary;
};

namespace {

thread_local std::string g_error;
thread_local std::vector<std::string> g_violations;

int fail(int code, const std::string& what) {
  g_error = what;
  return code;
}

int code_for(mvlab::ErrorKind kind) {
  switch (kind) {
    case mvlab::ErrorKind::kConfig: return MVL_ERR_CONFIG;
    case mvlab::ErrorKind::kDivergence: return MVL_ERR_DIVERGENCE;
    case mvlab::ErrorKind::kDomain:
    case mvlab::ErrorKind::kIntegrability: return MVL_ERR_DOMAIN;
    case mvlab::ErrorKind::kIo: return MVL_ERR_IO;
    case mvlab::ErrorKind::kNonConvergence: return MVL_ERR_NONCONVERGENCE;
    case mvlab::ErrorKind::kSize: return MVL_ERR_SIZE;
  }
  return MVL_ERR_INTERNAL;
}

template <class Fn>
int guarded(Fn&& fn) {
  g_error.clear();
  try {
    return fn();
  } catch (const mvlab::ConfigError& e) {
    g_violations = e.violations();
    return fail(MVL_ERR_CONFIG, e.what());
  } catch (const mvlab::Error& e) {
    return fail(code_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MVL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MVL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MVL_ERR_INTERNAL, "unknown error");
  }
}

}  // namespace

extern "C" {

const char* mvl_version(void) { return mvlab::kVersion; }

const char* mvl_last_error(void) { return g_error.c_str(); }

size_t mvl_last_violation_count(void) { return g_violations.size(); }

const char* mvl_last_violation(size_t index) {
  return index < g_violations.size() ? g_violations[index].c_str() : nullptr;
}

int mvl_config_parse(const char* text, mvl_config** out) {
  if (!text || !out) return fail(MVL_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  g_violations.clear();
  return guarded([&] {
    *out = new mvl_config{mvlab::parse_config(text)};
    return MVL_OK;
  });
}

int mvl_config_load(const char* path, mvl_config** out) {
  if (!path || !out) return fail(MVL_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  g_violations.clear();
  return guarded([&] {
    *out = new mvl_config{mvlab::load_config(path)};
    return MVL_OK;
  });
}

void mvl_config_free(mvl_config* config) { delete config; }

int mvl_config_set_seed(mvl_config* config, uint64_t seed) {
  if (!config) return fail(MVL_ERR_ARGUMENT, "null config");
  config->config.seed = seed;
  config->config.source["seed"] = seed;
  return MVL_OK;
}

uint64_t mvl_config_seed(const mvl_config* config) { return config ? config->config.seed : 0; }

uint64_t mvl_config_hash(const mvl_config* config) {
  return config ? mvlab::config_hash(config->config) : 0;
}

size_t mvl_config_warning_count(const mvl_config* config) {
  return config ? config->config.warnings.size() : 0;
}

const char* mvl_config_warning(const mvl_config* config, size_t index) {
  if (!config || index >= config->config.warnings.size()) return nullptr;
  return config->config.warnings[index].c_str();
}

int mvl_subcommand_valid(const char* name) {
  return name && mvlab::parse_subcommand(name) ? 1 : 0;
}

int mvl_run(const mvl_config* config, const char* subcommand, const char* out_dir, int jobs,
            mvl_result** out) {
  if (!config || !subcommand || !out_dir || !out) return fail(MVL_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  const auto sub = mvlab::parse_subcommand(subcommand);
  if (!sub) return fail(MVL_ERR_ARGUMENT, std::string("unknown subcommand '") + subcommand + "'");
  if (jobs < 1) return fail(MVL_ERR_ARGUMENT, "jobs must be >= 1");
  g_violations.clear();
  return guarded([&] {
    // Re-validate with the subcommand's own preconditions.
    const auto cfg = mvlab::parse_config(config->config.source.dump(), sub);
    const auto res = mvlab::run(cfg, *sub, out_dir, jobs);
    auto* r = new mvl_result;
    r->passed = res.verdict == mvlab::Verdict::kPass;
    r->summary = res.summary.dump(2);
    *out = r;
    return r->passed ? MVL_OK : MVL_VERDICT_FAIL;
  });
}

int mvl_result_passed(const mvl_result* result) { return result && result->passed ? 1 : 0; }

const char* mvl_result_summary_json(const mvl_result* result) {
  return result ? result->summary.c_str() : nullptr;
}

void mvl_result_free(mvl_result* result) { delete result; }

int mvl_phi_rate(double p, double beta, int d, double* out) {
  if (!out) return fail(MVL_ERR_ARGUMENT, "null output");
  return guarded([&] {
    *out = mvlab::phi_rate(p, beta, d);
    return MVL_OK;
  });
}

int mvl_wasserstein(const double* x, const double* y, size_t n, int dim, double p, double* out) {
  if (!x || !y || !out) return fail(MVL_ERR_ARGUMENT, "null argument");
  if (n == 0 || dim < 1 || dim > mvlab::kMaxDim) return fail(MVL_ERR_ARGUMENT, "bad cloud shape");
  return guarded([&] {
    Eigen::MatrixXd a(dim, static_cast<Eigen::Index>(n)), b(dim, static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      for (int k = 0; k < dim; ++k) {
        a(k, static_cast<Eigen::Index>(i)) = x[i * static_cast<size_t>(dim) + static_cast<size_t>(k)];
        b(k, static_cast<Eigen::Index>(i)) = y[i * static_cast<size_t>(dim) + static_cast<size_t>(k)];
      }
    }
    *out = mvlab::w_p_exact(mvlab::EmpiricalMeasure(a), mvlab::EmpiricalMeasure(b), p).distance;
    return MVL_OK;
  });
}

}  // extern "C"
