#include "efcil/efcil.h"

#include <algorithm>
#include <cstring>
#include <functional>
#include <string>

#include "efcil/commands.hpp"
#include "efcil/distributions.hpp"
#include "efcil/error.hpp"
#include "efcil/grid.hpp"
#include "efcil/learners.hpp"
#include "efcil/linalg.hpp"
#include "efcil/metrics.hpp"
#include "efcil/scenario.hpp"
#include "efcil/stats.hpp"

struct efcil_dataset {
  efcil::FeatureDataset value;
};

struct efcil_scenario {
  efcil::Scenario value;
};

struct efcil_accuracy {
  efcil::AccuracyMatrix value;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_message;

efcil_status to_status(efcil::ErrorCode code) {
  switch (code) {
    case efcil::ErrorCode::InvalidArgument: return EFCIL_ERR_INVALID_ARGUMENT;
    case efcil::ErrorCode::Parse: return EFCIL_ERR_PARSE;
    case efcil::ErrorCode::Io: return EFCIL_ERR_IO;
    case efcil::ErrorCode::Numeric: return EFCIL_ERR_NUMERIC;
    case efcil::ErrorCode::Config: return EFCIL_ERR_CONFIG;
    case efcil::ErrorCode::Infeasible: return EFCIL_ERR_INFEASIBLE;
  }
  return EFCIL_ERR_INTERNAL;
}

/// Runs `body` and translates exceptions; nothing propagates across the C boundary.
efcil_status guard(const std::function<void()>& body) {
  g_last_error.clear();
  try {
    body();
    return EFCIL_OK;
  } catch (const efcil::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return EFCIL_ERR_INTERNAL;
}

void require(bool condition, const char* what) {
  if (!condition) efcil::fail(efcil::ErrorCode::InvalidArgument, what);
}

void copy_string(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (buffer && capacity > 0) {
    const size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
  }
}

efcil::CommandOptions convert(const efcil_command_options* o) {
  require(o != nullptr, "options must not be NULL");
  efcil::CommandOptions c;
  if (o->config) c.config = o->config;
  if (o->out) c.out = o->out;
  if (o->has_seed) c.seed = o->seed;
  c.jobs = o->jobs;
  if (o->has_alpha) c.alpha = o->alpha;
  c.force_mixed = o->force_mixed != 0;
  for (size_t i = 0; i < o->n_results; ++i) {
    require(o->results && o->results[i], "results path must not be NULL");
    c.results.emplace_back(o->results[i]);
  }
  if (o->bundle) c.bundle = o->bundle;
  if (o->formats) c.formats = o->formats;
  if (o->data) c.data = o->data;
  if (o->train) c.train = o->train;
  if (o->incr) c.incr = o->incr;
  if (o->scenario) c.scenario = o->scenario;
  if (o->has_rep) c.rep = o->rep;
  return c;
}

int run_command(efcil::CommandResult (*command)(const efcil::CommandOptions&), const efcil_command_options* options) {
  g_last_message.clear();
  efcil::CommandOptions converted;
  const efcil_status st = guard([&] { converted = convert(options); });
  if (st != EFCIL_OK) {
    g_last_message = g_last_error;
    return static_cast<int>(efcil::ExitCode::Config);
  }
  const efcil::CommandResult result = command(converted);
  g_last_message = result.message;
  return static_cast<int>(result.code);
}

efcil::LearnerParams convert(const efcil_learner_params& p) {
  efcil::LearnerParams out;
  out.dslda.shrinkage = p.dslda_shrinkage;
  out.fetril.learning_rate = p.fetril_learning_rate;
  out.fetril.epochs = p.fetril_epochs;
  out.fetril.weight_decay = p.fetril_weight_decay;
  out.bsil.learning_rate = p.bsil_learning_rate;
  out.bsil.epochs = p.bsil_epochs;
  out.bsil.anchor_weight = p.bsil_anchor_weight;
  out.bsil.initial_scale = p.bsil_initial_scale;
  out.seed = p.seed;
  return out;
}

}  // namespace

extern "C" {

const char* efcil_version(void) { return efcil::artifact_version(); }

const char* efcil_last_error(void) { return g_last_error.c_str(); }

const char* efcil_last_message(void) { return g_last_message.c_str(); }

const char* efcil_status_name(efcil_status status) {
  switch (status) {
    case EFCIL_OK: return "ok";
    case EFCIL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case EFCIL_ERR_PARSE: return "parse error";
    case EFCIL_ERR_IO: return "i/o error";
    case EFCIL_ERR_NUMERIC: return "numeric error";
    case EFCIL_ERR_CONFIG: return "config error";
    case EFCIL_ERR_INFEASIBLE: return "infeasible";
    case EFCIL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

efcil_status efcil_dataset_synth(const efcil_synth_spec* spec, efcil_dataset** out) {
  return guard([&] {
    require(spec && out, "spec and out must not be NULL");
    *out = nullptr;
    efcil::SynthSpec s;
    if (spec->name) s.name = spec->name;
    s.n_classes = spec->n_classes;
    s.dim = spec->dim;
    s.n_train = spec->n_train;
    s.n_test = spec->n_test;
    s.separation = spec->separation;
    s.anisotropy = spec->anisotropy;
    s.seed = spec->seed;
    *out = new efcil_dataset{efcil::synth_features(s)};
  });
}

efcil_status efcil_dataset_load(const char* path, efcil_dataset** out) {
  return guard([&] {
    require(path && out, "path and out must not be NULL");
    *out = nullptr;
    *out = new efcil_dataset{efcil::load_features(path)};
  });
}

efcil_status efcil_dataset_save(const efcil_dataset* ds, const char* path) {
  return guard([&] {
    require(ds && path, "dataset and path must not be NULL");
    efcil::save_features(ds->value, path);
  });
}

efcil_status efcil_dataset_shape(const efcil_dataset* ds, size_t* samples, size_t* dim, size_t* classes) {
  return guard([&] {
    require(ds != nullptr, "dataset must not be NULL");
    if (samples) *samples = ds->value.size();
    if (dim) *dim = ds->value.dim();
    if (classes) *classes = ds->value.classes().size();
  });
}

efcil_status efcil_dataset_stats_get(const efcil_dataset* ds, efcil_dataset_stats* out) {
  return guard([&] {
    require(ds && out, "dataset and out must not be NULL");
    const efcil::DatasetStats s = efcil::dataset_stats(ds->value);
    *out = {s.n_classes, s.n_mean, s.sigma_train, s.mu_test, s.sigma_test, s.small ? 1 : 0, s.width};
  });
}

efcil_status efcil_dataset_classes(const efcil_dataset* ds, int32_t* ids, size_t capacity, size_t* count) {
  return guard([&] {
    require(ds != nullptr, "dataset must not be NULL");
    const auto classes = ds->value.classes();
    if (count) *count = classes.size();
    for (size_t i = 0; ids && i < std::min(capacity, classes.size()); ++i) ids[i] = classes[i];
  });
}

void efcil_dataset_free(efcil_dataset* ds) { delete ds; }

efcil_status efcil_scenario_build(const int32_t* class_ids, size_t n, efcil_scenario_kind kind, int n_incr_steps,
                                  uint64_t seed, efcil_scenario** out) {
  return guard([&] {
    require(out != nullptr, "out must not be NULL");
    require(class_ids != nullptr || n == 0, "class_ids must not be NULL");
    require(kind == EFCIL_SCENARIO_EQUAL || kind == EFCIL_SCENARIO_HALF, "unknown scenario kind");
    *out = nullptr;
    const std::span<const int32_t> ids(class_ids, n);
    const auto k = kind == EFCIL_SCENARIO_HALF ? efcil::ScenarioKind::Half : efcil::ScenarioKind::Equal;
    *out = new efcil_scenario{efcil::build_scenario(ids, k, n_incr_steps, seed)};
  });
}

size_t efcil_scenario_steps(const efcil_scenario* sc) { return sc ? sc->value.num_steps() : 0; }

efcil_status efcil_scenario_step(const efcil_scenario* sc, size_t step, int32_t* ids, size_t capacity, size_t* count) {
  return guard([&] {
    require(sc != nullptr, "scenario must not be NULL");
    require(step < sc->value.num_steps(), "step index out of range");
    const auto& s = sc->value.steps[step];
    if (count) *count = s.size();
    for (size_t i = 0; ids && i < std::min(capacity, s.size()); ++i) ids[i] = s[i];
  });
}

efcil_status efcil_scenario_b(const efcil_scenario* sc, int64_t* numerator, int64_t* denominator) {
  return guard([&] {
    require(sc && numerator && denominator, "arguments must not be NULL");
    *numerator = sc->value.b.num();
    *denominator = sc->value.b.den();
  });
}

efcil_status efcil_scenario_text(const efcil_scenario* sc, char* buffer, size_t capacity, size_t* needed) {
  return guard([&] {
    require(sc != nullptr, "scenario must not be NULL");
    copy_string(sc->value.to_text(), buffer, capacity, needed);
  });
}

void efcil_scenario_free(efcil_scenario* sc) { delete sc; }

void efcil_learner_params_default(efcil_learner_params* params) {
  if (!params) return;
  const efcil::LearnerParams d;
  *params = {d.dslda.shrinkage,  d.fetril.learning_rate, d.fetril.epochs,         d.fetril.weight_decay,
             d.bsil.learning_rate, d.bsil.epochs,        d.bsil.anchor_weight,    d.bsil.initial_scale,
             d.seed};
}

efcil_status efcil_run_incremental(efcil_learner_kind kind, const efcil_dataset* ds, const efcil_scenario* sc,
                                   const efcil_learner_params* params, efcil_accuracy** out) {
  return guard([&] {
    require(ds && sc && out, "dataset, scenario and out must not be NULL");
    *out = nullptr;
    efcil::LearnerKind k;
    switch (kind) {
      case EFCIL_LEARNER_DSLDA: k = efcil::LearnerKind::Dslda; break;
      case EFCIL_LEARNER_FETRIL: k = efcil::LearnerKind::Fetril; break;
      case EFCIL_LEARNER_BSIL: k = efcil::LearnerKind::Bsil; break;
      case EFCIL_LEARNER_NCM: k = efcil::LearnerKind::Ncm; break;
      default: efcil::fail(efcil::ErrorCode::InvalidArgument, "unknown learner kind");
    }
    efcil_learner_params p;
    efcil_learner_params_default(&p);
    if (params) p = *params;
    *out = new efcil_accuracy{efcil::run_incremental(k, ds->value, sc->value, convert(p))};
  });
}

efcil_status efcil_accuracy_create(size_t steps, efcil_accuracy** out) {
  return guard([&] {
    require(out != nullptr, "out must not be NULL");
    *out = nullptr;
    *out = new efcil_accuracy{efcil::AccuracyMatrix(steps)};
  });
}

size_t efcil_accuracy_steps(const efcil_accuracy* acc) { return acc ? acc->value.steps() : 0; }

efcil_status efcil_accuracy_set(efcil_accuracy* acc, size_t step, size_t subset, double value) {
  return guard([&] {
    require(acc != nullptr, "matrix must not be NULL");
    acc->value.set(step, subset, value);
  });
}

efcil_status efcil_accuracy_get(const efcil_accuracy* acc, size_t step, size_t subset, double* value) {
  return guard([&] {
    require(acc && value, "matrix and value must not be NULL");
    *value = acc->value.at(step, subset);
  });
}

efcil_status efcil_accuracy_set_cumulative(efcil_accuracy* acc, size_t step, double value) {
  return guard([&] {
    require(acc != nullptr, "matrix must not be NULL");
    acc->value.set_cumulative(step, value);
  });
}

efcil_status efcil_accuracy_get_cumulative(const efcil_accuracy* acc, size_t step, double* value) {
  return guard([&] {
    require(acc && value, "matrix and value must not be NULL");
    *value = acc->value.cumulative(step);
  });
}

efcil_status efcil_accuracy_csv(const efcil_accuracy* acc, char* buffer, size_t capacity, size_t* needed) {
  return guard([&] {
    require(acc != nullptr, "matrix must not be NULL");
    copy_string(acc->value.to_csv(), buffer, capacity, needed);
  });
}

void efcil_accuracy_free(efcil_accuracy* acc) { delete acc; }

efcil_status efcil_metrics_compute(const efcil_accuracy* acc, int64_t b_num, int64_t b_den, efcil_metric_set* out) {
  return guard([&] {
    require(acc && out, "matrix and out must not be NULL");
    const efcil::MetricSet m = efcil::compute_metrics(acc->value, efcil::Fraction(b_num, b_den));
    *out = {m.acc1, m.avg_acc, m.forgetting, m.acc_k};
  });
}

efcil_status efcil_ols(const double* x_row_major, const double* y, size_t n, size_t p, double* coefficients,
                       double* std_errors, double* p_values, double* r2, double* aic) {
  return guard([&] {
    require(x_row_major && y, "x and y must not be NULL");
    require(n > 0 && p > 0, "n and p must be positive");
    efcil::DesignMatrix design;
    design.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        x_row_major, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    design.y = Eigen::Map<const Eigen::VectorXd>(y, static_cast<Eigen::Index>(n));
    for (size_t j = 0; j < p; ++j) design.columns.push_back({"x" + std::to_string(j), "x" + std::to_string(j)});
    const efcil::RegressionFit fit = efcil::ols_fit(design);
    for (size_t j = 0; j < p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      if (coefficients) coefficients[j] = fit.coefficients(jj);
      if (std_errors) std_errors[j] = fit.std_errors(jj);
      if (p_values) p_values[j] = fit.p_values(jj);
    }
    if (r2) *r2 = fit.r2;
    if (aic) *aic = fit.aic;
  });
}

efcil_status efcil_student_t_pvalue(double t, double df, double* p) {
  return guard([&] {
    require(p != nullptr, "p must not be NULL");
    *p = efcil::student_t_pvalue(t, df);
  });
}

efcil_status efcil_f_pvalue(double f, double df1, double df2, double* p) {
  return guard([&] {
    require(p != nullptr, "p must not be NULL");
    *p = efcil::f_pvalue(f, df1, df2);
  });
}

efcil_status efcil_inv_norm_cdf(double q, double* x) {
  return guard([&] {
    require(x != nullptr, "x must not be NULL");
    *x = efcil::inv_norm_cdf(q);
  });
}

efcil_status efcil_min_eigenvalue(const double* a_row_major, size_t n, double* value) {
  return guard([&] {
    require(a_row_major && value, "arguments must not be NULL");
    require(n > 0, "n must be positive");
    const Eigen::MatrixXd a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        a_row_major, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()),
            "matrix must be symmetric");
    *value = efcil::jacobi_eigenvalues(a).front();
  });
}

void efcil_command_options_init(efcil_command_options* options) {
  if (!options) return;
  std::memset(options, 0, sizeof *options);
}

int efcil_cmd_synth(const efcil_command_options* options) { return run_command(efcil::cmd_synth, options); }
int efcil_cmd_run(const efcil_command_options* options) { return run_command(efcil::cmd_run, options); }
int efcil_cmd_grid(const efcil_command_options* options) { return run_command(efcil::cmd_grid, options); }
int efcil_cmd_analyze(const efcil_command_options* options) { return run_command(efcil::cmd_analyze, options); }
int efcil_cmd_report(const efcil_command_options* options) { return run_command(efcil::cmd_report, options); }

}  // extern "C"
