#include "darcysurrogate.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "dataset.hpp"
#include "experiment.hpp"
#include "model_io.hpp"

namespace {

using dfs::Error;
using dfs::ErrorCode;
using nlohmann::json;

thread_local std::string g_last_error;

dfs_status status_from(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return DFS_ERR_INVALID_ARGUMENT;
    case ErrorCode::InvalidData: return DFS_ERR_INVALID_DATA;
    case ErrorCode::Numerical: return DFS_ERR_NUMERICAL;
    case ErrorCode::Io: return DFS_ERR_IO;
    case ErrorCode::CorruptData: return DFS_ERR_CORRUPT_DATA;
    case ErrorCode::UnsupportedVersion: return DFS_ERR_UNSUPPORTED_VERSION;
    case ErrorCode::UndefinedMetric: return DFS_ERR_UNDEFINED_METRIC;
    case ErrorCode::Internal: return DFS_ERR_INTERNAL;
  }
  return DFS_ERR_INTERNAL;
}

template <typename F>
dfs_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return DFS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return DFS_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DFS_ERR_INTERNAL;
  }
}

// inline JSON (leading '{') or a path to a JSON file
json load_json_arg(const char* arg) {
  dfs::require(arg != nullptr, ErrorCode::InvalidArgument,
               "null JSON argument");
  std::string s(arg);
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && s[first] == '{') return json::parse(s);
  std::ifstream in(s);
  dfs::require(in.good(), ErrorCode::Io, "cannot open config file " + s);
  json j;
  in >> j;
  return j;
}

const char* require_cstr(const char* s, const char* what) {
  dfs::require(s != nullptr, ErrorCode::InvalidArgument,
               std::string("null argument: ") + what);
  return s;
}

}  // namespace

struct dfs_dataset {
  dfs::Dataset ds;
  std::string phase_str;
};

struct dfs_model {
  dfs::ModelBundle bundle;
};

extern "C" {

const char* dfs_version(void) { return "1.0.0"; }

const char* dfs_status_name(dfs_status status) {
  switch (status) {
    case DFS_OK: return "ok";
    case DFS_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case DFS_ERR_INVALID_DATA: return "invalid-data";
    case DFS_ERR_NUMERICAL: return "numerical-error";
    case DFS_ERR_IO: return "io-error";
    case DFS_ERR_CORRUPT_DATA: return "corrupt-data";
    case DFS_ERR_UNSUPPORTED_VERSION: return "unsupported-version";
    case DFS_ERR_UNDEFINED_METRIC: return "undefined-metric";
    case DFS_ERR_INTERNAL: return "internal-error";
  }
  return "internal-error";
}

const char* dfs_last_error(void) { return g_last_error.c_str(); }

dfs_status dfs_dataset_generate(const char* config_json, const char* out_dir,
                                int64_t num_samples, int64_t seed) {
  return guarded([&]() {
    const json j = load_json_arg(require_cstr(config_json, "config_json"));
    dfs::GenerationConfig cfg = dfs::generation_config_from_json(j);
    if (num_samples > 0) cfg.num_samples = static_cast<int>(num_samples);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    dfs::write_dataset(require_cstr(out_dir, "out_dir"),
                       dfs::generate_dataset(cfg));
  });
}

dfs_status dfs_train(const char* train_config_json, const char* data_dir,
                     const char* out_dir) {
  return guarded([&]() {
    const json j =
        load_json_arg(require_cstr(train_config_json, "train_config_json"));
    dfs::run_training(require_cstr(data_dir, "data_dir"),
                      require_cstr(out_dir, "out_dir"),
                      dfs::train_run_config_from_json(j));
  });
}

dfs_status dfs_evaluate(const char* model_dir, const char* data_dir,
                        const char* report_path) {
  return guarded([&]() {
    dfs::run_evaluation(require_cstr(model_dir, "model_dir"),
                        require_cstr(data_dir, "data_dir"),
                        require_cstr(report_path, "report_path"));
  });
}

dfs_status dfs_report_merge(const char* const* report_paths, size_t count,
                            const char* out_csv) {
  return guarded([&]() {
    dfs::require(report_paths != nullptr && count > 0,
                 ErrorCode::InvalidArgument, "no report paths");
    std::vector<std::string> paths;
    for (size_t i = 0; i < count; ++i)
      paths.emplace_back(require_cstr(report_paths[i], "report path"));
    dfs::merge_reports(paths, require_cstr(out_csv, "out_csv"));
  });
}

dfs_status dfs_run_experiment(const char* config_json, const char* workdir,
                              const char* report_path) {
  return guarded([&]() {
    const json j = load_json_arg(require_cstr(config_json, "config_json"));
    const json report = dfs::run_experiment(
        j, require_cstr(workdir, "workdir"),
        require_cstr(report_path, "report_path"));
    // a stage failure is a failed call even though the partial report
    // was written
    if (!report.at("failed_stage").is_null()) {
      const json& err = report.at("error");
      dfs::fail(ErrorCode::Internal,
                "stage " + report.at("failed_stage").get<std::string>() +
                    " failed: " + err.at("message").get<std::string>());
    }
  });
}

dfs_status dfs_dataset_open(const char* dir, dfs_dataset** out) {
  return guarded([&]() {
    dfs::require(out != nullptr, ErrorCode::InvalidArgument,
                 "null output handle");
    auto handle = std::make_unique<dfs_dataset>();
    handle->ds = dfs::read_dataset(require_cstr(dir, "dir"));
    handle->phase_str = dfs::to_string(handle->ds.manifest.phase);
    *out = handle.release();
  });
}

void dfs_dataset_close(dfs_dataset* ds) { delete ds; }

int64_t dfs_dataset_num_samples(const dfs_dataset* ds) {
  return ds ? ds->ds.manifest.num_samples : -1;
}

int64_t dfs_dataset_num_snapshots(const dfs_dataset* ds) {
  return ds ? static_cast<int64_t>(ds->ds.manifest.snapshot_steps.size()) : -1;
}

int64_t dfs_dataset_num_cells(const dfs_dataset* ds) {
  return ds ? ds->ds.manifest.grid.num_cells() : -1;
}

const char* dfs_dataset_phase(const dfs_dataset* ds) {
  return ds ? ds->phase_str.c_str() : "";
}

void dfs_dataset_grid_dims(const dfs_dataset* ds, int* nx, int* ny, int* nz) {
  if (!ds) return;
  if (nx) *nx = ds->ds.manifest.grid.nx;
  if (ny) *ny = ds->ds.manifest.grid.ny;
  if (nz) *nz = ds->ds.manifest.grid.nz;
}

dfs_status dfs_dataset_field(const dfs_dataset* ds, const char* name,
                             const double** data, int64_t* count) {
  return guarded([&]() {
    dfs::require(ds != nullptr && data != nullptr && count != nullptr,
                 ErrorCode::InvalidArgument, "null argument");
    const std::string field = require_cstr(name, "name");
    const std::vector<double>* v = nullptr;
    if (field == "perm")
      v = &ds->ds.perm;
    else if (field == "pressure")
      v = &ds->ds.pressure;
    else if (field == "water_saturation")
      v = &ds->ds.satw;
    dfs::require(v != nullptr && !v->empty(), ErrorCode::InvalidArgument,
                 "unknown or absent field: " + field);
    *data = v->data();
    *count = static_cast<int64_t>(v->size());
  });
}

dfs_status dfs_model_open(const char* dir, dfs_model** out) {
  return guarded([&]() {
    dfs::require(out != nullptr, ErrorCode::InvalidArgument,
                 "null output handle");
    auto handle = std::make_unique<dfs_model>();
    handle->bundle = dfs::read_model(require_cstr(dir, "dir"));
    *out = handle.release();
  });
}

void dfs_model_close(dfs_model* model) { delete model; }

int64_t dfs_model_parameter_count(const dfs_model* model) {
  return model ? static_cast<int64_t>(model->bundle.model.params.size()) : -1;
}

int64_t dfs_model_output_size(const dfs_model* model) {
  if (!model) return -1;
  const dfs::OperatorArch& a = model->bundle.model.arch;
  return static_cast<int64_t>(a.out_channels) * a.height * a.width;
}

const char* dfs_model_kind(const dfs_model* model) {
  return model ? model->bundle.model.arch.kind.c_str() : "";
}

dfs_status dfs_model_predict(const dfs_model* model, const double* perm,
                             int64_t num_cells, int t_step, double* out,
                             int64_t out_len) {
  return guarded([&]() {
    dfs::require(model != nullptr && perm != nullptr && out != nullptr,
                 ErrorCode::InvalidArgument, "null argument");
    const dfs::Grid& grid = model->bundle.grid;
    dfs::require(num_cells == grid.num_cells(), ErrorCode::InvalidArgument,
                 "permeability size does not match the model grid");
    dfs::require(out_len >= dfs_model_output_size(model),
                 ErrorCode::InvalidArgument, "output buffer too small");
    dfs::CellField k = dfs::make_cell_field(grid, 0.0, "m^2");
    std::copy(perm, perm + num_cells, k.values.begin());
    const std::vector<double> pred = dfs::predict(model->bundle, k, t_step);
    std::copy(pred.begin(), pred.end(), out);
  });
}

}  // extern "C"
