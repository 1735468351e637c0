#include "experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace dfs {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

json to_json(const TrainRunConfig& cfg) {
  json j;
  j["model"] = cfg.model_kind;
  j["feature"] = to_string(cfg.feature);
  j["sampler"] = to_string(cfg.strategy);
  j["init"] = cfg.init;
  j["events"] = cfg.events;
  j["per_event"] = cfg.per_event;
  j["interval"] = cfg.interval;
  j["seed"] = cfg.seed;
  j["train"] = {{"lr", cfg.train.lr},
                {"epochs", cfg.train.epochs},
                {"iterations", cfg.train.iterations},
                {"batch_size", cfg.train.batch_size}};
  j["arch"] = {{"base_width", cfg.base_width},
               {"levels", cfg.levels},
               {"q", cfg.q},
               {"trunk_dim", cfg.trunk_dim},
               {"trunk_hidden", cfg.trunk_hidden}};
  j["pca_threshold"] = cfg.pca_threshold;
  j["h_candidates"] = cfg.h_candidates;
  j["paper_dof"] = cfg.paper_dof;
  return j;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainRunConfig train_run_config_from_json(const json& j) {
  TrainRunConfig cfg;
  maybe(j, "model", cfg.model_kind);
  require(cfg.model_kind == "aronet" || cfg.model_kind == "arunet",
          ErrorCode::InvalidArgument,
          "unknown model kind: " + cfg.model_kind);
  if (j.contains("feature"))
    cfg.feature = feature_from_string(j.at("feature"));
  if (j.contains("sampler"))
    cfg.strategy = strategy_from_string(j.at("sampler"));
  maybe(j, "init", cfg.init);
  maybe(j, "events", cfg.events);
  maybe(j, "per_event", cfg.per_event);
  maybe(j, "interval", cfg.interval);
  maybe(j, "seed", cfg.seed);
  if (j.contains("train")) {
    const json& t = j.at("train");
    maybe(t, "lr", cfg.train.lr);
    maybe(t, "epochs", cfg.train.epochs);
    maybe(t, "iterations", cfg.train.iterations);
    maybe(t, "batch_size", cfg.train.batch_size);
  }
  if (j.contains("arch")) {
    const json& a = j.at("arch");
    maybe(a, "base_width", cfg.base_width);
    maybe(a, "levels", cfg.levels);
    maybe(a, "q", cfg.q);
    maybe(a, "trunk_dim", cfg.trunk_dim);
    maybe(a, "trunk_hidden", cfg.trunk_hidden);
  }
  maybe(j, "pca_threshold", cfg.pca_threshold);
  maybe(j, "h_candidates", cfg.h_candidates);
  maybe(j, "paper_dof", cfg.paper_dof);
  cfg.train.seed = cfg.seed;
  return cfg;
}

std::vector<double> raw_labels_for_sample(const Dataset& ds, int sample) {
  const int cells = ds.cells();
  const int m = ds.times();
  const bool two = ds.manifest.phase == Phase::Two;
  const int out_c_per_time = two ? 2 * cells : cells;
  std::vector<double> out;
  out.reserve(static_cast<size_t>(m) * out_c_per_time);
  for (int t = 0; t < m; ++t) {
    const auto p = ds.pressure_snapshot(sample, t);
    out.insert(out.end(), p.begin(), p.end());
    if (two) {
      const auto s = ds.satw_snapshot(sample, t);
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  return out;
}

Labeler make_fvm_labeler(const GenerationConfig& cfg) {
  const std::vector<int> steps = cfg.snapshot_steps();
  return [cfg, steps](const CellField& k) {
    std::vector<double> out;
    if (cfg.phase == Phase::Single) {
      const PressureTrajectory traj =
          simulate_single_phase(k, cfg.single, cfg.wells);
      for (int s : steps) {
        const CellField& p = traj.pressure[s - 1];
        out.insert(out.end(), p.values.begin(), p.values.end());
      }
    } else {
      const TwoPhaseTrajectory traj = simulate_two_phase(k, cfg.two, cfg.wells);
      for (int s : steps) {
        const CellField& p = traj.pressure[s - 1];
        const CellField& sw = traj.sw[s - 1];
        out.insert(out.end(), p.values.begin(), p.values.end());
        out.insert(out.end(), sw.values.begin(), sw.values.end());
      }
    }
    return out;
  };
}

namespace {

CellField field_from_span(const Grid& grid, std::span<const double> values) {
  CellField f = make_cell_field(grid, 0.0, "m^2");
  std::copy(values.begin(), values.end(), f.values.begin());
  return f;
}

struct PreparedData {
  GenerationConfig gen;
  double trans_viscosity = 1.0;
  int in_channels = 0, out_channels = 0;
  AdaptivePool initial;
  AdaptivePool rar_pool;
  NormStats stats;
};

PreparedData prepare_pools(const Dataset& ds, const TrainRunConfig& cfg) {
  PreparedData prep;
  prep.gen = generation_config_from_json(ds.manifest.config);
  const Grid& grid = ds.manifest.grid;
  const bool two = ds.manifest.phase == Phase::Two;
  prep.trans_viscosity =
      ds.manifest.phase == Phase::Single ? prep.gen.single.viscosity : 1.0;
  prep.in_channels = input_channel_count(grid, cfg.feature);
  prep.out_channels = (two ? 2 : 1) * grid.nz;

  require(cfg.init >= 2, ErrorCode::InvalidArgument,
          "initial training size must be >= 2");
  require(cfg.init <= ds.manifest.num_samples, ErrorCode::InvalidArgument,
          "initial training size exceeds dataset");

  const int plane = grid.nx * grid.ny;
  std::vector<std::vector<double>> raw_inputs, raw_labels;
  for (int i = 0; i < cfg.init; ++i) {
    raw_inputs.push_back(build_input_channels(
        field_from_span(grid, ds.perm_sample(i)), prep.trans_viscosity,
        cfg.feature));
    raw_labels.push_back(raw_labels_for_sample(ds, i));
  }
  prep.stats = compute_norm_stats(raw_inputs, raw_labels, prep.in_channels,
                                  prep.out_channels, plane);

  auto init_set = [&](AdaptivePool& pool) {
    pool.set.in_channels = prep.in_channels;
    pool.set.out_channels = prep.out_channels;
    pool.set.height = grid.ny;
    pool.set.width = grid.nx;
    pool.set.snapshot_steps = ds.manifest.snapshot_steps;
  };
  init_set(prep.initial);
  init_set(prep.rar_pool);

  for (int i = 0; i < ds.manifest.num_samples; ++i) {
    AdaptivePool& pool = i < cfg.init ? prep.initial : prep.rar_pool;
    append_sample(pool, field_from_span(grid, ds.perm_sample(i)),
                  raw_labels_for_sample(ds, i), prep.stats, cfg.feature,
                  prep.trans_viscosity);
  }
  return prep;
}

}  // namespace

void run_training(const std::string& data_dir, const std::string& out_dir,
                  const TrainRunConfig& cfg) {
  const Dataset ds = read_dataset(data_dir);
  const Grid& grid = ds.manifest.grid;
  PreparedData prep = prepare_pools(ds, cfg);

  OperatorArch arch;
  arch.kind = cfg.model_kind;
  arch.in_channels = prep.in_channels;
  arch.out_channels = prep.out_channels;
  arch.height = grid.ny;
  arch.width = grid.nx;
  arch.base_width = cfg.base_width;
  arch.levels = cfg.levels;
  arch.q = cfg.q;
  arch.trunk_dim = cfg.trunk_dim;
  arch.trunk_hidden = cfg.trunk_hidden;

  OperatorModel model = make_operator_model(arch, cfg.seed);
  model.stats = prep.stats;

  SamplerConfig scfg;
  scfg.strategy = cfg.strategy;
  scfg.interval = cfg.interval;
  scfg.events = cfg.events;
  scfg.per_event = cfg.per_event;
  scfg.pca_threshold = cfg.pca_threshold;
  scfg.h_candidates = cfg.h_candidates;
  scfg.paper_dof = cfg.paper_dof;
  scfg.seed = cfg.seed;

  const Labeler labeler = make_fvm_labeler(prep.gen);
  const GaussianFieldSampler sampler(grid, prep.gen.covariance);
  const FieldSampler field_sampler = [&sampler](std::uint64_t seed) {
    return sampler.sample_permeability(seed);
  };

  const auto t0 = Clock::now();
  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  AdaptiveResult result = adaptive_training_loop(
      model, prep.initial, labeler, field_sampler,
      cfg.strategy == Strategy::Rar ? &prep.rar_pool : nullptr, scfg, tcfg,
      cfg.feature, prep.trans_viscosity);
  const double training_s = seconds_since(t0);

  json growth = json::array();
  for (const GrowthEvent& ev : result.growth)
    growth.push_back(json{{"step", ev.step},
                          {"strategy", ev.strategy},
                          {"requested", ev.requested},
                          {"added", ev.added},
                          {"train_size", ev.train_size},
                          {"chosen_m", ev.chosen_m},
                          {"warnings", ev.warnings}});

  ModelBundle bundle;
  bundle.model = std::move(model);
  bundle.feature = cfg.feature;
  bundle.phase = ds.manifest.phase;
  bundle.grid = grid;
  bundle.snapshot_steps = ds.manifest.snapshot_steps;
  bundle.trans_viscosity = prep.trans_viscosity;
  bundle.provenance = json{
      {"train_config", to_json(cfg)},
      {"dataset_config_hash", ds.manifest.config_hash},
      {"dataset_content_hash", ds.manifest.content_hash},
      {"dataset_seed", ds.manifest.seed},
      {"growth_log", growth},
      {"final_train_size", prep.initial.size()},
      {"loss_history", result.loss_history}};
  write_model(out_dir, bundle);

  // wall-clock timings stay outside the model directory so reruns remain
  // byte-identical; the evaluation report carries them instead
  json timing{{"training_s", training_s},
              {"sampling_s", result.sampling_seconds},
              {"labeling_s", result.labeling_seconds}};
  std::ofstream tf(fs::path(out_dir) / "timings.json");
  tf << timing.dump(2) << "\n";
}

namespace {

json histogram_to_json(const Histogram& h) {
  return json{{"edges", h.edges}, {"counts", h.counts}};
}

struct FieldSlice {
  std::string name;
  int channel_offset = 0;  // first channel of this field in the output
  int channels = 0;        // nz channels per field
};

}  // namespace

json run_evaluation(const std::string& model_dir, const std::string& data_dir,
                    const std::string& report_path) {
  const auto t0 = Clock::now();
  const ModelBundle bundle = read_model(model_dir);
  const Dataset ds = read_dataset(data_dir);
  const Grid& grid = ds.manifest.grid;
  require(grid == bundle.grid, ErrorCode::InvalidArgument,
          "dataset grid does not match the model grid");
  require(ds.manifest.phase == bundle.phase, ErrorCode::InvalidArgument,
          "dataset phase does not match the model phase");
  require(ds.manifest.snapshot_steps == bundle.snapshot_steps,
          ErrorCode::InvalidArgument,
          "dataset snapshot schedule does not match the model");

  const int n = ds.manifest.num_samples;
  const int m = ds.times();
  const int cells = grid.num_cells();
  const bool two = bundle.phase == Phase::Two;

  const GenerationConfig gen = generation_config_from_json(ds.manifest.config);
  std::vector<int> producer_cells;
  for (const Well& w : gen.wells)
    if (w.kind == WellKind::Producer) producer_cells.push_back(w.cell);

  std::vector<FieldSlice> slices{{"pressure", 0, grid.nz}};
  if (two) slices.push_back({"water_saturation", grid.nz, grid.nz});

  // per field: concatenated predictions/labels per sample over all times
  std::vector<std::vector<std::vector<double>>> preds(
      slices.size(), std::vector<std::vector<double>>(n));
  std::vector<std::vector<std::vector<double>>> labels = preds;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const CellField k = [&] {
      CellField f = make_cell_field(grid, 0.0, "m^2");
      const auto span = ds.perm_sample(i);
      std::copy(span.begin(), span.end(), f.values.begin());
      return f;
    }();
    for (int t = 0; t < m; ++t) {
      const std::vector<double> out =
          predict(bundle, k, ds.manifest.snapshot_steps[t]);
      for (size_t f = 0; f < slices.size(); ++f) {
        const auto& slice = slices[f];
        const double* start =
            out.data() + static_cast<size_t>(slice.channel_offset) *
                             grid.nx * grid.ny;
        preds[f][i].insert(preds[f][i].end(), start, start + cells);
        const auto lab = f == 0 ? ds.pressure_snapshot(i, t)
                                : ds.satw_snapshot(i, t);
        labels[f][i].insert(labels[f][i].end(), lab.begin(), lab.end());
      }
    }
  }

  json metrics;
  for (size_t f = 0; f < slices.size(); ++f) {
    std::vector<double> per_sample(n), per_sample_well(n);
    double mse_num = 0.0;
    size_t mse_count = 0;
    for (int i = 0; i < n; ++i) {
      per_sample[i] = relative_error(preds[f][i], labels[f][i]);
      if (!producer_cells.empty())
        per_sample_well[i] = well_block_error(preds[f][i], labels[f][i],
                                              cells, producer_cells);
      for (size_t j = 0; j < preds[f][i].size(); ++j) {
        const double d = preds[f][i][j] - labels[f][i][j];
        mse_num += d * d;
      }
      mse_count += preds[f][i].size();
    }
    const double mre =
        std::accumulate(per_sample.begin(), per_sample.end(), 0.0) / n;
    const double well_mre =
        producer_cells.empty()
            ? 0.0
            : std::accumulate(per_sample_well.begin(), per_sample_well.end(),
                              0.0) / n;
    json field;
    field["mre"] = mre;
    field["well_mre"] = well_mre;
    field["mse"] = mse_num / static_cast<double>(mse_count);
    field["per_sample"] = per_sample;
    field["per_sample_well"] = per_sample_well;
    field["histogram"] = histogram_to_json(log10_histogram(per_sample, 30));
    field["well_histogram"] =
        producer_cells.empty()
            ? json()
            : histogram_to_json(log10_histogram(per_sample_well, 30));
    metrics[slices[f].name] = field;
  }

  json report;
  report["format_version"] = 1;
  report["kind"] = "evaluation";
  report["model"] = {{"dir", model_dir},
                     {"kind", bundle.model.arch.kind},
                     {"feature", to_string(bundle.feature)},
                     {"param_count", static_cast<long long>(
                                         bundle.model.params.size())},
                     {"provenance", bundle.provenance}};
  report["dataset"] = {{"dir", data_dir},
                       {"num_samples", n},
                       {"config_hash", ds.manifest.config_hash},
                       {"content_hash", ds.manifest.content_hash},
                       {"seed", ds.manifest.seed}};
  report["snapshot_steps"] = ds.manifest.snapshot_steps;
  report["metrics"] = metrics;
  report["timings"] = {{"evaluation_s", seconds_since(t0)}};

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    require(out.good(), ErrorCode::Io, "cannot write report " + report_path);
    out << report.dump(2) << "\n";
  }
  return report;
}

void merge_reports(const std::vector<std::string>& report_paths,
                   const std::string& out_csv) {
  require(!report_paths.empty(), ErrorCode::InvalidArgument,
          "no reports to merge");
  std::ofstream out(out_csv);
  require(out.good(), ErrorCode::Io, "cannot write " + out_csv);
  out << "report,model,feature,sampler,field,mre,well_mre,mse,num_samples,"
         "dataset_hash,training_s,sampling_s,evaluation_s\n";
  for (const std::string& path : report_paths) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Io, "cannot open report " + path);
    json report;
    try {
      in >> report;
    } catch (const json::exception& e) {
      fail(ErrorCode::CorruptData,
           "bad report " + path + ": " + e.what());
    }
    const json& j = report.contains("evaluation") &&
                            !report.at("evaluation").is_null()
                        ? report.at("evaluation")
                        : report;
    if (!j.contains("metrics")) continue;  // partial report without metrics
    const json model = j.value("model", json::object());
    const json prov = model.value("provenance", json::object());
    const json tc = prov.value("train_config", json::object());
    const json timings = j.value("timings", json::object());
    const json top_timings = report.value("timings", json::object());
    for (const auto& [field, metric] : j.at("metrics").items()) {
      out << path << ',' << model.value("kind", "") << ','
          << model.value("feature", "") << ',' << tc.value("sampler", "")
          << ',' << field << ',' << metric.at("mre").get<double>() << ','
          << metric.at("well_mre").get<double>() << ','
          << metric.at("mse").get<double>() << ','
          << j.at("dataset").at("num_samples").get<int>() << ','
          << j.at("dataset").value("content_hash", "") << ','
          << top_timings.value("training_s", 0.0) << ','
          << top_timings.value("sampling_s", 0.0) << ','
          << timings.value("evaluation_s", 0.0) << "\n";
    }
  }
}

json run_experiment(const json& config, const std::string& workdir,
                    const std::string& report_path) {
  fs::create_directories(workdir);
  const fs::path root(workdir);
  json report;
  report["format_version"] = 1;
  report["kind"] = "experiment";
  report["config"] = config;
  json timings = json::object();

  auto write_report = [&]() {
    report["timings"] = timings;
    if (!report_path.empty()) {
      std::ofstream out(report_path);
      require(out.good(), ErrorCode::Io, "cannot write report " + report_path);
      out << report.dump(2) << "\n";
    }
  };

  std::string stage = "generate-train-data";
  try {
    const bool reuse = config.value("reuse_data", false);
    const fs::path train_dir = root / "data_train";
    const fs::path test_dir = root / "data_test";

    auto generate = [&](const char* key, const fs::path& dir,
                        const char* timing_key) {
      if (reuse && fs::exists(dir / "manifest.json")) return;
      const auto t0 = Clock::now();
      const GenerationConfig gen = generation_config_from_json(
          config.at("generate").at(key));
      write_dataset(dir.string(), generate_dataset(gen));
      timings[timing_key] = seconds_since(t0);
    };
    generate("train", train_dir, "simulation_train_s");
    stage = "generate-test-data";
    generate("test", test_dir, "simulation_test_s");

    stage = "train";
    const TrainRunConfig tcfg =
        train_run_config_from_json(config.at("train"));
    const fs::path model_dir = root / "model";
    const auto t0 = Clock::now();
    run_training(train_dir.string(), model_dir.string(), tcfg);
    timings["training_s"] = seconds_since(t0);
    {
      std::ifstream tf(model_dir / "timings.json");
      if (tf.good()) {
        json t;
        tf >> t;
        timings["sampling_s"] = t.value("sampling_s", 0.0);
        timings["labeling_s"] = t.value("labeling_s", 0.0);
      }
    }

    stage = "evaluate";
    const auto t1 = Clock::now();
    report["evaluation"] = run_evaluation(model_dir.string(),
                                          test_dir.string(), "");
    timings["evaluation_s"] = seconds_since(t1);
    report["failed_stage"] = json();
  } catch (const Error& e) {
    report["failed_stage"] = stage;
    report["error"] = {{"code", error_code_name(e.code())},
                       {"message", e.what()}};
  } catch (const std::exception& e) {
    report["failed_stage"] = stage;
    report["error"] = {{"code", "internal-error"}, {"message", e.what()}};
  }
  write_report();
  return report;
}

}  // namespace dfs
