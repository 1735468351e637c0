#include "dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

static_assert(std::endian::native == std::endian::little,
              "field files are declared little-endian");

namespace dfs {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Phase p) { return p == Phase::Single ? "single" : "two"; }
std::string to_string(Feature f) { return f == Feature::Perm ? "perm" : "trans"; }

Phase phase_from_string(const std::string& s) {
  if (s == "single") return Phase::Single;
  if (s == "two") return Phase::Two;
  fail(ErrorCode::InvalidArgument, "unknown phase: " + s);
}

Feature feature_from_string(const std::string& s) {
  if (s == "perm") return Feature::Perm;
  if (s == "trans") return Feature::Trans;
  fail(ErrorCode::InvalidArgument, "unknown feature: " + s);
}

std::vector<int> GenerationConfig::snapshot_steps() const {
  require(snapshot_stride >= 1, ErrorCode::InvalidArgument,
          "snapshot_stride must be >= 1");
  std::vector<int> steps;
  for (int s = snapshot_stride; s <= num_steps(); s += snapshot_stride)
    steps.push_back(s);
  require(!steps.empty(), ErrorCode::InvalidArgument,
          "no snapshots: stride exceeds num_steps");
  return steps;
}

GenerationConfig default_generation_config(Phase phase, int dim) {
  require(dim == 2 || dim == 3, ErrorCode::InvalidArgument,
          "dim must be 2 or 3");
  GenerationConfig cfg;
  cfg.phase = phase;
  if (dim == 2) {
    cfg.grid = build_grid(16, 16, 1, 10.0, 10.0, 10.0);
  } else {
    cfg.grid = build_grid(8, 8, 4, 10.0, 10.0, 10.0);
  }
  // correlation length = 0.25 * domain extent per axis
  cfg.covariance.lx = 0.25 * cfg.grid.nx * cfg.grid.dx;
  cfg.covariance.ly = 0.25 * cfg.grid.ny * cfg.grid.dy;
  cfg.covariance.lz = 0.25 * cfg.grid.nz * cfg.grid.dz;

  const Grid& g = cfg.grid;
  auto corner_producers = [&](double pi) {
    std::vector<Well> wells;
    for (int z : {0}) {
      wells.push_back({g.cell_id(0, 0, z), 2e7, pi, WellKind::Producer});
      wells.push_back({g.cell_id(g.nx - 1, 0, z), 2e7, pi, WellKind::Producer});
      wells.push_back({g.cell_id(0, g.ny - 1, z), 2e7, pi, WellKind::Producer});
      wells.push_back(
          {g.cell_id(g.nx - 1, g.ny - 1, z), 2e7, pi, WellKind::Producer});
    }
    return wells;
  };

  if (phase == Phase::Single) {
    cfg.wells = corner_producers(1e-12);
    cfg.single.num_steps = 150;
    cfg.single.dt = 500.0;
    cfg.snapshot_stride = 15;
  } else {
    // five-spot: corner producers, center injector. Even grids have no
    // single center cell; a 2x2 center block keeps the 4-fold symmetry.
    cfg.wells = corner_producers(3e-13);
    const int cx = g.nx / 2, cy = g.ny / 2;
    std::vector<std::pair<int, int>> centers;
    if (g.nx % 2 == 1 && g.ny % 2 == 1) {
      centers = {{cx, cy}};
    } else {
      centers = {{cx - 1, cy - 1}, {cx, cy - 1}, {cx - 1, cy}, {cx, cy}};
    }
    for (auto [x, y] : centers)
      cfg.wells.push_back({g.cell_id(x, y, 0), 4.5e7,
                           1.2e-12 / static_cast<double>(centers.size()),
                           WellKind::Injector});
    cfg.two.num_steps = 60;
    cfg.two.dt = 43200.0;
    cfg.two.solver_rel_tol = 1e-12;
    cfg.snapshot_stride = 6;
  }
  return cfg;
}

namespace {

json grid_to_json(const Grid& g) {
  return json{{"nx", g.nx}, {"ny", g.ny}, {"nz", g.nz},
              {"dx", g.dx}, {"dy", g.dy}, {"dz", g.dz}};
}

Grid grid_from_json(const json& j) {
  return build_grid(j.at("nx"), j.at("ny"), j.at("nz"), j.at("dx"),
                    j.at("dy"), j.at("dz"));
}

json wells_to_json(const std::vector<Well>& wells, const Grid& g) {
  json arr = json::array();
  for (const Well& w : wells) {
    const auto [x, y, z] = g.cell_xyz(w.cell);
    arr.push_back(json{
        {"cell", {x, y, z}},
        {"kind", w.kind == WellKind::Producer ? "producer" : "injector"},
        {"bhp", w.bhp},
        {"pi", w.pi}});
  }
  return arr;
}

std::vector<Well> wells_from_json(const json& arr, const Grid& g) {
  std::vector<Well> wells;
  for (const auto& j : arr) {
    Well w;
    const auto& c = j.at("cell");
    w.cell = g.cell_id(c.at(0), c.at(1), c.at(2));
    const std::string kind = j.at("kind");
    require(kind == "producer" || kind == "injector",
            ErrorCode::InvalidArgument, "unknown well kind: " + kind);
    w.kind = kind == "producer" ? WellKind::Producer : WellKind::Injector;
    w.bhp = j.at("bhp");
    w.pi = j.at("pi");
    wells.push_back(w);
  }
  return wells;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const GenerationConfig& cfg) {
  json j;
  j["grid"] = grid_to_json(cfg.grid);
  j["covariance"] = {
      {"model",
       cfg.covariance.model == CovarianceModel::Exponential ? "exponential"
                                                            : "gaussian"},
      {"lx", cfg.covariance.lx},
      {"ly", cfg.covariance.ly},
      {"lz", cfg.covariance.lz},
      {"mean_log_k", cfg.covariance.mean_log_k},
      {"std_log_k", cfg.covariance.std_log_k}};
  j["phase"] = to_string(cfg.phase);
  j["single"] = {{"porosity", cfg.single.porosity},
                 {"total_compressibility", cfg.single.total_compressibility},
                 {"viscosity", cfg.single.viscosity},
                 {"initial_pressure", cfg.single.initial_pressure},
                 {"dt", cfg.single.dt},
                 {"num_steps", cfg.single.num_steps},
                 {"solver_rel_tol", cfg.single.solver_rel_tol}};
  j["two_phase"] = {{"porosity", cfg.two.porosity},
                    {"rock_compressibility", cfg.two.rock_compressibility},
                    {"c_oil", cfg.two.c_oil},
                    {"c_water", cfg.two.c_water},
                    {"mu_oil", cfg.two.mu_oil},
                    {"mu_water", cfg.two.mu_water},
                    {"s_iw", cfg.two.s_iw},
                    {"initial_sw", cfg.two.initial_sw},
                    {"initial_pressure", cfg.two.initial_pressure},
                    {"dt", cfg.two.dt},
                    {"num_steps", cfg.two.num_steps},
                    {"solver_rel_tol", cfg.two.solver_rel_tol}};
  j["wells"] = wells_to_json(cfg.wells, cfg.grid);
  j["snapshot_stride"] = cfg.snapshot_stride;
  j["num_samples"] = cfg.num_samples;
  j["seed"] = cfg.seed;
  return j;
}

GenerationConfig generation_config_from_json(const json& j) {
  Phase phase = Phase::Single;
  if (j.contains("phase")) phase = phase_from_string(j.at("phase"));
  int dim = 2;
  if (j.contains("grid") && j.at("grid").contains("nz") &&
      j.at("grid").at("nz").get<int>() > 1)
    dim = 3;
  GenerationConfig cfg = default_generation_config(phase, dim);

  if (j.contains("grid")) cfg.grid = grid_from_json(j.at("grid"));
  if (j.contains("covariance")) {
    const json& c = j.at("covariance");
    if (c.contains("model")) {
      const std::string m = c.at("model");
      require(m == "exponential" || m == "gaussian",
              ErrorCode::InvalidArgument, "unknown covariance model: " + m);
      cfg.covariance.model = m == "exponential" ? CovarianceModel::Exponential
                                                : CovarianceModel::Gaussian;
    }
    maybe(c, "lx", cfg.covariance.lx);
    maybe(c, "ly", cfg.covariance.ly);
    maybe(c, "lz", cfg.covariance.lz);
    maybe(c, "mean_log_k", cfg.covariance.mean_log_k);
    maybe(c, "std_log_k", cfg.covariance.std_log_k);
  }
  if (j.contains("single")) {
    const json& s = j.at("single");
    maybe(s, "porosity", cfg.single.porosity);
    maybe(s, "total_compressibility", cfg.single.total_compressibility);
    maybe(s, "viscosity", cfg.single.viscosity);
    maybe(s, "initial_pressure", cfg.single.initial_pressure);
    maybe(s, "dt", cfg.single.dt);
    maybe(s, "num_steps", cfg.single.num_steps);
    maybe(s, "solver_rel_tol", cfg.single.solver_rel_tol);
  }
  if (j.contains("two_phase")) {
    const json& s = j.at("two_phase");
    maybe(s, "porosity", cfg.two.porosity);
    maybe(s, "rock_compressibility", cfg.two.rock_compressibility);
    maybe(s, "c_oil", cfg.two.c_oil);
    maybe(s, "c_water", cfg.two.c_water);
    maybe(s, "mu_oil", cfg.two.mu_oil);
    maybe(s, "mu_water", cfg.two.mu_water);
    maybe(s, "s_iw", cfg.two.s_iw);
    maybe(s, "initial_sw", cfg.two.initial_sw);
    maybe(s, "initial_pressure", cfg.two.initial_pressure);
    maybe(s, "dt", cfg.two.dt);
    maybe(s, "num_steps", cfg.two.num_steps);
    maybe(s, "solver_rel_tol", cfg.two.solver_rel_tol);
  }
  if (j.contains("wells")) cfg.wells = wells_from_json(j.at("wells"), cfg.grid);
  maybe(j, "snapshot_stride", cfg.snapshot_stride);
  maybe(j, "num_samples", cfg.num_samples);
  maybe(j, "seed", cfg.seed);
  return cfg;
}

std::span<const double> Dataset::perm_sample(int i) const {
  return std::span<const double>(perm).subspan(
      static_cast<size_t>(i) * cells(), cells());
}

std::span<const double> Dataset::pressure_snapshot(int i, int t) const {
  return std::span<const double>(pressure)
      .subspan((static_cast<size_t>(i) * times() + t) * cells(), cells());
}

std::span<const double> Dataset::satw_snapshot(int i, int t) const {
  return std::span<const double>(satw).subspan(
      (static_cast<size_t>(i) * times() + t) * cells(), cells());
}

namespace {

FieldStats compute_stats(std::span<const double> v) {
  FieldStats st;
  st.min = std::numeric_limits<double>::infinity();
  st.max = -st.min;
  double sum = 0.0;
  for (double x : v) {
    st.min = std::min(st.min, x);
    st.max = std::max(st.max, x);
    sum += x;
  }
  st.mean = sum / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - st.mean) * (x - st.mean);
  st.std = std::sqrt(var / static_cast<double>(v.size()));
  return st;
}

}  // namespace

Dataset generate_dataset(const GenerationConfig& cfg) {
  require(cfg.num_samples >= 1, ErrorCode::InvalidArgument,
          "num_samples must be >= 1");
  const Grid& grid = cfg.grid;
  const std::vector<int> steps = cfg.snapshot_steps();
  const int n = cfg.num_samples;
  const int m = static_cast<int>(steps.size());
  const int cells = grid.num_cells();

  Dataset ds;
  ds.manifest.phase = cfg.phase;
  ds.manifest.grid = grid;
  ds.manifest.num_samples = n;
  ds.manifest.snapshot_steps = steps;
  ds.manifest.seed = cfg.seed;
  ds.manifest.config = to_json(cfg);
  ds.manifest.config_hash = hash_json(ds.manifest.config);
  ds.perm.resize(static_cast<size_t>(n) * cells);
  ds.pressure.resize(static_cast<size_t>(n) * m * cells);
  if (cfg.phase == Phase::Two)
    ds.satw.resize(static_cast<size_t>(n) * m * cells);

  const GaussianFieldSampler sampler(grid, cfg.covariance);

  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const CellField k =
          sampler.sample_permeability(cfg.seed + static_cast<std::uint64_t>(i));
      std::copy(k.values.begin(), k.values.end(),
                ds.perm.begin() + static_cast<size_t>(i) * cells);
      if (cfg.phase == Phase::Single) {
        const PressureTrajectory traj =
            simulate_single_phase(k, cfg.single, cfg.wells);
        for (int t = 0; t < m; ++t) {
          const CellField& p = traj.pressure[steps[t] - 1];
          std::copy(p.values.begin(), p.values.end(),
                    ds.pressure.begin() +
                        (static_cast<size_t>(i) * m + t) * cells);
        }
      } else {
        const TwoPhaseTrajectory traj =
            simulate_two_phase(k, cfg.two, cfg.wells);
        for (int t = 0; t < m; ++t) {
          const CellField& p = traj.pressure[steps[t] - 1];
          const CellField& s = traj.sw[steps[t] - 1];
          std::copy(p.values.begin(), p.values.end(),
                    ds.pressure.begin() +
                        (static_cast<size_t>(i) * m + t) * cells);
          std::copy(s.values.begin(), s.values.end(),
                    ds.satw.begin() + (static_cast<size_t>(i) * m + t) * cells);
        }
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (int i = 0; i < n; ++i)
    require(errors[i].empty(), ErrorCode::Numerical,
            "sample " + std::to_string(i) + " failed: " + errors[i]);

  const long long nz = grid.nz, ny = grid.ny, nx = grid.nx;
  ds.manifest.fields.push_back(
      {"perm", "perm.f64", {n, nz, ny, nx}, compute_stats(ds.perm)});
  ds.manifest.fields.push_back({"pressure",
                                "press.f64",
                                {n, m, nz, ny, nx},
                                compute_stats(ds.pressure)});
  if (cfg.phase == Phase::Two)
    ds.manifest.fields.push_back({"water_saturation",
                                  "satw.f64",
                                  {n, m, nz, ny, nx},
                                  compute_stats(ds.satw)});
  return ds;
}

namespace {

void write_f64(const fs::path& path, std::span<const double> data) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  require(out.good(), ErrorCode::Io, "write failed: " + path.string());
}

std::vector<double> read_f64(const fs::path& path, size_t expected,
                             const std::string& name) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());
  const auto bytes = static_cast<size_t>(in.tellg());
  require(bytes == expected * sizeof(double), ErrorCode::CorruptData,
          "field file " + name + " has " + std::to_string(bytes) +
              " bytes, expected " + std::to_string(expected * sizeof(double)));
  in.seekg(0);
  std::vector<double> data(expected);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(expected * sizeof(double)));
  require(in.good(), ErrorCode::Io, "read failed: " + path.string());
  return data;
}

json stats_to_json(const FieldStats& s) {
  return json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.std}};
}

FieldStats stats_from_json(const json& j) {
  return {j.at("min"), j.at("max"), j.at("mean"), j.at("std")};
}

std::string hash_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

}  // namespace

void write_dataset(const std::string& dir, const Dataset& ds) {
  fs::create_directories(dir);
  const fs::path root(dir);
  DatasetManifest manifest = ds.manifest;

  for (const FieldEntry& f : manifest.fields) {
    std::span<const double> data;
    if (f.name == "perm")
      data = ds.perm;
    else if (f.name == "pressure")
      data = ds.pressure;
    else if (f.name == "water_saturation")
      data = ds.satw;
    else
      fail(ErrorCode::Internal, "unknown field " + f.name);
    write_f64(root / f.file, data);
  }

  // content hash over the field files in manifest order
  std::string combined;
  for (const FieldEntry& f : manifest.fields)
    combined += hash_file_bytes(root / f.file);
  manifest.content_hash = fnv1a_hex(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(combined.data()),
      combined.size()));

  json j;
  j["format_version"] = manifest.version;
  j["phase"] = to_string(manifest.phase);
  j["grid"] = grid_to_json(manifest.grid);
  j["num_samples"] = manifest.num_samples;
  j["snapshot_steps"] = manifest.snapshot_steps;
  j["dtype"] = manifest.dtype;
  json fields = json::array();
  for (const FieldEntry& f : manifest.fields)
    fields.push_back(json{{"name", f.name},
                          {"file", f.file},
                          {"shape", f.shape},
                          {"stats", stats_to_json(f.stats)}});
  j["fields"] = fields;
  j["config"] = manifest.config;
  j["config_hash"] = manifest.config_hash;
  j["content_hash"] = manifest.content_hash;
  j["seed"] = manifest.seed;

  std::ofstream out(root / "manifest.json");
  require(out.good(), ErrorCode::Io, "cannot write manifest.json");
  out << j.dump(2) << "\n";
}

DatasetManifest read_dataset_manifest(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  require(in.good(), ErrorCode::Io,
          "cannot open " + (root / "manifest.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptData, std::string("bad manifest.json: ") + e.what());
  }
  DatasetManifest m;
  m.version = j.at("format_version");
  require(m.version == 1, ErrorCode::UnsupportedVersion,
          "unsupported dataset format version " + std::to_string(m.version));
  m.phase = phase_from_string(j.at("phase"));
  m.grid = grid_from_json(j.at("grid"));
  m.num_samples = j.at("num_samples");
  m.snapshot_steps = j.at("snapshot_steps").get<std::vector<int>>();
  m.dtype = j.at("dtype");
  require(m.dtype == "float64-le", ErrorCode::UnsupportedVersion,
          "unsupported dtype " + m.dtype);
  for (const auto& f : j.at("fields"))
    m.fields.push_back({f.at("name"), f.at("file"),
                        f.at("shape").get<std::vector<long long>>(),
                        stats_from_json(f.at("stats"))});
  m.config = j.at("config");
  m.config_hash = j.at("config_hash");
  m.content_hash = j.at("content_hash");
  m.seed = j.at("seed");
  return m;
}

Dataset read_dataset(const std::string& dir) {
  const fs::path root(dir);
  Dataset ds;
  ds.manifest = read_dataset_manifest(dir);
  for (const FieldEntry& f : ds.manifest.fields) {
    size_t count = 1;
    for (long long s : f.shape) count *= static_cast<size_t>(s);
    std::vector<double> data = read_f64(root / f.file, count, f.file);
    for (double v : data)
      require(std::isfinite(v), ErrorCode::CorruptData,
              "non-finite value in " + f.file);
    if (f.name == "perm")
      ds.perm = std::move(data);
    else if (f.name == "pressure")
      ds.pressure = std::move(data);
    else if (f.name == "water_saturation")
      ds.satw = std::move(data);
    else
      fail(ErrorCode::CorruptData, "unknown field in manifest: " + f.name);
  }
  require(!ds.perm.empty() && !ds.pressure.empty(), ErrorCode::CorruptData,
          "dataset missing perm/pressure fields");
  if (ds.manifest.phase == Phase::Two)
    require(!ds.satw.empty(), ErrorCode::CorruptData,
            "two-phase dataset missing water_saturation");
  return ds;
}

int input_channel_count(const Grid& grid, Feature feature) {
  if (feature == Feature::Perm) return grid.nz;
  return grid.is_2d() ? 4 : 6 * grid.nz;
}

std::vector<double> build_input_channels(const CellField& k, double mu,
                                         Feature feature) {
  validate_cell_field(k);
  const Grid& g = k.grid;
  const int plane = g.nx * g.ny;
  if (feature == Feature::Perm) {
    std::vector<double> out(static_cast<size_t>(g.nz) * plane);
    for (int z = 0; z < g.nz; ++z)
      for (int i = 0; i < plane; ++i)
        out[static_cast<size_t>(z) * plane + i] =
            std::log10(k.values[static_cast<size_t>(z) * plane + i]);
    return out;
  }
  const TransmissibilityField tf = assemble_transmissibility(g, k, mu);
  const int ndir = tf.dirs;
  std::vector<double> out(static_cast<size_t>(ndir) * g.nz * plane);
  for (int dir = 0; dir < ndir; ++dir)
    for (int z = 0; z < g.nz; ++z)
      for (int i = 0; i < plane; ++i) {
        const int cell = z * plane + i;
        out[(static_cast<size_t>(dir) * g.nz + z) * plane + i] =
            tf.t[static_cast<size_t>(cell) * ndir + dir];
      }
  return out;
}

std::string fnv1a_hex(std::span<const unsigned char> bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string hash_json(const nlohmann::json& j) {
  const std::string s = j.dump();
  return fnv1a_hex(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

}  // namespace dfs
