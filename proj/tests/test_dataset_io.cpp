#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dataset.hpp"
#include "model_io.hpp"
#include "rng.hpp"

using namespace dfs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("dfs_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

GenerationConfig small_config() {
  GenerationConfig cfg = default_generation_config(Phase::Single, 2);
  cfg.grid = build_grid(8, 8, 1, 10, 10, 10);
  cfg.wells = {{cfg.grid.cell_id(0, 0, 0), 2e7, 1e-12, WellKind::Producer},
               {cfg.grid.cell_id(7, 7, 0), 2e7, 1e-12, WellKind::Producer}};
  cfg.single.num_steps = 10;
  cfg.snapshot_stride = 5;
  cfg.num_samples = 4;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("input channels: uniform fields, boundaries, mirror consistency") {
  const Grid g = build_grid(4, 4, 1, 10, 10, 10);
  const CellField uniform = make_cell_field(g, 1e-13, "m^2");
  const std::vector<double> trans =
      build_input_channels(uniform, 1e-3, Feature::Trans);
  REQUIRE(trans.size() == 4u * 16);
  const int plane = 16;
  // interior cell: all four directional channels equal
  const int interior = g.cell_id(1, 1, 0);
  const double ref = trans[0 * plane + interior];
  CHECK(ref > 0.0);
  for (int d = 1; d < 4; ++d)
    CHECK(trans[d * plane + interior] == doctest::Approx(ref));
  // boundary cell: outward channel is zero
  const int left = g.cell_id(0, 2, 0);
  CHECK(trans[1 * plane + left] == 0.0);   // -x at the left edge
  CHECK(trans[0 * plane + left] == doctest::Approx(ref));

  // mirror consistency against the assembled field, random K
  CovarianceSpec spec;
  spec.lx = spec.ly = spec.lz = 10.0;
  const CellField k = sample_log_perm_field(g, spec, 3);
  const std::vector<double> tch = build_input_channels(k, 1e-3, Feature::Trans);
  const TransmissibilityField tf = assemble_transmissibility(g, k, 1e-3);
  for (int i = 0; i < g.num_cells(); ++i)
    for (const Neighbor& nb : neighbors(g, i)) {
      const int d = static_cast<int>(nb.dir);
      const int od = static_cast<int>(opposite(nb.dir));
      CHECK(tch[d * plane + i] == tf.at(i, nb.dir));
      CHECK(tch[d * plane + i] == tch[od * plane + nb.cell]);
    }

  // perm feature is log10
  const std::vector<double> pch =
      build_input_channels(uniform, 1e-3, Feature::Perm);
  REQUIRE(pch.size() == 16);
  CHECK(pch[0] == doctest::Approx(-13.0));
}

TEST_CASE("3D channel folding") {
  const Grid g = build_grid(4, 4, 2, 10, 10, 10);
  CHECK(input_channel_count(g, Feature::Trans) == 12);
  CHECK(input_channel_count(g, Feature::Perm) == 2);
  const CellField k = make_cell_field(g, 1e-13, "m^2");
  const std::vector<double> trans =
      build_input_channels(k, 1e-3, Feature::Trans);
  CHECK(trans.size() == 12u * 16);
  // z-direction channels: +z of layer 0 equals -z of layer 1
  const int plane = 16;
  const int zp = static_cast<int>(Direction::ZPlus);
  const int zm = static_cast<int>(Direction::ZMinus);
  for (int i = 0; i < plane; ++i) {
    CHECK(trans[(zp * 2 + 0) * plane + i] > 0.0);
    CHECK(trans[(zp * 2 + 0) * plane + i] ==
          doctest::Approx(trans[(zm * 2 + 1) * plane + i]));
    CHECK(trans[(zp * 2 + 1) * plane + i] == 0.0);  // top boundary
  }
}

TEST_CASE("dataset round trip is bitwise") {
  TempDir dir("roundtrip");
  const Dataset ds = generate_dataset(small_config());
  write_dataset(dir.str(), ds);
  const Dataset back = read_dataset(dir.str());
  CHECK(back.perm == ds.perm);
  CHECK(back.pressure == ds.pressure);
  CHECK(back.manifest.num_samples == 4);
  CHECK(back.manifest.snapshot_steps == std::vector<int>{5, 10});
  CHECK(back.manifest.config_hash == ds.manifest.config_hash);
  CHECK_FALSE(back.manifest.content_hash.empty());

  // regeneration from the stored config is identical
  const GenerationConfig cfg2 =
      generation_config_from_json(back.manifest.config);
  const Dataset ds2 = generate_dataset(cfg2);
  CHECK(ds2.perm == ds.perm);
  CHECK(ds2.pressure == ds.pressure);
}

TEST_CASE("truncated field file raises corrupt-data naming the file") {
  TempDir dir("truncated");
  write_dataset(dir.str(), generate_dataset(small_config()));
  fs::resize_file(dir.path / "press.f64",
                  fs::file_size(dir.path / "press.f64") - 8);
  try {
    read_dataset(dir.str());
    FAIL("expected corrupt-data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptData);
    CHECK(std::string(e.what()).find("press.f64") != std::string::npos);
  }
}

TEST_CASE("unknown manifest version is rejected") {
  TempDir dir("version");
  write_dataset(dir.str(), generate_dataset(small_config()));
  // bump the version in place
  std::ifstream in(dir.path / "manifest.json");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();
  const auto pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 19, "\"format_version\": 9");
  std::ofstream out(dir.path / "manifest.json");
  out << text;
  out.close();
  try {
    read_dataset(dir.str());
    FAIL("expected unsupported-version");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedVersion);
  }
}

TEST_CASE("model round trip preserves forward outputs bitwise") {
  TempDir dir("model");
  OperatorArch arch;
  arch.kind = "aronet";
  arch.in_channels = 4;
  arch.out_channels = 1;
  arch.height = arch.width = 8;
  arch.base_width = 8;
  arch.levels = 2;
  arch.q = 4;
  arch.trunk_dim = 16;
  arch.trunk_hidden = 16;

  ModelBundle bundle;
  bundle.model = make_operator_model(arch, 77);
  bundle.feature = Feature::Trans;
  bundle.phase = Phase::Single;
  bundle.grid = build_grid(8, 8, 1, 10, 10, 10);
  bundle.snapshot_steps = {5, 10};
  bundle.trans_viscosity = 1e-3;
  write_model(dir.str(), bundle);

  const ModelBundle back = read_model(dir.str());
  CHECK(back.model.params == bundle.model.params);
  CHECK(back.model.arch == arch);
  CHECK(back.snapshot_steps == bundle.snapshot_steps);

  CovarianceSpec spec;
  spec.lx = spec.ly = spec.lz = 20.0;
  const CellField k = sample_log_perm_field(bundle.grid, spec, 5);
  const std::vector<double> y1 = predict(bundle, k, 5);
  const std::vector<double> y2 = predict(back, k, 5);
  CHECK(y1 == y2);  // bitwise
}

TEST_CASE("tampered parameter count is rejected") {
  TempDir dir("tamper");
  OperatorArch arch;
  arch.kind = "arunet";
  arch.in_channels = 1;
  arch.out_channels = 1;
  arch.height = arch.width = 8;
  arch.base_width = 8;
  arch.levels = 2;
  arch.q = 4;
  arch.trunk_dim = 16;
  arch.trunk_hidden = 16;

  ModelBundle bundle;
  bundle.model = make_operator_model(arch, 1);
  bundle.grid = build_grid(8, 8, 1, 10, 10, 10);
  bundle.snapshot_steps = {1};
  write_model(dir.str(), bundle);

  // descriptor-only load reports the expected count
  const auto [arch_back, count] = read_model_descriptor(dir.str());
  CHECK(arch_back == arch);
  CHECK(count == parameter_count(arch));

  // truncate params.f64
  fs::resize_file(dir.path / "params.f64",
                  fs::file_size(dir.path / "params.f64") - 16);
  try {
    read_model(dir.str());
    FAIL("expected corrupt-data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptData);
  }
}

TEST_CASE("input channel construction commutes with grid mirroring") {
  const Grid g = build_grid(5, 4, 1, 10, 10, 10);
  CovarianceSpec spec;
  spec.lx = spec.ly = spec.lz = 15.0;
  const CellField k = sample_log_perm_field(g, spec, 9);
  CellField mirrored = k;
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x)
      mirrored.values[g.cell_id(x, y, 0)] =
          k.values[g.cell_id(g.nx - 1 - x, y, 0)];

  const std::vector<double> a = build_input_channels(k, 1e-3, Feature::Trans);
  const std::vector<double> b =
      build_input_channels(mirrored, 1e-3, Feature::Trans);
  const int plane = g.nx * g.ny;
  // mirroring in x swaps the +x / -x channels and mirrors each plane
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x) {
      const int i = g.cell_id(x, y, 0);
      const int im = g.cell_id(g.nx - 1 - x, y, 0);
      CHECK(b[0 * plane + i] == doctest::Approx(a[1 * plane + im]));
      CHECK(b[1 * plane + i] == doctest::Approx(a[0 * plane + im]));
      CHECK(b[2 * plane + i] == doctest::Approx(a[2 * plane + im]));
      CHECK(b[3 * plane + i] == doctest::Approx(a[3 * plane + im]));
    }
}
