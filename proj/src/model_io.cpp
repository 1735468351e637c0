#include "model_io.hpp"

#include <filesystem>
#include <fstream>

namespace dfs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json arch_to_json(const OperatorArch& a) {
  return json{{"kind", a.kind},
              {"in_channels", a.in_channels},
              {"out_channels", a.out_channels},
              {"height", a.height},
              {"width", a.width},
              {"base_width", a.base_width},
              {"levels", a.levels},
              {"q", a.q},
              {"trunk_dim", a.trunk_dim},
              {"trunk_hidden", a.trunk_hidden}};
}

OperatorArch arch_from_json(const json& j) {
  OperatorArch a;
  a.kind = j.at("kind");
  a.in_channels = j.at("in_channels");
  a.out_channels = j.at("out_channels");
  a.height = j.at("height");
  a.width = j.at("width");
  a.base_width = j.at("base_width");
  a.levels = j.at("levels");
  a.q = j.at("q");
  a.trunk_dim = j.at("trunk_dim");
  a.trunk_hidden = j.at("trunk_hidden");
  return a;
}

json read_model_json(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "model.json");
  require(in.good(), ErrorCode::Io, "cannot open model.json in " + dir);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptData, std::string("bad model.json: ") + e.what());
  }
  const int version = j.at("format_version");
  require(version == 1, ErrorCode::UnsupportedVersion,
          "unsupported model format version " + std::to_string(version));
  return j;
}

}  // namespace

void write_model(const std::string& dir, const ModelBundle& bundle) {
  const ParamLayout lay = build_param_layout(bundle.model.arch);
  require(static_cast<int>(bundle.model.params.size()) == lay.total,
          ErrorCode::InvalidArgument, "parameter vector length mismatch");
  fs::create_directories(dir);
  const fs::path root(dir);

  {
    std::ofstream out(root / "params.f64", std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write params.f64");
    out.write(reinterpret_cast<const char*>(bundle.model.params.data()),
              static_cast<std::streamsize>(bundle.model.params.size() *
                                           sizeof(double)));
    require(out.good(), ErrorCode::Io, "write failed: params.f64");
  }

  json j;
  j["format_version"] = 1;
  j["arch"] = arch_to_json(bundle.model.arch);
  j["param_count"] = lay.total;
  j["stats"] = {{"input_mean", bundle.model.stats.input_mean},
                {"input_std", bundle.model.stats.input_std},
                {"output_min", bundle.model.stats.output_min},
                {"output_max", bundle.model.stats.output_max}};
  j["feature"] = to_string(bundle.feature);
  j["phase"] = to_string(bundle.phase);
  j["grid"] = {{"nx", bundle.grid.nx}, {"ny", bundle.grid.ny},
               {"nz", bundle.grid.nz}, {"dx", bundle.grid.dx},
               {"dy", bundle.grid.dy}, {"dz", bundle.grid.dz}};
  j["snapshot_steps"] = bundle.snapshot_steps;
  j["trans_viscosity"] = bundle.trans_viscosity;
  j["provenance"] = bundle.provenance;

  std::ofstream out(root / "model.json");
  require(out.good(), ErrorCode::Io, "cannot write model.json");
  out << j.dump(2) << "\n";
}

ModelBundle read_model(const std::string& dir) {
  const json j = read_model_json(dir);
  ModelBundle bundle;
  bundle.model.arch = arch_from_json(j.at("arch"));
  const ParamLayout lay = build_param_layout(bundle.model.arch);
  const int declared = j.at("param_count");
  require(declared == lay.total, ErrorCode::CorruptData,
          "declared parameter count " + std::to_string(declared) +
              " does not match descriptor count " + std::to_string(lay.total));

  const json& st = j.at("stats");
  bundle.model.stats.input_mean = st.at("input_mean").get<std::vector<double>>();
  bundle.model.stats.input_std = st.at("input_std").get<std::vector<double>>();
  bundle.model.stats.output_min = st.at("output_min").get<std::vector<double>>();
  bundle.model.stats.output_max = st.at("output_max").get<std::vector<double>>();
  require(static_cast<int>(bundle.model.stats.input_mean.size()) ==
                  bundle.model.arch.in_channels &&
              static_cast<int>(bundle.model.stats.output_min.size()) ==
                  bundle.model.arch.out_channels,
          ErrorCode::CorruptData, "normalization stats shape mismatch");

  bundle.feature = feature_from_string(j.at("feature"));
  bundle.phase = phase_from_string(j.at("phase"));
  const json& g = j.at("grid");
  bundle.grid = build_grid(g.at("nx"), g.at("ny"), g.at("nz"), g.at("dx"),
                           g.at("dy"), g.at("dz"));
  bundle.snapshot_steps = j.at("snapshot_steps").get<std::vector<int>>();
  bundle.trans_viscosity = j.at("trans_viscosity");
  bundle.provenance = j.value("provenance", json::object());

  const fs::path path = fs::path(dir) / "params.f64";
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), ErrorCode::Io, "cannot open params.f64");
  const auto bytes = static_cast<size_t>(in.tellg());
  require(bytes == static_cast<size_t>(lay.total) * sizeof(double),
          ErrorCode::CorruptData,
          "params.f64 has " + std::to_string(bytes) + " bytes, expected " +
              std::to_string(lay.total * sizeof(double)));
  in.seekg(0);
  bundle.model.params.resize(lay.total);
  in.read(reinterpret_cast<char*>(bundle.model.params.data()),
          static_cast<std::streamsize>(bytes));
  require(in.good(), ErrorCode::Io, "read failed: params.f64");
  return bundle;
}

std::pair<OperatorArch, int> read_model_descriptor(const std::string& dir) {
  const json j = read_model_json(dir);
  const OperatorArch arch = arch_from_json(j.at("arch"));
  return {arch, parameter_count(arch)};
}

std::vector<double> predict(const ModelBundle& bundle, const CellField& perm,
                            int t_step) {
  require(perm.grid == bundle.grid, ErrorCode::InvalidArgument,
          "permeability grid does not match the model grid");
  std::vector<double> input = build_input_channels(
      perm, bundle.trans_viscosity, bundle.feature);
  const int plane = bundle.grid.nx * bundle.grid.ny;
  normalize_input(input, bundle.model.stats, plane);
  std::vector<double> out =
      forward(bundle.model, input, static_cast<double>(t_step));
  denormalize_output(out, bundle.model.stats, plane);
  return out;
}

}  // namespace dfs
