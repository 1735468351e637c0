#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fvm_single.hpp"
#include "fvm_twophase.hpp"
#include "geostat.hpp"
#include "grid.hpp"

#include <json.hpp>

namespace dfs {

enum class Phase { Single, Two };
enum class Feature { Perm, Trans };

std::string to_string(Phase p);
std::string to_string(Feature f);
Phase phase_from_string(const std::string& s);
Feature feature_from_string(const std::string& s);

// Everything needed to regenerate or extend a dataset: grid, covariance,
// physics, wells and snapshot schedule. Serialized verbatim into the
// manifest so training can label fresh samples identically.
struct GenerationConfig {
  Grid grid;
  CovarianceSpec covariance;
  Phase phase = Phase::Single;
  SinglePhaseConfig single;
  TwoPhaseConfig two;
  std::vector<Well> wells;
  int snapshot_stride = 15;
  int num_samples = 100;
  std::uint64_t seed = 0;

  int num_steps() const {
    return phase == Phase::Single ? single.num_steps : two.num_steps;
  }
  std::vector<int> snapshot_steps() const;
};

GenerationConfig default_generation_config(Phase phase, int dim);

nlohmann::json to_json(const GenerationConfig& cfg);
GenerationConfig generation_config_from_json(const nlohmann::json& j);

struct FieldStats {
  double min = 0, max = 0, mean = 0, std = 0;
};

struct FieldEntry {
  std::string name;
  std::string file;
  std::vector<long long> shape;
  FieldStats stats;
};

struct DatasetManifest {
  int version = 1;
  Phase phase = Phase::Single;
  Grid grid;
  int num_samples = 0;
  std::vector<int> snapshot_steps;
  std::string dtype = "float64-le";
  std::vector<FieldEntry> fields;
  nlohmann::json config;
  std::string config_hash;
  std::string content_hash;
  std::uint64_t seed = 0;
};

// In-memory dataset. Field layout is row-major [sample, time, z, y, x]
// (time absent for perm); within one snapshot the values follow the grid's
// cell enumeration.
struct Dataset {
  DatasetManifest manifest;
  std::vector<double> perm;      // [N][cells]
  std::vector<double> pressure;  // [N][M][cells]
  std::vector<double> satw;      // [N][M][cells], two-phase only

  int cells() const { return manifest.grid.num_cells(); }
  int times() const { return static_cast<int>(manifest.snapshot_steps.size()); }

  std::span<const double> perm_sample(int i) const;
  std::span<const double> pressure_snapshot(int i, int t) const;
  std::span<const double> satw_snapshot(int i, int t) const;
};

// Runs the FVM over `cfg.num_samples` realizations (seeds derived as
// seed + index; samples run in parallel).
Dataset generate_dataset(const GenerationConfig& cfg);

void write_dataset(const std::string& dir, const Dataset& ds);
Dataset read_dataset(const std::string& dir);
DatasetManifest read_dataset_manifest(const std::string& dir);

// NN input channels for one permeability field, channel-major over the
// ny x nx plane. perm: log10(K), one channel per layer. trans: directional
// face transmissibilities, 4 channels in 2D; in 3D depth folds into
// channels as channel = direction * nz + z.
std::vector<double> build_input_channels(const CellField& k, double mu,
                                         Feature feature);
int input_channel_count(const Grid& grid, Feature feature);

// FNV-1a over bytes, hex-encoded; used for config and content hashes
std::string fnv1a_hex(std::span<const unsigned char> bytes);
std::string hash_json(const nlohmann::json& j);

}  // namespace dfs
