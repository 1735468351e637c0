#pragma once

#include <string>

#include "dataset.hpp"
#include "operator_net.hpp"

#include <json.hpp>

namespace dfs {

// Everything needed to run the model on raw permeability fields later:
// feature construction, grid geometry and snapshot schedule travel with the
// parameters.
struct ModelBundle {
  OperatorModel model;
  Feature feature = Feature::Trans;
  Phase phase = Phase::Single;
  Grid grid;
  std::vector<int> snapshot_steps;
  double trans_viscosity = 1.0;  // viscosity used for trans features
  nlohmann::json provenance;     // seeds, sampler, dataset hashes, growth log
};

// Directory layout: model.json (descriptor + stats + provenance) and
// params.f64 (flat little-endian parameter vector).
void write_model(const std::string& dir, const ModelBundle& bundle);
ModelBundle read_model(const std::string& dir);

// descriptor-only load; returns the architecture and its expected
// parameter count without touching params.f64
std::pair<OperatorArch, int> read_model_descriptor(const std::string& dir);

// feature construction + normalization + forward + denormalization
std::vector<double> predict(const ModelBundle& bundle, const CellField& perm,
                            int t_step);

}  // namespace dfs
