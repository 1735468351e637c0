#pragma once

#include <string>

#include "adaptive.hpp"
#include "metrics.hpp"
#include "model_io.hpp"

namespace dfs {

struct TrainRunConfig {
  std::string model_kind = "aronet";  // aronet | arunet
  Feature feature = Feature::Trans;
  Strategy strategy = Strategy::Random;
  int init = 100;
  int events = 0;
  int per_event = 0;
  int interval = 0;
  std::uint64_t seed = 0;
  TrainConfig train;
  // architecture hyperparameters (input/output channels come from the data)
  int base_width = 16;
  int levels = 2;
  int q = 16;
  int trunk_dim = 64;
  int trunk_hidden = 64;
  double pca_threshold = 0.95;
  std::vector<int> h_candidates = {1, 2, 3, 4, 5, 6, 7, 8};
  bool paper_dof = true;
};

nlohmann::json to_json(const TrainRunConfig& cfg);
TrainRunConfig train_run_config_from_json(const nlohmann::json& j);

// Full training pipeline: dataset directory in, model directory out. The
// first `init` samples form the initial set (normalization stats frozen
// there); remaining samples become the pre-labeled RAR candidate pool.
void run_training(const std::string& data_dir, const std::string& out_dir,
                  const TrainRunConfig& cfg);

// Evaluates a trained model on every sample of a dataset and writes the
// report JSON (per-sample errors, MRE, well-block MRE, MSE, histograms,
// seeds, config snapshot, timings).
nlohmann::json run_evaluation(const std::string& model_dir,
                              const std::string& data_dir,
                              const std::string& report_path);

// Aggregates evaluation/experiment reports into one CSV (a row per report
// and field).
void merge_reports(const std::vector<std::string>& report_paths,
                   const std::string& out_csv);

// generate -> train -> evaluate per config; stage failures produce a
// partial report with the failing stage recorded.
nlohmann::json run_experiment(const nlohmann::json& config,
                              const std::string& workdir,
                              const std::string& report_path);

// rebuilds the labeler/feature plumbing used by run_training; exposed for
// tests that drive the adaptive loop directly
std::vector<double> raw_labels_for_sample(const Dataset& ds, int sample);
Labeler make_fvm_labeler(const GenerationConfig& cfg);

}  // namespace dfs
