#pragma once

#include <functional>

#include "dataset.hpp"
#include "gmm.hpp"
#include "pca.hpp"
#include "resample.hpp"
#include "training.hpp"

namespace dfs {

enum class Strategy { Random, Rar, Gmm };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct SamplerConfig {
  Strategy strategy = Strategy::Random;
  int interval = 0;   // training iterations between sampling events
  int events = 0;     // number of sampling events
  int per_event = 0;  // samples added per event
  double pca_threshold = 0.95;
  std::vector<int> h_candidates = {1, 2, 3, 4, 5, 6, 7, 8};
  bool paper_dof = true;
  std::uint64_t seed = 0;
};

// Per-sample mean over stored times and cells of the squared error, in
// normalized output space (the training-loss scale).
std::vector<double> residuals_from_predictions(
    const std::vector<std::vector<double>>& preds,
    const std::vector<std::vector<double>>& labels);

std::vector<double> compute_residuals(const OperatorModel& model,
                                      const ParamLayout& layout,
                                      const TrainingSet& set);

// indices of the K largest residuals; ties resolve to the lower index
std::vector<int> rar_select(std::span<const double> residuals, int k);

struct Proposal {
  std::vector<CellField> fields;  // decoded permeability fields, positive
  int chosen_m = 0;
  std::vector<std::pair<int, double>> bic_trace;
};

// Latent-space proposal: residual-weighted systematic resampling of the
// training latents (log-permeability PCA codes), BIC-selected GMM refit,
// sampling, decode, exponentiate. The latent space lives on log K so that
// decoded fields stay positive.
Proposal propose_new_samples(const OperatorModel& model,
                             const ParamLayout& layout, const TrainingSet& set,
                             const std::vector<CellField>& perm_fields,
                             const PcaModel& pca, const SamplerConfig& cfg,
                             int count, std::uint64_t event_seed);

// latent codes of the pool's log-permeability fields (rows)
Eigen::MatrixXd log_perm_matrix(const std::vector<CellField>& perm_fields);

// Labeled sample pool: raw fields aligned with normalized training data.
struct AdaptivePool {
  std::vector<CellField> perm;
  TrainingSet set;
  int size() const { return static_cast<int>(perm.size()); }
};

// raw labels for one sample: [M][out_c * plane]
using Labeler = std::function<std::vector<double>(const CellField&)>;
// fresh geostatistical realization for a derived seed
using FieldSampler = std::function<CellField(std::uint64_t)>;

struct GrowthEvent {
  int step = 0;  // global training iteration (1-based) the event fired at
  std::string strategy;
  int requested = 0;
  int added = 0;
  int train_size = 0;  // after augmentation
  int chosen_m = 0;    // gmm only
  std::vector<std::string> warnings;
};

struct AdaptiveResult {
  std::vector<double> loss_history;
  std::vector<GrowthEvent> growth;
  double sampling_seconds = 0.0;  // proposal machinery
  double labeling_seconds = 0.0;  // FVM labeling of new samples
};

// Minibatch Adam with sampling events every `interval` iterations while
// events remain. Normalization stats stay frozen at the model's values
// (computed from the initial set). Labeler failures skip the sample with a
// warning; training never aborts because of them. With events = 0 this is
// bitwise identical to plain train().
AdaptiveResult adaptive_training_loop(OperatorModel& model, AdaptivePool& pool,
                                      const Labeler& labeler,
                                      const FieldSampler& field_sampler,
                                      AdaptivePool* rar_pool,
                                      const SamplerConfig& scfg,
                                      const TrainConfig& tcfg, Feature feature,
                                      double trans_viscosity);

// normalize a raw sample against frozen stats and append it to the pool
void append_sample(AdaptivePool& pool, const CellField& perm,
                   std::vector<double> raw_labels, const NormStats& stats,
                   Feature feature, double trans_viscosity);

}  // namespace dfs
