#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "operator_net.hpp"

namespace dfs {

// Normalized (input, label) pairs over stored snapshot times. Labels are
// stored per sample as M contiguous [out_c*H*W] planes.
struct TrainingSet {
  int in_channels = 0, out_channels = 0, height = 0, width = 0;
  std::vector<int> snapshot_steps;  // time index fed to the embedding
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> labels;

  int num_samples() const { return static_cast<int>(inputs.size()); }
  int num_times() const { return static_cast<int>(snapshot_steps.size()); }
  int label_plane() const { return out_channels * height * width; }

  std::span<const double> label(int sample, int time) const {
    return std::span<const double>(labels[sample]).subspan(
        static_cast<size_t>(time) * label_plane(), label_plane());
  }
};

// 1/(N*M) sum over terms of the cell-averaged squared error; every entry of
// `pred`/`labels` is one (sample, time) term.
double operator_loss(const std::vector<std::vector<double>>& pred,
                     const std::vector<std::vector<double>>& labels);

struct BatchItem {
  std::span<const double> input;
  int t = 0;
  std::span<const double> label;
};

// Exact reverse-mode gradient of the mean per-item loss. Per-item gradients
// are computed on independent tapes (parallel-safe) and reduced in sample
// order, so results do not depend on thread count. Returns the batch loss.
double gradients(const OperatorModel& model, const ParamLayout& layout,
                 std::span<const BatchItem> batch, std::span<double> grad);

struct AdamState {
  std::vector<double> m, v;
  long long step = 0;
};

void adam_step(std::span<double> theta, std::span<const double> grad,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

struct TrainConfig {
  double lr = 5e-3;
  int epochs = 10;
  int iterations = 120;  // minibatch steps per epoch
  int batch_size = 8;
  std::uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

void validate(const TrainConfig& cfg);

struct TrainResult {
  std::vector<double> loss_history;  // epochs * iterations entries
};

// Minibatch Adam over (sample, time) pairs drawn uniformly with the seeded
// stream. Aborts with diagnostics if the loss goes non-finite.
TrainResult train(OperatorModel& model, const TrainingSet& data,
                  const TrainConfig& cfg);

// compute z-score/min-max statistics from a training split
NormStats compute_norm_stats(const std::vector<std::vector<double>>& raw_inputs,
                             const std::vector<std::vector<double>>& raw_labels,
                             int in_channels, int out_channels, int plane);

}  // namespace dfs
