#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rng.hpp"

namespace dfs {

double operator_loss(const std::vector<std::vector<double>>& pred,
                     const std::vector<std::vector<double>>& labels) {
  require(pred.size() == labels.size() && !pred.empty(),
          ErrorCode::InvalidArgument, "loss needs matching non-empty terms");
  double total = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    require(pred[i].size() == labels[i].size(), ErrorCode::InvalidArgument,
            "loss term size mismatch");
    double s = 0.0;
    for (size_t j = 0; j < pred[i].size(); ++j) {
      const double d = pred[i][j] - labels[i][j];
      s += d * d;
    }
    total += s / static_cast<double>(pred[i].size());
  }
  return total / static_cast<double>(pred.size());
}

double gradients(const OperatorModel& model, const ParamLayout& layout,
                 std::span<const BatchItem> batch, std::span<double> grad) {
  require(!batch.empty(), ErrorCode::InvalidArgument, "empty batch");
  require(grad.size() == model.params.size(), ErrorCode::InvalidArgument,
          "gradient buffer size mismatch");
  const int n = static_cast<int>(batch.size());
  std::vector<std::vector<double>> item_grads(
      n, std::vector<double>(model.params.size(), 0.0));
  std::vector<double> item_loss(n, 0.0);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Tape tape(model.params, item_grads[i]);
    const int out =
        forward_on_tape(tape, model.arch, layout, batch[i].input,
                        static_cast<double>(batch[i].t));
    const int loss = tape.mse_against(out, batch[i].label);
    item_loss[i] = tape.value(loss)[0];
    tape.backward(loss);
  }

  // fixed reduction order keeps results independent of thread count
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    loss += item_loss[i];
    const std::vector<double>& g = item_grads[i];
    for (size_t k = 0; k < grad.size(); ++k) grad[k] += g[k] * inv_n;
  }
  return loss * inv_n;
}

void adam_step(std::span<double> theta, std::span<const double> grad,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  require(theta.size() == grad.size(), ErrorCode::InvalidArgument,
          "adam shape mismatch");
  if (state.m.size() != theta.size()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void validate(const TrainConfig& cfg) {
  require(cfg.lr > 0, ErrorCode::InvalidArgument, "learning rate must be > 0");
  require(cfg.epochs >= 0 && cfg.iterations >= 0, ErrorCode::InvalidArgument,
          "epochs/iterations must be >= 0");
  require(cfg.batch_size >= 1, ErrorCode::InvalidArgument,
          "batch size must be >= 1");
}

TrainResult train(OperatorModel& model, const TrainingSet& data,
                  const TrainConfig& cfg) {
  validate(cfg);
  require(data.num_samples() >= 1 && data.num_times() >= 1,
          ErrorCode::InvalidArgument, "training set is empty");

  const ParamLayout layout = build_param_layout(model.arch);
  Rng rng(cfg.seed);
  AdamState adam;
  std::vector<double> grad(model.params.size());
  TrainResult result;
  result.loss_history.reserve(
      static_cast<size_t>(cfg.epochs) * cfg.iterations);

  std::vector<BatchItem> batch(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int iter = 0; iter < cfg.iterations; ++iter) {
      for (int b = 0; b < cfg.batch_size; ++b) {
        const int s = static_cast<int>(rng.below(data.num_samples()));
        const int ti = static_cast<int>(rng.below(data.num_times()));
        batch[b] = {data.inputs[s], data.snapshot_steps[ti],
                    data.label(s, ti)};
      }
      const double loss = gradients(model, layout, batch, grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " iteration " << iter
            << " (lr " << cfg.lr << ")";
        fail(ErrorCode::Numerical, msg.str());
      }
      adam_step(model.params, grad, adam, cfg.lr, cfg.beta1, cfg.beta2,
                cfg.eps);
      result.loss_history.push_back(loss);
    }
  }
  return result;
}

NormStats compute_norm_stats(const std::vector<std::vector<double>>& raw_inputs,
                             const std::vector<std::vector<double>>& raw_labels,
                             int in_channels, int out_channels, int plane) {
  require(!raw_inputs.empty() && !raw_labels.empty(),
          ErrorCode::InvalidArgument, "stats need a non-empty split");
  NormStats stats;
  stats.input_mean.assign(in_channels, 0.0);
  stats.input_std.assign(in_channels, 0.0);
  stats.output_min.assign(out_channels,
                          std::numeric_limits<double>::infinity());
  stats.output_max.assign(out_channels,
                          -std::numeric_limits<double>::infinity());

  const double count =
      static_cast<double>(raw_inputs.size()) * static_cast<double>(plane);
  for (int c = 0; c < in_channels; ++c) {
    double sum = 0.0;
    for (const auto& x : raw_inputs)
      for (int i = 0; i < plane; ++i)
        sum += x[static_cast<size_t>(c) * plane + i];
    const double mean = sum / count;
    double var = 0.0;
    for (const auto& x : raw_inputs)
      for (int i = 0; i < plane; ++i) {
        const double d = x[static_cast<size_t>(c) * plane + i] - mean;
        var += d * d;
      }
    stats.input_mean[c] = mean;
    stats.input_std[c] = std::sqrt(var / count);
  }

  for (const auto& y : raw_labels) {
    require(y.size() % (static_cast<size_t>(out_channels) * plane) == 0,
            ErrorCode::InvalidArgument, "label size mismatch in stats");
    const size_t times = y.size() / (static_cast<size_t>(out_channels) * plane);
    for (size_t t = 0; t < times; ++t)
      for (int c = 0; c < out_channels; ++c)
        for (int i = 0; i < plane; ++i) {
          const double v =
              y[(t * out_channels + c) * static_cast<size_t>(plane) + i];
          stats.output_min[c] = std::min(stats.output_min[c], v);
          stats.output_max[c] = std::max(stats.output_max[c], v);
        }
  }
  return stats;
}

}  // namespace dfs
