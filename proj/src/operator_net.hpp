#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace dfs {

// Architecture descriptor. Both kinds share the same convolutional
// encoder-decoder backbone (residual blocks, sigmoid-gated skips):
//   aronet - branch produces q feature maps, a dense trunk maps the
//            sine-cosine time embedding to q channel weights, combined by
//            channel-wise multiplication, then 1x1 conv + sigmoid.
//   arunet - the time embedding (d = H*W) is reshaped to one extra input
//            channel, backbone output goes straight to 1x1 conv + sigmoid.
struct OperatorArch {
  std::string kind = "aronet";  // "aronet" | "arunet"
  int in_channels = 4;          // physical feature channels (without TE)
  int out_channels = 1;
  int height = 16;
  int width = 16;
  int base_width = 16;  // channels at full resolution
  int levels = 2;       // number of down/up steps
  int q = 16;           // branch/trunk coupling channels
  int trunk_dim = 64;   // time-embedding length for the trunk
  int trunk_hidden = 64;

  bool operator==(const OperatorArch&) const = default;
};

void validate(const OperatorArch& arch);

struct ConvSpec {
  ParamSlice w, b;
  int in_c = 0, out_c = 0, k = 0;
};

struct DenseSpec {
  ParamSlice w, b;
  int in_dim = 0, out_dim = 0;
};

// Deterministic flat-parameter layout derived from the descriptor.
struct ParamLayout {
  // encoder: level l runs at resolution /2^l with base_width*2^l channels
  std::vector<ConvSpec> enc_in;                  // levels+1 entries
  std::vector<std::array<ConvSpec, 2>> enc_res;  // residual pair per level
  // decoder, from level levels-1 down to 0
  std::vector<ConvSpec> dec_in;     // conv after upsample
  std::vector<ConvSpec> gate_g;     // 1x1 on decoder feature
  std::vector<ConvSpec> gate_x;     // 1x1 on encoder skip
  std::vector<ConvSpec> dec_merge;  // conv after gated concat
  // heads
  ConvSpec branch_out;  // aronet only
  DenseSpec trunk_l1, trunk_l2;  // aronet only
  ConvSpec head;  // 1x1 to out_channels
  int total = 0;
};

ParamLayout build_param_layout(const OperatorArch& arch);
int parameter_count(const OperatorArch& arch);

// Normalization statistics, computed on the initial training split only.
struct NormStats {
  std::vector<double> input_mean, input_std;   // per input channel
  std::vector<double> output_min, output_max;  // per output channel
};

struct OperatorModel {
  OperatorArch arch;
  NormStats stats;
  std::vector<double> params;
};

// He-style seeded initialization (weights ~ N(0, 2/fan_in), biases 0).
OperatorModel make_operator_model(const OperatorArch& arch,
                                  std::uint64_t seed);

// Sine-cosine positional encoding of the step index:
//   TE[2i] = sin(t / 10000^{2i/d}), TE[2i+1] = cos(t / 10000^{2i/d}).
std::vector<double> time_embedding(double t, int d);

// z-score inputs per channel (std floored at 1e-12); min-max outputs per
// channel to [0,1], with a constant channel mapping to 0.
void normalize_input(std::span<double> x, const NormStats& stats, int plane);
void normalize_output(std::span<double> y, const NormStats& stats, int plane);
void denormalize_output(std::span<double> y, const NormStats& stats,
                        int plane);

// Builds the forward graph on the tape; returns the prediction node
// ([out_channels, H, W], normalized space). `input` is the normalized
// physical-channel tensor, `t` the time-step index.
int forward_on_tape(Tape& tape, const OperatorArch& arch,
                    const ParamLayout& layout, std::span<const double> input,
                    double t);

// Inference-only forward pass in normalized space.
std::vector<double> forward(const OperatorModel& model,
                            std::span<const double> normalized_input,
                            double t);

}  // namespace dfs
