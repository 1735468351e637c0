#include "operator_net.hpp"

#include <cmath>

#include "rng.hpp"

namespace dfs {

void validate(const OperatorArch& arch) {
  require(arch.kind == "aronet" || arch.kind == "arunet",
          ErrorCode::InvalidArgument, "unknown architecture kind");
  require(arch.in_channels >= 1 && arch.out_channels >= 1,
          ErrorCode::InvalidArgument, "channel counts must be >= 1");
  require(arch.base_width >= 1 && arch.q >= 1, ErrorCode::InvalidArgument,
          "width parameters must be >= 1");
  require(arch.levels >= 1, ErrorCode::InvalidArgument, "levels must be >= 1");
  const int div = 1 << arch.levels;
  require(arch.height % div == 0 && arch.width % div == 0,
          ErrorCode::InvalidArgument,
          "spatial dims must be divisible by 2^levels");
  if (arch.kind == "aronet") {
    require(arch.trunk_dim >= 2 && arch.trunk_dim % 2 == 0,
            ErrorCode::InvalidArgument, "trunk_dim must be even and >= 2");
    require(arch.trunk_hidden >= 1, ErrorCode::InvalidArgument,
            "trunk_hidden must be >= 1");
  } else {
    // TE channel needs an even embedding length
    require((arch.height * arch.width) % 2 == 0, ErrorCode::InvalidArgument,
            "arunet requires even H*W for the time-embedding channel");
  }
}

namespace {

struct LayoutCursor {
  int offset = 0;
  ParamSlice take(int len) {
    ParamSlice s{offset, len};
    offset += len;
    return s;
  }
  ConvSpec conv(int in_c, int out_c, int k) {
    ConvSpec c;
    c.in_c = in_c;
    c.out_c = out_c;
    c.k = k;
    c.w = take(out_c * in_c * k * k);
    c.b = take(out_c);
    return c;
  }
  DenseSpec dense(int in_dim, int out_dim) {
    DenseSpec d;
    d.in_dim = in_dim;
    d.out_dim = out_dim;
    d.w = take(out_dim * in_dim);
    d.b = take(out_dim);
    return d;
  }
};

int backbone_in_channels(const OperatorArch& arch) {
  return arch.kind == "arunet" ? arch.in_channels + 1 : arch.in_channels;
}

}  // namespace

ParamLayout build_param_layout(const OperatorArch& arch) {
  validate(arch);
  ParamLayout lay;
  LayoutCursor cur;
  const int L = arch.levels;
  auto width_at = [&](int level) { return arch.base_width << level; };

  int prev = backbone_in_channels(arch);
  for (int l = 0; l <= L; ++l) {
    const int c = width_at(l);
    lay.enc_in.push_back(cur.conv(prev, c, 3));
    lay.enc_res.push_back({cur.conv(c, c, 3), cur.conv(c, c, 3)});
    prev = c;
  }
  for (int l = L - 1; l >= 0; --l) {
    const int c = width_at(l);
    lay.dec_in.push_back(cur.conv(width_at(l + 1), c, 3));
    lay.gate_g.push_back(cur.conv(c, c, 1));
    lay.gate_x.push_back(cur.conv(c, c, 1));
    lay.dec_merge.push_back(cur.conv(2 * c, c, 3));
  }
  if (arch.kind == "aronet") {
    lay.branch_out = cur.conv(arch.base_width, arch.q, 3);
    lay.trunk_l1 = cur.dense(arch.trunk_dim, arch.trunk_hidden);
    lay.trunk_l2 = cur.dense(arch.trunk_hidden, arch.q);
    lay.head = cur.conv(arch.q, arch.out_channels, 1);
  } else {
    lay.head = cur.conv(arch.base_width, arch.out_channels, 1);
  }
  lay.total = cur.offset;
  return lay;
}

int parameter_count(const OperatorArch& arch) {
  return build_param_layout(arch).total;
}

OperatorModel make_operator_model(const OperatorArch& arch,
                                  std::uint64_t seed) {
  const ParamLayout lay = build_param_layout(arch);
  OperatorModel model;
  model.arch = arch;
  model.params.assign(lay.total, 0.0);
  model.stats.input_mean.assign(arch.in_channels, 0.0);
  model.stats.input_std.assign(arch.in_channels, 1.0);
  model.stats.output_min.assign(arch.out_channels, 0.0);
  model.stats.output_max.assign(arch.out_channels, 1.0);

  Rng rng(seed);
  auto init_conv = [&](const ConvSpec& c) {
    const double scale = std::sqrt(2.0 / (c.in_c * c.k * c.k));
    for (int i = 0; i < c.w.len; ++i)
      model.params[c.w.offset + i] = scale * rng.normal();
  };
  auto init_dense = [&](const DenseSpec& d) {
    const double scale = std::sqrt(2.0 / d.in_dim);
    for (int i = 0; i < d.w.len; ++i)
      model.params[d.w.offset + i] = scale * rng.normal();
  };
  for (const auto& c : lay.enc_in) init_conv(c);
  for (const auto& pair : lay.enc_res) {
    init_conv(pair[0]);
    init_conv(pair[1]);
  }
  for (const auto& c : lay.dec_in) init_conv(c);
  for (const auto& c : lay.gate_g) init_conv(c);
  for (const auto& c : lay.gate_x) init_conv(c);
  for (const auto& c : lay.dec_merge) init_conv(c);
  if (arch.kind == "aronet") {
    init_conv(lay.branch_out);
    init_dense(lay.trunk_l1);
    init_dense(lay.trunk_l2);
  }
  init_conv(lay.head);
  return model;
}

std::vector<double> time_embedding(double t, int d) {
  require(d >= 2 && d % 2 == 0, ErrorCode::InvalidArgument,
          "embedding dimension must be even and >= 2");
  require(t >= 0, ErrorCode::InvalidArgument, "time index must be >= 0");
  std::vector<double> te(d);
  for (int i = 0; i < d / 2; ++i) {
    const double freq = std::pow(10000.0, 2.0 * i / d);
    te[2 * i] = std::sin(t / freq);
    te[2 * i + 1] = std::cos(t / freq);
  }
  return te;
}

void normalize_input(std::span<double> x, const NormStats& stats, int plane) {
  const int channels = static_cast<int>(stats.input_mean.size());
  require(static_cast<int>(x.size()) == channels * plane,
          ErrorCode::InvalidArgument, "input size/stats mismatch");
  for (int c = 0; c < channels; ++c) {
    const double mean = stats.input_mean[c];
    const double sd = std::max(stats.input_std[c], 1e-12);
    for (int i = 0; i < plane; ++i) {
      double& v = x[static_cast<size_t>(c) * plane + i];
      v = (v - mean) / sd;
    }
  }
}

void normalize_output(std::span<double> y, const NormStats& stats, int plane) {
  const int channels = static_cast<int>(stats.output_min.size());
  require(static_cast<int>(y.size()) == channels * plane,
          ErrorCode::InvalidArgument, "output size/stats mismatch");
  for (int c = 0; c < channels; ++c) {
    const double lo = stats.output_min[c];
    const double range = stats.output_max[c] - lo;
    for (int i = 0; i < plane; ++i) {
      double& v = y[static_cast<size_t>(c) * plane + i];
      v = range > 0.0 ? (v - lo) / range : 0.0;
    }
  }
}

void denormalize_output(std::span<double> y, const NormStats& stats,
                        int plane) {
  const int channels = static_cast<int>(stats.output_min.size());
  require(static_cast<int>(y.size()) == channels * plane,
          ErrorCode::InvalidArgument, "output size/stats mismatch");
  for (int c = 0; c < channels; ++c) {
    const double lo = stats.output_min[c];
    const double range = stats.output_max[c] - lo;
    for (int i = 0; i < plane; ++i) {
      double& v = y[static_cast<size_t>(c) * plane + i];
      v = lo + v * range;
    }
  }
}

namespace {

// encoder-decoder with residual blocks and sigmoid-gated skips; returns the
// full-resolution feature node with base_width channels
int backbone(Tape& tape, const OperatorArch& arch, const ParamLayout& lay,
             int x) {
  const int L = arch.levels;
  std::vector<int> skips;
  int cur = x;
  for (int l = 0; l <= L; ++l) {
    const ConvSpec& in = lay.enc_in[l];
    cur = tape.relu(tape.conv(cur, in.w, in.b, in.out_c, in.k));
    const auto& [r1, r2] = lay.enc_res[l];
    int r = tape.relu(tape.conv(cur, r1.w, r1.b, r1.out_c, r1.k));
    r = tape.conv(r, r2.w, r2.b, r2.out_c, r2.k);
    cur = tape.relu(tape.add(cur, r));
    if (l < L) {
      skips.push_back(cur);
      cur = tape.avgpool2(cur);
    }
  }
  for (int i = 0; i < L; ++i) {  // decoder level = L-1-i
    const int skip = skips[L - 1 - i];
    const ConvSpec& din = lay.dec_in[i];
    int g = tape.relu(
        tape.conv(tape.upsample2(cur), din.w, din.b, din.out_c, din.k));
    const ConvSpec& gg = lay.gate_g[i];
    const ConvSpec& gx = lay.gate_x[i];
    const int gate = tape.sigmoid(
        tape.add(tape.conv(g, gg.w, gg.b, gg.out_c, gg.k),
                 tape.conv(skip, gx.w, gx.b, gx.out_c, gx.k)));
    const int gated_skip = tape.mul(gate, skip);
    const ConvSpec& merge = lay.dec_merge[i];
    cur = tape.relu(tape.conv(tape.concat(g, gated_skip), merge.w, merge.b,
                              merge.out_c, merge.k));
  }
  return cur;
}

}  // namespace

int forward_on_tape(Tape& tape, const OperatorArch& arch,
                    const ParamLayout& lay, std::span<const double> input,
                    double t) {
  const int plane = arch.height * arch.width;
  require(static_cast<int>(input.size()) == arch.in_channels * plane,
          ErrorCode::InvalidArgument, "forward input shape mismatch");

  if (arch.kind == "aronet") {
    const int u =
        tape.input({arch.in_channels, arch.height, arch.width}, input);
    const int feat = backbone(tape, arch, lay, u);
    const ConvSpec& bo = lay.branch_out;
    const int branch = tape.conv(feat, bo.w, bo.b, bo.out_c, bo.k);

    const std::vector<double> te = time_embedding(t, arch.trunk_dim);
    const int te_node = tape.input({arch.trunk_dim, 1, 1}, te);
    const DenseSpec& t1 = lay.trunk_l1;
    const DenseSpec& t2 = lay.trunk_l2;
    int trunk = tape.relu(tape.dense(te_node, t1.w, t1.b, t1.out_dim));
    trunk = tape.dense(trunk, t2.w, t2.b, t2.out_dim);

    const int combined = tape.channel_scale(branch, trunk);
    const ConvSpec& head = lay.head;
    return tape.sigmoid(
        tape.conv(combined, head.w, head.b, head.out_c, head.k));
  }

  // arunet: time embedding becomes one extra input channel
  const std::vector<double> te = time_embedding(t, plane);
  std::vector<double> with_te;
  with_te.reserve(input.size() + te.size());
  with_te.insert(with_te.end(), input.begin(), input.end());
  with_te.insert(with_te.end(), te.begin(), te.end());
  const int u = tape.input({arch.in_channels + 1, arch.height, arch.width},
                           with_te);
  const int feat = backbone(tape, arch, lay, u);
  const ConvSpec& head = lay.head;
  return tape.sigmoid(tape.conv(feat, head.w, head.b, head.out_c, head.k));
}

std::vector<double> forward(const OperatorModel& model,
                            std::span<const double> normalized_input,
                            double t) {
  const ParamLayout lay = build_param_layout(model.arch);
  require(static_cast<int>(model.params.size()) == lay.total,
          ErrorCode::InvalidArgument, "parameter vector length mismatch");
  Tape tape(model.params, {});
  const int out = forward_on_tape(tape, model.arch, lay, normalized_input, t);
  return tape.value(out);
}

}  // namespace dfs
