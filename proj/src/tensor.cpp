#include "tensor.hpp"

#include <algorithm>
#include <cmath>

namespace dfs {

int Tape::push(TensorShape shape, std::vector<double> value,
               std::function<void()> back) {
  Node n;
  n.shape = shape;
  n.value = std::move(value);
  if (grad_enabled()) {
    n.grad.assign(n.value.size(), 0.0);
    n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(TensorShape shape, std::span<const double> value) {
  require(static_cast<int>(value.size()) == shape.size(),
          ErrorCode::InvalidArgument, "input size does not match shape");
  return push(shape, std::vector<double>(value.begin(), value.end()), {});
}

namespace {

// shared by forward, weight-gradient and input-gradient passes
template <typename F>
void conv_loop(int oc, int ic, int h, int w, int k, F&& body) {
  const int pad = k / 2;
  for (int o = 0; o < oc; ++o)
    for (int ci = 0; ci < ic; ++ci)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const int dy = ky - pad, dx = kx - pad;
          const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          body(o, ci, ky, kx, dy, dx, y0, y1, x0, x1);
        }
}

}  // namespace

int Tape::conv(int x, ParamSlice w, ParamSlice b, int out_c, int kernel) {
  check_node(x);
  require(kernel == 1 || kernel == 3, ErrorCode::InvalidArgument,
          "conv kernel must be 1 or 3");
  const TensorShape in = nodes_[x].shape;
  require(w.len == out_c * in.c * kernel * kernel && b.len == out_c,
          ErrorCode::InvalidArgument, "conv parameter slice mismatch");
  const int h = in.h, wd = in.w, ic = in.c, k = kernel;
  const TensorShape out_shape{out_c, h, wd};
  std::vector<double> out(out_shape.size());

  const double* wp = param(w);
  const double* bp = param(b);
  const double* xp = nodes_[x].value.data();
  for (int o = 0; o < out_c; ++o)
    std::fill_n(out.data() + o * h * wd, h * wd, bp[o]);
  conv_loop(out_c, ic, h, wd, k,
            [&](int o, int ci, int ky, int kx, int dy, int dx, int y0, int y1,
                int x0, int x1) {
              const double wv = wp[((o * ic + ci) * k + ky) * k + kx];
              if (wv == 0.0) return;
              for (int y = y0; y < y1; ++y) {
                double* orow = out.data() + (o * h + y) * wd;
                const double* irow = xp + (ci * h + y + dy) * wd + dx;
                for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
              }
            });

  const int self = static_cast<int>(nodes_.size());
  return push(out_shape, std::move(out),
              [this, self, x, w, b, out_c, kernel]() {
    const Node& node = nodes_[self];
    const TensorShape in = nodes_[x].shape;
    const int h = in.h, wd = in.w, ic = in.c, k = kernel;
    const double* g = node.grad.data();
    const double* xp = nodes_[x].value.data();
    double* gx = nodes_[x].grad.data();
    double* gw = pgrad(w);
    double* gb = pgrad(b);
    const double* wp = param(w);
    for (int o = 0; o < out_c; ++o) {
      double s = 0.0;
      const double* grow = g + o * h * wd;
      for (int i = 0; i < h * wd; ++i) s += grow[i];
      gb[o] += s;
    }
    conv_loop(out_c, ic, h, wd, k,
              [&](int o, int ci, int ky, int kx, int dy, int dx, int y0,
                  int y1, int x0, int x1) {
                const double wv = wp[((o * ic + ci) * k + ky) * k + kx];
                double acc = 0.0;
                for (int y = y0; y < y1; ++y) {
                  const double* grow = g + (o * h + y) * wd;
                  const double* irow = xp + (ci * h + y + dy) * wd + dx;
                  double* gxrow = gx + (ci * h + y + dy) * wd + dx;
                  for (int xx = x0; xx < x1; ++xx) {
                    acc += grow[xx] * irow[xx];
                    gxrow[xx] += wv * grow[xx];
                  }
                }
                gw[((o * ic + ci) * k + ky) * k + kx] += acc;
              });
  });
}

int Tape::dense(int x, ParamSlice w, ParamSlice b, int out_dim) {
  check_node(x);
  const int in_dim = nodes_[x].shape.size();
  require(w.len == out_dim * in_dim && b.len == out_dim,
          ErrorCode::InvalidArgument, "dense parameter slice mismatch");
  const double* wp = param(w);
  const double* bp = param(b);
  const double* xp = nodes_[x].value.data();
  std::vector<double> out(out_dim);
  for (int o = 0; o < out_dim; ++o) {
    double s = bp[o];
    const double* row = wp + o * in_dim;
    for (int i = 0; i < in_dim; ++i) s += row[i] * xp[i];
    out[o] = s;
  }
  const int self = static_cast<int>(nodes_.size());
  return push({out_dim, 1, 1}, std::move(out), [this, self, x, w, b,
                                                out_dim]() {
    const Node& node = nodes_[self];
    const int in_dim = nodes_[x].shape.size();
    const double* g = node.grad.data();
    const double* xp = nodes_[x].value.data();
    const double* wp = param(w);
    double* gx = nodes_[x].grad.data();
    double* gw = pgrad(w);
    double* gb = pgrad(b);
    for (int o = 0; o < out_dim; ++o) {
      gb[o] += g[o];
      const double* row = wp + o * in_dim;
      double* gwrow = gw + o * in_dim;
      for (int i = 0; i < in_dim; ++i) {
        gwrow[i] += g[o] * xp[i];
        gx[i] += row[i] * g[o];
      }
    }
  });
}

int Tape::relu(int x) {
  check_node(x);
  std::vector<double> out = nodes_[x].value;
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  const int self = static_cast<int>(nodes_.size());
  return push(nodes_[x].shape, std::move(out), [this, self, x]() {
    const Node& node = nodes_[self];
    const double* g = node.grad.data();
    const double* xv = nodes_[x].value.data();
    double* gx = nodes_[x].grad.data();
    for (size_t i = 0; i < node.value.size(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

int Tape::sigmoid(int x) {
  check_node(x);
  std::vector<double> out = nodes_[x].value;
  for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
  const int self = static_cast<int>(nodes_.size());
  return push(nodes_[x].shape, std::move(out), [this, self, x]() {
    const Node& node = nodes_[self];
    const double* g = node.grad.data();
    const double* y = node.value.data();
    double* gx = nodes_[x].grad.data();
    for (size_t i = 0; i < node.value.size(); ++i)
      gx[i] += y[i] * (1.0 - y[i]) * g[i];
  });
}

int Tape::add(int a, int b) {
  check_node(a);
  check_node(b);
  require(nodes_[a].shape == nodes_[b].shape, ErrorCode::InvalidArgument,
          "add shape mismatch");
  std::vector<double> out = nodes_[a].value;
  const double* bv = nodes_[b].value.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int self = static_cast<int>(nodes_.size());
  return push(nodes_[a].shape, std::move(out), [this, self, a, b]() {
    const Node& node = nodes_[self];
    const double* g = node.grad.data();
    double* ga = nodes_[a].grad.data();
    double* gb = nodes_[b].grad.data();
    for (size_t i = 0; i < node.value.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

int Tape::mul(int a, int b) {
  check_node(a);
  check_node(b);
  require(nodes_[a].shape == nodes_[b].shape, ErrorCode::InvalidArgument,
          "mul shape mismatch");
  std::vector<double> out = nodes_[a].value;
  const double* bv = nodes_[b].value.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int self = static_cast<int>(nodes_.size());
  return push(nodes_[a].shape, std::move(out), [this, self, a, b]() {
    const Node& node = nodes_[self];
    const double* g = node.grad.data();
    const double* av = nodes_[a].value.data();
    const double* bv = nodes_[b].value.data();
    double* ga = nodes_[a].grad.data();
    double* gb = nodes_[b].grad.data();
    for (size_t i = 0; i < node.value.size(); ++i) {
      ga[i] += bv[i] * g[i];
      gb[i] += av[i] * g[i];
    }
  });
}

int Tape::channel_scale(int x, int s) {
  check_node(x);
  check_node(s);
  const TensorShape xs = nodes_[x].shape;
  require(nodes_[s].shape == TensorShape{xs.c, 1, 1},
          ErrorCode::InvalidArgument, "channel_scale expects per-channel s");
  std::vector<double> out = nodes_[x].value;
  const double* sv = nodes_[s].value.data();
  const int plane = xs.h * xs.w;
  for (int c = 0; c < xs.c; ++c)
    for (int i = 0; i < plane; ++i) out[c * plane + i] *= sv[c];
  const int self = static_cast<int>(nodes_.size());
  return push(xs, std::move(out), [this, self, x, s]() {
    const Node& node = nodes_[self];
    const TensorShape xs = nodes_[x].shape;
    const int plane = xs.h * xs.w;
    const double* g = node.grad.data();
    const double* xv = nodes_[x].value.data();
    const double* sv = nodes_[s].value.data();
    double* gx = nodes_[x].grad.data();
    double* gs = nodes_[s].grad.data();
    for (int c = 0; c < xs.c; ++c) {
      double acc = 0.0;
      for (int i = 0; i < plane; ++i) {
        gx[c * plane + i] += sv[c] * g[c * plane + i];
        acc += xv[c * plane + i] * g[c * plane + i];
      }
      gs[c] += acc;
    }
  });
}

int Tape::avgpool2(int x) {
  check_node(x);
  const TensorShape in = nodes_[x].shape;
  require(in.h % 2 == 0 && in.w % 2 == 0, ErrorCode::InvalidArgument,
          "avgpool2 needs even spatial dims");
  const TensorShape os{in.c, in.h / 2, in.w / 2};
  std::vector<double> out(os.size());
  const double* xp = nodes_[x].value.data();
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < os.h; ++y)
      for (int xx = 0; xx < os.w; ++xx) {
        const double* base = xp + (c * in.h + 2 * y) * in.w + 2 * xx;
        out[(c * os.h + y) * os.w + xx] =
            0.25 * (base[0] + base[1] + base[in.w] + base[in.w + 1]);
      }
  const int self = static_cast<int>(nodes_.size());
  return push(os, std::move(out), [this, self, x]() {
    const Node& node = nodes_[self];
    const TensorShape in = nodes_[x].shape;
    const TensorShape os = node.shape;
    const double* g = node.grad.data();
    double* gx = nodes_[x].grad.data();
    for (int c = 0; c < in.c; ++c)
      for (int y = 0; y < os.h; ++y)
        for (int xx = 0; xx < os.w; ++xx) {
          const double gv = 0.25 * g[(c * os.h + y) * os.w + xx];
          double* base = gx + (c * in.h + 2 * y) * in.w + 2 * xx;
          base[0] += gv;
          base[1] += gv;
          base[in.w] += gv;
          base[in.w + 1] += gv;
        }
  });
}

int Tape::upsample2(int x) {
  check_node(x);
  const TensorShape in = nodes_[x].shape;
  const TensorShape os{in.c, in.h * 2, in.w * 2};
  std::vector<double> out(os.size());
  const double* xp = nodes_[x].value.data();
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < in.h; ++y)
      for (int xx = 0; xx < in.w; ++xx) {
        const double v = xp[(c * in.h + y) * in.w + xx];
        double* base = out.data() + (c * os.h + 2 * y) * os.w + 2 * xx;
        base[0] = v;
        base[1] = v;
        base[os.w] = v;
        base[os.w + 1] = v;
      }
  const int self = static_cast<int>(nodes_.size());
  return push(os, std::move(out), [this, self, x]() {
    const Node& node = nodes_[self];
    const TensorShape in = nodes_[x].shape;
    const TensorShape os = node.shape;
    const double* g = node.grad.data();
    double* gx = nodes_[x].grad.data();
    for (int c = 0; c < in.c; ++c)
      for (int y = 0; y < in.h; ++y)
        for (int xx = 0; xx < in.w; ++xx) {
          const double* base = g + (c * os.h + 2 * y) * os.w + 2 * xx;
          gx[(c * in.h + y) * in.w + xx] +=
              base[0] + base[1] + base[os.w] + base[os.w + 1];
        }
  });
}

int Tape::concat(int a, int b) {
  check_node(a);
  check_node(b);
  const TensorShape as = nodes_[a].shape, bs = nodes_[b].shape;
  require(as.h == bs.h && as.w == bs.w, ErrorCode::InvalidArgument,
          "concat spatial mismatch");
  const TensorShape os{as.c + bs.c, as.h, as.w};
  std::vector<double> out;
  out.reserve(os.size());
  out.insert(out.end(), nodes_[a].value.begin(), nodes_[a].value.end());
  out.insert(out.end(), nodes_[b].value.begin(), nodes_[b].value.end());
  const int self = static_cast<int>(nodes_.size());
  return push(os, std::move(out), [this, self, a, b]() {
    const Node& node = nodes_[self];
    const size_t na = nodes_[a].value.size();
    const double* g = node.grad.data();
    double* ga = nodes_[a].grad.data();
    double* gb = nodes_[b].grad.data();
    for (size_t i = 0; i < na; ++i) ga[i] += g[i];
    for (size_t i = 0; i < nodes_[b].value.size(); ++i) gb[i] += g[na + i];
  });
}

int Tape::mse_against(int x, std::span<const double> target) {
  check_node(x);
  require(target.size() == nodes_[x].value.size(), ErrorCode::InvalidArgument,
          "mse target size mismatch");
  const double* xv = nodes_[x].value.data();
  const size_t n = target.size();
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = xv[i] - target[i];
    s += d * d;
  }
  std::vector<double> out{s / static_cast<double>(n)};
  std::vector<double> tgt(target.begin(), target.end());
  const int self = static_cast<int>(nodes_.size());
  return push({1, 1, 1}, std::move(out),
              [this, self, x, tgt = std::move(tgt)]() {
    const Node& node = nodes_[self];
    const double g = node.grad[0];
    const double* xv = nodes_[x].value.data();
    double* gx = nodes_[x].grad.data();
    const double scale = 2.0 * g / static_cast<double>(tgt.size());
    for (size_t i = 0; i < tgt.size(); ++i)
      gx[i] += scale * (xv[i] - tgt[i]);
  });
}

void Tape::backward(int scalar_node) {
  require(grad_enabled(), ErrorCode::InvalidArgument,
          "backward on inference-only tape");
  check_node(scalar_node);
  require(nodes_[scalar_node].shape.size() == 1, ErrorCode::InvalidArgument,
          "backward expects a scalar node");
  nodes_[scalar_node].grad[0] = 1.0;
  for (int id = scalar_node; id >= 0; --id)
    if (nodes_[id].back) nodes_[id].back();
}

}  // namespace dfs
