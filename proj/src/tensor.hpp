#pragma once

#include <functional>
#include <span>
#include <vector>

#include "error.hpp"

namespace dfs {

// Per-sample activation shape; vectors use {len, 1, 1}.
struct TensorShape {
  int c = 1, h = 1, w = 1;
  int size() const { return c * h * w; }
  bool operator==(const TensorShape&) const = default;
};

// Slice of the flat model parameter vector.
struct ParamSlice {
  int offset = 0;
  int len = 0;
};

// Reverse-mode tape over small dense tensors. One tape processes one sample;
// batches are handled by running independent tapes and reducing their
// parameter gradients in a fixed order. Nodes are created in topological
// order, so backward is a reverse sweep over creation order.
//
// Constructed with an empty param_grad span the tape runs inference-only:
// no gradient buffers, no backward closures.
class Tape {
 public:
  Tape(std::span<const double> params, std::span<double> param_grad)
      : params_(params), pgrad_(param_grad) {
    require(param_grad.empty() || param_grad.size() == params.size(),
            ErrorCode::InvalidArgument, "param_grad size mismatch");
  }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // gradient mode whenever a full-size (possibly zero-length) gradient
  // buffer is supplied; a defaulted span means inference-only
  bool grad_enabled() const { return pgrad_.size() == params_.size(); }

  int input(TensorShape shape, std::span<const double> value);

  // stride-1 convolution with same padding; kernel 1 or 3
  int conv(int x, ParamSlice w, ParamSlice b, int out_c, int kernel);
  int dense(int x, ParamSlice w, ParamSlice b, int out_dim);
  int relu(int x);
  int sigmoid(int x);
  int add(int a, int b);
  int mul(int a, int b);
  // x:[c,h,w] scaled per channel by s:[c,1,1]
  int channel_scale(int x, int s);
  int avgpool2(int x);
  int upsample2(int x);
  int concat(int a, int b);
  // scalar node: mean over all entries of (x - target)^2
  int mse_against(int x, std::span<const double> target);

  const std::vector<double>& value(int id) const { return nodes_[id].value; }
  const std::vector<double>& grad(int id) const { return nodes_[id].grad; }
  TensorShape shape(int id) const { return nodes_[id].shape; }

  void backward(int scalar_node);

 private:
  struct Node {
    TensorShape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void()> back;
  };

  std::span<const double> params_;
  std::span<double> pgrad_;
  std::vector<Node> nodes_;

  int push(TensorShape shape, std::vector<double> value,
           std::function<void()> back);
  const double* param(ParamSlice s) const { return params_.data() + s.offset; }
  double* pgrad(ParamSlice s) { return pgrad_.data() + s.offset; }
  void check_node(int id) const {
    require(id >= 0 && id < static_cast<int>(nodes_.size()),
            ErrorCode::InvalidArgument, "bad tape node id");
  }
};

}  // namespace dfs
