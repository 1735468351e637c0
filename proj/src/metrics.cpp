#include "metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dfs {

double relative_error(std::span<const double> pred,
                      std::span<const double> label) {
  require(pred.size() == label.size() && !pred.empty(),
          ErrorCode::InvalidArgument, "relative_error shape mismatch");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - label[i];
    num += d * d;
    den += label[i] * label[i];
  }
  require(den > 0.0, ErrorCode::UndefinedMetric,
          "relative error undefined for zero-norm label");
  return std::sqrt(num / den);
}

double well_block_error(std::span<const double> pred,
                        std::span<const double> label, int plane,
                        std::span<const int> well_cells) {
  require(!well_cells.empty(), ErrorCode::InvalidArgument,
          "well_block_error needs at least one well");
  require(pred.size() == label.size() && plane > 0 &&
              pred.size() % static_cast<size_t>(plane) == 0,
          ErrorCode::InvalidArgument, "well_block_error shape mismatch");
  const size_t planes = pred.size() / plane;
  std::vector<double> p, l;
  p.reserve(planes * well_cells.size());
  l.reserve(planes * well_cells.size());
  for (size_t t = 0; t < planes; ++t)
    for (int c : well_cells) {
      require(c >= 0 && c < plane, ErrorCode::InvalidArgument,
              "well cell out of range");
      p.push_back(pred[t * plane + c]);
      l.push_back(label[t * plane + c]);
    }
  return relative_error(p, l);
}

double mean_squared_error(std::span<const double> pred,
                          std::span<const double> label) {
  require(pred.size() == label.size() && !pred.empty(),
          ErrorCode::InvalidArgument, "mse shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - label[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

Histogram log10_histogram(std::span<const double> errors, int bins) {
  require(bins >= 1, ErrorCode::InvalidArgument, "bins must be >= 1");
  require(!errors.empty(), ErrorCode::InvalidArgument, "no errors to bin");
  std::vector<double> logs;
  logs.reserve(errors.size());
  for (double e : errors) logs.push_back(std::log10(std::max(e, 1e-300)));
  const double lo = *std::min_element(logs.begin(), logs.end());
  double hi = *std::max_element(logs.begin(), logs.end());
  if (hi <= lo) hi = lo + 1.0;  // all equal: single occupied bin
  Histogram h;
  h.edges.resize(bins + 1);
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges[i] = lo + width * i;
  for (double v : logs) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[b];
  }
  return h;
}

}  // namespace dfs
