#include "resample.hpp"

#include "error.hpp"
#include "rng.hpp"

namespace dfs {

std::vector<int> systematic_resample_with_start(std::span<const double> weights,
                                                int m_out, double u1) {
  require(m_out >= 1, ErrorCode::InvalidArgument, "m_out must be >= 1");
  require(!weights.empty(), ErrorCode::InvalidArgument, "no weights");
  require(u1 >= 0.0 && u1 < 1.0 / m_out, ErrorCode::InvalidArgument,
          "u1 must lie in [0, 1/m_out)");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, ErrorCode::InvalidArgument, "negative weight");
    total += w;
  }
  require(total > 0.0, ErrorCode::InvalidArgument, "all weights are zero");

  const int n = static_cast<int>(weights.size());
  std::vector<int> out;
  out.reserve(m_out);
  int j = 0;
  double cumulative = weights[0] / total;
  for (int i = 0; i < m_out; ++i) {
    const double u = u1 + static_cast<double>(i) / m_out;
    while (u > cumulative && j + 1 < n) {
      ++j;
      cumulative += weights[j] / total;
    }
    out.push_back(j);
  }
  return out;
}

std::vector<int> systematic_resample(std::span<const double> weights,
                                     int m_out, std::uint64_t seed) {
  require(m_out >= 1, ErrorCode::InvalidArgument, "m_out must be >= 1");
  Rng rng(seed);
  const double u1 = rng.uniform() / m_out;
  return systematic_resample_with_start(weights, m_out, u1);
}

}  // namespace dfs
