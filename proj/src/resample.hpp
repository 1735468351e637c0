#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dfs {

// Systematic resampling: one uniform start u1 ~ U(0, 1/m_out), stride
// 1/m_out, traversal of the cumulative weights. Guarantees each input's
// multiplicity is floor(m*w) or ceil(m*w). Returns selected input indices.
std::vector<int> systematic_resample(std::span<const double> weights,
                                     int m_out, std::uint64_t seed);

// deterministic variant with the start point supplied directly
std::vector<int> systematic_resample_with_start(std::span<const double> weights,
                                                int m_out, double u1);

}  // namespace dfs
