#pragma once

#include <span>
#include <vector>

#include "error.hpp"

namespace dfs {

// ||pred - label||_2 / ||label||_2 over everything passed in (all cells and
// snapshot times of one sample, in physical units). Zero-norm labels have
// no scale to compare against.
double relative_error(std::span<const double> pred,
                      std::span<const double> label);

// relative_error restricted to the given cell indices, across all time
// planes. `plane` is the number of cells per time plane.
double well_block_error(std::span<const double> pred,
                        std::span<const double> label, int plane,
                        std::span<const int> well_cells);

double mean_squared_error(std::span<const double> pred,
                          std::span<const double> label);

struct Histogram {
  std::vector<double> edges;  // bins+1
  std::vector<int> counts;    // bins
};

// histogram of log10(errors); non-positive entries are clamped to the
// lowest bin
Histogram log10_histogram(std::span<const double> errors, int bins = 30);

}  // namespace dfs
