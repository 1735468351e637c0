#pragma once

#include <array>
#include <string>
#include <vector>

#include "error.hpp"

namespace dfs {

// Structured grid with row-major cell enumeration: x fastest, then y, then z.
struct Grid {
  int nx = 1, ny = 1, nz = 1;
  double dx = 1.0, dy = 1.0, dz = 1.0;

  int num_cells() const { return nx * ny * nz; }
  bool is_2d() const { return nz == 1; }
  double cell_volume() const { return dx * dy * dz; }

  int cell_id(int x, int y, int z) const { return x + nx * (y + ny * z); }

  std::array<int, 3> cell_xyz(int id) const {
    return {id % nx, (id / nx) % ny, id / (nx * ny)};
  }

  bool operator==(const Grid&) const = default;
};

Grid build_grid(int nx, int ny, int nz, double dx, double dy, double dz);

// Face directions, in fixed enumeration order. The 2D transmissibility
// channel layout (+x, -x, +y, -y) follows this ordering.
enum class Direction : int {
  XPlus = 0,
  XMinus = 1,
  YPlus = 2,
  YMinus = 3,
  ZPlus = 4,
  ZMinus = 5
};

Direction opposite(Direction d);

struct Neighbor {
  int cell;                // neighbor cell id
  double face_area;        // [m^2]
  double center_distance;  // cell-center to cell-center [m]
  Direction dir;           // direction from the queried cell to `cell`
};

// Interior-face neighbors only; no-flow boundary faces are omitted.
std::vector<Neighbor> neighbors(const Grid& grid, int cell_id);

int num_interior_faces(const Grid& grid);

// Scalar field with one value per cell.
struct CellField {
  Grid grid;
  std::vector<double> values;
  std::string units;
};

CellField make_cell_field(const Grid& grid, double fill = 0.0,
                          std::string units = "");

// length and finiteness checks
void validate_cell_field(const CellField& f);

}  // namespace dfs
