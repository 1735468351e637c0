#include "grid.hpp"

#include <cmath>

namespace dfs {

Grid build_grid(int nx, int ny, int nz, double dx, double dy, double dz) {
  require(nx >= 1 && ny >= 1 && nz >= 1, ErrorCode::InvalidArgument,
          "grid cell counts must be >= 1");
  require(dx > 0 && dy > 0 && dz > 0, ErrorCode::InvalidArgument,
          "grid spacings must be > 0");
  return Grid{nx, ny, nz, dx, dy, dz};
}

Direction opposite(Direction d) {
  const int i = static_cast<int>(d);
  return static_cast<Direction>(i % 2 == 0 ? i + 1 : i - 1);
}

std::vector<Neighbor> neighbors(const Grid& grid, int cell_id) {
  require(cell_id >= 0 && cell_id < grid.num_cells(),
          ErrorCode::InvalidArgument, "cell id out of range");
  const auto [x, y, z] = grid.cell_xyz(cell_id);
  std::vector<Neighbor> out;
  out.reserve(6);
  const double ax = grid.dy * grid.dz;
  const double ay = grid.dx * grid.dz;
  const double az = grid.dx * grid.dy;
  if (x + 1 < grid.nx)
    out.push_back({grid.cell_id(x + 1, y, z), ax, grid.dx, Direction::XPlus});
  if (x - 1 >= 0)
    out.push_back({grid.cell_id(x - 1, y, z), ax, grid.dx, Direction::XMinus});
  if (y + 1 < grid.ny)
    out.push_back({grid.cell_id(x, y + 1, z), ay, grid.dy, Direction::YPlus});
  if (y - 1 >= 0)
    out.push_back({grid.cell_id(x, y - 1, z), ay, grid.dy, Direction::YMinus});
  if (z + 1 < grid.nz)
    out.push_back({grid.cell_id(x, y, z + 1), az, grid.dz, Direction::ZPlus});
  if (z - 1 >= 0)
    out.push_back({grid.cell_id(x, y, z - 1), az, grid.dz, Direction::ZMinus});
  return out;
}

int num_interior_faces(const Grid& g) {
  return (g.nx - 1) * g.ny * g.nz + g.nx * (g.ny - 1) * g.nz +
         g.nx * g.ny * (g.nz - 1);
}

CellField make_cell_field(const Grid& grid, double fill, std::string units) {
  CellField f;
  f.grid = grid;
  f.values.assign(static_cast<size_t>(grid.num_cells()), fill);
  f.units = std::move(units);
  return f;
}

void validate_cell_field(const CellField& f) {
  require(f.values.size() == static_cast<size_t>(f.grid.num_cells()),
          ErrorCode::InvalidData, "cell field length does not match grid");
  for (double v : f.values)
    require(std::isfinite(v), ErrorCode::InvalidData,
            "cell field contains non-finite value");
}

}  // namespace dfs
