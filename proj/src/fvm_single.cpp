#include "fvm_single.hpp"

#include <cmath>
#include <sstream>

namespace dfs {

double cell_half_transmissibility(double k, double area, double dist,
                                  double mu) {
  require(area > 0 && dist > 0 && mu > 0, ErrorCode::InvalidArgument,
          "half-transmissibility needs area, distance, viscosity > 0");
  require(k >= 0, ErrorCode::InvalidArgument, "permeability must be >= 0");
  return k * area / (mu * dist);
}

double face_transmissibility(double ti, double tj) {
  require(ti >= 0 && tj >= 0, ErrorCode::InvalidArgument,
          "half-transmissibilities must be >= 0");
  if (ti == 0.0 || tj == 0.0) return 0.0;
  return 1.0 / (1.0 / ti + 1.0 / tj);
}

TransmissibilityField assemble_transmissibility(const Grid& grid,
                                                const CellField& k,
                                                double mu) {
  validate_cell_field(k);
  require(k.grid == grid, ErrorCode::InvalidArgument,
          "permeability field grid mismatch");
  TransmissibilityField tf;
  tf.grid = grid;
  tf.dirs = grid.is_2d() ? 4 : 6;
  tf.t.assign(static_cast<size_t>(grid.num_cells()) * tf.dirs, 0.0);
  for (int i = 0; i < grid.num_cells(); ++i) {
    for (const Neighbor& nb : neighbors(grid, i)) {
      // each interior face once, from its low-direction side
      if (static_cast<int>(nb.dir) % 2 != 0) continue;
      const double d_half = nb.center_distance / 2.0;
      const double ti =
          cell_half_transmissibility(k.values[i], nb.face_area, d_half, mu);
      const double tj = cell_half_transmissibility(k.values[nb.cell],
                                                   nb.face_area, d_half, mu);
      const double tij = face_transmissibility(ti, tj);
      tf.at(i, nb.dir) = tij;
      tf.at(nb.cell, opposite(nb.dir)) = tij;
    }
  }
  return tf;
}

void validate(const SinglePhaseConfig& cfg) {
  require(cfg.porosity > 0 && cfg.porosity < 1, ErrorCode::InvalidArgument,
          "porosity must be in (0,1)");
  require(cfg.total_compressibility > 0, ErrorCode::InvalidArgument,
          "total compressibility must be > 0");
  require(cfg.viscosity > 0, ErrorCode::InvalidArgument,
          "viscosity must be > 0");
  require(cfg.dt > 0, ErrorCode::InvalidArgument, "dt must be > 0");
  require(cfg.num_steps >= 0, ErrorCode::InvalidArgument,
          "num_steps must be >= 0");
}

double well_rate(double p_cell, const Well& well) {
  return well.pi * (p_cell - well.bhp);
}

CellField step_single_phase(const CellField& p, const TransmissibilityField& t,
                            const SinglePhaseConfig& cfg,
                            std::span<const Well> wells, double dt) {
  require(dt > 0, ErrorCode::InvalidArgument, "dt must be > 0");
  require(p.grid == t.grid, ErrorCode::InvalidArgument,
          "pressure/transmissibility grid mismatch");
  const Grid& grid = p.grid;
  const int n = grid.num_cells();
  const double accum = grid.cell_volume() * cfg.porosity *
                       cfg.total_compressibility / dt;

  SpdBuilder builder(n);
  std::vector<double> rhs(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double diag = accum;
    for (const Neighbor& nb : neighbors(grid, i)) {
      const double tij = t.at(i, nb.dir);
      diag += tij;
      if (tij != 0.0) builder.add(i, nb.cell, -tij);
    }
    builder.add(i, i, diag);
    rhs[i] = accum * p.values[i];
  }
  for (const Well& w : wells) {
    require(w.cell >= 0 && w.cell < n, ErrorCode::InvalidArgument,
            "well cell out of range");
    require(w.pi >= 0, ErrorCode::InvalidArgument, "well PI must be >= 0");
    builder.add(w.cell, w.cell, w.pi);
    rhs[w.cell] += w.pi * w.bhp;
  }

  CgOptions opts;
  opts.rel_tol = cfg.solver_rel_tol;
  const CgResult sol = solve_spd(builder.build(), rhs, opts);

  CellField next = p;
  next.values = sol.x;
  return next;
}

static PressureTrajectory run_simulation(const CellField& p0,
                                         const TransmissibilityField& t,
                                         const SinglePhaseConfig& cfg,
                                         std::span<const Well> wells) {
  PressureTrajectory traj;
  traj.pressure.reserve(cfg.num_steps);
  traj.well_rates.reserve(cfg.num_steps);
  CellField p = p0;
  for (int step = 0; step < cfg.num_steps; ++step) {
    try {
      p = step_single_phase(p, t, cfg, wells, cfg.dt);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "step " << step + 1 << ": " << e.what();
      fail(e.code(), msg.str());
    }
    std::vector<double> rates;
    rates.reserve(wells.size());
    for (const Well& w : wells) rates.push_back(well_rate(p.values[w.cell], w));
    traj.pressure.push_back(p);
    traj.well_rates.push_back(std::move(rates));
  }
  return traj;
}

PressureTrajectory simulate_single_phase(const TransmissibilityField& t,
                                         const SinglePhaseConfig& cfg,
                                         std::span<const Well> wells) {
  validate(cfg);
  CellField p0 = make_cell_field(t.grid, cfg.initial_pressure, "Pa");
  return run_simulation(p0, t, cfg, wells);
}

PressureTrajectory simulate_single_phase(const CellField& k,
                                         const SinglePhaseConfig& cfg,
                                         std::span<const Well> wells) {
  validate(cfg);
  const TransmissibilityField t =
      assemble_transmissibility(k.grid, k, cfg.viscosity);
  CellField p0 = make_cell_field(k.grid, cfg.initial_pressure, "Pa");
  return run_simulation(p0, t, cfg, wells);
}

}  // namespace dfs
