#include "fvm_twophase.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dfs {

void validate(const TwoPhaseConfig& cfg) {
  require(cfg.porosity > 0 && cfg.porosity < 1, ErrorCode::InvalidArgument,
          "porosity must be in (0,1)");
  require(cfg.s_iw >= 0 && cfg.s_iw < 1, ErrorCode::InvalidArgument,
          "s_iw must be in [0,1)");
  require(cfg.mu_oil > 0 && cfg.mu_water > 0, ErrorCode::InvalidArgument,
          "viscosities must be > 0");
  require(cfg.rock_compressibility >= 0 && cfg.c_oil >= 0 && cfg.c_water >= 0,
          ErrorCode::InvalidArgument, "compressibilities must be >= 0");
  require(cfg.initial_sw >= cfg.s_iw && cfg.initial_sw <= 1.0,
          ErrorCode::InvalidArgument, "initial_sw must be in [s_iw, 1]");
  require(cfg.dt > 0, ErrorCode::InvalidArgument, "dt must be > 0");
}

RelPerm rel_perm(double sw, double s_iw) {
  RelPerm rp;
  double s = sw;
  if (s < s_iw || s > 1.0) {
    rp.clamped = true;
    s = std::clamp(s, s_iw, 1.0);
  }
  const double se = (s - s_iw) / (1.0 - s_iw);  // effective saturation
  const double so = (1.0 - s) / (1.0 - s_iw);
  rp.krw = se * se * se * se;
  rp.kro = so * so * (1.0 - se * se);
  return rp;
}

FaceMobility face_mobility(const TwoPhaseState& state,
                           const TwoPhaseConfig& cfg, int cell_i, int cell_j) {
  const double pi = state.pressure.values[cell_i];
  const double pj = state.pressure.values[cell_j];
  // per-phase upwind on the same pressure difference; ties donate from the
  // lower cell index
  int donor;
  if (pi > pj)
    donor = cell_i;
  else if (pj > pi)
    donor = cell_j;
  else
    donor = std::min(cell_i, cell_j);
  const RelPerm rp = rel_perm(state.sw.values[donor], cfg.s_iw);
  return {rp.krw / cfg.mu_water, rp.kro / cfg.mu_oil};
}

TransmissibilityField assemble_geometric_transmissibility(const Grid& grid,
                                                          const CellField& k) {
  return assemble_transmissibility(grid, k, 1.0);
}

namespace {

double total_compressibility(const TwoPhaseConfig& cfg, double sw) {
  const double so = 1.0 - sw;
  return cfg.rock_compressibility + so * cfg.c_oil + sw * cfg.c_water;
}

double well_block_total_mobility(const TwoPhaseState& state,
                                 const TwoPhaseConfig& cfg, int cell) {
  const RelPerm rp = rel_perm(state.sw.values[cell], cfg.s_iw);
  return rp.krw / cfg.mu_water + rp.kro / cfg.mu_oil;
}

}  // namespace

CellField impes_pressure_step(const TwoPhaseState& state,
                              const TransmissibilityField& t,
                              const TwoPhaseConfig& cfg,
                              std::span<const Well> wells, double dt) {
  require(dt > 0, ErrorCode::InvalidArgument, "dt must be > 0");
  const Grid& grid = state.pressure.grid;
  const int n = grid.num_cells();
  const double v_phi = grid.cell_volume() * cfg.porosity;

  SpdBuilder builder(n);
  std::vector<double> rhs(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double accum = v_phi * total_compressibility(cfg, state.sw.values[i]) / dt;
    double diag = accum;
    for (const Neighbor& nb : neighbors(grid, i)) {
      const FaceMobility fm = face_mobility(state, cfg, i, nb.cell);
      const double coeff = (fm.lw + fm.lo) * t.at(i, nb.dir);
      diag += coeff;
      if (coeff != 0.0) builder.add(i, nb.cell, -coeff);
    }
    builder.add(i, i, diag);
    rhs[i] = accum * state.pressure.values[i];
  }
  for (const Well& w : wells) {
    require(w.cell >= 0 && w.cell < n, ErrorCode::InvalidArgument,
            "well cell out of range");
    const double mob = w.kind == WellKind::Producer
                           ? well_block_total_mobility(state, cfg, w.cell)
                           : 1.0 / cfg.mu_water;  // injected water, k_rw(1)=1
    builder.add(w.cell, w.cell, w.pi * mob);
    rhs[w.cell] += w.pi * mob * w.bhp;
  }

  CgOptions opts;
  opts.rel_tol = cfg.solver_rel_tol;
  const CgResult sol = solve_spd(builder.build(), rhs, opts);
  CellField next = state.pressure;
  next.values = sol.x;
  return next;
}

SaturationUpdate impes_saturation_update(const TwoPhaseState& state,
                                         const CellField& p_next,
                                         const TransmissibilityField& t,
                                         const TwoPhaseConfig& cfg,
                                         std::span<const Well> wells,
                                         double dt) {
  const Grid& grid = state.pressure.grid;
  const int n = grid.num_cells();
  const double v_phi = grid.cell_volume() * cfg.porosity;

  SaturationUpdate upd;
  upd.sw = state.sw;

  std::vector<double> q_water(n, 0.0);  // net water source per cell [m^3/s]
  for (const Well& w : wells) {
    if (w.kind == WellKind::Producer) {
      const RelPerm rp = rel_perm(state.sw.values[w.cell], cfg.s_iw);
      const double lw = rp.krw / cfg.mu_water;
      const double lo = rp.kro / cfg.mu_oil;
      const double q_total =
          w.pi * (lw + lo) * (p_next.values[w.cell] - w.bhp);
      const double fw = (lw + lo) > 0.0 ? lw / (lw + lo) : 0.0;
      q_water[w.cell] -= fw * q_total;
      upd.well_total_rates.push_back(q_total);
      upd.well_water_rates.push_back(-fw * q_total);
    } else {
      const double q_in =
          w.pi * (1.0 / cfg.mu_water) * (w.bhp - p_next.values[w.cell]);
      q_water[w.cell] += q_in;
      upd.well_total_rates.push_back(-q_in);
      upd.well_water_rates.push_back(q_in);
    }
  }

  for (int i = 0; i < n; ++i) {
    double flux_w = 0.0;
    for (const Neighbor& nb : neighbors(grid, i)) {
      const FaceMobility fm = face_mobility(state, cfg, i, nb.cell);
      flux_w += fm.lw * t.at(i, nb.dir) *
                (p_next.values[nb.cell] - p_next.values[i]);
    }
    const double dp = p_next.values[i] - state.pressure.values[i];
    double sw_new = state.sw.values[i] +
                    dt / v_phi * (flux_w + q_water[i]) -
                    state.sw.values[i] * cfg.c_water * dp;
    if (sw_new < cfg.s_iw || sw_new > 1.0) {
      sw_new = std::clamp(sw_new, cfg.s_iw, 1.0);
      ++upd.clamped_cells;
    }
    upd.sw.values[i] = sw_new;
  }
  return upd;
}

TwoPhaseTrajectory simulate_two_phase(const CellField& k,
                                      const TwoPhaseConfig& cfg,
                                      std::span<const Well> wells) {
  validate(cfg);
  const Grid& grid = k.grid;
  const TransmissibilityField t = assemble_geometric_transmissibility(grid, k);

  TwoPhaseState state{make_cell_field(grid, cfg.initial_pressure, "Pa"),
                      make_cell_field(grid, cfg.initial_sw, "-")};
  TwoPhaseTrajectory traj;
  const int warn_threshold = std::max(1, grid.num_cells() / 100);
  for (int step = 0; step < cfg.num_steps; ++step) {
    CellField p_next;
    SaturationUpdate upd;
    try {
      p_next = impes_pressure_step(state, t, cfg, wells, cfg.dt);
      upd = impes_saturation_update(state, p_next, t, cfg, wells, cfg.dt);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "step " << step + 1 << ": " << e.what();
      fail(e.code(), msg.str());
    }
    if (upd.clamped_cells > warn_threshold) traj.clamp_warning = true;
    traj.total_clamped_cells += upd.clamped_cells;
    state.pressure = p_next;
    state.sw = upd.sw;
    traj.pressure.push_back(state.pressure);
    traj.sw.push_back(state.sw);
    traj.well_water_rates.push_back(std::move(upd.well_water_rates));
    traj.well_total_rates.push_back(std::move(upd.well_total_rates));
  }
  return traj;
}

}  // namespace dfs
