#pragma once

#include <span>
#include <vector>

#include "grid.hpp"
#include "linsolve.hpp"

namespace dfs {

// Per-cell, per-direction face transmissibilities [m^3/(Pa*s)].
// 2D grids store 4 directional slots per cell (+x, -x, +y, -y), 3D grids 6.
// Boundary directions hold 0 (no-flow). Mirror consistency holds by
// construction: the +x slot of cell i equals the -x slot of its +x neighbor.
struct TransmissibilityField {
  Grid grid;
  int dirs = 4;
  std::vector<double> t;  // [cell * dirs + dir]

  double at(int cell, Direction d) const {
    return t[static_cast<size_t>(cell) * dirs + static_cast<int>(d)];
  }
  double& at(int cell, Direction d) {
    return t[static_cast<size_t>(cell) * dirs + static_cast<int>(d)];
  }
};

// T_i = K_i * A_ij / (mu * d), with d the cell-center-to-face distance
// (half the center spacing).
double cell_half_transmissibility(double k, double area, double dist,
                                  double mu);

// TPFA harmonic combination T_ij = (T_i^-1 + T_j^-1)^-1; zero if either
// side is zero (sealing limit).
double face_transmissibility(double ti, double tj);

TransmissibilityField assemble_transmissibility(const Grid& grid,
                                                const CellField& k, double mu);

struct SinglePhaseConfig {
  double porosity = 0.2;               // [-]
  double total_compressibility = 1e-9; // [1/Pa]
  double viscosity = 1e-3;             // [Pa*s]
  double initial_pressure = 3e7;       // [Pa]
  double dt = 500.0;                   // [s]
  int num_steps = 150;
  double solver_rel_tol = 1e-10;
};

void validate(const SinglePhaseConfig& cfg);

enum class WellKind { Producer, Injector };

struct Well {
  int cell = 0;
  double bhp = 2e7;  // bottom-hole pressure [Pa]
  double pi = 1e-12; // production index [m^3/(Pa*s)]
  WellKind kind = WellKind::Producer;
};

// q = PI * (P_i - P_wf); positive means production (sink)
double well_rate(double p_cell, const Well& well);

// One fully implicit step. The well term is folded into the matrix diagonal,
// which keeps the system SPD and unconditionally stable.
CellField step_single_phase(const CellField& p, const TransmissibilityField& t,
                            const SinglePhaseConfig& cfg,
                            std::span<const Well> wells, double dt);

struct PressureTrajectory {
  std::vector<CellField> pressure;              // steps 1..N_t
  std::vector<std::vector<double>> well_rates;  // [step][well], at P^{n+1}
};

PressureTrajectory simulate_single_phase(const TransmissibilityField& t,
                                         const SinglePhaseConfig& cfg,
                                         std::span<const Well> wells);

PressureTrajectory simulate_single_phase(const CellField& k,
                                         const SinglePhaseConfig& cfg,
                                         std::span<const Well> wells);

}  // namespace dfs
