#pragma once

#include <span>
#include <vector>

#include "fvm_single.hpp"
#include "grid.hpp"

namespace dfs {

struct TwoPhaseConfig {
  double porosity = 0.2;
  double rock_compressibility = 1e-9;  // c_r [1/Pa]
  double c_oil = 1e-9;                 // [1/Pa]
  double c_water = 5e-10;              // [1/Pa]
  double mu_oil = 2e-3;                // [Pa*s]
  double mu_water = 1e-3;              // [Pa*s]
  double s_iw = 0.2;                   // irreducible water saturation
  double initial_sw = 0.25;
  double initial_pressure = 3e7;       // [Pa]
  double dt = 43200.0;                 // [s]
  int num_steps = 60;
  double solver_rel_tol = 1e-10;
};

void validate(const TwoPhaseConfig& cfg);

struct RelPerm {
  double krw = 0.0;
  double kro = 0.0;
  bool clamped = false;  // input saturation was outside [s_iw, 1]
};

// Corey-type curves with zero residual oil:
//   krw = ((Sw - Siw)/(1 - Siw))^4
//   kro = ((1 - Sw)/(1 - Siw))^2 * (1 - ((Sw - Siw)/(1 - Siw))^2)
RelPerm rel_perm(double sw, double s_iw);

struct TwoPhaseState {
  CellField pressure;
  CellField sw;
};

struct FaceMobility {
  double lw = 0.0;  // k_rw / mu_w at the upwind cell
  double lo = 0.0;  // k_ro / mu_o at the upwind cell
};

// Per-phase potential upwinding: the higher-pressure cell donates its
// mobility; ties break toward the lower cell index.
FaceMobility face_mobility(const TwoPhaseState& state,
                           const TwoPhaseConfig& cfg, int cell_i, int cell_j);

// Transmissibilities for the two-phase equations are geometric only
// (mu = 1); phase viscosities enter through the mobilities.
TransmissibilityField assemble_geometric_transmissibility(const Grid& grid,
                                                          const CellField& k);

// IMPES pressure solve with c_t and mobilities frozen at step n.
// Producer wells use total mobility at the well block; injectors inject
// water with the fully-saturated water mobility 1/mu_w.
CellField impes_pressure_step(const TwoPhaseState& state,
                              const TransmissibilityField& t,
                              const TwoPhaseConfig& cfg,
                              std::span<const Well> wells, double dt);

struct SaturationUpdate {
  CellField sw;
  int clamped_cells = 0;
  std::vector<double> well_water_rates;  // [well], positive = into the cell
  std::vector<double> well_total_rates;  // [well], production positive
};

SaturationUpdate impes_saturation_update(const TwoPhaseState& state,
                                         const CellField& p_next,
                                         const TransmissibilityField& t,
                                         const TwoPhaseConfig& cfg,
                                         std::span<const Well> wells,
                                         double dt);

struct TwoPhaseTrajectory {
  std::vector<CellField> pressure;
  std::vector<CellField> sw;
  std::vector<std::vector<double>> well_water_rates;
  std::vector<std::vector<double>> well_total_rates;
  int total_clamped_cells = 0;
  bool clamp_warning = false;  // >1% of cells clamped in some step
};

TwoPhaseTrajectory simulate_two_phase(const CellField& k,
                                      const TwoPhaseConfig& cfg,
                                      std::span<const Well> wells);

}  // namespace dfs
