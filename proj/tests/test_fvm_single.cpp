#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fvm_single.hpp"
#include "geostat.hpp"
#include "rng.hpp"

using namespace dfs;

namespace {

CellField uniform_perm(const Grid& g, double k) {
  return make_cell_field(g, k, "m^2");
}

CellField random_perm(const Grid& g, std::uint64_t seed) {
  CovarianceSpec spec;
  spec.lx = 0.25 * g.nx * g.dx;
  spec.ly = 0.25 * g.ny * g.dy;
  spec.lz = 0.25 * g.nz * g.dz;
  return sample_log_perm_field(g, spec, seed);
}

}  // namespace

TEST_CASE("half and face transmissibilities") {
  CHECK(cell_half_transmissibility(1, 1, 1, 1) == doctest::Approx(1.0));
  CHECK(cell_half_transmissibility(2e-13, 100, 10, 1e-3) ==
        doctest::Approx(2e-9));
  CHECK(cell_half_transmissibility(0, 2, 3, 4) == 0.0);
  CHECK_THROWS_AS(cell_half_transmissibility(1, 0, 1, 1), Error);

  CHECK(face_transmissibility(2, 2) == doctest::Approx(1.0));
  CHECK(face_transmissibility(3, 6) == doctest::Approx(2.0));
  CHECK(face_transmissibility(0, 5) == 0.0);
  CHECK(face_transmissibility(5, 0) == 0.0);
}

TEST_CASE("uniform permeability gives equal interior transmissibilities") {
  const Grid g = build_grid(4, 4, 1, 2, 2, 2);
  const TransmissibilityField t =
      assemble_transmissibility(g, uniform_perm(g, 1e-13), 1e-3);
  double ref = -1.0;
  for (int i = 0; i < g.num_cells(); ++i)
    for (const Neighbor& nb : neighbors(g, i)) {
      const double v = t.at(i, nb.dir);
      CHECK(v > 0.0);
      if (ref < 0.0)
        ref = v;
      else
        CHECK(v == doctest::Approx(ref));
    }
}

TEST_CASE("two-cell harmonic transmissibility") {
  // K = (3k0, 6k0), unit geometry/viscosity, d = 0.5: halves are 6k0 and
  // 12k0, harmonic combination 4k0
  const Grid g = build_grid(2, 1, 1, 1, 1, 1);
  const double k0 = 1e-12;
  CellField k = make_cell_field(g, 0.0, "m^2");
  k.values = {3 * k0, 6 * k0};
  const TransmissibilityField t = assemble_transmissibility(g, k, 1.0);
  CHECK(t.at(0, Direction::XPlus) == doctest::Approx(4 * k0));
  CHECK(t.at(1, Direction::XMinus) == doctest::Approx(4 * k0));
  CHECK(t.at(0, Direction::XMinus) == 0.0);  // boundary
}

TEST_CASE("mirror consistency of stored transmissibilities") {
  const Grid g = build_grid(3, 3, 1, 5, 7, 2);
  const TransmissibilityField t =
      assemble_transmissibility(g, random_perm(g, 11), 1e-3);
  for (int i = 0; i < g.num_cells(); ++i)
    for (const Neighbor& nb : neighbors(g, i))
      CHECK(t.at(i, nb.dir) == t.at(nb.cell, opposite(nb.dir)));
}

TEST_CASE("well rate formula") {
  Well w{0, 100.0, 2.0, WellKind::Producer};
  CHECK(well_rate(100.0, w) == 0.0);
  CHECK(well_rate(110.0, w) == doctest::Approx(20.0));
  w.pi = 0.0;
  CHECK(well_rate(1e9, w) == 0.0);
}

TEST_CASE("uniform pressure with no wells is a fixed point") {
  const Grid g = build_grid(4, 4, 1, 10, 10, 10);
  const TransmissibilityField t =
      assemble_transmissibility(g, random_perm(g, 3), 1e-3);
  SinglePhaseConfig cfg;
  const CellField p = make_cell_field(g, cfg.initial_pressure, "Pa");
  const CellField next = step_single_phase(p, t, cfg, {}, cfg.dt);
  for (int i = 0; i < g.num_cells(); ++i)
    CHECK(next.values[i] ==
          doctest::Approx(cfg.initial_pressure).epsilon(1e-12));
}

TEST_CASE("discrete maximum principle with a single producer") {
  const Grid g = build_grid(4, 4, 1, 10, 10, 10);
  const TransmissibilityField t =
      assemble_transmissibility(g, random_perm(g, 5), 1e-3);
  SinglePhaseConfig cfg;
  const std::vector<Well> wells{{g.cell_id(1, 2, 0), 2e7, 1e-11,
                                 WellKind::Producer}};
  CellField p = make_cell_field(g, cfg.initial_pressure, "Pa");
  for (int step = 0; step < 5; ++step) {
    p = step_single_phase(p, t, cfg, wells, cfg.dt);
    for (double v : p.values) {
      CHECK(v >= wells[0].bhp - 1e-6);
      CHECK(v <= cfg.initial_pressure + 1e-6);
    }
  }
}

TEST_CASE("two-cell implicit step matches a hand-assembled system") {
  const Grid g = build_grid(2, 1, 1, 1, 1, 1);
  CellField k = make_cell_field(g, 0.0, "m^2");
  k.values = {2e-13, 4e-13};
  SinglePhaseConfig cfg;
  cfg.porosity = 0.3;
  cfg.total_compressibility = 2e-9;
  cfg.viscosity = 1e-3;
  cfg.dt = 1000.0;
  const TransmissibilityField t =
      assemble_transmissibility(g, k, cfg.viscosity);
  const std::vector<Well> wells{{1, 2e7, 3e-13, WellKind::Producer}};

  CellField p = make_cell_field(g, 0.0, "Pa");
  p.values = {3.1e7, 2.9e7};

  const double acc = g.cell_volume() * cfg.porosity *
                     cfg.total_compressibility / cfg.dt;
  const double tij = t.at(0, Direction::XPlus);
  Eigen::Matrix2d a;
  a << acc + tij, -tij, -tij, acc + tij + wells[0].pi;
  Eigen::Vector2d b(acc * p.values[0],
                    acc * p.values[1] + wells[0].pi * wells[0].bhp);
  const Eigen::Vector2d expected = a.fullPivLu().solve(b);

  const CellField next = step_single_phase(p, t, cfg, wells, cfg.dt);
  CHECK(std::abs(next.values[0] - expected(0)) <
        1e-12 * std::abs(expected(0)));
  CHECK(std::abs(next.values[1] - expected(1)) <
        1e-12 * std::abs(expected(1)));
}

TEST_CASE("trajectory without wells stays at the initial pressure") {
  const Grid g = build_grid(3, 3, 1, 10, 10, 10);
  SinglePhaseConfig cfg;
  cfg.num_steps = 5;
  const PressureTrajectory traj =
      simulate_single_phase(random_perm(g, 9), cfg, {});
  REQUIRE(static_cast<int>(traj.pressure.size()) == cfg.num_steps);
  for (const CellField& p : traj.pressure)
    for (double v : p.values)
      CHECK(v == doctest::Approx(cfg.initial_pressure).epsilon(1e-12));
}

TEST_CASE("mirror-symmetric inputs give mirror-symmetric pressure") {
  const Grid g = build_grid(6, 6, 1, 10, 10, 10);
  // symmetrize a random field under x -> nx-1-x
  CellField k = random_perm(g, 21);
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx / 2; ++x) {
      const double v = k.values[g.cell_id(x, y, 0)];
      k.values[g.cell_id(g.nx - 1 - x, y, 0)] = v;
    }
  SinglePhaseConfig cfg;
  cfg.num_steps = 10;
  const std::vector<Well> wells{
      {g.cell_id(0, 2, 0), 2e7, 1e-12, WellKind::Producer},
      {g.cell_id(g.nx - 1, 2, 0), 2e7, 1e-12, WellKind::Producer}};
  const PressureTrajectory traj = simulate_single_phase(k, cfg, wells);
  for (const CellField& p : traj.pressure)
    for (int y = 0; y < g.ny; ++y)
      for (int x = 0; x < g.nx; ++x) {
        const double a = p.values[g.cell_id(x, y, 0)];
        const double b = p.values[g.cell_id(g.nx - 1 - x, y, 0)];
        CHECK(std::abs(a - b) <= 1e-9 * cfg.initial_pressure);
      }
}

TEST_CASE("global mass balance over a full simulation") {
  const Grid g = build_grid(8, 8, 1, 10, 10, 10);
  SinglePhaseConfig cfg;
  cfg.num_steps = 30;
  const std::vector<Well> wells{
      {g.cell_id(0, 0, 0), 2e7, 1e-12, WellKind::Producer},
      {g.cell_id(7, 7, 0), 2.2e7, 2e-12, WellKind::Producer}};
  const CellField k = random_perm(g, 33);
  const PressureTrajectory traj = simulate_single_phase(k, cfg, wells);

  const double acc_coeff =
      g.cell_volume() * cfg.porosity * cfg.total_compressibility;
  double accumulation = 0.0;
  const CellField& last = traj.pressure.back();
  for (int i = 0; i < g.num_cells(); ++i)
    accumulation += acc_coeff * (last.values[i] - cfg.initial_pressure);
  double produced = 0.0;
  for (const auto& rates : traj.well_rates)
    for (double q : rates) produced += cfg.dt * q;
  CHECK(std::abs(accumulation + produced) <= 1e-8 * std::abs(produced));
}

TEST_CASE("raising producer PI never raises the well-block pressure") {
  const Grid g = build_grid(5, 5, 1, 10, 10, 10);
  const CellField k = random_perm(g, 55);
  const TransmissibilityField t = assemble_transmissibility(g, k, 1e-3);
  SinglePhaseConfig cfg;
  const int cell = g.cell_id(2, 2, 0);
  double prev = 1e300;
  for (double pi : {1e-13, 1e-12, 1e-11, 1e-10}) {
    const std::vector<Well> wells{{cell, 2e7, pi, WellKind::Producer}};
    const CellField p0 = make_cell_field(g, cfg.initial_pressure, "Pa");
    const CellField p1 = step_single_phase(p0, t, cfg, wells, cfg.dt);
    CHECK(p1.values[cell] <= prev + 1e-9 * cfg.initial_pressure);
    prev = p1.values[cell];
  }
}

TEST_CASE("implicit step converges to identity as dt -> 0") {
  const Grid g = build_grid(4, 4, 1, 10, 10, 10);
  const CellField k = random_perm(g, 77);
  const TransmissibilityField t = assemble_transmissibility(g, k, 1e-3);
  SinglePhaseConfig cfg;
  const std::vector<Well> wells{
      {g.cell_id(0, 0, 0), 2e7, 1e-12, WellKind::Producer}};
  const CellField p0 = make_cell_field(g, cfg.initial_pressure, "Pa");

  double prev_change = 1e300;
  for (double scale : {1.0, 1e-2, 1e-4, 1e-6}) {
    const double dt = cfg.dt * scale;
    const CellField p1 = step_single_phase(p0, t, cfg, wells, dt);
    double change = 0.0;
    for (int i = 0; i < g.num_cells(); ++i)
      change = std::max(change, std::abs(p1.values[i] - p0.values[i]));
    CHECK(change < prev_change);
    prev_change = change;
    // linear in dt: change / dt stays bounded, so change ~ O(dt)
    CHECK(change <= 1e7 * scale);
  }
}

// independent explicit-Euler oracle with far smaller steps
namespace {

std::vector<double> explicit_euler(const Grid& g,
                                   const TransmissibilityField& t,
                                   const SinglePhaseConfig& cfg,
                                   std::span<const Well> wells,
                                   double total_time, int steps) {
  std::vector<double> p(g.num_cells(), cfg.initial_pressure);
  const double dt = total_time / steps;
  const double acc =
      g.cell_volume() * cfg.porosity * cfg.total_compressibility;
  std::vector<double> next(p.size());
  for (int s = 0; s < steps; ++s) {
    for (int i = 0; i < g.num_cells(); ++i) {
      double flux = 0.0;
      for (const Neighbor& nb : neighbors(g, i))
        flux += t.at(i, nb.dir) * (p[nb.cell] - p[i]);
      next[i] = p[i] + dt / acc * flux;
    }
    for (const Well& w : wells)
      next[w.cell] -= dt / acc * w.pi * (p[w.cell] - w.bhp);
    p.swap(next);
  }
  return p;
}

}  // namespace

TEST_CASE("implicit solution tracks a fine explicit-Euler oracle") {
  const Grid g = build_grid(4, 4, 1, 10, 10, 10);
  const CellField k = random_perm(g, 99);
  SinglePhaseConfig cfg;
  cfg.dt = 200.0;
  cfg.num_steps = 20;
  const TransmissibilityField t =
      assemble_transmissibility(g, k, cfg.viscosity);
  const std::vector<Well> wells{
      {g.cell_id(0, 0, 0), 2e7, 1e-12, WellKind::Producer},
      {g.cell_id(3, 3, 0), 2e7, 1e-12, WellKind::Producer}};

  const PressureTrajectory traj = simulate_single_phase(t, cfg, wells);
  const std::vector<double> oracle = explicit_euler(
      g, t, cfg, wells, cfg.dt * cfg.num_steps, 1000 * cfg.num_steps);

  double max_diff = 0.0;
  for (int i = 0; i < g.num_cells(); ++i)
    max_diff = std::max(max_diff,
                        std::abs(traj.pressure.back().values[i] - oracle[i]));
  CHECK(max_diff / cfg.initial_pressure <= 2e-3);
}
