#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "stochfv/flux.hpp"
#include "stochfv/grid.hpp"
#include "stochfv/work.hpp"

namespace stochfv {

enum class NumericalFlux { Godunov, Rusanov };
enum class Reconstruction { None, Weno2 };

struct SchemeConfig {
  NumericalFlux numerical_flux = NumericalFlux::Godunov;
  Reconstruction reconstruction = Reconstruction::Weno2;
  double cfl = 0.475;
  double t_end = 0.0;

  void validate() const {
    if (!(cfl > 0.0) || !(cfl <= 1.0))
      throw InvalidParamError("scheme: cfl must lie in (0, 1]");
    if (!(t_end >= 0.0)) throw InvalidParamError("scheme: t_end must be >= 0");
  }
};

// Exact Riemann flux for a scalar law: minimum of f over [uL, uR] when
// uL <= uR, maximum over [uR, uL] otherwise. The extremum is attained either
// at an endpoint or at a critical point of f inside the interval.
double godunov_flux(const FluxModel& flux, double u_left, double u_right);

// Local Lax-Friedrichs flux with wave speed max(|f'(uL)|, |f'(uR)|).
double rusanov_flux(const FluxModel& flux, double u_left, double u_right);

// Second-order WENO cell reconstruction from the three-cell stencil
// (u_prev, u_mid, u_next). Returns the values at the cell's left and right
// faces. Weights bias toward the smoother one-sided slope; exact on affine
// data. eps regularizes the smoothness indicators.
std::pair<double, double> weno2_reconstruct(double u_prev, double u_mid,
                                            double u_next, double eps = 1e-6);

// Flux-difference right-hand side du_i/dt = -(F_{i+1/2} - F_{i-1/2}) / dx
// with two ghost cells per side filled from the grid's boundary rule.
void semi_discrete_rhs(const FieldSample& state, const FluxModel& flux,
                       const SchemeConfig& scheme, std::span<double> out);

std::vector<double> semi_discrete_rhs(const FieldSample& state, const FluxModel& flux,
                                      const SchemeConfig& scheme);

// CFL time step cfl * dx / max_i |f'(u_i)|, clamped to cfl * dx when the
// field is flat enough that the wave speed is below 1e-14.
double cfl_dt(const FieldSample& state, const FluxModel& flux, double cfl);

struct EvolveResult {
  FieldSample state;
  std::int64_t steps = 0;
};

// March the field to scheme.t_end with Heun / SSP-RK2 stages, recomputing
// the CFL step each iteration and truncating the final step to land exactly
// on t_end. Throws NonFiniteError as soon as a state stops being finite.
// When a ledger is given, every step adds 2 * n_cells cell updates.
EvolveResult evolve(const FieldSample& initial, const FluxModel& flux,
                    const SchemeConfig& scheme, WorkLedger* ledger = nullptr);

}  // namespace stochfv
