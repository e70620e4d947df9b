#include "stochfv/scheme.hpp"

#include <algorithm>
#include <cmath>

namespace stochfv {

namespace {

void require_finite_pair(double u_left, double u_right) {
  if (!std::isfinite(u_left) || !std::isfinite(u_right))
    throw NonFiniteError("numerical flux: non-finite interface state");
}

// Both faces of one cell from its three-cell stencil. Single-division form
// of the weighted slope sum((d_k / (eps + beta_k)^2) * s_k) / sum(alpha_k).
inline std::pair<double, double> weno2_core(double u_prev, double u_mid,
                                            double u_next, double eps) {
  const double s0 = u_mid - u_prev;
  const double s1 = u_next - u_mid;
  const double t0 = eps + s0 * s0;
  const double t1 = eps + s1 * s1;
  const double q0 = t0 * t0;
  const double q1 = t1 * t1;
  // Linear weights (1/3, 2/3), the larger one on the slope whose stencil
  // leans toward the face being built.
  const double right_slope =
      ((1.0 / 3.0) * q1 * s0 + (2.0 / 3.0) * q0 * s1) /
      ((1.0 / 3.0) * q1 + (2.0 / 3.0) * q0);
  const double left_slope =
      ((2.0 / 3.0) * q1 * s0 + (1.0 / 3.0) * q0 * s1) /
      ((2.0 / 3.0) * q1 + (1.0 / 3.0) * q0);
  return {u_mid - 0.5 * left_slope, u_mid + 0.5 * right_slope};
}

struct Workspace {
  std::vector<double> ext;         // state with two ghost cells per side
  std::vector<double> left_face;   // per ext cell
  std::vector<double> right_face;  // per ext cell
  std::vector<double> fhat;        // interface fluxes, n + 1
  std::vector<double> k;           // stage slope
  std::vector<double> u1;          // first stage state

  void resize(std::int64_t n) {
    ext.resize(n + 4);
    left_face.resize(n + 4);
    right_face.resize(n + 4);
    fhat.resize(n + 1);
    k.resize(n);
    u1.resize(n);
  }
};

void fill_ghosts(const double* u, std::int64_t n, Boundary boundary, double* ext) {
  for (std::int64_t i = 0; i < n; ++i) ext[i + 2] = u[i];
  if (boundary == Boundary::Outflow) {
    ext[0] = ext[1] = u[0];
    ext[n + 2] = ext[n + 3] = u[n - 1];
  } else {
    ext[0] = u[((n - 2) % n + n) % n];
    ext[1] = u[n - 1];
    ext[n + 2] = u[0];
    ext[n + 3] = u[1 % n];
  }
}

void rhs_core(const double* u, std::int64_t n, double dx, Boundary boundary,
              const FluxModel& flux, const SchemeConfig& scheme, double* out,
              Workspace& ws) {
  fill_ghosts(u, n, boundary, ws.ext.data());
  const double* ext = ws.ext.data();
  double* fhat = ws.fhat.data();

  if (scheme.reconstruction == Reconstruction::Weno2) {
    double* lf = ws.left_face.data();
    double* rf = ws.right_face.data();
    for (std::int64_t c = 1; c <= n + 2; ++c) {
      const auto faces = weno2_core(ext[c - 1], ext[c], ext[c + 1], 1e-6);
      lf[c] = faces.first;
      rf[c] = faces.second;
    }
    if (scheme.numerical_flux == NumericalFlux::Godunov) {
      for (std::int64_t j = 0; j <= n; ++j)
        fhat[j] = godunov_flux(flux, rf[j + 1], lf[j + 2]);
    } else {
      for (std::int64_t j = 0; j <= n; ++j)
        fhat[j] = rusanov_flux(flux, rf[j + 1], lf[j + 2]);
    }
  } else {
    if (scheme.numerical_flux == NumericalFlux::Godunov) {
      for (std::int64_t j = 0; j <= n; ++j)
        fhat[j] = godunov_flux(flux, ext[j + 1], ext[j + 2]);
    } else {
      for (std::int64_t j = 0; j <= n; ++j)
        fhat[j] = rusanov_flux(flux, ext[j + 1], ext[j + 2]);
    }
  }

  const double inv_dx = 1.0 / dx;
  for (std::int64_t i = 0; i < n; ++i) out[i] = -(fhat[i + 1] - fhat[i]) * inv_dx;
}

}  // namespace

double godunov_flux(const FluxModel& flux, double u_left, double u_right) {
  require_finite_pair(u_left, u_right);
  const double lo = std::min(u_left, u_right);
  const double hi = std::max(u_left, u_right);
  if (u_left <= u_right) {
    double best = std::min(flux.f(u_left), flux.f(u_right));
    for (int i = 0; i < flux.n_critical_points(); ++i) {
      const double c = flux.critical_points()[i];
      if (c > lo && c < hi) best = std::min(best, flux.f(c));
    }
    return best;
  }
  double best = std::max(flux.f(u_left), flux.f(u_right));
  for (int i = 0; i < flux.n_critical_points(); ++i) {
    const double c = flux.critical_points()[i];
    if (c > lo && c < hi) best = std::max(best, flux.f(c));
  }
  return best;
}

double rusanov_flux(const FluxModel& flux, double u_left, double u_right) {
  require_finite_pair(u_left, u_right);
  const double a =
      std::max(std::abs(flux.f_prime(u_left)), std::abs(flux.f_prime(u_right)));
  return 0.5 * (flux.f(u_left) + flux.f(u_right)) - 0.5 * a * (u_right - u_left);
}

std::pair<double, double> weno2_reconstruct(double u_prev, double u_mid,
                                            double u_next, double eps) {
  if (!std::isfinite(u_prev) || !std::isfinite(u_mid) || !std::isfinite(u_next))
    throw NonFiniteError("weno2: non-finite stencil value");
  if (!(eps > 0.0)) throw InvalidParamError("weno2: eps must be positive");
  return weno2_core(u_prev, u_mid, u_next, eps);
}

void semi_discrete_rhs(const FieldSample& state, const FluxModel& flux,
                       const SchemeConfig& scheme, std::span<double> out) {
  state.validate();
  if (static_cast<std::int64_t>(out.size()) != state.grid.n_cells)
    throw InvalidParamError("rhs: output span size does not match grid");
  if (!state.all_finite()) throw NonFiniteError("rhs: non-finite state");
  Workspace ws;
  ws.resize(state.grid.n_cells);
  rhs_core(state.values.data(), state.grid.n_cells, state.grid.dx(),
           state.grid.boundary, flux, scheme, out.data(), ws);
}

std::vector<double> semi_discrete_rhs(const FieldSample& state, const FluxModel& flux,
                                      const SchemeConfig& scheme) {
  std::vector<double> out(state.values.size());
  semi_discrete_rhs(state, flux, scheme, std::span<double>(out));
  return out;
}

double cfl_dt(const FieldSample& state, const FluxModel& flux, double cfl) {
  state.validate();
  if (!(cfl > 0.0) || !(cfl <= 1.0))
    throw InvalidParamError("cfl_dt: cfl must lie in (0, 1]");
  double amax = 0.0;
  for (double v : state.values) {
    if (!std::isfinite(v)) throw NonFiniteError("cfl_dt: non-finite state");
    amax = std::max(amax, std::abs(flux.f_prime(v)));
  }
  const double dx = state.grid.dx();
  if (amax < 1e-14) return cfl * dx;
  return cfl * dx / amax;
}

EvolveResult evolve(const FieldSample& initial, const FluxModel& flux,
                    const SchemeConfig& scheme, WorkLedger* ledger) {
  initial.validate();
  scheme.validate();
  if (scheme.t_end < initial.time)
    throw InvalidParamError("evolve: t_end precedes the initial time");
  if (!initial.all_finite()) throw NonFiniteError("evolve: non-finite initial state");

  EvolveResult result;
  result.state = initial;
  const std::int64_t n = initial.grid.n_cells;
  const double dx = initial.grid.dx();
  const Boundary boundary = initial.grid.boundary;

  Workspace ws;
  ws.resize(n);
  std::vector<double>& u = result.state.values;
  double* k = ws.k.data();
  double* u1 = ws.u1.data();

  while (result.state.time < scheme.t_end) {
    double dt = cfl_dt(result.state, flux, scheme.cfl);
    bool last = false;
    if (dt >= scheme.t_end - result.state.time) {
      dt = scheme.t_end - result.state.time;
      last = true;
    }
    if (result.state.time + dt == result.state.time)
      throw NonFiniteError("evolve: time step underflow");

    // Heun stages: u1 = u + dt L(u); u <- (u + u1 + dt L(u1)) / 2.
    rhs_core(u.data(), n, dx, boundary, flux, scheme, k, ws);
    for (std::int64_t i = 0; i < n; ++i) u1[i] = u[i] + dt * k[i];
    rhs_core(u1, n, dx, boundary, flux, scheme, k, ws);
    for (std::int64_t i = 0; i < n; ++i)
      u[i] = 0.5 * u[i] + 0.5 * (u1[i] + dt * k[i]);

    result.steps += 1;
    if (ledger != nullptr) ledger->add_updates(2 * static_cast<std::uint64_t>(n));
    result.state.time = last ? scheme.t_end : result.state.time + dt;
  }

  if (!result.state.all_finite())
    throw NonFiniteError("evolve: non-finite state at t_end");
  return result;
}

}  // namespace stochfv
