#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "crom/pde/spec.hpp"

namespace crom {

// Pointwise explicit updates. Each takes an accessor `at(j)` returning the current
// field value at grid node j, so the full-order steppers and the reduced model
// (which reads network evaluations) go through the same arithmetic.

/// Forward-Euler heat update at node i; endpoints are zero-Dirichlet.
template <class At>
double heat_update_at(Index i, Index n, At&& at, double nu, double dx, double dt) {
  if (i == 0 || i == n - 1) return 0.0;
  const double u = at(i);
  return u + dt * nu * ((at(i - 1) + at(i + 1) - 2.0 * u) / (dx * dx));
}

/// Five-point Laplacian update at (ix, iy); the border is zero-Dirichlet.
template <class At>
double diffuse_update_at(Index ix, Index iy, Index nx, Index ny, At&& at, double nu, double dx,
                         double dy, double dt) {
  if (ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1) return 0.0;
  const Index i = iy * nx + ix;
  const double u = at(i);
  const double uxx = (at(i - 1) + at(i + 1) - 2.0 * u) / (dx * dx);
  const double uyy = (at(i - nx) + at(i + nx) - 2.0 * u) / (dy * dy);
  return u + dt * nu * (uxx + uyy);
}

/// First-order upwind advection update with periodic wrap.
template <class At>
double advect_update_at(Index i, Index n, At&& at, double a, double dx, double dt) {
  const double lambda = a * dt / dx;
  const double u = at(i);
  if (a >= 0.0) return u - lambda * (u - at((i + n - 1) % n));
  return u - lambda * (at((i + 1) % n) - u);
}

/// Numerical flux of 0.5 w^2 across an interface: upwind for rightward flow,
/// local Lax-Friedrichs when either side is non-positive.
inline double burgers_flux(double wl, double wr) {
  if (wl > 0.0 && wr > 0.0) return 0.5 * wl * wl;
  const double s = std::max(std::abs(wl), std::abs(wr));
  return 0.25 * (wl * wl + wr * wr) - 0.5 * s * (wr - wl);
}

inline double burgers_source(double mu, double x) { return 0.02 * std::exp(mu * x); }

/// Burgers update at node i: inflow held at node 0, zero-Neumann copy at the last node.
template <class At>
double burgers_update_at(Index i, Index n, At&& at, double mu, double dx, double dt) {
  if (i == 0) return at(0);
  if (i == n - 1) i = n - 2;
  const double w = at(i);
  const double x = static_cast<double>(i) * dx;
  const double div = burgers_flux(w, at(i + 1)) - burgers_flux(at(i - 1), w);
  return w - (dt / dx) * div + dt * burgers_source(mu, x);
}

namespace detail {
inline void require_finite(std::span<const double> u, const char* who) {
  for (double v : u)
    if (!std::isfinite(v)) throw NonFiniteError(std::string(who) + ": non-finite input");
}
}  // namespace detail

inline std::vector<double> heat1d_step(std::span<const double> u, std::span<const double> nu, double dx,
                                       double dt) {
  CROM_EXPECT(u.size() == nu.size() && u.size() >= 3, "heat1d_step: size mismatch");
  detail::require_finite(u, "heat1d_step");
  const auto n = static_cast<Index>(u.size());
  auto at = [&](Index j) { return u[static_cast<std::size_t>(j)]; };
  std::vector<double> out(u.size());
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = heat_update_at(i, n, at, nu[static_cast<std::size_t>(i)], dx, dt);
  return out;
}

inline std::vector<double> diffuse2d_step(std::span<const double> u, std::span<const double> nu, Index nx,
                                          Index ny, double dx, double dy, double dt) {
  if (std::abs(dx - dy) > 1e-12 * std::max(dx, dy))
    throw Unsupported("diffuse2d_step: grid spacing must be square (dx == dy)");
  CROM_EXPECT(u.size() == nu.size() && static_cast<Index>(u.size()) == nx * ny, "diffuse2d_step: size mismatch");
  detail::require_finite(u, "diffuse2d_step");
  auto at = [&](Index j) { return u[static_cast<std::size_t>(j)]; };
  std::vector<double> out(u.size());
  for (Index iy = 0; iy < ny; ++iy)
    for (Index ix = 0; ix < nx; ++ix) {
      const auto k = static_cast<std::size_t>(iy * nx + ix);
      out[k] = diffuse_update_at(ix, iy, nx, ny, at, nu[k], dx, dy, dt);
    }
  return out;
}

struct AdvectStep {
  std::vector<double> values;
  bool cfl_exceeded = false;  // |a| dt / dx > 1: result returned but unstable
};

inline AdvectStep advect1d_step(std::span<const double> u, double a, double dx, double dt) {
  CROM_EXPECT(u.size() >= 3, "advect1d_step: too few nodes");
  detail::require_finite(u, "advect1d_step");
  const auto n = static_cast<Index>(u.size());
  auto at = [&](Index j) { return u[static_cast<std::size_t>(j)]; };
  AdvectStep out;
  out.cfl_exceeded = std::abs(a) * dt / dx > 1.0;
  out.values.resize(u.size());
  for (Index i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = advect_update_at(i, n, at, a, dx, dt);
  return out;
}

inline std::vector<double> burgers1d_step(std::span<const double> w, double mu, double dx, double dt) {
  CROM_EXPECT(w.size() >= 3, "burgers1d_step: too few nodes");
  detail::require_finite(w, "burgers1d_step");
  const auto n = static_cast<Index>(w.size());
  auto at = [&](Index j) { return w[static_cast<std::size_t>(j)]; };
  std::vector<double> out(w.size());
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = burgers_update_at(i, n, at, mu, dx, dt);
  return out;
}

/// Per-problem coefficients needed by the pointwise updates.
struct StepContext {
  PdeSpec spec;
  std::vector<double> mu;
  std::vector<double> nu;  // per node; diffusion problems only

  StepContext(const PdeSpec& s, const std::vector<double>& params) : spec(s), mu(params) {
    spec.validate(true);
    spec.validate_params(mu);
    if (spec.kind == PdeKind::Heat1D || spec.kind == PdeKind::Diffuse2D) nu = diffusivity_field(spec, mu);
  }

  /// Explicit update at node i through accessor `at`.
  template <class At>
  double update_at(Index i, At&& at) const {
    const double dt = spec.dt;
    switch (spec.kind) {
      case PdeKind::Heat1D:
        return heat_update_at(i, spec.counts[0], at, nu[static_cast<std::size_t>(i)], spec.spacing(0), dt);
      case PdeKind::Diffuse2D: {
        const Index nx = spec.counts[0];
        return diffuse_update_at(i % nx, i / nx, nx, spec.counts[1], at, nu[static_cast<std::size_t>(i)],
                                 spec.spacing(0), spec.spacing(1), dt);
      }
      case PdeKind::Advect1D:
        return advect_update_at(i, spec.counts[0], at, mu[0], spec.spacing(0), dt);
      case PdeKind::Burgers1D:
        return burgers_update_at(i, spec.counts[0], at, mu[0], spec.spacing(0), dt);
    }
    return 0.0;
  }

  /// Grid nodes read by update_at(i).
  std::vector<Index> stencil(Index i) const {
    switch (spec.kind) {
      case PdeKind::Heat1D: {
        const Index n = spec.counts[0];
        if (i == 0 || i == n - 1) return {};
        return {i - 1, i, i + 1};
      }
      case PdeKind::Diffuse2D: {
        const Index nx = spec.counts[0], ny = spec.counts[1];
        const Index ix = i % nx, iy = i / nx;
        if (ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1) return {};
        return {i - nx, i - 1, i, i + 1, i + nx};
      }
      case PdeKind::Advect1D: {
        const Index n = spec.counts[0];
        return mu[0] >= 0.0 ? std::vector<Index>{(i + n - 1) % n, i} : std::vector<Index>{i, (i + 1) % n};
      }
      case PdeKind::Burgers1D: {
        const Index n = spec.counts[0];
        if (i == 0) return {0};
        const Index c = i == n - 1 ? n - 2 : i;
        return {c - 1, c, c + 1};
      }
    }
    return {};
  }

  /// Prescribed boundary value at node i, if i carries a Dirichlet-type condition.
  std::optional<double> boundary_value(Index i) const {
    switch (spec.kind) {
      case PdeKind::Heat1D:
        if (i == 0 || i == spec.counts[0] - 1) return 0.0;
        return std::nullopt;
      case PdeKind::Diffuse2D: {
        const Index nx = spec.counts[0], ny = spec.counts[1];
        const Index ix = i % nx, iy = i / nx;
        if (ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1) return 0.0;
        return std::nullopt;
      }
      case PdeKind::Burgers1D:
        if (i == 0) return spec.inflow;
        return std::nullopt;
      case PdeKind::Advect1D: return std::nullopt;
    }
    return std::nullopt;
  }

  /// Overwrites boundary nodes of a full field with their prescribed values.
  std::vector<double> with_boundary(std::span<const double> u) const {
    std::vector<double> out(u.begin(), u.end());
    for (Index i = 0; i < static_cast<Index>(out.size()); ++i)
      if (auto b = boundary_value(i)) out[static_cast<std::size_t>(i)] = *b;
    return out;
  }

  /// Full-order step; the same per-node arithmetic as the reduced model uses.
  std::vector<double> step(std::span<const double> u) const {
    CROM_EXPECT(static_cast<Index>(u.size()) == spec.point_count(), "step: field size mismatch");
    switch (spec.kind) {
      case PdeKind::Heat1D: return heat1d_step(u, nu, spec.spacing(0), spec.dt);
      case PdeKind::Diffuse2D:
        return diffuse2d_step(u, nu, spec.counts[0], spec.counts[1], spec.spacing(0), spec.spacing(1), spec.dt);
      case PdeKind::Advect1D: return advect1d_step(u, mu[0], spec.spacing(0), spec.dt).values;
      case PdeKind::Burgers1D: return burgers1d_step(u, mu[0], spec.spacing(0), spec.dt);
    }
    return {};
  }
};

}  // namespace crom
