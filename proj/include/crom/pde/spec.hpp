#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "crom/numerics/dense.hpp"

namespace crom {

enum class PdeKind { Heat1D, Diffuse2D, Advect1D, Burgers1D };

inline std::string to_string(PdeKind k) {
  switch (k) {
    case PdeKind::Heat1D: return "heat1d";
    case PdeKind::Diffuse2D: return "diffuse2d";
    case PdeKind::Advect1D: return "advect1d";
    case PdeKind::Burgers1D: return "burgers1d";
  }
  return "?";
}

inline PdeKind pde_kind_from_string(const std::string& s) {
  if (s == "heat1d") return PdeKind::Heat1D;
  if (s == "diffuse2d") return PdeKind::Diffuse2D;
  if (s == "advect1d") return PdeKind::Advect1D;
  if (s == "burgers1d") return PdeKind::Burgers1D;
  throw ContractViolation("unknown PDE kind '" + s + "'");
}

/// Discretization and parameters of one full-order problem.
///
/// Parameter vector `params` per kind:
///   Heat1D     three diffusivities, one per equal-width region
///   Diffuse2D  four diffusivities, one per image quadrant (row-major quadrant order)
///   Advect1D   velocity a
///   Burgers1D  source exponent mu_D
struct PdeSpec {
  PdeKind kind = PdeKind::Heat1D;
  std::vector<double> extent{1.0};  // domain length per axis
  std::vector<Index> counts{501};   // grid nodes per axis
  double dt = 1e-6;
  Index steps = 100;
  double inflow = 4.25;             // Burgers w(0, t)

  Index m() const { return static_cast<Index>(counts.size()); }
  Index d() const { return 1; }
  Index point_count() const {
    Index p = 1;
    for (Index c : counts) p *= c;
    return p;
  }
  bool periodic() const { return kind == PdeKind::Advect1D; }

  /// Node spacing on `axis`. Periodic grids do not duplicate the right endpoint.
  double spacing(Index axis = 0) const {
    const auto n = static_cast<double>(counts.at(static_cast<std::size_t>(axis)));
    const double len = extent.at(static_cast<std::size_t>(axis));
    return periodic() ? len / n : len / (n - 1.0);
  }

  std::size_t expected_params() const {
    switch (kind) {
      case PdeKind::Heat1D: return 3;
      case PdeKind::Diffuse2D: return 4;
      default: return 1;
    }
  }

  void validate(bool allow_zero_dt = false) const {
    const std::size_t axes = kind == PdeKind::Diffuse2D ? 2 : 1;
    if (counts.size() != axes || extent.size() != axes)
      throw ContractViolation(to_string(kind) + ": wrong number of axes");
    for (Index c : counts)
      if (c < 3) throw ContractViolation("grid counts must be >= 3");
    for (double e : extent)
      if (!(e > 0.0)) throw ContractViolation("domain extent must be positive");
    if (!(dt > 0.0) && !(allow_zero_dt && dt == 0.0)) throw ContractViolation("dt must be positive");
    if (steps < 0) throw ContractViolation("steps must be non-negative");
  }

  void validate_params(const std::vector<double>& mu) const {
    if (mu.size() != expected_params())
      throw ContractViolation(to_string(kind) + ": expected " + std::to_string(expected_params()) +
                              " parameters, got " + std::to_string(mu.size()));
    for (double v : mu)
      if (!std::isfinite(v)) throw ContractViolation("non-finite PDE parameter");
    if (kind == PdeKind::Heat1D || kind == PdeKind::Diffuse2D)
      for (double v : mu)
        if (v < 0.0) throw ContractViolation("diffusivity must be non-negative");
  }

  /// Node coordinates, P x m, row-major node order (x fastest in 2D).
  DenseMatrix coords() const {
    const Index p = point_count();
    DenseMatrix c(p, m());
    if (m() == 1) {
      for (Index i = 0; i < p; ++i) c(i, 0) = static_cast<double>(i) * spacing(0);
    } else {
      const Index nx = counts[0];
      for (Index i = 0; i < p; ++i) {
        c(i, 0) = static_cast<double>(i % nx) * spacing(0);
        c(i, 1) = static_cast<double>(i / nx) * spacing(1);
      }
    }
    return c;
  }
};

/// Region index of node i for piecewise-constant coefficients split into equal
/// widths by grid index.
inline Index region_of(Index i, Index n, Index regions) {
  return std::min(regions - 1, (i * regions) / n);
}

/// Per-node diffusivity for the heat and image-diffusion problems.
inline std::vector<double> diffusivity_field(const PdeSpec& spec, const std::vector<double>& mu) {
  spec.validate_params(mu);
  std::vector<double> nu(static_cast<std::size_t>(spec.point_count()));
  if (spec.kind == PdeKind::Heat1D) {
    const Index n = spec.counts[0];
    for (Index i = 0; i < n; ++i) nu[static_cast<std::size_t>(i)] = mu[static_cast<std::size_t>(region_of(i, n, 3))];
  } else if (spec.kind == PdeKind::Diffuse2D) {
    const Index nx = spec.counts[0], ny = spec.counts[1];
    for (Index iy = 0; iy < ny; ++iy)
      for (Index ix = 0; ix < nx; ++ix) {
        const Index q = 2 * region_of(iy, ny, 2) + region_of(ix, nx, 2);
        nu[static_cast<std::size_t>(iy * nx + ix)] = mu[static_cast<std::size_t>(q)];
      }
  } else {
    throw ContractViolation("diffusivity_field: only defined for diffusion problems");
  }
  return nu;
}

}  // namespace crom
