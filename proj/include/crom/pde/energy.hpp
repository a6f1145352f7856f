#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "crom/pde/spec.hpp"

namespace crom {

/// Heat budget of the sub-interval [x1, x2] over a trajectory.
struct EnergyBudget {
  std::vector<double> escaped;  // EE: cumulative boundary outflux
  std::vector<double> stored;   // SE: integral of u over [x1, x2]
  std::vector<double> total;    // TE = EE + SE
  Index left_node = 0, right_node = 0;
  std::vector<std::string> warnings;

  /// max_n |TE(n) - TE(0)| / |TE(0)|; absolute drift when TE(0) == 0.
  double max_relative_drift() const {
    double worst = 0.0;
    const double ref = std::abs(total.front()) > 0.0 ? std::abs(total.front()) : 1.0;
    for (double t : total) worst = std::max(worst, std::abs(t - total.front()) / ref);
    return worst;
  }
};

/// EE(t) = trapezoid-in-time of nu(x1) u_x(x1) - nu(x2) u_x(x2) (central differences),
/// SE(t) = trapezoid-in-space of u over [x1, x2]. x1, x2 snap to the nearest nodes.
///
/// `fields` holds one snapshot per column on a uniform 1D grid with spacing dx
/// starting at x = 0; `nu` is the per-node diffusivity.
inline EnergyBudget heat_energy_budget(const DenseMatrix& fields, double dx, const std::vector<double>& nu,
                                       double dt, double x1, double x2) {
  const Index n = fields.rows();
  CROM_EXPECT(static_cast<Index>(nu.size()) == n, "heat_energy_budget: nu size mismatch");
  CROM_EXPECT(x1 < x2, "heat_energy_budget: need x1 < x2");
  EnergyBudget b;
  auto snap = [&](double x, Index& node) {
    const double s = x / dx;
    node = static_cast<Index>(std::llround(s));
    if (std::abs(s - static_cast<double>(node)) > 1e-9) {
      b.warnings.push_back("x=" + std::to_string(x) + " is off-grid; snapped to node " + std::to_string(node));
    }
  };
  snap(x1, b.left_node);
  snap(x2, b.right_node);
  CROM_EXPECT(b.left_node >= 1 && b.right_node <= n - 2 && b.left_node < b.right_node,
              "heat_energy_budget: interval must lie strictly inside the domain");

  const Index steps = fields.cols();
  auto outflux = [&](Index t) {
    const auto& u = fields.col(t);
    const Index a = b.left_node, c = b.right_node;
    const double left = nu[static_cast<std::size_t>(a)] * (u(a + 1) - u(a - 1)) / (2.0 * dx);
    const double right = nu[static_cast<std::size_t>(c)] * (u(c + 1) - u(c - 1)) / (2.0 * dx);
    return left - right;
  };
  double escaped = 0.0;
  double prev_flux = outflux(0);
  for (Index t = 0; t < steps; ++t) {
    const auto& u = fields.col(t);
    double se = 0.0;
    for (Index i = b.left_node; i < b.right_node; ++i) se += 0.5 * (u(i) + u(i + 1)) * dx;
    if (t > 0) {
      const double flux = outflux(t);
      escaped += 0.5 * (prev_flux + flux) * dt;
      prev_flux = flux;
    }
    b.escaped.push_back(escaped);
    b.stored.push_back(se);
    b.total.push_back(se + escaped);
  }
  return b;
}

}  // namespace crom
