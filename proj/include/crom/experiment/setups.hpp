#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crom/pde/spec.hpp"

namespace crom {

enum class ExperimentKind { Thermo, Image, Advection, Burgers };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Thermo: return "thermo";
    case ExperimentKind::Image: return "image";
    case ExperimentKind::Advection: return "advection";
    case ExperimentKind::Burgers: return "burgers";
  }
  return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "thermo") return ExperimentKind::Thermo;
  if (s == "image") return ExperimentKind::Image;
  if (s == "advection") return ExperimentKind::Advection;
  if (s == "burgers") return ExperimentKind::Burgers;
  throw ContractViolation("unknown experiment kind '" + s + "'");
}

/// A full-order problem family: discretization, shared initial condition and the
/// training / test parameter sets.
struct ProblemSetup {
  PdeSpec spec;
  std::vector<double> initial;
  std::vector<std::vector<double>> train_params;
  std::vector<std::vector<double>> test_params;
};

namespace detail {
inline double smooth_box(double x, double a, double b, double height, double width) {
  return 0.5 * height * (std::tanh((x - a) / width) - std::tanh((x - b) / width));
}
}  // namespace detail

/// Three plateaus with smoothed edges on [0, 1], zero at both ends.
inline std::vector<double> thermo_initial(const PdeSpec& spec) {
  const DenseMatrix x = spec.coords();
  std::vector<double> u(static_cast<std::size_t>(spec.point_count()));
  for (Index i = 0; i < x.rows(); ++i) {
    const double xi = x(i, 0);
    u[static_cast<std::size_t>(i)] = detail::smooth_box(xi, 0.08, 0.25, 1.0, 0.004) +
                                     detail::smooth_box(xi, 0.42, 0.50, 0.8, 0.004) +
                                     detail::smooth_box(xi, 0.70, 0.88, 0.6, 0.004);
  }
  u.front() = 0.0;
  u.back() = 0.0;
  return u;
}

/// Heat conduction through three materials: 8 training and 4 test diffusivity
/// triples drawn uniformly from [0.2, 1]^3.
inline ProblemSetup thermo_setup(Index points = 501, Index steps = 100, std::uint64_t seed = 7) {
  ProblemSetup s;
  s.spec.kind = PdeKind::Heat1D;
  s.spec.extent = {1.0};
  s.spec.counts = {points};
  const double dx = s.spec.spacing(0);
  s.spec.dt = 0.4 * dx * dx;
  s.spec.steps = steps;
  s.initial = thermo_initial(s.spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> nu(0.2, 1.0);
  for (int k = 0; k < 12; ++k) {
    std::vector<double> mu{nu(rng), nu(rng), nu(rng)};
    (k < 8 ? s.train_params : s.test_params).push_back(mu);
  }
  return s;
}

/// Synthetic grayscale picture on an n x n grid: a disc, a ring, a bar and a soft
/// blob on a dark background, zero on the border.
inline std::vector<double> image_initial(const PdeSpec& spec) {
  const Index nx = spec.counts[0], ny = spec.counts[1];
  std::vector<double> u(static_cast<std::size_t>(nx * ny));
  for (Index iy = 0; iy < ny; ++iy)
    for (Index ix = 0; ix < nx; ++ix) {
      const double x = (static_cast<double>(ix) + 0.5) / static_cast<double>(nx);
      const double y = (static_cast<double>(iy) + 0.5) / static_cast<double>(ny);
      double v = 0.1;
      const double r1 = std::hypot(x - 0.28, y - 0.30);
      if (r1 < 0.14) v = 0.9;
      const double r2 = std::hypot(x - 0.72, y - 0.28);
      if (r2 > 0.09 && r2 < 0.16) v = 0.7;
      if (std::abs(x - 0.30) < 0.16 && std::abs(y - 0.74) < 0.05) v = 0.8;
      v += 0.6 * std::exp(-(std::pow(x - 0.72, 2) + std::pow(y - 0.72, 2)) / (2.0 * 0.08 * 0.08));
      if (ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1) v = 0.0;
      u[static_cast<std::size_t>(iy * nx + ix)] = v;
    }
  return u;
}

/// Image diffusion with one diffusivity per quadrant from {0, 0.2}. The four vectors
/// with exactly one zero entry are the test set; the other eleven nonzero vectors train.
inline ProblemSetup image_setup(Index n = 64, Index steps = 20) {
  ProblemSetup s;
  s.spec.kind = PdeKind::Diffuse2D;
  s.spec.extent = {static_cast<double>(n - 1), static_cast<double>(n - 1)};
  s.spec.counts = {n, n};
  s.spec.dt = 1.0;
  s.spec.steps = steps;
  s.initial = image_initial(s.spec);
  for (int mask = 1; mask < 16; ++mask) {
    std::vector<double> mu(4);
    int zeros = 0;
    for (int q = 0; q < 4; ++q) {
      mu[static_cast<std::size_t>(q)] = (mask >> q) & 1 ? 0.2 : 0.0;
      zeros += (mask >> q) & 1 ? 0 : 1;
    }
    (zeros == 1 ? s.test_params : s.train_params).push_back(mu);
  }
  return s;
}

/// Periodic transport of a Gaussian pulse on the unit interval (reproductive: a = 1).
inline ProblemSetup advection_setup(Index points = 100, Index steps = 100, double sigma = 0.05) {
  ProblemSetup s;
  s.spec.kind = PdeKind::Advect1D;
  s.spec.extent = {1.0};
  s.spec.counts = {points};
  s.spec.dt = 0.5 * s.spec.spacing(0);
  s.spec.steps = steps;
  const DenseMatrix x = s.spec.coords();
  s.initial.resize(static_cast<std::size_t>(points));
  for (Index i = 0; i < points; ++i) {
    const double d = x(i, 0) - 0.25;
    s.initial[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  s.train_params = {{1.0}};
  s.test_params = {{1.0}};
  return s;
}

/// Inviscid Burgers on [0, 100] with inflow 4.25 and source 0.02 exp(mu x);
/// mu_train = 0.015 + (0.015 / 7) j, j = 0..7, mu_test = 0.021.
inline ProblemSetup burgers_setup(Index points = 256, Index steps = 500) {
  ProblemSetup s;
  s.spec.kind = PdeKind::Burgers1D;
  s.spec.extent = {100.0};
  s.spec.counts = {points};
  s.spec.dt = 0.05;  // Courant number <= 0.85 for every training mu
  s.spec.steps = steps;
  s.spec.inflow = 4.25;
  s.initial.assign(static_cast<std::size_t>(points), 1.0);
  s.initial.front() = s.spec.inflow;
  for (int j = 0; j < 8; ++j) s.train_params.push_back({0.015 + (0.015 / 7.0) * j});
  s.test_params = {{0.021}};
  return s;
}

inline ProblemSetup problem_setup(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Thermo: return thermo_setup();
    case ExperimentKind::Image: return image_setup();
    case ExperimentKind::Advection: return advection_setup();
    case ExperimentKind::Burgers: return burgers_setup();
  }
  return {};
}

}  // namespace crom
