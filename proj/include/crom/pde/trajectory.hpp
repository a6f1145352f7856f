#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "crom/pde/steppers.hpp"

namespace crom {

enum class CoordMode { Standardize, UnitBox };

/// Affine normalization of fields (per channel) and coordinates (per axis).
/// Normalized value = (raw - offset) / scale.
struct Standardization {
  std::vector<double> field_mean;
  std::vector<double> field_std;
  std::vector<bool> field_floored;  // std hit the epsilon floor
  CoordMode coord_mode = CoordMode::Standardize;
  std::vector<double> coord_offset;
  std::vector<double> coord_scale;

  double field_to_normal(double v, std::size_t c) const { return (v - field_mean[c]) / field_std[c]; }
  double field_from_normal(double v, std::size_t c) const { return v * field_std[c] + field_mean[c]; }
  double coord_to_normal(double x, std::size_t a) const { return (x - coord_offset[a]) / coord_scale[a]; }
};

struct Trajectory {
  std::vector<double> params;
  DenseMatrix fields;  // (P*d) x (T+1); column n is the snapshot at t_n
};

struct TrajectoryDataset {
  PdeSpec spec;
  DenseMatrix coords;  // P x m
  std::vector<Trajectory> trajectories;
  std::optional<Standardization> stats;

  Index point_count() const { return coords.rows(); }
  Index steps() const { return trajectories.empty() ? 0 : trajectories.front().fields.cols() - 1; }
  Index snapshot_count() const {
    Index n = 0;
    for (const auto& t : trajectories) n += t.fields.cols();
    return n;
  }
  /// All snapshots side by side, trajectory-major: (P*d) x snapshot_count.
  DenseMatrix snapshot_matrix() const {
    DenseMatrix s(coords.rows() * spec.d(), snapshot_count());
    Index c = 0;
    for (const auto& t : trajectories) {
      s.middleCols(c, t.fields.cols()) = t.fields;
      c += t.fields.cols();
    }
    return s;
  }
};

inline constexpr double kDivergenceThreshold = 1e10;

struct Simulation {
  DenseMatrix fields;                    // (P*d) x (computed steps + 1)
  std::optional<Index> diverged_at;      // first step whose max-norm exceeded the threshold
};

/// Runs the full-order stepper for `spec.steps` steps. With `stop_on_divergence`
/// the run halts at the first step whose max-norm exceeds `threshold` (or is non-finite).
inline Simulation simulate(const StepContext& ctx, const std::vector<double>& initial,
                           double threshold = kDivergenceThreshold, bool stop_on_divergence = true) {
  const Index p = ctx.spec.point_count();
  CROM_EXPECT(static_cast<Index>(initial.size()) == p, "simulate: initial condition has wrong size");
  Simulation out;
  out.fields.resize(p, ctx.spec.steps + 1);
  out.fields.col(0) = Eigen::Map<const Vector>(initial.data(), p);
  std::vector<double> u = initial;
  for (Index n = 1; n <= ctx.spec.steps; ++n) {
    bool finite = true;
    for (double v : u) finite = finite && std::isfinite(v);
    if (finite) {
      u = ctx.step(u);
    } else {
      std::fill(u.begin(), u.end(), std::numeric_limits<double>::infinity());
    }
    out.fields.col(n) = Eigen::Map<const Vector>(u.data(), p);
    const double norm = out.fields.col(n).cwiseAbs().maxCoeff();
    if (!out.diverged_at && (!std::isfinite(norm) || norm > threshold)) {
      out.diverged_at = n;
      if (stop_on_divergence) {
        out.fields.conservativeResize(Eigen::NoChange, n + 1);
        return out;
      }
    }
  }
  return out;
}

/// Full-order trajectories for every parameter vector from a shared initial condition.
inline TrajectoryDataset generate_trajectories(const PdeSpec& spec, const std::vector<double>& initial,
                                               const std::vector<std::vector<double>>& params) {
  spec.validate();
  TrajectoryDataset ds;
  ds.spec = spec;
  ds.coords = spec.coords();
  for (std::size_t k = 0; k < params.size(); ++k) {
    StepContext ctx(spec, params[k]);
    Simulation sim = simulate(ctx, initial);
    if (sim.diverged_at)
      throw DivergenceError("trajectory " + std::to_string(k) + " diverged", static_cast<std::size_t>(*sim.diverged_at));
    ds.trajectories.push_back({params[k], std::move(sim.fields)});
  }
  return ds;
}

}  // namespace crom
