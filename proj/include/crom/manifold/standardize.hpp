#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "crom/numerics/mlp.hpp"
#include "crom/pde/trajectory.hpp"

namespace crom {

struct StandardizeResult {
  TrajectoryDataset dataset;  // normalized fields and coordinates, stats attached
  Standardization stats;
  std::vector<std::string> warnings;
};

/// Zero-mean / unit-variance fields per channel over every training sample.
/// Coordinates are standardized for ELU decoders and mapped affinely onto
/// [-1, 1] per axis for SIREN decoders.
inline StandardizeResult standardize(const TrajectoryDataset& raw, ActivationKind activation,
                                     double epsilon = 1e-8) {
  CROM_EXPECT(!raw.trajectories.empty() && raw.point_count() > 0, "standardize: empty dataset");
  const Index d = raw.spec.d(), p = raw.point_count(), m = raw.coords.cols();
  StandardizeResult out;
  Standardization& st = out.stats;

  for (Index c = 0; c < d; ++c) {
    double sum = 0.0, count = 0.0;
    for (const auto& t : raw.trajectories)
      for (Index n = 0; n < t.fields.cols(); ++n)
        for (Index i = 0; i < p; ++i) sum += t.fields(i * d + c, n), count += 1.0;
    const double mean = sum / count;
    double var = 0.0;
    for (const auto& t : raw.trajectories)
      for (Index n = 0; n < t.fields.cols(); ++n)
        for (Index i = 0; i < p; ++i) {
          const double e = t.fields(i * d + c, n) - mean;
          var += e * e;
        }
    double sd = std::sqrt(var / count);
    const bool floored = !(sd > epsilon);
    if (floored) {
      sd = epsilon;
      out.warnings.push_back("channel " + std::to_string(c) + " has (near) zero variance; std floored to " +
                             std::to_string(epsilon));
    }
    st.field_mean.push_back(mean);
    st.field_std.push_back(sd);
    st.field_floored.push_back(floored);
  }

  st.coord_mode = activation == ActivationKind::Siren ? CoordMode::UnitBox : CoordMode::Standardize;
  for (Index a = 0; a < m; ++a) {
    const auto col = raw.coords.col(a);
    if (st.coord_mode == CoordMode::Standardize) {
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      st.coord_offset.push_back(mean);
      st.coord_scale.push_back(sd > 0.0 ? sd : 1.0);
    } else {
      const double lo = col.minCoeff(), hi = col.maxCoeff();
      st.coord_offset.push_back(0.5 * (lo + hi));
      st.coord_scale.push_back(hi > lo ? 0.5 * (hi - lo) : 1.0);
    }
  }

  out.dataset = raw;
  for (auto& t : out.dataset.trajectories)
    for (Index n = 0; n < t.fields.cols(); ++n)
      for (Index i = 0; i < p; ++i)
        for (Index c = 0; c < d; ++c)
          t.fields(i * d + c, n) = st.field_to_normal(t.fields(i * d + c, n), static_cast<std::size_t>(c));
  for (Index i = 0; i < p; ++i)
    for (Index a = 0; a < m; ++a)
      out.dataset.coords(i, a) = st.coord_to_normal(raw.coords(i, a), static_cast<std::size_t>(a));
  out.dataset.stats = st;
  return out;
}

/// Applies stored statistics to raw snapshot values ((P*d) x N).
inline DenseMatrix normalize_fields(const Standardization& st, const DenseMatrix& raw, Index d) {
  DenseMatrix out = raw;
  for (Index r = 0; r < raw.rows(); ++r)
    for (Index n = 0; n < raw.cols(); ++n) out(r, n) = st.field_to_normal(raw(r, n), static_cast<std::size_t>(r % d));
  return out;
}

inline DenseMatrix denormalize_fields(const Standardization& st, const DenseMatrix& normal, Index d) {
  DenseMatrix out = normal;
  for (Index r = 0; r < normal.rows(); ++r)
    for (Index n = 0; n < normal.cols(); ++n)
      out(r, n) = st.field_from_normal(normal(r, n), static_cast<std::size_t>(r % d));
  return out;
}

inline DenseMatrix normalize_coords(const Standardization& st, const DenseMatrix& raw) {
  DenseMatrix out = raw;
  for (Index i = 0; i < raw.rows(); ++i)
    for (Index a = 0; a < raw.cols(); ++a) out(i, a) = st.coord_to_normal(raw(i, a), static_cast<std::size_t>(a));
  return out;
}

}  // namespace crom
