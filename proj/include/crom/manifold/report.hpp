#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "crom/manifold/train.hpp"

namespace crom {

struct Metrics {
  double mse = 0.0;
  double relative_l2 = 0.0;  // |a - b| / |b|; +inf when |b| = 0 and a != b
  double psnr = 0.0;         // 10 log10(range(b)^2 / mse); +inf when mse = 0
};

/// Error of `a` against the reference `b`.
inline Metrics metrics(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  CROM_EXPECT(a.size() == b.size() && a.size() > 0, "metrics: shape mismatch");
  Metrics m;
  const double err = (a - b).norm();
  m.mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  const double ref = b.norm();
  if (ref > 0.0) m.relative_l2 = err / ref;
  else m.relative_l2 = err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  const double range = b.maxCoeff() - b.minCoeff();
  m.psnr = m.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(range * range / m.mse);
  return m;
}

inline double psnr_from_mse(double mse, double range) {
  return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(range * range / mse);
}

struct TrajectoryReport {
  std::vector<double> params;
  double mse = 0.0;
  double psnr = 0.0;
  std::vector<double> relative_l2;  // per snapshot
};

struct ReconstructionReport {
  double mse = 0.0;  // physical units, over every node, snapshot and trajectory
  std::vector<TrajectoryReport> trajectories;
};

/// Encode-decode quality on a raw (physical units) dataset.
inline ReconstructionReport reconstruction_report(const DecoderNet& dec, const EncoderNet& enc,
                                                  const TrajectoryDataset& raw) {
  const Index d = raw.spec.d();
  const DenseMatrix coords = normalize_coords(dec.stats, raw.coords);
  ReconstructionReport rep;
  double sq = 0.0, count = 0.0;
  for (const auto& t : raw.trajectories) {
    const DenseMatrix normal = normalize_fields(dec.stats, t.fields, d);
    const DenseMatrix q = encoder_forward(enc, normal);
    TrajectoryReport tr;
    tr.params = t.params;
    double tsq = 0.0;
    for (Index n = 0; n < t.fields.cols(); ++n) {
      const DenseMatrix rec = denormalize_fields(dec.stats, decode_nodes(dec, coords, q.col(n)), d);
      const Metrics mt = metrics(rec.col(0), t.fields.col(n));
      tr.relative_l2.push_back(mt.relative_l2);
      tsq += mt.mse * static_cast<double>(rec.size());
    }
    const double tcount = static_cast<double>(t.fields.size());
    tr.mse = tsq / tcount;
    tr.psnr = psnr_from_mse(tr.mse, t.fields.maxCoeff() - t.fields.minCoeff());
    sq += tsq, count += tcount;
    rep.trajectories.push_back(std::move(tr));
  }
  rep.mse = count > 0.0 ? sq / count : 0.0;
  return rep;
}

}  // namespace crom
