#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SVD>

#include "crom/numerics/serialize.hpp"
#include "crom/pde/trajectory.hpp"

namespace crom {

/// Linear subspace f ~ U q + mean.
struct PodBasis {
  DenseMatrix basis;         // (P*d) x r, orthonormal columns
  Vector mean;               // P*d
  Vector singular_values;    // leading r
  Vector spectrum;           // every singular value of the centered snapshot matrix

  Index rank() const { return basis.cols(); }
  Index stored_entries() const { return basis.size() + mean.size(); }
};

/// Thin SVD of the mean-centered snapshot matrix (columns are snapshots).
inline PodBasis pod_fit(const DenseMatrix& snapshots, Index r) {
  CROM_EXPECT(r >= 1, "pod_fit: r must be >= 1");
  const Index limit = std::min(snapshots.rows(), snapshots.cols());
  if (r > limit)
    throw ContractViolation("pod_fit: r = " + std::to_string(r) + " exceeds min(P*d, snapshots) = " +
                            std::to_string(limit));
  PodBasis b;
  b.mean = snapshots.rowwise().mean();
  const DenseMatrix centered = snapshots.colwise() - b.mean;
  Eigen::BDCSVD<DenseMatrix> svd(centered, Eigen::ComputeThinU);
  b.spectrum = svd.singularValues();
  b.singular_values = b.spectrum.head(r);
  b.basis = svd.matrixU().leftCols(r);
  // Fix the sign of each column so the largest-magnitude entry is positive.
  for (Index k = 0; k < r; ++k) {
    Index imax = 0;
    b.basis.col(k).cwiseAbs().maxCoeff(&imax);
    if (b.basis(imax, k) < 0.0) b.basis.col(k) *= -1.0;
  }
  return b;
}

inline PodBasis pod_fit(const TrajectoryDataset& ds, Index r) { return pod_fit(ds.snapshot_matrix(), r); }

inline Vector pod_project(const PodBasis& b, const Eigen::Ref<const Vector>& f) {
  CROM_EXPECT(f.size() == b.mean.size(), "pod_project: snapshot size mismatch");
  return b.basis.transpose() * (f - b.mean);
}

inline Vector pod_reconstruct(const PodBasis& b, const Eigen::Ref<const Vector>& q) {
  CROM_EXPECT(q.size() == b.rank(), "pod_reconstruct: latent size mismatch");
  return b.basis * q + b.mean;
}

/// POD basis seen through the same field-model interface as the neural decoder.
class PodField {
 public:
  explicit PodField(PodBasis basis, Index channels = 1) : b_(std::move(basis)), d_(channels) {}

  Index latent_dim() const { return b_.rank(); }
  Index channels() const { return d_; }
  Index point_count() const { return b_.mean.size() / d_; }
  const PodBasis& basis() const { return b_; }

  Vector values(std::span<const Index> nodes, const Vector& q) const {
    Vector v(static_cast<Index>(nodes.size()) * d_);
    for (std::size_t k = 0; k < nodes.size(); ++k)
      for (Index c = 0; c < d_; ++c) {
        const Index row = nodes[k] * d_ + c;
        v(static_cast<Index>(k) * d_ + c) = b_.basis.row(row).dot(q) + b_.mean(row);
      }
    return v;
  }

  Vector reconstruct(const Vector& q) const { return pod_reconstruct(b_, q); }

  DenseMatrix latent_jacobian(std::span<const Index> nodes, const Vector& q, Vector* values_out) const {
    DenseMatrix j(static_cast<Index>(nodes.size()) * d_, b_.rank());
    for (std::size_t k = 0; k < nodes.size(); ++k)
      for (Index c = 0; c < d_; ++c) j.row(static_cast<Index>(k) * d_ + c) = b_.basis.row(nodes[k] * d_ + c);
    if (values_out) *values_out = values(nodes, q);
    return j;
  }

 private:
  PodBasis b_;
  Index d_;
};

struct PodRun {
  DenseMatrix latents;        // r x (steps + 1)
  DenseMatrix fields;         // (P*d) x (steps + 1), reconstructions
  std::optional<Index> diverged_at;
};

/// Un-hyper-reduced POD ROM: reconstruct, apply the full-order step, project.
inline PodRun pod_rom_run(const PodBasis& b, const StepContext& ctx, const Eigen::Ref<const Vector>& initial,
                          Index steps, double threshold = kDivergenceThreshold) {
  CROM_EXPECT(initial.size() == b.mean.size(), "pod_rom_run: initial snapshot size mismatch");
  PodRun out;
  out.latents.resize(b.rank(), steps + 1);
  out.fields.resize(b.mean.size(), steps + 1);
  Vector q = pod_project(b, initial);
  out.latents.col(0) = q;
  out.fields.col(0) = pod_reconstruct(b, q);
  for (Index n = 1; n <= steps; ++n) {
    const Vector f = out.fields.col(n - 1);
    if (!f.allFinite() || f.cwiseAbs().maxCoeff() > threshold) {
      out.diverged_at = n - 1;
      out.latents.conservativeResize(Eigen::NoChange, n);
      out.fields.conservativeResize(Eigen::NoChange, n);
      return out;
    }
    const std::vector<double> next = ctx.step(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
    q = pod_project(b, Eigen::Map<const Vector>(next.data(), f.size()));
    out.latents.col(n) = q;
    out.fields.col(n) = pod_reconstruct(b, q);
  }
  const Vector last = out.fields.col(steps);
  if (!last.allFinite() || last.cwiseAbs().maxCoeff() > threshold) out.diverged_at = steps;
  return out;
}

/// Basis file: manifest.json plus basis.f64 (U row-major, then mean, then spectrum).
inline void write_pod_basis(const std::filesystem::path& dir, const PodBasis& b) {
  std::filesystem::create_directories(dir);
  std::vector<double> blob;
  blob.reserve(static_cast<std::size_t>(b.basis.size() + b.mean.size() + b.spectrum.size()));
  for (Index i = 0; i < b.basis.rows(); ++i)
    for (Index k = 0; k < b.basis.cols(); ++k) blob.push_back(b.basis(i, k));
  for (Index i = 0; i < b.mean.size(); ++i) blob.push_back(b.mean(i));
  for (Index i = 0; i < b.spectrum.size(); ++i) blob.push_back(b.spectrum(i));
  write_f64_blob(dir / "basis.f64", blob);
  write_json(dir / "manifest.json", {{"format", "crom-pod"},
                                     {"version", 1},
                                     {"byte_order", "little"},
                                     {"rows", b.basis.rows()},
                                     {"rank", b.basis.cols()},
                                     {"spectrum_size", b.spectrum.size()},
                                     {"weights", "basis.f64"}});
}

inline PodBasis read_pod_basis(const std::filesystem::path& dir) {
  const json j = read_json(dir / "manifest.json");
  if (j.value("format", "") != "crom-pod") throw IoError("not a POD basis manifest: " + dir.string());
  const Index rows = j.at("rows").get<Index>(), r = j.at("rank").get<Index>();
  const Index ns = j.at("spectrum_size").get<Index>();
  const auto blob = read_f64_blob(dir / j.value("weights", std::string("basis.f64")));
  if (static_cast<Index>(blob.size()) != rows * r + rows + ns) throw IoError("basis.f64 has wrong length");
  PodBasis b;
  b.basis.resize(rows, r);
  std::size_t k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < r; ++c) b.basis(i, c) = blob[k++];
  b.mean.resize(rows);
  for (Index i = 0; i < rows; ++i) b.mean(i) = blob[k++];
  b.spectrum.resize(ns);
  for (Index i = 0; i < ns; ++i) b.spectrum(i) = blob[k++];
  b.singular_values = b.spectrum.head(std::min(r, ns));
  return b;
}

}  // namespace crom
