#pragma once

#include <concepts>
#include <span>
#include <vector>

#include "crom/manifold/networks.hpp"
#include "crom/manifold/standardize.hpp"

namespace crom {

/// A manifold parameterization evaluated at full-order grid nodes, in physical units.
///
///   values(nodes, q)            -> |nodes| * d field values, node-major
///   latent_jacobian(nodes, q)   -> (|nodes| * d) x r matrix d f / d q; also fills values
///   spatial_gradient(nodes, q)  -> (|nodes| * d) x m matrix d f / d x
template <class F>
concept FieldModel = requires(const F& f, std::span<const Index> nodes, const Vector& q, Vector* values) {
  { f.latent_dim() } -> std::convertible_to<Index>;
  { f.channels() } -> std::convertible_to<Index>;
  { f.point_count() } -> std::convertible_to<Index>;
  { f.values(nodes, q) } -> std::same_as<Vector>;
  { f.latent_jacobian(nodes, q, values) } -> std::same_as<DenseMatrix>;
};

/// The trained decoder bound to a grid: g(x_i, q) mapped back to physical units.
class NeuralField {
 public:
  NeuralField(DecoderNet decoder, const DenseMatrix& raw_coords)
      : decoder_(std::move(decoder)), coords_(normalize_coords(decoder_.stats, raw_coords)) {
    CROM_EXPECT(raw_coords.cols() == decoder_.m, "NeuralField: coordinate dimension does not match decoder");
    latent_seed_ = DenseMatrix::Zero(decoder_.m + decoder_.r, decoder_.r);
    latent_seed_.bottomRows(decoder_.r).setIdentity();
    spatial_seed_ = DenseMatrix::Zero(decoder_.m + decoder_.r, decoder_.m);
    spatial_seed_.topRows(decoder_.m).setIdentity();
  }

  Index latent_dim() const { return decoder_.r; }
  Index channels() const { return decoder_.d; }
  Index point_count() const { return coords_.rows(); }
  const DecoderNet& decoder() const { return decoder_; }

  Vector values(std::span<const Index> nodes, const Vector& q) const {
    const Index d = decoder_.d;
    const DenseMatrix out = mlp_forward_batch(decoder_.mlp, inputs(nodes, q));
    Vector v(static_cast<Index>(nodes.size()) * d);
    for (Index k = 0; k < out.cols(); ++k)
      for (Index c = 0; c < d; ++c) v(k * d + c) = decoder_.stats.field_from_normal(out(c, k), static_cast<std::size_t>(c));
    return v;
  }

  /// Values at every grid node.
  Vector reconstruct(const Vector& q) const {
    std::vector<Index> all(static_cast<std::size_t>(point_count()));
    for (Index i = 0; i < point_count(); ++i) all[static_cast<std::size_t>(i)] = i;
    return values(all, q);
  }

  DenseMatrix latent_jacobian(std::span<const Index> nodes, const Vector& q, Vector* values_out) const {
    if (decoder_.d == 1) return scalar_jacobian(nodes, q, values_out, false);
    return jacobian(nodes, q, latent_seed_, values_out, false);
  }

  DenseMatrix spatial_gradient(std::span<const Index> nodes, const Vector& q) const {
    if (decoder_.d == 1) return scalar_jacobian(nodes, q, nullptr, true);
    return jacobian(nodes, q, spatial_seed_, nullptr, true);
  }

  /// Forward-mode (running chain rule) variant of latent_jacobian for any d.
  DenseMatrix latent_jacobian_forward(std::span<const Index> nodes, const Vector& q, Vector* values_out) const {
    return jacobian(nodes, q, latent_seed_, values_out, false);
  }

 private:
  DenseMatrix inputs(std::span<const Index> nodes, const Vector& q) const {
    const Index m = decoder_.m, r = decoder_.r;
    DenseMatrix in(m + r, static_cast<Index>(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      in.col(static_cast<Index>(k)).head(m) = coords_.row(nodes[k]).transpose();
      in.col(static_cast<Index>(k)).tail(r) = q;
    }
    return in;
  }

  // Scalar fields: one batched reverse sweep gives every input derivative at once.
  DenseMatrix scalar_jacobian(std::span<const Index> nodes, const Vector& q, Vector* values_out, bool spatial) const {
    const Index m = decoder_.m, r = decoder_.r;
    const BatchGradient bg = mlp_value_and_input_gradient(decoder_.mlp, inputs(nodes, q));
    const double scale = decoder_.stats.field_std[0];
    DenseMatrix jac;
    if (spatial) {
      jac = scale * bg.gradient.topRows(m).transpose();
      for (Index a = 0; a < m; ++a) jac.col(a) /= decoder_.stats.coord_scale[static_cast<std::size_t>(a)];
    } else {
      jac = scale * bg.gradient.bottomRows(r).transpose();
    }
    if (values_out) {
      values_out->resize(bg.value.cols());
      for (Index k = 0; k < bg.value.cols(); ++k) (*values_out)(k) = decoder_.stats.field_from_normal(bg.value(0, k), 0);
    }
    return jac;
  }

  DenseMatrix jacobian(std::span<const Index> nodes, const Vector& q, const DenseMatrix& seed, Vector* values_out,
                       bool spatial) const {
    const Index m = decoder_.m, r = decoder_.r, d = decoder_.d;
    DenseMatrix jac(static_cast<Index>(nodes.size()) * d, seed.cols());
    if (values_out) values_out->resize(static_cast<Index>(nodes.size()) * d);
    Vector in(m + r);
    in.tail(r) = q;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      in.head(m) = coords_.row(nodes[k]).transpose();
      const ValueJacobian vj = mlp_forward_with_jacobian(decoder_.mlp, in, seed);
      for (Index c = 0; c < d; ++c) {
        const auto row = static_cast<Index>(k) * d + c;
        const double scale = decoder_.stats.field_std[static_cast<std::size_t>(c)];
        jac.row(row) = scale * vj.jacobian.row(c);
        if (spatial)
          for (Index a = 0; a < m; ++a) jac(row, a) /= decoder_.stats.coord_scale[static_cast<std::size_t>(a)];
        if (values_out) (*values_out)(row) = decoder_.stats.field_from_normal(vj.value(c), static_cast<std::size_t>(c));
      }
    }
    return jac;
  }

  DecoderNet decoder_;
  DenseMatrix coords_;  // normalized, P x m
  DenseMatrix latent_seed_, spatial_seed_;
};

static_assert(FieldModel<NeuralField>);

}  // namespace crom
