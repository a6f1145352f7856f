#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "crom/numerics/adam.hpp"
#include "crom/pde/trajectory.hpp"

namespace crom {

/// The continuous manifold parameterization g(x, q): (m + r) -> d.
struct DecoderNet {
  MlpParams mlp;
  Index m = 1, r = 1, d = 1, beta = 1;
  Standardization stats;

  Index parameter_count() const { return mlp.parameter_count(); }
};

inline DecoderNet make_decoder(Index m, Index r, Index d, Index beta, Activation act, std::mt19937_64& rng) {
  DecoderNet dec;
  dec.m = m, dec.r = r, dec.d = d, dec.beta = beta;
  dec.mlp = make_decoder_mlp(m, r, d, beta, act, rng);
  return dec;
}

/// Strided 1D convolution (no padding) over a node-major, channel-minor signal.
struct ConvLayer {
  DenseMatrix weight;  // out_channels x (kernel * in_channels), tap-major
  Vector bias;
  Index in_channels = 1, out_channels = 1, kernel = 6, stride = 4;

  Index output_length(Index len) const { return (len - kernel) / stride + 1; }
};

inline constexpr Index kEncoderKernel = 6;
inline constexpr Index kEncoderStride = 4;
inline constexpr Index kEncoderHidden = 32;

/// Number of stride-4 kernel-6 convolutions applied to a length-P signal: keep
/// convolving while the next length stays >= 32/d, so the final length is the one
/// closest to 32/d without going below it.
inline Index encoder_conv_depth(Index points, Index d) {
  CROM_EXPECT(points >= 1 && d >= 1, "encoder_conv_depth: invalid sizes");
  const double target = 32.0 / static_cast<double>(d);
  Index depth = 0, len = points;
  while (len >= kEncoderKernel) {
    const Index next = (len - kEncoderKernel) / kEncoderStride + 1;
    if (static_cast<double>(next) < target) break;
    len = next;
    ++depth;
  }
  return depth;
}

/// Discretization-bound encoder: conv stack (ELU), flatten, dense to 32 (ELU), dense to r.
struct EncoderNet {
  Index points = 0, channels = 1, r = 1;
  std::vector<ConvLayer> convs;
  MlpParams head;

  Index flattened_length() const {
    Index len = points;
    for (const auto& c : convs) len = c.output_length(len);
    return len * channels;
  }
  Index parameter_count() const {
    Index n = head.parameter_count();
    for (const auto& c : convs) n += c.weight.size() + c.bias.size();
    return n;
  }
};

inline EncoderNet make_encoder(Index points, Index d, Index r, std::mt19937_64& rng) {
  EncoderNet enc;
  enc.points = points, enc.channels = d, enc.r = r;
  const Index depth = encoder_conv_depth(points, d);
  for (Index k = 0; k < depth; ++k) {
    ConvLayer c;
    c.in_channels = d, c.out_channels = d;
    const Index fan_in = c.kernel * c.in_channels, fan_out = c.kernel * c.out_channels;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    c.weight.resize(c.out_channels, fan_in);
    for (Index j = 0; j < fan_in; ++j)
      for (Index i = 0; i < c.out_channels; ++i) c.weight(i, j) = dist(rng);
    c.bias = Vector::Zero(c.out_channels);
    enc.convs.push_back(std::move(c));
  }
  enc.head = make_mlp(enc.flattened_length(), {kEncoderHidden}, r, Activation{ActivationKind::Elu}, rng);
  return enc;
}

template <class F, class First, class... Rest>
  requires(std::same_as<std::remove_const_t<First>, EncoderNet> &&
           (std::same_as<std::remove_const_t<Rest>, EncoderNet> && ...))
void zip_tensors(F&& f, First& first, Rest&... rest) {
  for (std::size_t k = 0; k < first.convs.size(); ++k) {
    f(first.convs[k].weight, rest.convs[k].weight...);
    f(first.convs[k].bias, rest.convs[k].bias...);
  }
  zip_tensors(f, first.head, rest.head...);
}

inline EncoderNet zeros_like(const EncoderNet& e) {
  EncoderNet z = e;
  zip_tensors([](auto& t) { t.setZero(); }, z);
  return z;
}

struct EncoderCache {
  std::vector<DenseMatrix> patches;  // per conv: (kernel*in) x (L_out*B)
  std::vector<DenseMatrix> preact;   // per conv: out x (L_out*B)
  std::vector<Index> in_lengths;
  MlpCache head;
};

namespace detail {
inline const Activation kEncoderActivation{ActivationKind::Elu};
}

/// Encodes normalized snapshots (columns of `x`, (P*d) x B) to latents (r x B).
inline DenseMatrix encoder_forward(const EncoderNet& enc, const Eigen::Ref<const DenseMatrix>& x,
                                   EncoderCache* cache = nullptr) {
  if (x.rows() != enc.points * enc.channels)
    throw DiscretizationMismatch("encoder expects " + std::to_string(enc.points) + " nodes x " +
                                 std::to_string(enc.channels) + " channels, got " + std::to_string(x.rows()) +
                                 " values");
  const Index batch = x.cols();
  if (cache) *cache = EncoderCache{};
  DenseMatrix signal = x;
  Index len = enc.points;
  for (const auto& c : enc.convs) {
    const Index out_len = c.output_length(len);
    const Index patch = c.kernel * c.in_channels;
    DenseMatrix patches(patch, out_len * batch);
    for (Index b = 0; b < batch; ++b)
      for (Index o = 0; o < out_len; ++o) patches.col(b * out_len + o) = signal.col(b).segment(o * c.stride * c.in_channels, patch);
    DenseMatrix z(c.out_channels, out_len * batch);
    z.noalias() = c.weight * patches;
    z.colwise() += c.bias;
    DenseMatrix next(out_len * c.out_channels, batch);
    for (Index b = 0; b < batch; ++b)
      for (Index o = 0; o < out_len; ++o)
        for (Index ch = 0; ch < c.out_channels; ++ch)
          next(o * c.out_channels + ch, b) = detail::kEncoderActivation.value(z(ch, b * out_len + o));
    if (cache) {
      cache->in_lengths.push_back(len);
      cache->patches.push_back(std::move(patches));
      cache->preact.push_back(std::move(z));
    }
    signal = std::move(next);
    len = out_len;
  }
  return mlp_forward_batch(enc.head, signal, cache ? &cache->head : nullptr);
}

/// Parameter gradients of the encoder given dL/d(latent) (r x B).
inline EncoderNet encoder_backprop(const EncoderNet& enc, const EncoderCache& cache,
                                   const Eigen::Ref<const DenseMatrix>& upstream) {
  EncoderNet grads = zeros_like(enc);
  DenseMatrix g;
  grads.head = mlp_backprop(enc.head, cache.head, upstream, enc.convs.empty() ? nullptr : &g);
  const Index batch = upstream.cols();
  for (std::size_t k = enc.convs.size(); k-- > 0;) {
    const ConvLayer& c = enc.convs[k];
    const Index len = cache.in_lengths[k];
    const Index out_len = c.output_length(len);
    DenseMatrix gz(c.out_channels, out_len * batch);
    for (Index b = 0; b < batch; ++b)
      for (Index o = 0; o < out_len; ++o)
        for (Index ch = 0; ch < c.out_channels; ++ch)
          gz(ch, b * out_len + o) =
              g(o * c.out_channels + ch, b) * detail::kEncoderActivation.derivative(cache.preact[k](ch, b * out_len + o));
    grads.convs[k].weight.noalias() = gz * cache.patches[k].transpose();
    grads.convs[k].bias = gz.rowwise().sum();
    if (k == 0) break;
    DenseMatrix gp(c.kernel * c.in_channels, out_len * batch);
    gp.noalias() = c.weight.transpose() * gz;
    DenseMatrix gin = DenseMatrix::Zero(len * c.in_channels, batch);
    const Index patch = c.kernel * c.in_channels;
    for (Index b = 0; b < batch; ++b)
      for (Index o = 0; o < out_len; ++o) gin.col(b).segment(o * c.stride * c.in_channels, patch) += gp.col(b * out_len + o);
    g = std::move(gin);
  }
  return grads;
}

/// Joint trainable state of decoder and encoder.
struct ManifoldParams {
  MlpParams decoder;
  EncoderNet encoder;
};

template <class F, class First, class... Rest>
  requires(std::same_as<std::remove_const_t<First>, ManifoldParams> &&
           (std::same_as<std::remove_const_t<Rest>, ManifoldParams> && ...))
void zip_tensors(F&& f, First& first, Rest&... rest) {
  zip_tensors(f, first.decoder, rest.decoder...);
  zip_tensors(f, first.encoder, rest.encoder...);
}

inline ManifoldParams zeros_like(const ManifoldParams& p) { return {zeros_like(p.decoder), zeros_like(p.encoder)}; }

/// Decoder outputs (normalized units) for every node of `coords` (P x m, normalized)
/// at latent q; returns P*d values node-major.
inline Vector decode_nodes(const DecoderNet& dec, const DenseMatrix& coords, const Eigen::Ref<const Vector>& q) {
  const Index p = coords.rows();
  DenseMatrix in(dec.m + dec.r, p);
  in.topRows(dec.m) = coords.transpose();
  in.bottomRows(dec.r) = q.replicate(1, p);
  DenseMatrix out = mlp_forward_batch(dec.mlp, in);
  return Eigen::Map<Vector>(out.data(), out.size());
}

}  // namespace crom
