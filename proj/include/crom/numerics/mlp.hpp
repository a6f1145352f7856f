#pragma once

#include <cmath>
#include <concepts>
#include <random>
#include <string>
#include <vector>

#include "crom/numerics/dense.hpp"

namespace crom {

enum class ActivationKind { Elu, Siren };

inline std::string to_string(ActivationKind k) { return k == ActivationKind::Elu ? "elu" : "siren"; }

inline ActivationKind activation_from_string(const std::string& s) {
  if (s == "elu") return ActivationKind::Elu;
  if (s == "siren") return ActivationKind::Siren;
  throw ContractViolation("unknown activation '" + s + "'");
}

/// Hidden-layer nonlinearity. The output layer is always linear.
struct Activation {
  ActivationKind kind = ActivationKind::Elu;
  double omega0 = 30.0;    // SIREN frequency multiplier: y = sin(omega0 * z)
  double elu_alpha = 1.0;  // only alpha == 1 is continuously differentiable

  bool differentiable() const { return kind == ActivationKind::Siren || elu_alpha == 1.0; }

  double value(double z) const {
    if (kind == ActivationKind::Siren) return std::sin(omega0 * z);
    return z > 0.0 ? z : elu_alpha * std::expm1(z);
  }
  double derivative(double z) const {
    if (kind == ActivationKind::Siren) return omega0 * std::cos(omega0 * z);
    return z > 0.0 ? 1.0 : elu_alpha * std::exp(z);
  }
};

struct Layer {
  DenseMatrix weight;  // out x in
  Vector bias;         // out
};

struct MlpParams {
  std::vector<Layer> layers;
  Activation activation;

  Index in_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  Index out_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }
};

/// Applies f to matching tensors of several identically shaped parameter packs.
template <class F, class First, class... Rest>
  requires(std::same_as<std::remove_const_t<First>, MlpParams> &&
           (std::same_as<std::remove_const_t<Rest>, MlpParams> && ...))
void zip_tensors(F&& f, First& first, Rest&... rest) {
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    f(first.layers[l].weight, rest.layers[l].weight...);
    f(first.layers[l].bias, rest.layers[l].bias...);
  }
}

inline MlpParams zeros_like(const MlpParams& p) {
  MlpParams z = p;
  zip_tensors([](auto& t) { t.setZero(); }, z);
  return z;
}

/// Builds an MLP with the given hidden widths and a linear output layer.
///
/// ELU layers use Xavier-uniform weights and zero biases. SIREN layers follow the
/// sinusoidal-network scheme: first layer U(-1/in, 1/in), later layers
/// U(-sqrt(6/in)/omega0, sqrt(6/in)/omega0), biases U(-1/sqrt(in), 1/sqrt(in)).
inline MlpParams make_mlp(Index in_dim, const std::vector<Index>& hidden, Index out_dim,
                          Activation act, std::mt19937_64& rng) {
  CROM_EXPECT(in_dim > 0 && out_dim > 0, "make_mlp: dimensions must be positive");
  MlpParams p;
  p.activation = act;
  std::vector<Index> dims{in_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const Index fan_in = dims[l], fan_out = dims[l + 1];
    double wbound = 0.0, bbound = 0.0;
    if (act.kind == ActivationKind::Elu) {
      wbound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    } else {
      wbound = l == 0 ? 1.0 / static_cast<double>(fan_in)
                      : std::sqrt(6.0 / static_cast<double>(fan_in)) / act.omega0;
      bbound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    }
    std::uniform_real_distribution<double> wdist(-wbound, wbound);
    Layer layer{DenseMatrix(fan_out, fan_in), Vector::Zero(fan_out)};
    for (Index j = 0; j < fan_in; ++j)
      for (Index i = 0; i < fan_out; ++i) layer.weight(i, j) = wdist(rng);
    if (bbound > 0.0) {
      std::uniform_real_distribution<double> bdist(-bbound, bbound);
      for (Index i = 0; i < fan_out; ++i) layer.bias(i) = bdist(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

/// Decoder topology: (m + r) inputs, five hidden layers of width beta * d, d outputs.
inline MlpParams make_decoder_mlp(Index m, Index r, Index d, Index beta, Activation act,
                                  std::mt19937_64& rng) {
  CROM_EXPECT(beta >= 1 && r >= 1, "decoder requires beta >= 1 and r >= 1");
  return make_mlp(m + r, std::vector<Index>(5, beta * d), d, act, rng);
}

namespace detail {

// Single forward path shared by mlp_forward and mlp_forward_with_jacobian, so the
// two return bit-identical values. `jac` (if given) carries d(y)/d(seed) along.
inline Vector forward_point(const MlpParams& p, const Eigen::Ref<const Vector>& x, DenseMatrix* jac) {
  CROM_EXPECT(!p.layers.empty(), "mlp: empty network");
  CROM_EXPECT(x.size() == p.in_dim(), "mlp: input dimension mismatch");
  Vector y = x;
  const std::size_t last = p.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    const Layer& layer = p.layers[l];
    Vector z = layer.weight * y + layer.bias;
    if (jac) *jac = layer.weight * (*jac);
    if (l == last) {
      y = std::move(z);
      break;
    }
    y.resize(z.size());
    for (Index i = 0; i < z.size(); ++i) {
      y(i) = p.activation.value(z(i));
      if (jac) jac->row(i) *= p.activation.derivative(z(i));
    }
  }
  return y;
}

}  // namespace detail

inline Vector mlp_forward(const MlpParams& p, const Eigen::Ref<const Vector>& x) {
  return detail::forward_point(p, x, nullptr);
}

struct ValueJacobian {
  Vector value;
  DenseMatrix jacobian;  // out_dim x seed columns
};

/// Value and Jacobian in one pass via the running chain rule (forward mode).
///
/// `seed` selects the input directions: the returned jacobian is d(out)/d(in) * seed.
/// Passing the identity gives the full out x in Jacobian.
inline ValueJacobian mlp_forward_with_jacobian(const MlpParams& p, const Eigen::Ref<const Vector>& x,
                                               const Eigen::Ref<const DenseMatrix>& seed) {
  if (!p.activation.differentiable())
    throw Unsupported("mlp_forward_with_jacobian: activation is not continuously differentiable");
  CROM_EXPECT(seed.rows() == p.in_dim(), "mlp_forward_with_jacobian: seed rows must equal in_dim");
  ValueJacobian out;
  out.jacobian = seed;
  out.value = detail::forward_point(p, x, &out.jacobian);
  return out;
}

inline ValueJacobian mlp_forward_with_jacobian(const MlpParams& p, const Eigen::Ref<const Vector>& x) {
  return mlp_forward_with_jacobian(p, x, DenseMatrix::Identity(p.in_dim(), p.in_dim()));
}

/// Activations kept from a batched forward pass for backprop.
struct MlpCache {
  DenseMatrix input;                    // in x N
  std::vector<DenseMatrix> preact;      // per layer, out_l x N
  std::vector<DenseMatrix> activated;   // per hidden layer, out_l x N
};

/// Batched forward over the columns of `x` (in x N).
inline DenseMatrix mlp_forward_batch(const MlpParams& p, const Eigen::Ref<const DenseMatrix>& x,
                                     MlpCache* cache = nullptr) {
  CROM_EXPECT(!p.layers.empty(), "mlp: empty network");
  CROM_EXPECT(x.rows() == p.in_dim(), "mlp_forward_batch: input dimension mismatch");
  if (cache) {
    cache->input = x;
    cache->preact.clear();
    cache->activated.clear();
  }
  DenseMatrix y = x;
  const std::size_t last = p.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    DenseMatrix z(p.layers[l].weight.rows(), y.cols());
    z.noalias() = p.layers[l].weight * y;
    z.colwise() += p.layers[l].bias;
    if (l == last) {
      if (cache) cache->preact.push_back(z);
      return z;
    }
    const Activation act = p.activation;
    y = z.unaryExpr([act](double v) { return act.value(v); });
    if (cache) {
      cache->preact.push_back(std::move(z));
      cache->activated.push_back(y);
    }
  }
  return y;
}

/// Gradients of a batch-summed loss with respect to every weight and bias, given
/// the upstream gradient dL/d(output) (out x N) and a cache from mlp_forward_batch.
/// If `input_grad` is non-null it receives dL/d(input) (in x N).
inline MlpParams mlp_backprop(const MlpParams& p, const MlpCache& cache,
                              const Eigen::Ref<const DenseMatrix>& upstream,
                              DenseMatrix* input_grad = nullptr) {
  CROM_EXPECT(cache.preact.size() == p.layers.size(), "mlp_backprop: cache does not match network");
  CROM_EXPECT(upstream.rows() == p.out_dim() && upstream.cols() == cache.input.cols(),
              "mlp_backprop: upstream gradient shape mismatch");
  MlpParams grads = zeros_like(p);
  DenseMatrix g = upstream;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const DenseMatrix& below = l == 0 ? cache.input : cache.activated[l - 1];
    grads.layers[l].weight.noalias() = g * below.transpose();
    grads.layers[l].bias = g.rowwise().sum();
    if (l == 0 && !input_grad) break;
    DenseMatrix gb(p.layers[l].weight.cols(), g.cols());
    gb.noalias() = p.layers[l].weight.transpose() * g;
    if (l == 0) {
      *input_grad = std::move(gb);
      break;
    }
    const Activation act = p.activation;
    g = gb.cwiseProduct(cache.preact[l - 1].unaryExpr([act](double v) { return act.derivative(v); }));
  }
  return grads;
}

inline MlpParams mlp_backprop(const MlpParams& p, const Eigen::Ref<const DenseMatrix>& inputs,
                              const Eigen::Ref<const DenseMatrix>& upstream,
                              DenseMatrix* input_grad = nullptr) {
  CROM_EXPECT(inputs.cols() > 0, "mlp_backprop: empty batch");
  MlpCache cache;
  mlp_forward_batch(p, inputs, &cache);
  return mlp_backprop(p, cache, upstream, input_grad);
}

struct BatchGradient {
  DenseMatrix value;     // 1 x N
  DenseMatrix gradient;  // in x N, d(out)/d(in) per column
};

/// Values and input gradients of a scalar-output network over a batch, by one
/// batched reverse sweep. Cheaper than forward mode when in_dim is large.
inline BatchGradient mlp_value_and_input_gradient(const MlpParams& p, const Eigen::Ref<const DenseMatrix>& x) {
  CROM_EXPECT(p.out_dim() == 1, "mlp_value_and_input_gradient: network must have a scalar output");
  if (!p.activation.differentiable())
    throw Unsupported("mlp_value_and_input_gradient: activation is not continuously differentiable");
  MlpCache cache;
  BatchGradient out;
  out.value = mlp_forward_batch(p, x, &cache);
  DenseMatrix g = DenseMatrix::Ones(1, x.cols());
  const Activation act = p.activation;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    DenseMatrix gb(p.layers[l].weight.cols(), g.cols());
    gb.noalias() = p.layers[l].weight.transpose() * g;
    if (l == 0) {
      out.gradient = std::move(gb);
      break;
    }
    g = gb.cwiseProduct(cache.preact[l - 1].unaryExpr([act](double v) { return act.derivative(v); }));
  }
  return out;
}

}  // namespace crom
