#pragma once

#include <cmath>
#include <cstdint>

#include "crom/numerics/mlp.hpp"

namespace crom {

/// Adam moments for any parameter pack that supports zip_tensors / zeros_like.
template <class Params>
struct AdamState {
  Params first_moment;
  Params second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-4;

  AdamState() = default;
  AdamState(const Params& like, double lr)
      : first_moment(zeros_like(like)), second_moment(zeros_like(like)), learning_rate(lr) {}
};

/// One bias-corrected Adam update of `params` in place.
template <class Params>
void adam_step(AdamState<Params>& state, Params& params, const Params& grads) {
  bool finite = true;
  zip_tensors([&](const auto& g) { finite = finite && g.allFinite(); }, grads);
  if (!finite) throw TrainingDivergence("adam_step: non-finite gradient");

  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2, eps = state.epsilon;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = state.learning_rate;
  zip_tensors(
      [&](auto& p, auto& m, auto& v, const auto& g) {
        m.array() = b1 * m.array() + (1.0 - b1) * g.array();
        v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      },
      params, state.first_moment, state.second_moment, grads);
}

}  // namespace crom
