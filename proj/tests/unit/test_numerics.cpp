#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "crom/numerics/adam.hpp"
#include "crom/numerics/dense.hpp"
#include "crom/numerics/mlp.hpp"
#include "crom/numerics/serialize.hpp"

using namespace crom;

namespace {

MlpParams random_net(Index in, std::vector<Index> hidden, Index out, ActivationKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MlpParams p = make_mlp(in, hidden, out, Activation{kind}, rng);
  // Nonzero biases so every code path is exercised.
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& l : p.layers)
    for (Index i = 0; i < l.bias.size(); ++i) l.bias(i) = n(rng);
  return p;
}

// Straight-line evaluation with plain loops, independent of the library path.
std::vector<double> loop_forward(const MlpParams& p, std::vector<double> x) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    std::vector<double> y(static_cast<std::size_t>(L.weight.rows()));
    for (Index i = 0; i < L.weight.rows(); ++i) {
      double s = L.bias(i);
      for (Index j = 0; j < L.weight.cols(); ++j) s += L.weight(i, j) * x[static_cast<std::size_t>(j)];
      if (l + 1 < p.layers.size()) {
        if (p.activation.kind == ActivationKind::Elu) s = s > 0 ? s : std::exp(s) - 1.0;
        else s = std::sin(p.activation.omega0 * s);
      }
      y[static_cast<std::size_t>(i)] = s;
    }
    x = y;
  }
  return x;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST(Mlp, ZeroNetworkGivesZeros) {
  MlpParams p = zeros_like(random_net(3, {8, 8}, 2, ActivationKind::Elu, 1));
  const Vector y = mlp_forward(p, Vector::Constant(3, 0.7));
  EXPECT_EQ(y, Vector::Zero(2));
}

TEST(Mlp, EluIdentityOnPositiveInputs) {
  MlpParams p;
  p.layers.push_back({DenseMatrix::Identity(3, 3), Vector::Zero(3)});
  p.layers.push_back({DenseMatrix::Identity(3, 3), Vector::Zero(3)});
  const Vector x = (Vector(3) << 0.0, 0.5, 2.0).finished();
  EXPECT_EQ(mlp_forward(p, x), x);
}

TEST(Mlp, MatchesLoopOracle) {
  for (auto kind : {ActivationKind::Elu, ActivationKind::Siren}) {
    const MlpParams p = random_net(4, {16, 16}, 3, kind, 42);
    const std::vector<double> x{0.3, -0.2, 0.9, -1.1};
    const Vector y = mlp_forward(p, Eigen::Map<const Vector>(x.data(), 4));
    const auto ref = loop_forward(p, x);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(y(i), ref[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(Mlp, DimensionMismatchThrows) {
  const MlpParams p = random_net(3, {4}, 1, ActivationKind::Elu, 1);
  EXPECT_THROW(mlp_forward(p, Vector::Zero(2)), ContractViolation);
  EXPECT_THROW(mlp_forward_batch(p, DenseMatrix::Zero(4, 2)), ContractViolation);
}

TEST(Mlp, BatchMatchesPointwise) {
  const MlpParams p = random_net(3, {10, 10}, 2, ActivationKind::Siren, 9);
  DenseMatrix x = DenseMatrix::Random(3, 7);
  const DenseMatrix y = mlp_forward_batch(p, x);
  for (Index c = 0; c < 7; ++c) EXPECT_LT((y.col(c) - mlp_forward(p, x.col(c))).norm(), 1e-13);
}

TEST(Jacobian, LinearNetworkIsWeight) {
  MlpParams p;
  p.layers.push_back({DenseMatrix::Random(2, 3), Vector::Random(2)});
  const auto vj = mlp_forward_with_jacobian(p, Vector::Random(3));
  EXPECT_EQ(vj.jacobian, p.layers[0].weight);
}

TEST(Jacobian, ZeroNetworkHasZeroJacobian) {
  const MlpParams p = zeros_like(random_net(3, {5, 5}, 2, ActivationKind::Elu, 3));
  EXPECT_EQ(mlp_forward_with_jacobian(p, Vector::Random(3)).jacobian, DenseMatrix::Zero(2, 3));
}

TEST(Jacobian, ValueBitIdenticalToForward) {
  for (auto kind : {ActivationKind::Elu, ActivationKind::Siren}) {
    const MlpParams p = random_net(5, {20, 20, 20}, 2, kind, 11);
    const Vector x = Vector::Random(5);
    const auto vj = mlp_forward_with_jacobian(p, x);
    const Vector y = mlp_forward(p, x);
    ASSERT_EQ(vj.value.size(), y.size());
    for (Index i = 0; i < y.size(); ++i) EXPECT_EQ(vj.value(i), y(i));
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto kind = seed % 2 ? ActivationKind::Siren : ActivationKind::Elu;
    const MlpParams p = random_net(1 + 4, std::vector<Index>(5, 12), 1, kind, seed);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Vector x(5);
    for (Index i = 0; i < 5; ++i) x(i) = u(rng);
    const auto vj = mlp_forward_with_jacobian(p, x);
    const double h = 1e-6;
    for (Index j = 0; j < 5; ++j) {
      Vector xp = x, xm = x;
      xp(j) += h, xm(j) -= h;
      const double fd = (mlp_forward(p, xp)(0) - mlp_forward(p, xm)(0)) / (2 * h);
      EXPECT_LT(rel_err(vj.jacobian(0, j), fd), 1e-5) << "seed " << seed << " input " << j;
    }
  }
}

TEST(Jacobian, SeededDirectionsSelectColumns) {
  const MlpParams p = random_net(4, {8, 8}, 2, ActivationKind::Elu, 5);
  const Vector x = Vector::Random(4);
  const DenseMatrix full = mlp_forward_with_jacobian(p, x).jacobian;
  const DenseMatrix seed = DenseMatrix::Identity(4, 4).rightCols(2);
  EXPECT_LT((mlp_forward_with_jacobian(p, x, seed).jacobian - full.rightCols(2)).norm(), 1e-14);
}

TEST(Jacobian, NonDifferentiableEluRejected) {
  MlpParams p = random_net(2, {3}, 1, ActivationKind::Elu, 1);
  p.activation.elu_alpha = 0.5;
  EXPECT_THROW(mlp_forward_with_jacobian(p, Vector::Zero(2)), Unsupported);
}

TEST(Jacobian, ReverseBatchMatchesForwardMode) {
  for (auto kind : {ActivationKind::Elu, ActivationKind::Siren}) {
    const MlpParams p = random_net(6, {16, 16, 16}, 1, kind, 21);
    const DenseMatrix x = DenseMatrix::Random(6, 9) * 0.5;
    const BatchGradient g = mlp_value_and_input_gradient(p, x);
    for (Index c = 0; c < 9; ++c) {
      const auto vj = mlp_forward_with_jacobian(p, x.col(c));
      EXPECT_NEAR(g.value(0, c), vj.value(0), 1e-13);
      EXPECT_LT((g.gradient.col(c) - vj.jacobian.row(0).transpose()).norm(), 1e-11);
    }
  }
}

TEST(Backprop, ZeroUpstreamGivesZeroGradients) {
  const MlpParams p = random_net(3, {6}, 2, ActivationKind::Elu, 2);
  const MlpParams g = mlp_backprop(p, DenseMatrix::Random(3, 4), DenseMatrix::Zero(2, 4));
  for (const auto& l : g.layers) {
    EXPECT_EQ(l.weight.norm(), 0.0);
    EXPECT_EQ(l.bias.norm(), 0.0);
  }
}

TEST(Backprop, SingleLinearLayerClosedForm) {
  MlpParams p;
  p.layers.push_back({DenseMatrix::Random(2, 3), Vector::Random(2)});
  const Vector x = Vector::Random(3), t = Vector::Random(2);
  const Vector resid = p.layers[0].weight * x + p.layers[0].bias - t;
  const MlpParams g = mlp_backprop(p, x, 2.0 * resid);
  EXPECT_LT((g.layers[0].weight - 2.0 * resid * x.transpose()).norm(), 1e-14);
  EXPECT_LT((g.layers[0].bias - 2.0 * resid).norm(), 1e-14);
}

TEST(Backprop, MatchesFiniteDifferencesOfLoss) {
  for (auto kind : {ActivationKind::Elu, ActivationKind::Siren}) {
    MlpParams p = random_net(3, {7, 7}, 2, kind, 8);
    const DenseMatrix x = DenseMatrix::Random(3, 5) * 0.5;
    const DenseMatrix t = DenseMatrix::Random(2, 5);
    auto loss = [&](const MlpParams& q) { return (mlp_forward_batch(q, x) - t).squaredNorm(); };
    const MlpParams g = mlp_backprop(p, x, 2.0 * (mlp_forward_batch(p, x) - t));
    const double h = 1e-6;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      for (Index k = 0; k < p.layers[l].weight.size(); ++k) {
        double& w = p.layers[l].weight.data()[k];
        const double w0 = w;
        w = w0 + h;
        const double lp = loss(p);
        w = w0 - h;
        const double lm = loss(p);
        w = w0;
        EXPECT_LT(rel_err(g.layers[l].weight.data()[k], (lp - lm) / (2 * h)), 1e-5);
      }
      for (Index k = 0; k < p.layers[l].bias.size(); ++k) {
        double& b = p.layers[l].bias(k);
        const double b0 = b;
        b = b0 + h;
        const double lp = loss(p);
        b = b0 - h;
        const double lm = loss(p);
        b = b0;
        EXPECT_LT(rel_err(g.layers[l].bias(k), (lp - lm) / (2 * h)), 1e-5);
      }
    }
  }
}

TEST(Backprop, ShapeMismatchThrows) {
  const MlpParams p = random_net(3, {4}, 2, ActivationKind::Elu, 1);
  EXPECT_THROW(mlp_backprop(p, DenseMatrix::Zero(3, 2), DenseMatrix::Zero(1, 2)), ContractViolation);
  EXPECT_THROW(mlp_backprop(p, DenseMatrix::Zero(3, 0), DenseMatrix::Zero(2, 0)), ContractViolation);
}

TEST(Adam, ZeroGradientKeepsParameters) {
  MlpParams p = random_net(2, {3}, 1, ActivationKind::Elu, 4);
  const MlpParams before = p;
  AdamState<MlpParams> st(p, 1e-3);
  adam_step(st, p, zeros_like(p));
  EXPECT_EQ(st.step, 1);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    EXPECT_EQ(p.layers[l].weight, before.layers[l].weight);
    EXPECT_EQ(st.first_moment.layers[l].weight.norm(), 0.0);
    EXPECT_EQ(st.second_moment.layers[l].weight.norm(), 0.0);
  }
}

TEST(Adam, FirstStepHandComputed) {
  MlpParams p;
  p.layers.push_back({DenseMatrix::Constant(1, 1, 1.0), Vector::Constant(1, 0.0)});
  MlpParams g = zeros_like(p);
  g.layers[0].weight(0, 0) = 0.3;
  g.layers[0].bias(0) = -2e-9;
  AdamState<MlpParams> st(p, 0.01);
  adam_step(st, p, g);
  // m_hat = g, v_hat = g^2  =>  update = lr * g / (|g| + eps)
  EXPECT_NEAR(p.layers[0].weight(0, 0), 1.0 - 0.01 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(p.layers[0].bias(0), 0.01 * 2e-9 / (2e-9 + 1e-8), 1e-15);
}

TEST(Adam, DescendsOnQuadratic) {
  MlpParams p;
  p.layers.push_back({DenseMatrix::Constant(1, 1, 2.0), Vector::Zero(1)});
  AdamState<MlpParams> st(p, 0.1);
  double prev = 4.0;
  for (int k = 0; k < 2; ++k) {
    MlpParams g = zeros_like(p);
    g.layers[0].weight(0, 0) = 2.0 * p.layers[0].weight(0, 0);
    adam_step(st, p, g);
    const double loss = std::pow(p.layers[0].weight(0, 0), 2);
    EXPECT_LT(loss, prev);
    prev = loss;
  }
}

TEST(Adam, NanGradientRaises) {
  MlpParams p = random_net(2, {3}, 1, ActivationKind::Elu, 4);
  MlpParams g = zeros_like(p);
  g.layers[1].bias(0) = std::nan("");
  AdamState<MlpParams> st(p, 1e-3);
  EXPECT_THROW(adam_step(st, p, g), TrainingDivergence);
}

TEST(Decoder, ParameterCountIndependentOfGrid) {
  std::mt19937_64 rng(0);
  const auto a = make_decoder_mlp(1, 16, 1, 32, Activation{}, rng);
  const auto b = make_decoder_mlp(1, 16, 1, 32, Activation{}, rng);
  // (m+r)->32, four 32->32, 32->1
  EXPECT_EQ(a.parameter_count(), 17 * 32 + 32 + 4 * (32 * 32 + 32) + 33);
  EXPECT_EQ(a.parameter_count(), b.parameter_count());
  EXPECT_EQ(a.layers.size(), 6u);
}

TEST(Normal, SolvesAndRegularizes) {
  DenseMatrix a = DenseMatrix::Random(6, 3);
  const Vector v = Vector::Random(3);
  const NormalSolve s = solve_normal_equations(a, a * v);
  EXPECT_FALSE(s.regularized);
  EXPECT_LT((s.x - v).norm(), 1e-10);
  a.col(2) = a.col(1);
  const NormalSolve r = solve_normal_equations(a, a * v);
  EXPECT_TRUE(r.regularized);
  EXPECT_TRUE(r.x.allFinite());
}

TEST(Serialize, BlobRoundTripBitExact) {
  const std::vector<double> v{1.0, -0.0, 1e-308, 3.141592653589793, std::numeric_limits<double>::max()};
  const auto path = std::filesystem::temp_directory_path() / "crom_blob_test.f64";
  write_f64_blob(path, v);
  const auto back = read_f64_blob(path);
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(std::memcmp(&back[i], &v[i], sizeof(double)), 0);
  std::filesystem::remove(path);
}

TEST(Serialize, MlpManifestRoundTrip) {
  const MlpParams p = random_net(3, {5, 5}, 2, ActivationKind::Siren, 13);
  std::vector<double> flat;
  append_flat(p, flat);
  std::size_t off = 0;
  const MlpParams q = mlp_from_manifest(mlp_manifest(p), flat, off);
  EXPECT_EQ(off, flat.size());
  ASSERT_EQ(q.layers.size(), p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    EXPECT_EQ(q.layers[l].weight, p.layers[l].weight);
    EXPECT_EQ(q.layers[l].bias, p.layers[l].bias);
  }
  EXPECT_EQ(q.activation.kind, ActivationKind::Siren);
}
