#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <filesystem>

#include "crom/baselines/pod.hpp"
#include "crom/experiment/setups.hpp"

using namespace crom;

namespace {

DenseMatrix centered(const DenseMatrix& x) { return x.colwise() - x.rowwise().mean(); }

// Tail from two-sided Jacobi singular values, a different algorithm from the one in pod_fit.
double tail_norm(const DenseMatrix& c, Index r) {
  const Vector sv = Eigen::JacobiSVD<DenseMatrix>(c).singularValues();
  return sv.tail(sv.size() - r).norm();
}

}  // namespace

TEST(Pod, OrthonormalColumns) {
  std::srand(1);
  const PodBasis b = pod_fit(DenseMatrix::Random(60, 25), 10);
  EXPECT_LT((b.basis.transpose() * b.basis - DenseMatrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
  for (Index k = 1; k < b.singular_values.size(); ++k) EXPECT_LE(b.singular_values(k), b.singular_values(k - 1));
}

TEST(Pod, RankOneDataIsExact) {
  const Vector u = Vector::LinSpaced(30, 0.0, 1.0).array().sin();
  DenseMatrix x(30, 8);
  for (Index k = 0; k < 8; ++k) x.col(k) = (0.3 * static_cast<double>(k) - 1.0) * u + Vector::Constant(30, 2.0);
  const PodBasis b = pod_fit(x, 1);
  for (Index k = 0; k < 8; ++k)
    EXPECT_LT((pod_reconstruct(b, pod_project(b, x.col(k))) - x.col(k)).norm(), 1e-12);
}

TEST(Pod, EckartYoungResidual) {
  std::srand(2);
  for (auto [rows, cols] : {std::pair<Index, Index>{20, 8}, {80, 30}, {200, 50}, {50, 200}}) {
    const DenseMatrix x = DenseMatrix::Random(rows, cols);
    const DenseMatrix c = centered(x);
    for (Index r : {Index{1}, Index{3}, std::min(rows, cols) / 2, std::min(rows - 1, cols)}) {
      const PodBasis b = pod_fit(x, r);
      const double residual = (c - b.basis * (b.basis.transpose() * c)).norm();
      EXPECT_NEAR(residual, tail_norm(c, r), 1e-10) << rows << "x" << cols << " r=" << r;
    }
  }
}

TEST(Pod, ZeroLatentIsMean) {
  std::srand(3);
  const DenseMatrix x = DenseMatrix::Random(15, 6);
  const PodBasis b = pod_fit(x, 3);
  EXPECT_LT((pod_reconstruct(b, Vector::Zero(3)) - x.rowwise().mean()).norm(), 1e-15);
}

TEST(Pod, ProjectAfterReconstructIsIdentity) {
  std::srand(4);
  const PodBasis b = pod_fit(DenseMatrix::Random(40, 12), 5);
  for (int t = 0; t < 10; ++t) {
    const Vector q = Vector::Random(5);
    EXPECT_LT((pod_project(b, pod_reconstruct(b, q)) - q).norm(), 1e-12);
  }
}

TEST(Pod, RankAboveDataIsRejected) {
  EXPECT_THROW(pod_fit(DenseMatrix::Random(10, 4), 5), ContractViolation);
  EXPECT_THROW(pod_fit(DenseMatrix::Random(10, 4), 0), ContractViolation);
}

TEST(Pod, CompleteBasisReproducesFullOrder) {
  const ProblemSetup s = thermo_setup(20, 30);
  std::srand(5);
  const PodBasis b = pod_fit(DenseMatrix::Random(20, 40), 20);
  const StepContext ctx(s.spec, s.test_params[0]);
  const Vector f0 = Eigen::Map<const Vector>(s.initial.data(), 20);
  const PodRun run = pod_rom_run(b, ctx, f0, 30);
  const Trajectory ref = generate_trajectories(s.spec, s.initial, {s.test_params[0]}).trajectories[0];
  EXPECT_FALSE(run.diverged_at.has_value());
  EXPECT_LT((run.fields - ref.fields).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pod, LowRankLagsOnAdvection) {
  // One linear mode cannot carry a moving front.
  const ProblemSetup s = advection_setup(100, 100);
  const auto ds = generate_trajectories(s.spec, s.initial, s.train_params);
  const PodBasis b = pod_fit(ds, 1);
  const Trajectory& t = ds.trajectories[0];
  const PodRun run = pod_rom_run(b, StepContext(s.spec, t.params), t.fields.col(0), 100);
  EXPECT_GT((run.fields.col(100) - t.fields.col(100)).norm() / t.fields.col(100).norm(), 0.1);
}

TEST(Pod, DivergenceIsReported) {
  PdeSpec s;
  s.kind = PdeKind::Heat1D;
  s.counts = {21};
  s.dt = 40.0 * s.spacing(0) * s.spacing(0);
  std::srand(6);
  const PodBasis b = pod_fit(DenseMatrix::Random(21, 30), 21);
  const PodRun run = pod_rom_run(b, StepContext(s, {1, 1, 1}), Vector::Random(21), 300);
  ASSERT_TRUE(run.diverged_at.has_value());
  EXPECT_EQ(run.fields.cols(), *run.diverged_at + 1);
}

TEST(Pod, StorageLinearInGridSize) {
  for (Index r : {1, 4}) {
    std::vector<Index> sizes;
    for (Index p : {50, 100, 200}) sizes.push_back(pod_fit(DenseMatrix::Random(p, 10), r).stored_entries());
    EXPECT_EQ(sizes[0], 50 * (r + 1));
    EXPECT_EQ(sizes[1] - sizes[0], 50 * (r + 1));
    EXPECT_EQ(sizes[2] - sizes[1], 100 * (r + 1));
  }
}

TEST(PodIo, RoundTripBitExact) {
  std::srand(7);
  const PodBasis b = pod_fit(DenseMatrix::Random(33, 9), 4);
  const auto dir = std::filesystem::temp_directory_path() / "crom_pod_test";
  std::filesystem::remove_all(dir);
  write_pod_basis(dir, b);
  const PodBasis c = read_pod_basis(dir);
  EXPECT_EQ(c.basis, b.basis);
  EXPECT_EQ(c.mean, b.mean);
  EXPECT_EQ(c.spectrum, b.spectrum);
  EXPECT_EQ(c.singular_values, b.singular_values);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_pod_basis(dir), IoError);
}
