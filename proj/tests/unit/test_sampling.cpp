#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "crom/baselines/pod.hpp"
#include "crom/experiment/setups.hpp"
#include "crom/sampling/greedy.hpp"

using namespace crom;

namespace {

struct Fixture {
  TrajectoryDataset train;
  PodBasis basis;
  std::vector<Vector> q0;
};

// A cheap linear stand-in for the decoder: POD of a small heat dataset.
Fixture heat_fixture(Index trajectories = 3, Index r = 4) {
  const ProblemSetup s = thermo_setup(41, 20);
  std::vector<std::vector<double>> params(s.train_params.begin(), s.train_params.begin() + trajectories);
  Fixture f{generate_trajectories(s.spec, s.initial, params), {}, {}};
  f.basis = pod_fit(f.train, r);
  for (const auto& t : f.train.trajectories) f.q0.push_back(pod_project(f.basis, t.fields.col(0)));
  return f;
}

}  // namespace

TEST(Metric, MeanPlusMax) {
  EXPECT_DOUBLE_EQ(residual_metric((Vector(3) << 1, 2, 3).finished()), 5.0);
  EXPECT_EQ(residual_metric(Vector::Zero(4)), 0.0);
  EXPECT_TRUE(std::isinf(residual_metric((Vector(2) << 1, std::numeric_limits<double>::infinity()).finished())));
  EXPECT_THROW(residual_metric(Vector()), ContractViolation);
}

TEST(Baseline, UniformStride) {
  const DenseMatrix grid = DenseMatrix::Random(5, 1);
  EXPECT_EQ(baseline_samples(BaselineKind::Uniform, 3, grid).indices, (std::vector<Index>{0, 2, 4}));
  EXPECT_EQ(baseline_samples(BaselineKind::Uniform, 5, grid).indices, (std::vector<Index>{0, 1, 2, 3, 4}));
  const SampleSet s = baseline_samples(BaselineKind::Uniform, 3, grid);
  EXPECT_EQ(s.coords.row(1), grid.row(2));
}

TEST(Baseline, RandomReproducibleAndUnique) {
  const DenseMatrix grid = DenseMatrix::Zero(100, 1);
  const auto a = baseline_samples(BaselineKind::Random, 20, grid, 1, 1, 7);
  const auto b = baseline_samples(BaselineKind::Random, 20, grid, 1, 1, 7);
  const auto c = baseline_samples(BaselineKind::Random, 20, grid, 1, 1, 8);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_NE(a.indices, c.indices);
  EXPECT_EQ(std::set<Index>(a.indices.begin(), a.indices.end()).size(), 20u);
}

TEST(Baseline, WellPosednessAndBounds) {
  const DenseMatrix grid = DenseMatrix::Zero(50, 1);
  EXPECT_THROW(baseline_samples(BaselineKind::Uniform, 3, grid, 4), WellPosednessError);
  EXPECT_NO_THROW(baseline_samples(BaselineKind::Uniform, 2, grid, 4, 2));
  EXPECT_THROW(baseline_samples(BaselineKind::Uniform, 51, grid), ContractViolation);
}

TEST(Baseline, ImageLattice) {
  const PdeSpec s = image_setup(16, 1).spec;
  const SampleSet m = uniform_grid_samples(4, 16, 16, s.coords());
  EXPECT_EQ(m.size(), 16);
  EXPECT_EQ(m.indices.front(), 2 * 16 + 2);
}

TEST(LargestResiduals, OrderTiesAndExclusions) {
  const Vector res = (Vector(6) << 1, 3, 3, 0, 5, 3).finished();
  EXPECT_EQ(largest_residuals(res, {}, 3), (std::vector<Index>{4, 1, 2}));
  EXPECT_EQ(largest_residuals(res, {4, 1}, 2), (std::vector<Index>{2, 5}));
  EXPECT_EQ(largest_residuals(res, {}, 10).size(), 6u);
}

TEST(Residual, SingleTrajectoryIsPointwiseFinalError) {
  const Fixture f = heat_fixture(1);
  const PodField field(f.basis);
  const SampleSet m = SampleSet::from_indices({3, 11, 20, 29, 37}, f.train.coords);
  const RomSettings rom;
  const ResidualResult r = calculate_residual(field, f.train, f.q0, m, rom);

  const Trajectory& t = f.train.trajectories[0];
  RomStepper<PodField> st(field, StepContext(f.train.spec, t.params), m, rom.inversion);
  RomRunOptions opt;
  opt.steps = t.fields.cols() - 1;
  const Vector final = pod_reconstruct(f.basis, run_rom(st, f.q0[0], opt).latents.back().q);
  const Vector expect = (final - t.fields.col(opt.steps)).cwiseAbs();
  EXPECT_LT((r.res - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Residual, AllNodesOnExactBasisIsTiny) {
  // Full-rank POD reproduces every training snapshot, so sampling every node leaves
  // only the projection of the full-order step.
  const Fixture f = heat_fixture(1, 21);
  const SampleSet all = SampleSet::from_indices([] {
    std::vector<Index> v(41);
    std::iota(v.begin(), v.end(), Index{0});
    return v;
  }(), f.train.coords);
  const ResidualResult r = calculate_residual(PodField(f.basis), f.train, f.q0, all, RomSettings{});
  EXPECT_LT(residual_metric(r.res), 1e-8);
}

TEST(Greedy, InfiniteTargetKeepsInitialSample) {
  const Fixture f = heat_fixture();
  GreedyConfig cfg;
  cfg.target_accuracy = std::numeric_limits<double>::infinity();
  cfg.seed = 3;
  const GreedyResult g = greedy_select(PodField(f.basis), f.train, f.q0, cfg);
  EXPECT_EQ(g.samples.size(), 1);
  EXPECT_TRUE(g.converged);
  ASSERT_EQ(g.trace.size(), 1u);
  EXPECT_EQ(g.trace[0].added, g.samples.indices[0]);
}

TEST(Greedy, TraceAudit) {
  const Fixture f = heat_fixture();
  const PodBasis before = f.basis;
  GreedyConfig cfg;
  cfg.max_samples = 9;
  cfg.candidates = 5;
  cfg.seed = 1;
  const PodField field(f.basis);
  const GreedyResult g = greedy_select(field, f.train, f.q0, cfg);
  ASSERT_EQ(g.samples.size(), 9);
  ASSERT_EQ(g.trace.size(), 9u);
  EXPECT_EQ(std::set<Index>(g.samples.indices.begin(), g.samples.indices.end()).size(), 9u);
  for (std::size_t k = 1; k < g.trace.size(); ++k) {
    const auto& it = g.trace[k];
    EXPECT_EQ(it.size, static_cast<Index>(k + 1));
    ASSERT_FALSE(it.candidates.empty());
    for (const auto& c : it.candidates) EXPECT_LE(it.metric, c.metric);
    EXPECT_TRUE(std::any_of(it.candidates.begin(), it.candidates.end(),
                            [&](const GreedyCandidate& c) { return c.index == it.added && c.metric == it.metric; }));
  }
  EXPECT_LE(g.trace.back().metric, g.trace.front().metric);
  EXPECT_EQ(field.basis().basis, before.basis);  // pre-computation only
}

TEST(Greedy, DeterministicForSeed) {
  const Fixture f = heat_fixture();
  GreedyConfig cfg;
  cfg.max_samples = 6;
  cfg.seed = 11;
  const PodField field(f.basis);
  const auto a = greedy_select(field, f.train, f.q0, cfg), b = greedy_select(field, f.train, f.q0, cfg);
  EXPECT_EQ(a.samples.indices, b.samples.indices);
  cfg.threads = 3;
  EXPECT_EQ(greedy_select(field, f.train, f.q0, cfg).samples.indices, a.samples.indices);
}

TEST(Greedy, ConfigValidation) {
  GreedyConfig cfg;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg.max_samples = 3;
  cfg.candidates = 0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
}

TEST(SamplesFile, RoundTrip) {
  const Fixture f = heat_fixture();
  GreedyConfig cfg;
  cfg.max_samples = 4;
  const GreedyResult g = greedy_select(PodField(f.basis), f.train, f.q0, cfg);
  const auto path = std::filesystem::temp_directory_path() / "crom_samples_test.json";
  write_samples(path, g.samples, &g, {{"candidates", 10}});
  EXPECT_EQ(read_samples(path, f.train.coords).indices, g.samples.indices);
  const json j = read_json(path);
  EXPECT_EQ(j["trace"].size(), 4u);
  EXPECT_EQ(j["seed"], 0);
  EXPECT_DOUBLE_EQ(j["coordinates"][0][0].get<double>(), g.samples.coords(0, 0));
  std::filesystem::remove(path);
}
