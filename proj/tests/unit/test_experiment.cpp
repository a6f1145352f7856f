#include <gtest/gtest.h>

#include <filesystem>

#include "crom/experiment/analysis.hpp"
#include "crom/experiment/pipeline.hpp"

using namespace crom;

namespace {

ExperimentConfig tiny_thermo(const fs::path& out, Index steps = 6) {
  ExperimentConfig c = desk_config(ExperimentKind::Thermo);
  c.points = 41;
  c.steps = steps;
  c.train.r = 2, c.train.beta = 3, c.train.epochs_per_stage = 2, c.train.points_per_snapshot = 0;
  c.samples = 4;
  c.out = out.string();
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Reduction, TableFactors) {
  EXPECT_EQ(reduction_factors(501, 1, 16, 22).dimension_rounded, 31);
  EXPECT_EQ(reduction_factors(501, 1, 16, 22).samples_rounded, 23);
  EXPECT_EQ(reduction_factors(65536, 1, 16, 63).dimension_rounded, 4096);
  EXPECT_EQ(reduction_factors(65536, 1, 16, 63).samples_rounded, 1040);
  EXPECT_EQ(reduction_factors(100, 1, 1, 100).dimension_rounded, 100);
  EXPECT_EQ(reduction_factors(100, 1, 1, 100).samples_rounded, 0);
  EXPECT_EQ(reduction_factors(256, 1, 2, 256).dimension_rounded, 128);
}

TEST(Config, PresetsValidate) {
  for (auto k : {ExperimentKind::Thermo, ExperimentKind::Image, ExperimentKind::Advection, ExperimentKind::Burgers}) {
    EXPECT_NO_THROW(desk_config(k).validate());
    EXPECT_NO_THROW(paper_config(to_string(k)).validate());
  }
  EXPECT_EQ(paper_config("image").problem().spec.point_count(), 65536);
  EXPECT_EQ(paper_config("thermo").train.beta, 128);
  EXPECT_EQ(paper_config("thermo").train.epochs_per_stage, 30000);
}

TEST(Config, UnknownKeyRejected) {
  const ExperimentConfig base = desk_config(ExperimentKind::Thermo);
  EXPECT_THROW(merge_config(base, json{{"smaples", 3}}), ContractViolation);
  EXPECT_THROW(merge_config(base, json{{"train", {{"betta", 3}}}}), ContractViolation);
  EXPECT_THROW(merge_config(base, json{{"inversion", {{"mode", "newton"}}}}), ContractViolation);
}

TEST(Config, MergeRoundTrip) {
  ExperimentConfig c = desk_config(ExperimentKind::Advection);
  c.train.beta = 7;
  c.seed = 42;
  c.dt_multipliers = {1.0, 3.0};
  const ExperimentConfig back = merge_config(desk_config(ExperimentKind::Advection), to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, WellPosednessAtValidation) {
  ExperimentConfig c = desk_config(ExperimentKind::Thermo);
  c.sampling = SamplingMode::Uniform;
  c.samples = 15;
  EXPECT_THROW(c.validate(), WellPosednessError);
  c.samples = 16;
  EXPECT_NO_THROW(c.validate());
}

TEST(Analysis, PcaOfConstantTrajectory) {
  const DenseMatrix q = Vector::Constant(3, 0.7).replicate(1, 5);
  const LatentPca p = latent_pca(q);
  EXPECT_EQ(p.scores.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(p.variance.maxCoeff(), 0.0);
}

TEST(Analysis, PcaOfLineHasOneComponent) {
  const Vector dir = (Vector(3) << 1, -2, 0.5).finished();
  DenseMatrix q(3, 9);
  for (Index k = 0; k < 9; ++k) q.col(k) = Vector::Constant(3, 1.0) + 0.3 * static_cast<double>(k) * dir;
  const LatentPca p = latent_pca(q);
  EXPECT_LT(p.scores.col(1).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(std::abs(p.components.col(0).dot(dir.normalized())), 1.0, 1e-12);
  // Scores along a line are evenly spaced.
  for (Index k = 2; k < 9; ++k)
    EXPECT_NEAR(p.scores(k, 0) - p.scores(k - 1, 0), p.scores(1, 0) - p.scores(0, 0), 1e-12);
}

TEST(Analysis, PcaScalarLatentIsDegenerate) {
  const DenseMatrix q = Vector::LinSpaced(6, 0, 1).transpose();
  const LatentPca p = latent_pca(q);
  EXPECT_TRUE(p.degenerate);
  EXPECT_EQ(p.scores.col(1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(latent_pca(DenseMatrix::Zero(2, 1)), ContractViolation);
}

TEST(Analysis, InterpolationEndpoints) {
  const Vector a = Vector::Random(4), b = Vector::Random(4);
  const DenseMatrix path = latent_interpolate(a, b, {0.0, 0.25, 1.0});
  EXPECT_EQ(path.col(0), a);
  EXPECT_EQ(path.col(2), b);
  EXPECT_LT((path.col(1) - (0.75 * a + 0.25 * b)).norm(), 1e-15);
}

TEST(Errors, ShortRunReportsDivergence) {
  const DenseMatrix truth = DenseMatrix::Ones(3, 5);
  const TrajectoryErrors e = trajectory_errors(truth.leftCols(2), truth);
  ASSERT_TRUE(e.diverged_at.has_value());
  EXPECT_EQ(*e.diverged_at, 2);
  EXPECT_TRUE(std::isinf(e.final.relative_l2));
  const TrajectoryErrors ok = trajectory_errors(truth, truth);
  EXPECT_EQ(ok.final.relative_l2, 0.0);
  EXPECT_EQ(ok.relative_l2.size(), 5u);
}

TEST(Sweep, HeatCflLimit) {
  PdeSpec s;
  s.kind = PdeKind::Heat1D;
  s.counts = {11};
  EXPECT_DOUBLE_EQ(heat_cfl_limit(s, {0.5, 1.0, 0.25}), 0.5 * 0.01);
}

TEST(Sweep, Boundedness) {
  DenseMatrix f = DenseMatrix::Ones(2, 4);
  EXPECT_TRUE(bounded(f, 4));
  EXPECT_FALSE(bounded(f, 5));
  f(0, 3) = 11.0;
  EXPECT_FALSE(bounded(f, 4));
  f(0, 3) = std::nan("");
  EXPECT_FALSE(bounded(f, 4));
}

TEST(Pipeline, ZeroStepsReport) {
  const fs::path dir = fresh_dir("crom_pipe_zero");
  Pipeline pipe(tiny_thermo(dir, 0));
  const json rep = pipe.run();
  EXPECT_EQ(rep["status"], "ok");
  for (const auto& run : rep["runs"]) EXPECT_EQ(run["rom"]["relative_l2"].size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  fs::remove_all(dir);
}

TEST(Pipeline, ReportIsDeterministic) {
  auto run_once = [](const std::string& name) {
    const fs::path dir = fresh_dir(name);
    Pipeline pipe(tiny_thermo(dir));
    json rep = pipe.run();
    fs::remove_all(dir);
    return json{{"runs", rep["runs"]}, {"summary", rep["summary"]}, {"reduction", rep["reduction"]}};
  };
  EXPECT_EQ(run_once("crom_pipe_a"), run_once("crom_pipe_b"));
}

TEST(Pipeline, ReusesStoredArtifacts) {
  const fs::path dir = fresh_dir("crom_pipe_reuse");
  const ExperimentConfig c = tiny_thermo(dir);
  const json first = Pipeline(c).run();
  const json second = Pipeline(c).run();
  EXPECT_EQ(first["summary"], second["summary"]);
  ExperimentConfig wider = c;
  wider.train.beta = 4;
  EXPECT_THROW(Pipeline(wider).model(), ContractViolation);
  fs::remove_all(dir);
}
