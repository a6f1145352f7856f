#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "crom/experiment/setups.hpp"
#include "crom/manifold/train.hpp"
#include "crom/numerics/serialize.hpp"
#include "crom/rom/dynamics.hpp"

namespace crom {

enum class SamplingMode { Greedy, Uniform, Random, All };

inline std::string to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::Greedy: return "greedy";
    case SamplingMode::Uniform: return "uniform";
    case SamplingMode::Random: return "random";
    case SamplingMode::All: return "all";
  }
  return "?";
}

inline SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "greedy") return SamplingMode::Greedy;
  if (s == "uniform") return SamplingMode::Uniform;
  if (s == "random") return SamplingMode::Random;
  if (s == "all") return SamplingMode::All;
  throw ContractViolation("unknown sampling mode '" + s + "'");
}

struct ParetoGrid {
  std::vector<Index> betas;
  std::vector<InversionMode> inversions{InversionMode::GaussNewton, InversionMode::Linearized};
  std::vector<Index> sample_counts;
};

/// Everything a pipeline run needs. Problem sizes of 0 (or steps < 0) select the
/// defaults of the experiment kind.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Thermo;
  Index points = 0;           // grid nodes per axis
  Index steps = -1;
  std::uint64_t seed = 0;

  TrainConfig train;

  SamplingMode sampling = SamplingMode::Greedy;
  Index samples = 22;         // |M| (uniform / random), cap for greedy
  double greedy_target = 0.0;
  Index greedy_candidates = 10;
  bool greedy_all_steps = false;

  InversionConfig inversion;
  GradientMode gradient = GradientMode::StencilOnNetwork;

  bool pod = true;
  Index pod_r = 0;            // 0 uses train.r

  double energy_x1 = 0.396, energy_x2 = 0.526;
  std::vector<double> dt_multipliers{0.5, 1.0, 1.5, 2.0, 2.5};
  ParetoGrid pareto;
  bool plots = false;

  unsigned threads = 1;
  std::string out = "crom_run";

  ProblemSetup problem() const {
    ProblemSetup s;
    switch (kind) {
      case ExperimentKind::Thermo: s = thermo_setup(points > 0 ? points : 501, steps >= 0 ? steps : 100); break;
      case ExperimentKind::Image: s = image_setup(points > 0 ? points : 64, steps >= 0 ? steps : 20); break;
      case ExperimentKind::Advection: s = advection_setup(points > 0 ? points : 100, steps >= 0 ? steps : 100); break;
      case ExperimentKind::Burgers: s = burgers_setup(points > 0 ? points : 256, steps >= 0 ? steps : 500); break;
    }
    return s;
  }

  Index effective_pod_r() const { return pod_r > 0 ? pod_r : train.r; }

  /// Rejects inconsistent settings, including sample sets too small for r.
  void validate() const {
    train.validate();
    inversion.validate();
    const ProblemSetup s = problem();
    s.spec.validate();
    const Index p = s.spec.point_count(), d = s.spec.d();
    CROM_EXPECT(threads >= 1, "threads must be >= 1");
    CROM_EXPECT(greedy_candidates >= 1, "greedy candidates (Q) must be >= 1");
    if (sampling != SamplingMode::All) {
      CROM_EXPECT(samples >= 1 && samples <= p, "sample count must lie in [1, P]");
      require_well_posed(samples, d, train.r);
    }
    if (gradient == GradientMode::AnalyticFirstOrder)
      CROM_EXPECT(kind == ExperimentKind::Advection || kind == ExperimentKind::Burgers || kind == ExperimentKind::Thermo ||
                      kind == ExperimentKind::Image,
                  "unsupported gradient mode");
    if (kind == ExperimentKind::Thermo) CROM_EXPECT(energy_x1 < energy_x2, "energy interval needs x1 < x2");
    for (double m : dt_multipliers) CROM_EXPECT(m > 0.0, "dt multipliers must be positive");
    CROM_EXPECT(effective_pod_r() >= 1, "pod rank must be >= 1");
  }
};

inline json to_json(const ExperimentConfig& c) {
  json inv = {{"mode", to_string(c.inversion.mode)},
              {"max_iterations", c.inversion.max_iterations},
              {"tolerance", c.inversion.tolerance},
              {"backtrack", c.inversion.backtrack},
              {"min_step", c.inversion.min_step},
              {"lambda_reg", c.inversion.lambda_reg}};
  json pareto = {{"betas", c.pareto.betas}, {"sample_counts", c.pareto.sample_counts}, {"inversions", json::array()}};
  for (auto m : c.pareto.inversions) pareto["inversions"].push_back(to_string(m));
  return {{"experiment", to_string(c.kind)},
          {"points", c.points},
          {"steps", c.steps},
          {"seed", c.seed},
          {"train",
           {{"r", c.train.r},
            {"beta", c.train.beta},
            {"activation", to_string(c.train.activation.kind)},
            {"omega0", c.train.activation.omega0},
            {"learning_rate", c.train.learning_rate},
            {"schedule", c.train.schedule},
            {"epochs_per_stage", c.train.epochs_per_stage},
            {"batch_size", c.train.batch_size},
            {"points_per_snapshot", c.train.points_per_snapshot},
            {"seed", c.train.seed},
            {"early_stop", c.train.early_stop}}},
          {"sampling",
           {{"mode", to_string(c.sampling)},
            {"samples", c.samples},
            {"target_accuracy", c.greedy_target},
            {"candidates", c.greedy_candidates},
            {"all_steps", c.greedy_all_steps}}},
          {"inversion", inv},
          {"gradient", c.gradient == GradientMode::StencilOnNetwork ? "stencil" : "analytic"},
          {"pod", {{"enabled", c.pod}, {"r", c.pod_r}}},
          {"energy", {{"x1", c.energy_x1}, {"x2", c.energy_x2}}},
          {"dt_multipliers", c.dt_multipliers},
          {"pareto", pareto},
          {"plots", c.plots},
          {"threads", c.threads},
          {"out", c.out}};
}

namespace detail {
inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ContractViolation("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ContractViolation("config: unknown key '" + where + "." + it.key() + "'");
}
}  // namespace detail

/// Applies the keys present in `j` on top of `base`. Unknown keys and wrong types
/// raise ContractViolation.
inline ExperimentConfig merge_config(ExperimentConfig c, const json& j) {
  try {
    detail::check_keys(j,
                       {"experiment", "points", "steps", "seed", "train", "sampling", "inversion", "gradient", "pod",
                        "energy", "dt_multipliers", "pareto", "plots", "threads", "out"},
                       "config");
    if (j.contains("experiment")) c.kind = experiment_kind_from_string(j["experiment"].get<std::string>());
    if (j.contains("points")) c.points = j["points"].get<Index>();
    if (j.contains("steps")) c.steps = j["steps"].get<Index>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("train")) {
      const json& t = j["train"];
      detail::check_keys(t,
                         {"r", "beta", "activation", "omega0", "learning_rate", "schedule", "epochs_per_stage",
                          "batch_size", "points_per_snapshot", "seed", "early_stop"},
                         "train");
      if (t.contains("r")) c.train.r = t["r"].get<Index>();
      if (t.contains("beta")) c.train.beta = t["beta"].get<Index>();
      if (t.contains("activation")) c.train.activation.kind = activation_from_string(t["activation"].get<std::string>());
      if (t.contains("omega0")) c.train.activation.omega0 = t["omega0"].get<double>();
      if (t.contains("learning_rate")) c.train.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("schedule")) c.train.schedule = t["schedule"].get<std::vector<double>>();
      if (t.contains("epochs_per_stage")) c.train.epochs_per_stage = t["epochs_per_stage"].get<Index>();
      if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<Index>();
      if (t.contains("points_per_snapshot")) c.train.points_per_snapshot = t["points_per_snapshot"].get<Index>();
      if (t.contains("seed")) c.train.seed = t["seed"].get<std::uint64_t>();
      if (t.contains("early_stop")) c.train.early_stop = t["early_stop"].get<bool>();
    }
    if (j.contains("sampling")) {
      const json& s = j["sampling"];
      detail::check_keys(s, {"mode", "samples", "target_accuracy", "candidates", "all_steps"}, "sampling");
      if (s.contains("mode")) c.sampling = sampling_mode_from_string(s["mode"].get<std::string>());
      if (s.contains("samples")) c.samples = s["samples"].get<Index>();
      if (s.contains("target_accuracy")) c.greedy_target = s["target_accuracy"].get<double>();
      if (s.contains("candidates")) c.greedy_candidates = s["candidates"].get<Index>();
      if (s.contains("all_steps")) c.greedy_all_steps = s["all_steps"].get<bool>();
    }
    if (j.contains("inversion")) {
      const json& v = j["inversion"];
      detail::check_keys(v, {"mode", "max_iterations", "tolerance", "backtrack", "min_step", "lambda_reg"}, "inversion");
      if (v.contains("mode")) c.inversion.mode = inversion_mode_from_string(v["mode"].get<std::string>());
      if (v.contains("max_iterations")) c.inversion.max_iterations = v["max_iterations"].get<int>();
      if (v.contains("tolerance")) c.inversion.tolerance = v["tolerance"].get<double>();
      if (v.contains("backtrack")) c.inversion.backtrack = v["backtrack"].get<double>();
      if (v.contains("min_step")) c.inversion.min_step = v["min_step"].get<double>();
      if (v.contains("lambda_reg")) c.inversion.lambda_reg = v["lambda_reg"].get<double>();
    }
    if (j.contains("gradient")) {
      const std::string g = j["gradient"].get<std::string>();
      if (g == "stencil") c.gradient = GradientMode::StencilOnNetwork;
      else if (g == "analytic") c.gradient = GradientMode::AnalyticFirstOrder;
      else throw ContractViolation("config: gradient must be 'stencil' or 'analytic'");
    }
    if (j.contains("pod")) {
      detail::check_keys(j["pod"], {"enabled", "r"}, "pod");
      c.pod = j["pod"].value("enabled", c.pod);
      c.pod_r = j["pod"].value("r", c.pod_r);
    }
    if (j.contains("energy")) {
      detail::check_keys(j["energy"], {"x1", "x2"}, "energy");
      c.energy_x1 = j["energy"].value("x1", c.energy_x1);
      c.energy_x2 = j["energy"].value("x2", c.energy_x2);
    }
    if (j.contains("dt_multipliers")) c.dt_multipliers = j["dt_multipliers"].get<std::vector<double>>();
    if (j.contains("pareto")) {
      const json& p = j["pareto"];
      detail::check_keys(p, {"betas", "inversions", "sample_counts"}, "pareto");
      if (p.contains("betas")) c.pareto.betas = p["betas"].get<std::vector<Index>>();
      if (p.contains("sample_counts")) c.pareto.sample_counts = p["sample_counts"].get<std::vector<Index>>();
      if (p.contains("inversions")) {
        c.pareto.inversions.clear();
        for (const auto& m : p["inversions"]) c.pareto.inversions.push_back(inversion_mode_from_string(m.get<std::string>()));
      }
    }
    if (j.contains("plots")) c.plots = j["plots"].get<bool>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: ") + e.what());
  }
  return c;
}

/// Desk-scale defaults per experiment: sizes that train in minutes on one core.
inline ExperimentConfig desk_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.train.epochs_per_stage = 2000;
  switch (kind) {
    case ExperimentKind::Thermo:
      c.train.r = 16, c.train.beta = 32;
      c.train.points_per_snapshot = 64;
      c.train.epochs_per_stage = 800, c.train.seed = 1;  // about 16 min on one core
      c.sampling = SamplingMode::Greedy, c.samples = 22;
      // 22 samples for r = 16 leaves the sampled jacobian poorly conditioned; a proximal
      // term keeps each projection close to the previous state.
      c.inversion.lambda_reg = 1e-2;
      c.pareto.betas = {32};
      c.pareto.sample_counts = {10, 22, 40};
      break;
    case ExperimentKind::Image:
      c.train.r = 16, c.train.beta = 64;
      c.train.activation.kind = ActivationKind::Siren;
      c.train.points_per_snapshot = 256, c.train.epochs_per_stage = 200;  // about 28 min on one core
      c.sampling = SamplingMode::Greedy, c.samples = 63;
      break;
    case ExperimentKind::Advection:
      c.train.r = 1, c.train.beta = 20;
      c.sampling = SamplingMode::All;
      c.pod_r = 1;
      break;
    case ExperimentKind::Burgers:
      c.train.r = 2, c.train.beta = 64;
      c.train.points_per_snapshot = 64;
      c.train.epochs_per_stage = 100;  // 4000 snapshots per epoch
      c.sampling = SamplingMode::All;
      break;
  }
  return c;
}

/// Published configurations (full resolution and full training schedule).
inline ExperimentConfig paper_config(const std::string& name) {
  ExperimentConfig c = desk_config(experiment_kind_from_string(name));
  const Activation act = c.train.activation;
  switch (c.kind) {
    case ExperimentKind::Thermo:
      c.points = 501;
      c.train = TrainConfig::paper_schedule(16, 128, act);
      c.sampling = SamplingMode::Greedy, c.samples = 22;
      break;
    case ExperimentKind::Image:
      c.points = 256;
      c.train = TrainConfig::paper_schedule(16, 64, act);
      c.sampling = SamplingMode::Greedy, c.samples = 63;
      break;
    case ExperimentKind::Advection:
      c.points = 100;
      c.train = TrainConfig::paper_schedule(1, 20, act);
      c.sampling = SamplingMode::All;
      break;
    case ExperimentKind::Burgers:
      c.points = 256;
      c.train = TrainConfig::paper_schedule(2, 64, act);
      c.sampling = SamplingMode::All;
      break;
  }
  return c;
}

/// P*d / r and P / |M| as printed in the reduction table (rounded to the nearest integer).
struct ReductionFactors {
  double dimension = 0.0;
  double samples = 0.0;   // 0 when no hyper-reduction is applied
  long long dimension_rounded = 0;
  long long samples_rounded = 0;
};

inline ReductionFactors reduction_factors(Index p, Index d, Index r, Index sample_count) {
  ReductionFactors f;
  f.dimension = static_cast<double>(p * d) / static_cast<double>(r);
  f.dimension_rounded = std::llround(f.dimension);
  if (sample_count > 0 && sample_count < p) {
    f.samples = static_cast<double>(p) / static_cast<double>(sample_count);
    f.samples_rounded = std::llround(f.samples);
  }
  return f;
}

}  // namespace crom
