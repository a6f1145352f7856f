#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "crom/baselines/pod.hpp"
#include "crom/experiment/analysis.hpp"
#include "crom/experiment/config.hpp"
#include "crom/manifold/model_io.hpp"
#include "crom/manifold/report.hpp"
#include "crom/pde/archive.hpp"
#include "crom/pde/energy.hpp"
#include "crom/sampling/greedy.hpp"

namespace crom {

namespace fs = std::filesystem;

/// Diagnostics sink; the CLI points this at stderr, tests leave it silent.
using LogFn = std::function<void(const std::string&)>;

struct Datasets {
  ProblemSetup setup;
  TrajectoryDataset train;
  TrajectoryDataset test;
};

inline Datasets simulate_datasets(const ExperimentConfig& cfg) {
  Datasets d;
  d.setup = cfg.problem();
  d.train = generate_trajectories(d.setup.spec, d.setup.initial, d.setup.train_params);
  d.test = generate_trajectories(d.setup.spec, d.setup.initial, d.setup.test_params);
  return d;
}

inline TrainResult train_model(const ExperimentConfig& cfg, const TrajectoryDataset& train_raw, const LogFn& log = {}) {
  StandardizeResult st = standardize(train_raw, cfg.train.activation.kind);
  if (log)
    for (const auto& w : st.warnings) log("warning: " + w);
  const Index report_every = std::max<Index>(1, cfg.train.epochs_per_stage / 4);
  return train_manifold(st.dataset, cfg.train, [&](std::size_t stage, Index epoch, double loss) {
    if (log && (epoch % report_every == 0))
      log("stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) + " loss " + std::to_string(loss));
  });
}

/// Encoder latents of the first snapshot of every trajectory.
inline std::vector<Vector> initial_latents(const ManifoldModel& model, const TrajectoryDataset& raw) {
  std::vector<Vector> q0;
  for (const auto& t : raw.trajectories) q0.push_back(encode_initial(model.encoder, model.decoder.stats, t.fields.col(0)).q);
  return q0;
}

struct SampleSelection {
  SampleSet samples;
  std::optional<GreedyResult> greedy;
};

inline SampleSet all_samples(const DenseMatrix& coords) {
  std::vector<Index> idx(static_cast<std::size_t>(coords.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  return SampleSet::from_indices(std::move(idx), coords);
}

inline SampleSet uniform_samples(const PdeSpec& spec, Index count, Index r) {
  const DenseMatrix coords = spec.coords();
  if (spec.m() == 2) {
    const auto k = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(count)) + 1e-9));
    require_well_posed(k * k, spec.d(), r);
    return uniform_grid_samples(k, spec.counts[0], spec.counts[1], coords);
  }
  return baseline_samples(BaselineKind::Uniform, count, coords, r, spec.d());
}

template <FieldModel F>
SampleSelection select_samples(const ExperimentConfig& cfg, SamplingMode mode, Index count, const F& field,
                               const TrajectoryDataset& train_raw, const std::vector<Vector>& q0) {
  SampleSelection sel;
  const PdeSpec& spec = train_raw.spec;
  switch (mode) {
    case SamplingMode::All: sel.samples = all_samples(train_raw.coords); break;
    case SamplingMode::Uniform: sel.samples = uniform_samples(spec, count, cfg.train.r); break;
    case SamplingMode::Random:
      sel.samples = baseline_samples(BaselineKind::Random, count, train_raw.coords, cfg.train.r, spec.d(), cfg.seed);
      break;
    case SamplingMode::Greedy: {
      require_well_posed(count, spec.d(), cfg.train.r);
      GreedyConfig g;
      g.target_accuracy = cfg.greedy_target;
      g.candidates = cfg.greedy_candidates;
      g.max_samples = count;
      g.seed = cfg.seed;
      g.threads = cfg.threads;
      RomSettings rom;
      rom.inversion = cfg.inversion;
      rom.inversion.mode = InversionMode::Linearized;
      rom.gradient = cfg.gradient;
      rom.all_steps = cfg.greedy_all_steps;
      GreedyResult res = greedy_select(field, train_raw, q0, g, rom);
      sel.samples = res.samples;
      sel.greedy = std::move(res);
      break;
    }
  }
  return sel;
}

/// Accuracy of one reduced (or baseline) trajectory against the full-order one.
struct TrajectoryErrors {
  std::vector<double> relative_l2;  // per step
  Metrics final;
  double mse = 0.0;                 // over the whole trajectory
  double psnr = 0.0;                // final state
  std::optional<Index> diverged_at;
};

inline TrajectoryErrors trajectory_errors(const DenseMatrix& approx, const DenseMatrix& truth) {
  TrajectoryErrors e;
  const Index n = std::min(approx.cols(), truth.cols());
  double sq = 0.0;
  for (Index k = 0; k < n; ++k) {
    const Metrics m = metrics(approx.col(k), truth.col(k));
    e.relative_l2.push_back(m.relative_l2);
    sq += m.mse;
  }
  e.mse = n > 0 ? sq / static_cast<double>(n) : 0.0;
  if (approx.cols() < truth.cols()) {
    e.diverged_at = approx.cols();
    e.final.mse = e.final.relative_l2 = std::numeric_limits<double>::infinity();
    e.final.psnr = -std::numeric_limits<double>::infinity();
    e.psnr = e.final.psnr;
  } else {
    e.final = metrics(approx.col(n - 1), truth.col(n - 1));
    e.psnr = e.final.psnr;
  }
  return e;
}

inline json to_json(const TrajectoryErrors& e) {
  json j = {{"relative_l2", e.relative_l2},
            {"final_relative_l2", e.final.relative_l2},
            {"final_mse", e.final.mse},
            {"mse", e.mse},
            {"psnr", e.psnr},
            {"diverged", e.diverged_at.has_value()}};
  if (e.diverged_at) j["diverged_at"] = *e.diverged_at;
  return j;
}

inline json to_json(const EnergyBudget& b) {
  return {{"escaped", b.escaped},          {"stored", b.stored},
          {"total", b.total},              {"left_node", b.left_node},
          {"right_node", b.right_node},    {"max_relative_drift", b.max_relative_drift()},
          {"warnings", b.warnings}};
}

struct RomEvaluation {
  RomRun run;
  TrajectoryErrors errors;
  std::optional<EnergyBudget> energy;
};

/// Reduced run for one test trajectory, started from the encoder latent of its first snapshot.
template <FieldModel F>
RomEvaluation evaluate_rom(const ExperimentConfig& cfg, const F& field, const ManifoldModel& model,
                           const SampleSet& samples, const PdeSpec& spec, const Trajectory& truth,
                           bool allow_underdetermined = false) {
  RomEvaluation ev;
  const StepContext ctx(spec, truth.params);
  RomStepper<F> stepper(field, ctx, samples, cfg.inversion, cfg.gradient, allow_underdetermined);
  const LatentState s0 = encode_initial(model.encoder, model.decoder.stats, truth.fields.col(0));
  RomRunOptions opt;
  opt.steps = spec.steps;
  ev.run = run_rom(stepper, s0.q, opt);
  ev.errors = trajectory_errors(ev.run.fields, truth.fields);
  if (spec.kind == PdeKind::Heat1D && !ev.run.diverged_at)
    ev.energy = heat_energy_budget(ev.run.fields, spec.spacing(0), ctx.nu, spec.dt, cfg.energy_x1, cfg.energy_x2);
  return ev;
}

struct PodEvaluation {
  PodRun run;
  TrajectoryErrors errors;
};

inline PodEvaluation evaluate_pod(const PodBasis& basis, const PdeSpec& spec, const Trajectory& truth) {
  PodEvaluation ev;
  const StepContext ctx(spec, truth.params);
  ev.run = pod_rom_run(basis, ctx, truth.fields.col(0), spec.steps);
  ev.errors = trajectory_errors(ev.run.fields, truth.fields);
  return ev;
}

/// Where each pipeline artifact lives inside a run directory.
struct RunLayout {
  fs::path root;
  fs::path train_data() const { return root / "data" / "train"; }
  fs::path test_data() const { return root / "data" / "test"; }
  fs::path model() const { return root / "model"; }
  fs::path training_report() const { return root / "model" / "training_report.json"; }
  fs::path samples() const { return root / "samples.json"; }
  fs::path pod() const { return root / "pod"; }
  fs::path rom() const { return root / "rom"; }
  fs::path report() const { return root / "report.json"; }
};

/// Loads an artifact when present (and `reuse` is set), otherwise computes and writes it.
class Pipeline {
 public:
  Pipeline(ExperimentConfig cfg, LogFn log = {}, bool reuse = true)
      : cfg_(std::move(cfg)), layout_{cfg_.out}, log_(std::move(log)), reuse_(reuse) {
    cfg_.validate();
  }

  const ExperimentConfig& config() const { return cfg_; }
  const RunLayout& layout() const { return layout_; }

  const Datasets& data() {
    if (data_) return *data_;
    Datasets d;
    d.setup = cfg_.problem();
    if (reuse_ && fs::exists(layout_.train_data() / "manifest.json") && fs::exists(layout_.test_data() / "manifest.json")) {
      d.train = read_archive(layout_.train_data());
      d.test = read_archive(layout_.test_data());
      if (d.train.point_count() != d.setup.spec.point_count() || d.train.steps() != d.setup.spec.steps)
        throw DiscretizationMismatch("stored snapshots do not match the configured problem; use a fresh --out");
      note("loaded snapshots from " + layout_.root.string());
    } else {
      note("simulating " + std::to_string(d.setup.train_params.size()) + " training and " +
           std::to_string(d.setup.test_params.size()) + " test trajectories");
      d = simulate_datasets(cfg_);
      write_archive(layout_.train_data(), d.train);
      write_archive(layout_.test_data(), d.test);
    }
    data_ = std::move(d);
    return *data_;
  }

  const ManifoldModel& model() {
    if (model_) return *model_;
    if (reuse_ && fs::exists(layout_.model() / "manifest.json")) {
      model_ = read_model(layout_.model());
      note("loaded model from " + layout_.model().string());
      if (model_->decoder.r != cfg_.train.r || model_->decoder.beta != cfg_.train.beta)
        throw ContractViolation("stored model (r, beta) differs from the configuration; use a fresh --out");
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      TrainResult res = train_model(cfg_, data().train, log_);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      json rep = training_report(cfg_.train, res);
      rep["seconds"] = secs;
      write_model(layout_.model(), res.decoder, res.encoder, {{"final_loss", res.final_loss}});
      write_json(layout_.training_report(), rep);
      note("trained in " + std::to_string(secs) + " s, final loss " + std::to_string(res.final_loss));
      model_ = ManifoldModel{std::move(res.decoder), std::move(res.encoder)};
    }
    return *model_;
  }

  const NeuralField& field() {
    if (!field_) field_.emplace(model().decoder, data().train.coords);
    return *field_;
  }

  const SampleSelection& samples() {
    if (samples_) return *samples_;
    SampleSelection sel;
    if (reuse_ && fs::exists(layout_.samples())) {
      sel.samples = read_samples(layout_.samples(), data().train.coords);
      note("loaded " + std::to_string(sel.samples.size()) + " samples");
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      sel = select_samples(cfg_, cfg_.sampling, cfg_.samples, field(), data().train, initial_latents(model(), data().train));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      json echo = {{"mode", to_string(cfg_.sampling)}, {"requested", cfg_.samples}, {"seed", cfg_.seed},
                   {"candidates", cfg_.greedy_candidates}, {"target_accuracy", cfg_.greedy_target}, {"seconds", secs}};
      write_samples(layout_.samples(), sel.samples, sel.greedy ? &*sel.greedy : nullptr, echo);
      note("selected " + std::to_string(sel.samples.size()) + " samples (" + to_string(cfg_.sampling) + ") in " +
           std::to_string(secs) + " s");
    }
    samples_ = std::move(sel);
    return *samples_;
  }

  const PodBasis& pod_basis() {
    if (pod_) return *pod_;
    if (reuse_ && fs::exists(layout_.pod() / "manifest.json")) {
      pod_ = read_pod_basis(layout_.pod());
      if (pod_->rank() != cfg_.effective_pod_r()) pod_.reset();
    }
    if (!pod_) {
      pod_ = pod_fit(data().train, cfg_.effective_pod_r());
      write_pod_basis(layout_.pod(), *pod_);
    }
    return *pod_;
  }

  /// Reduced runs on every test trajectory; writes latent.csv and reconstruction archives.
  std::vector<RomEvaluation> rom_runs() {
    std::vector<RomEvaluation> out;
    const Datasets& d = data();
    const SampleSet& s = samples().samples;
    for (std::size_t k = 0; k < d.test.trajectories.size(); ++k) {
      RomEvaluation ev = evaluate_rom(cfg_, field(), model(), s, d.test.spec, d.test.trajectories[k]);
      const fs::path dir = layout_.rom() / ("test_" + std::to_string(k));
      write_latent_csv(dir / "latent.csv", ev.run);
      TrajectoryDataset rec;
      rec.spec = d.test.spec;
      rec.coords = d.test.coords;
      rec.trajectories.push_back({d.test.trajectories[k].params, ev.run.fields});
      write_archive(dir / "reconstruction", rec);
      note("test " + std::to_string(k) + ": final relative error " + std::to_string(ev.errors.final.relative_l2) +
           (ev.run.diverged_at ? " (diverged)" : ""));
      out.push_back(std::move(ev));
    }
    return out;
  }

  std::vector<PodEvaluation> pod_runs() {
    std::vector<PodEvaluation> out;
    const Datasets& d = data();
    for (const auto& t : d.test.trajectories) out.push_back(evaluate_pod(pod_basis(), d.test.spec, t));
    return out;
  }

  /// Full pipeline; returns (and writes) the evaluation report.
  json run() {
    json report = {{"config", to_json(cfg_)}, {"status", "ok"}};
    std::string stage = "simulate";
    try {
      const Datasets& d = data();
      const Index p = d.train.point_count(), dd = d.train.spec.d();
      stage = "train";
      const ManifoldModel& mdl = model();
      report["training"] = {{"decoder_parameters", mdl.decoder.parameter_count()},
                            {"encoder_parameters", mdl.encoder.parameter_count()}};
      if (fs::exists(layout_.training_report()))
        report["training"]["final_loss"] = read_json(layout_.training_report()).value("final_loss", 0.0);
      const ReconstructionReport rr = reconstruction_report(mdl.decoder, mdl.encoder, d.test);
      report["reconstruction"] = {{"test_mse", rr.mse}};
      stage = "select-samples";
      const SampleSelection& sel = samples();
      const ReductionFactors rf =
          reduction_factors(p, dd, cfg_.train.r, cfg_.sampling == SamplingMode::All ? 0 : sel.samples.size());
      report["reduction"] = {{"points", p},
                             {"d", dd},
                             {"r", cfg_.train.r},
                             {"samples", sel.samples.size()},
                             {"dimension_reduction", rf.dimension},
                             {"dimension_reduction_rounded", rf.dimension_rounded},
                             {"sample_reduction", rf.samples},
                             {"sample_reduction_rounded", rf.samples_rounded},
                             {"decoder_parameters", mdl.decoder.parameter_count()}};
      stage = "rom-run";
      const std::vector<RomEvaluation> roms = rom_runs();
      std::vector<PodEvaluation> pods;
      if (cfg_.pod) {
        stage = "pod";
        pods = pod_runs();
        report["pod"] = {{"r", pod_basis().rank()}, {"stored_entries", pod_basis().stored_entries()}};
      }
      stage = "eval";
      json runs = json::array();
      double sum_final = 0.0, sum_pod = 0.0;
      bool diverged = false;
      StepTiming timing;
      Index total_steps = 0;
      for (std::size_t k = 0; k < roms.size(); ++k) {
        const auto& ev = roms[k];
        json r = {{"params", d.test.trajectories[k].params}, {"rom", to_json(ev.errors)}};
        double iters = 0.0;
        for (const auto& rec : ev.run.latents) iters += rec.iterations;
        r["rom"]["mean_iterations"] = ev.run.latents.size() > 1 ? iters / static_cast<double>(ev.run.latents.size() - 1) : 0.0;
        r["rom"]["unconverged_steps"] = ev.run.unconverged_steps;
        r["rom"]["regularized_steps"] = ev.run.regularized_steps;
        if (ev.energy) r["energy"] = to_json(*ev.energy);
        if (cfg_.pod) {
          r["pod"] = to_json(pods[k].errors);
          sum_pod += pods[k].errors.final.relative_l2;
        }
        sum_final += ev.errors.final.relative_l2;
        diverged = diverged || ev.run.diverged_at.has_value();
        timing += ev.run.timing;
        total_steps += static_cast<Index>(ev.run.latents.size()) - 1;
        runs.push_back(r);
      }
      report["runs"] = runs;
      const double nruns = static_cast<double>(std::max<std::size_t>(1, roms.size()));
      report["summary"] = {{"mean_final_relative_l2", sum_final / nruns}, {"diverged", diverged}};
      if (cfg_.pod) report["summary"]["pod_mean_final_relative_l2"] = sum_pod / nruns;
      const double per = total_steps > 0 ? 1.0 / static_cast<double>(total_steps) : 0.0;
      report["timing_per_step"] = {{"inference", timing.inference * per},
                                   {"time_stepping", timing.stepping * per},
                                   {"inversion", timing.inversion * per}};
      write_csvs(roms, pods);
      if (!roms.empty()) write_latent_exports(roms.front());
      if (diverged) report["status"] = "diverged";
    } catch (const std::exception& e) {
      report["status"] = "failed";
      report["failed_stage"] = stage;
      report["error"] = e.what();
      write_json(layout_.report(), report);
      throw;
    }
    write_json(layout_.report(), report);
    return report;
  }

 private:
  void note(const std::string& s) const {
    if (log_) log_(s);
  }

  void write_csvs(const std::vector<RomEvaluation>& roms, const std::vector<PodEvaluation>& pods) const {
    std::ofstream err(layout_.root / "errors.csv");
    err.precision(10);
    err << "test,n,rom_relative_l2" << (pods.empty() ? "" : ",pod_relative_l2") << '\n';
    for (std::size_t k = 0; k < roms.size(); ++k)
      for (std::size_t n = 0; n < roms[k].errors.relative_l2.size(); ++n) {
        err << k << ',' << n << ',' << roms[k].errors.relative_l2[n];
        if (!pods.empty())
          err << ',' << (n < pods[k].errors.relative_l2.size() ? pods[k].errors.relative_l2[n] : NAN);
        err << '\n';
      }
    if (!roms.empty() && roms.front().energy) {
      std::ofstream en(layout_.root / "energy.csv");
      en.precision(12);
      en << "test,n,escaped,stored,total\n";
      for (std::size_t k = 0; k < roms.size(); ++k)
        if (roms[k].energy)
          for (std::size_t n = 0; n < roms[k].energy->total.size(); ++n)
            en << k << ',' << n << ',' << roms[k].energy->escaped[n] << ',' << roms[k].energy->stored[n] << ','
               << roms[k].energy->total[n] << '\n';
    }
    if (cfg_.plots && !roms.empty()) {
      std::vector<double> x(roms.front().errors.relative_l2.size());
      std::iota(x.begin(), x.end(), 0.0);
      std::vector<SvgSeries> series{{"reduced", roms.front().errors.relative_l2}};
      if (!pods.empty()) series.push_back({"POD", pods.front().errors.relative_l2});
      write_svg_plot(layout_.root / "errors.svg", "relative error, test 0", x, series, true);
      if (roms.front().energy) {
        const auto& e = *roms.front().energy;
        write_svg_plot(layout_.root / "energy.svg", "energy budget, test 0", x,
                       {{"EE", e.escaped}, {"SE", e.stored}, {"TE", e.total}});
      }
    }
  }

  void write_latent_exports(const RomEvaluation& ev) const {
    const DenseMatrix q = ev.run.latent_matrix();
    if (q.cols() < 2) return;
    const LatentPca pca = latent_pca(q);
    write_pca_csv(layout_.root / "latent_pca.csv", pca);
    std::ofstream out(layout_.root / "latent_interpolation.csv");
    out.precision(17);
    const std::vector<double> ts{-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
    const DenseMatrix path = latent_interpolate(q.col(0), q.col(q.cols() - 1), ts);
    out << "t";
    for (Index k = 1; k <= q.rows(); ++k) out << ",q" << k;
    out << '\n';
    for (std::size_t k = 0; k < ts.size(); ++k) {
      out << ts[k];
      for (Index a = 0; a < q.rows(); ++a) out << ',' << path(a, static_cast<Index>(k));
      out << '\n';
    }
  }

  ExperimentConfig cfg_;
  RunLayout layout_;
  LogFn log_;
  bool reuse_;
  std::optional<Datasets> data_;
  std::optional<ManifoldModel> model_;
  std::optional<NeuralField> field_;
  std::optional<SampleSelection> samples_;
  std::optional<PodBasis> pod_;
};

/// Boundedness verdict: max-norm stays below `factor` times the initial max-norm.
inline bool bounded(const DenseMatrix& fields, Index expected_cols, double factor = 10.0) {
  if (fields.cols() < expected_cols) return false;
  const double ref = fields.col(0).cwiseAbs().maxCoeff();
  for (Index n = 0; n < fields.cols(); ++n) {
    const double v = fields.col(n).cwiseAbs().maxCoeff();
    if (!std::isfinite(v) || v > factor * ref) return false;
  }
  return true;
}

struct SweepEntry {
  double multiplier = 1.0;
  double dt = 0.0;
  bool full_order_bounded = false;
  bool reduced_bounded = false;
  std::optional<double> reduced_error;     // vs the base-dt full-order solution at the same time
  std::optional<double> full_order_error;
};

/// Runs the full-order and reduced models with dt scaled by each multiplier on one
/// test trajectory. Errors compare final states with the base-dt full-order run at
/// the same physical time, when that time falls on a base-dt step.
template <FieldModel F>
std::vector<SweepEntry> stability_sweep(const ExperimentConfig& cfg, const F& field, const ManifoldModel& model,
                                        const SampleSet& samples, const PdeSpec& base, const std::vector<double>& params,
                                        const std::vector<double>& initial, const std::vector<double>& multipliers) {
  std::vector<SweepEntry> out;
  for (double mult : multipliers) {
    SweepEntry e;
    e.multiplier = mult;
    PdeSpec spec = base;
    spec.dt = base.dt * mult;
    e.dt = spec.dt;
    const StepContext ctx(spec, params);
    const Simulation fom = simulate(ctx, initial, 10.0 * Eigen::Map<const Vector>(initial.data(), static_cast<Index>(initial.size())).cwiseAbs().maxCoeff(), true);
    e.full_order_bounded = !fom.diverged_at && bounded(fom.fields, spec.steps + 1);
    RomStepper<F> stepper(field, ctx, samples, cfg.inversion, cfg.gradient);
    const LatentState s0 =
        encode_initial(model.encoder, model.decoder.stats, Eigen::Map<const Vector>(initial.data(), static_cast<Index>(initial.size())));
    RomRunOptions opt;
    opt.steps = spec.steps;
    const RomRun rom = run_rom(stepper, s0.q, opt);
    e.reduced_bounded = !rom.diverged_at && bounded(rom.fields, spec.steps + 1);
    const double ref_steps = mult * static_cast<double>(base.steps);
    if (std::abs(ref_steps - std::round(ref_steps)) < 1e-9) {
      PdeSpec rs = base;
      rs.steps = static_cast<Index>(std::llround(ref_steps));
      const Simulation ref = simulate(StepContext(rs, params), initial);
      if (!ref.diverged_at) {
        const Vector truth = ref.fields.col(ref.fields.cols() - 1);
        if (e.reduced_bounded) e.reduced_error = metrics(rom.fields.col(rom.fields.cols() - 1), truth).relative_l2;
        if (e.full_order_bounded) e.full_order_error = metrics(fom.fields.col(fom.fields.cols() - 1), truth).relative_l2;
      }
    }
    out.push_back(e);
  }
  return out;
}

inline json to_json(const std::vector<SweepEntry>& sweep) {
  json j = json::array();
  for (const auto& e : sweep) {
    json x = {{"multiplier", e.multiplier},
              {"dt", e.dt},
              {"full_order", e.full_order_bounded ? "bounded" : "diverged"},
              {"reduced", e.reduced_bounded ? "bounded" : "diverged"}};
    if (e.reduced_error) x["reduced_error"] = *e.reduced_error;
    if (e.full_order_error) x["full_order_error"] = *e.full_order_error;
    j.push_back(x);
  }
  return j;
}

/// Largest stable explicit heat step: 0.5 dx^2 / max nu.
inline double heat_cfl_limit(const PdeSpec& spec, const std::vector<double>& nu_params) {
  const double dx = spec.spacing(0);
  return 0.5 * dx * dx / *std::max_element(nu_params.begin(), nu_params.end());
}

}  // namespace crom
