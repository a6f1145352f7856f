#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

#include "crom/experiment/pipeline.hpp"

using namespace crom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

struct GlobalOptions {
  std::string config;
  std::string paper_config;
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  bool fresh = false;
  bool quiet = false;
};

ExperimentConfig resolve_config(const GlobalOptions& g) {
  json file = json::object();
  if (!g.config.empty()) file = read_json(g.config);
  ExperimentConfig base;
  if (!g.paper_config.empty()) {
    base = paper_config(g.paper_config);
  } else {
    std::string kind = g.experiment;
    if (kind.empty() && file.contains("experiment")) kind = file["experiment"].get<std::string>();
    base = desk_config(kind.empty() ? ExperimentKind::Thermo : experiment_kind_from_string(kind));
  }
  ExperimentConfig c = merge_config(base, file);
  if (!g.experiment.empty() && c.kind != experiment_kind_from_string(g.experiment))
    throw ContractViolation("--experiment disagrees with the config file");
  if (g.seed) {
    c.seed = *g.seed;
    c.train.seed = *g.seed;
  }
  if (!g.out.empty()) c.out = g.out;
  if (g.threads) c.threads = *g.threads;
  c.validate();
  return c;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_sweep(Pipeline& pipe) {
  const ExperimentConfig& cfg = pipe.config();
  const Datasets& d = pipe.data();
  const auto& truth = d.test.trajectories.front();
  std::vector<double> initial(truth.fields.col(0).data(), truth.fields.col(0).data() + truth.fields.rows());
  const auto sweep = stability_sweep(cfg, pipe.field(), pipe.model(), pipe.samples().samples, d.test.spec,
                                     truth.params, initial, cfg.dt_multipliers);
  json j = {{"base_dt", d.test.spec.dt}, {"params", truth.params}, {"entries", to_json(sweep)}};
  if (cfg.kind == ExperimentKind::Thermo) j["cfl_limit"] = heat_cfl_limit(d.test.spec, truth.params);
  write_json(pipe.layout().root / "sweep.json", j);
  std::ofstream csv(pipe.layout().root / "sweep.csv");
  csv << "multiplier,dt,full_order,reduced,reduced_error,full_order_error\n";
  for (const auto& e : sweep)
    csv << e.multiplier << ',' << e.dt << ',' << (e.full_order_bounded ? "bounded" : "diverged") << ','
        << (e.reduced_bounded ? "bounded" : "diverged") << ',' << (e.reduced_error ? std::to_string(*e.reduced_error) : "")
        << ',' << (e.full_order_error ? std::to_string(*e.full_order_error) : "") << '\n';
  print(j);
  return kExitOk;
}

/// Grid over beta x inversion x |M|: one model per beta, one sample set per |M|.
int cmd_pareto(const ExperimentConfig& base, const LogFn& log, bool reuse) {
  const std::vector<Index> betas = base.pareto.betas.empty() ? std::vector<Index>{base.train.beta} : base.pareto.betas;
  const std::vector<Index> counts =
      base.pareto.sample_counts.empty() ? std::vector<Index>{base.samples} : base.pareto.sample_counts;
  const fs::path root = base.out;
  fs::create_directories(root);
  std::ofstream csv(root / "pareto.csv");
  csv << "beta,inversion,samples,mean_final_relative_l2,seconds_per_step,diverged\n";
  json rows = json::array();
  for (Index beta : betas)
    for (Index m : counts) {
      ExperimentConfig c = base;
      c.train.beta = beta;
      c.samples = m;
      c.pod = false;
      c.out = (root / ("beta_" + std::to_string(beta)) / ("m_" + std::to_string(m))).string();
      // Models are shared across sample counts through a common model directory.
      const fs::path shared = root / ("beta_" + std::to_string(beta)) / "model";
      fs::create_directories(c.out);
      if (fs::exists(shared / "manifest.json") && !fs::exists(fs::path(c.out) / "model"))
        fs::copy(shared, fs::path(c.out) / "model", fs::copy_options::recursive);
      for (InversionMode inv : base.pareto.inversions) {
        c.inversion.mode = inv;
        Pipeline pipe(c, log, reuse);
        if (!fs::exists(shared / "manifest.json")) {
          pipe.model();
          fs::copy(fs::path(c.out) / "model", shared, fs::copy_options::recursive);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const auto runs = pipe.rom_runs();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double err = 0.0;
        Index steps = 0;
        bool diverged = false;
        for (const auto& r : runs) {
          err += r.errors.final.relative_l2;
          steps += static_cast<Index>(r.run.latents.size()) - 1;
          diverged = diverged || r.run.diverged_at.has_value();
        }
        err /= static_cast<double>(std::max<std::size_t>(1, runs.size()));
        const double per = steps > 0 ? secs / static_cast<double>(steps) : 0.0;
        csv << beta << ',' << to_string(inv) << ',' << m << ',' << err << ',' << per << ',' << diverged << '\n';
        rows.push_back({{"beta", beta}, {"inversion", to_string(inv)}, {"samples", m},
                        {"mean_final_relative_l2", err}, {"seconds_per_step", per}, {"diverged", diverged}});
      }
    }
  write_json(root / "pareto.json", rows);
  print(rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crom: continuous reduced-order modeling toolkit"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--paper-config", g.paper_config, "published preset: thermo, image, advection, burgers");
  app.add_option("--experiment", g.experiment, "desk preset used when no config names one");
  app.add_option("--seed", g.seed, "seed for sampling and training");
  app.add_option("--out", g.out, "run directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--fresh", g.fresh, "recompute artifacts even if present in the run directory");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress messages");

  auto* simulate = app.add_subcommand("simulate", "generate full-order training and test snapshots");
  auto* train = app.add_subcommand("train", "train the decoder and encoder");
  auto* select = app.add_subcommand("select-samples", "choose integration samples");
  auto* rom_run = app.add_subcommand("rom-run", "run the reduced model on the test parameters");
  auto* pod = app.add_subcommand("pod", "fit and run the POD baseline");
  auto* eval = app.add_subcommand("eval", "full pipeline with report.json");
  auto* sweep = app.add_subcommand("sweep-dt", "time-step stability sweep");
  auto* pareto = app.add_subcommand("pareto", "accuracy/cost grid over beta, inversion and |M|");
  auto* show = app.add_subcommand("config", "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  const LogFn log = g.quiet ? LogFn{} : LogFn{[](const std::string& s) { std::cerr << s << '\n'; }};
  try {
    const ExperimentConfig cfg = resolve_config(g);
    if (*show) {
      print(to_json(cfg));
      return kExitOk;
    }
    if (*pareto) return cmd_pareto(cfg, log, !g.fresh);

    Pipeline pipe(cfg, log, !g.fresh);
    fs::create_directories(pipe.layout().root);
    write_json(pipe.layout().root / "config.json", to_json(cfg));
    if (*simulate) {
      const Datasets& d = pipe.data();
      print({{"train_trajectories", d.train.trajectories.size()},
             {"test_trajectories", d.test.trajectories.size()},
             {"points", d.train.point_count()},
             {"steps", d.train.spec.steps}});
    } else if (*train) {
      pipe.model();
      if (fs::exists(pipe.layout().training_report())) print(read_json(pipe.layout().training_report()));
    } else if (*select) {
      const SampleSelection& sel = pipe.samples();
      print(samples_json(sel.samples, sel.greedy ? &*sel.greedy : nullptr));
    } else if (*rom_run) {
      bool diverged = false;
      json out = json::array();
      for (const auto& r : pipe.rom_runs()) {
        diverged = diverged || r.run.diverged_at.has_value();
        out.push_back(to_json(r.errors));
        out.back().erase("relative_l2");
      }
      print(out);
      return diverged ? kExitDivergence : kExitOk;
    } else if (*pod) {
      const PodBasis& b = pipe.pod_basis();
      json out = {{"r", b.rank()}, {"stored_entries", b.stored_entries()}, {"runs", json::array()}};
      for (const auto& r : pipe.pod_runs()) {
        out["runs"].push_back(to_json(r.errors));
        out["runs"].back().erase("relative_l2");
      }
      write_json(pipe.layout().root / "pod_report.json", out);
      print(out);
    } else if (*eval) {
      const json rep = pipe.run();
      json brief = {{"status", rep["status"]}, {"summary", rep["summary"]}, {"reduction", rep["reduction"]}};
      print(brief);
      return rep["status"] == "diverged" ? kExitDivergence : kExitOk;
    } else if (*sweep) {
      return cmd_sweep(pipe);
    }
    return kExitOk;
  } catch (const ContractViolation& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const WellPosednessError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Unsupported& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DiscretizationMismatch& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const TrainingDivergence& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const NonFiniteError& e) {
    std::cerr << "non-finite values: " << e.what() << '\n';
    return kExitDivergence;
  }
}
