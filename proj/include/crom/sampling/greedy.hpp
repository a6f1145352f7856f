#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "crom/numerics/serialize.hpp"
#include "crom/rom/dynamics.hpp"

namespace crom {

/// Runs fn(0..n-1) on up to `threads` workers. Results must be written to
/// per-index slots so the outcome does not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Mean plus maximum; any infinite entry makes the metric infinite.
inline double residual_metric(const Vector& res) {
  CROM_EXPECT(res.size() > 0, "residual_metric: empty residual vector");
  for (Index i = 0; i < res.size(); ++i)
    if (std::isinf(res(i))) return std::numeric_limits<double>::infinity();
  return res.mean() + res.maxCoeff();
}

/// How reduced runs are carried out while scoring sample sets.
struct RomSettings {
  InversionConfig inversion{InversionMode::Linearized};
  GradientMode gradient = GradientMode::StencilOnNetwork;
  bool all_steps = false;  // accumulate residuals over every step instead of the final one
};

struct ResidualResult {
  Vector res;                 // P entries
  bool any_diverged = false;
};

/// Runs the reduced model with `samples` for every training trajectory and
/// accumulates per-node reconstruction error norms at the final time.
template <FieldModel F>
ResidualResult calculate_residual(const F& field, const TrajectoryDataset& train, const std::vector<Vector>& q0,
                                  const SampleSet& samples, const RomSettings& rom) {
  CROM_EXPECT(q0.size() == train.trajectories.size(), "calculate_residual: one initial latent per trajectory");
  const Index p = train.point_count(), d = train.spec.d();
  ResidualResult out;
  out.res = Vector::Zero(p);
  std::vector<Index> all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), Index{0});
  for (std::size_t k = 0; k < train.trajectories.size(); ++k) {
    const Trajectory& traj = train.trajectories[k];
    RomStepper<F> stepper(field, StepContext(train.spec, traj.params), samples, rom.inversion, rom.gradient, true);
    RomRunOptions opt;
    opt.steps = traj.fields.cols() - 1;
    opt.record_fields = rom.all_steps;
    const RomRun run = run_rom(stepper, q0[k], opt);
    if (run.diverged_at) {
      out.any_diverged = true;
      out.res.setConstant(std::numeric_limits<double>::infinity());
      return out;
    }
    auto accumulate = [&](const Vector& rec, Index n) {
      for (Index i = 0; i < p; ++i)
        out.res(i) += (rec.segment(i * d, d) - traj.fields.col(n).segment(i * d, d)).norm();
    };
    if (rom.all_steps) {
      for (Index n = 0; n <= opt.steps; ++n) accumulate(run.fields.col(n), n);
    } else {
      accumulate(field.values(all, run.latents.back().q), opt.steps);
    }
  }
  return out;
}

struct GreedyConfig {
  double target_accuracy = 0.0;  // stop once Metric < target
  Index candidates = 10;         // Q
  Index max_samples = 0;         // cap on |M|; 0 means P
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const {
    CROM_EXPECT(candidates >= 1, "greedy: Q must be >= 1");
    CROM_EXPECT(target_accuracy > 0.0 || max_samples > 0, "greedy: set a positive target accuracy or a sample cap");
  }
};

struct GreedyCandidate {
  Index index = 0;
  double metric = 0.0;
};

struct GreedyIteration {
  Index size = 0;                        // |M| after this iteration
  Index added = -1;                      // -1 for the initial random sample
  double metric = 0.0;
  std::vector<GreedyCandidate> candidates;
};

struct GreedyResult {
  SampleSet samples;
  std::vector<GreedyIteration> trace;
  bool converged = false;
  std::uint64_t seed = 0;
  bool any_diverged = false;
};

/// Q indices with the largest residual outside `taken`; ties go to the lower index.
inline std::vector<Index> largest_residuals(const Vector& res, const std::vector<Index>& taken, Index q) {
  std::vector<Index> pool;
  for (Index i = 0; i < res.size(); ++i)
    if (std::find(taken.begin(), taken.end(), i) == taken.end()) pool.push_back(i);
  const auto count = static_cast<std::size_t>(std::min<Index>(q, static_cast<Index>(pool.size())));
  auto better = [&](Index a, Index b) {
    const double ra = std::isnan(res(a)) ? -1.0 : res(a), rb = std::isnan(res(b)) ? -1.0 : res(b);
    return ra > rb || (ra == rb && a < b);
  };
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count), pool.end(), better);
  pool.resize(count);
  return pool;
}

/// Residual-driven greedy selection: start from one random node and repeatedly
/// add, among the Q nodes of largest residual, the one that minimizes the Metric.
template <FieldModel F>
GreedyResult greedy_select(const F& field, const TrajectoryDataset& train, const std::vector<Vector>& q0,
                           const GreedyConfig& cfg, const RomSettings& rom = {}) {
  cfg.validate();
  const Index p = train.point_count();
  const Index cap = cfg.max_samples > 0 ? std::min(cfg.max_samples, p) : p;
  GreedyResult out;
  out.seed = cfg.seed;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<Index> pick(0, p - 1);
  std::vector<Index> chosen{pick(rng)};

  ResidualResult current = calculate_residual(field, train, q0, SampleSet::from_indices(chosen, train.coords), rom);
  double metric = residual_metric(current.res);
  out.any_diverged = current.any_diverged;
  out.trace.push_back({1, chosen.front(), metric, {}});

  while (!(metric < cfg.target_accuracy) && static_cast<Index>(chosen.size()) < cap) {
    const std::vector<Index> cands = largest_residuals(current.res, chosen, cfg.candidates);
    if (cands.empty()) break;
    std::vector<ResidualResult> results(cands.size());
    parallel_for(cands.size(), cfg.threads, [&](std::size_t c) {
      std::vector<Index> trial = chosen;
      trial.push_back(cands[c]);
      results[c] = calculate_residual(field, train, q0, SampleSet::from_indices(trial, train.coords), rom);
    });
    GreedyIteration it;
    std::size_t best = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const double mc = residual_metric(results[c].res);
      it.candidates.push_back({cands[c], mc});
      const double mb = it.candidates[best].metric;
      if (mc < mb || (mc == mb && cands[c] < cands[best])) best = c;
    }
    chosen.push_back(cands[best]);
    current = std::move(results[best]);
    metric = it.candidates[best].metric;
    out.any_diverged = out.any_diverged || current.any_diverged;
    it.size = static_cast<Index>(chosen.size());
    it.added = cands[best];
    it.metric = metric;
    out.trace.push_back(std::move(it));
  }
  out.converged = metric < cfg.target_accuracy;
  out.samples = SampleSet::from_indices(chosen, train.coords);
  return out;
}

enum class BaselineKind { Uniform, Random };

/// Evenly strided indices including both ends (Uniform) or a seeded draw without
/// replacement (Random, returned sorted).
inline SampleSet baseline_samples(BaselineKind kind, Index count, const DenseMatrix& grid_coords, Index r = 1,
                                  Index d = 1, std::uint64_t seed = 0) {
  const Index p = grid_coords.rows();
  CROM_EXPECT(count <= p, "baseline_samples: count exceeds the number of grid nodes");
  require_well_posed(count, d, r);
  CROM_EXPECT(count >= 1, "baseline_samples: count must be >= 1");
  std::vector<Index> idx;
  if (kind == BaselineKind::Uniform) {
    if (count == 1) {
      idx.push_back(0);
    } else {
      for (Index k = 0; k < count; ++k)
        idx.push_back(static_cast<Index>(std::llround(static_cast<double>(k) * static_cast<double>(p - 1) /
                                                      static_cast<double>(count - 1))));
    }
  } else {
    std::vector<Index> all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (Index j = 0; j < count; ++j) {
      std::uniform_int_distribution<Index> pick(j, p - 1);
      std::swap(all[static_cast<std::size_t>(j)], all[static_cast<std::size_t>(pick(rng))]);
    }
    idx.assign(all.begin(), all.begin() + count);
    std::sort(idx.begin(), idx.end());
  }
  return SampleSet::from_indices(std::move(idx), grid_coords);
}

/// k x k cell-centred lattice on an nx x ny image grid (x fastest).
inline SampleSet uniform_grid_samples(Index k, Index nx, Index ny, const DenseMatrix& grid_coords) {
  CROM_EXPECT(k >= 1 && k <= nx && k <= ny, "uniform_grid_samples: lattice larger than grid");
  std::vector<Index> idx;
  for (Index b = 0; b < k; ++b)
    for (Index a = 0; a < k; ++a) {
      const auto ix = static_cast<Index>((static_cast<double>(a) + 0.5) * static_cast<double>(nx) / static_cast<double>(k));
      const auto iy = static_cast<Index>((static_cast<double>(b) + 0.5) * static_cast<double>(ny) / static_cast<double>(k));
      idx.push_back(iy * nx + ix);
    }
  return SampleSet::from_indices(std::move(idx), grid_coords);
}

inline json samples_json(const SampleSet& s, const GreedyResult* greedy = nullptr, const json& config = json::object()) {
  json j = {{"indices", s.indices}, {"coordinates", json::array()}, {"config", config}};
  for (Index k = 0; k < s.coords.rows(); ++k) {
    std::vector<double> c(static_cast<std::size_t>(s.coords.cols()));
    for (Index a = 0; a < s.coords.cols(); ++a) c[static_cast<std::size_t>(a)] = s.coords(k, a);
    j["coordinates"].push_back(c);
  }
  if (greedy) {
    j["seed"] = greedy->seed;
    j["converged"] = greedy->converged;
    j["trace"] = json::array();
    for (const auto& it : greedy->trace) {
      json e = {{"size", it.size}, {"added", it.added}, {"metric", it.metric}, {"candidates", json::array()}};
      for (const auto& c : it.candidates) e["candidates"].push_back({{"index", c.index}, {"metric", c.metric}});
      j["trace"].push_back(e);
    }
  }
  return j;
}

inline void write_samples(const std::filesystem::path& path, const SampleSet& s, const GreedyResult* greedy = nullptr,
                          const json& config = json::object()) {
  write_json(path, samples_json(s, greedy, config));
}

inline SampleSet read_samples(const std::filesystem::path& path, const DenseMatrix& grid_coords) {
  const json j = read_json(path);
  return SampleSet::from_indices(j.at("indices").get<std::vector<Index>>(), grid_coords);
}

}  // namespace crom
