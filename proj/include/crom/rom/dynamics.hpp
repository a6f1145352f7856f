#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crom/rom/field.hpp"

namespace crom {

enum class InversionMode { GaussNewton, Linearized };
enum class GradientMode { StencilOnNetwork, AnalyticFirstOrder };

inline std::string to_string(InversionMode m) { return m == InversionMode::GaussNewton ? "gauss_newton" : "linearized"; }
inline InversionMode inversion_mode_from_string(const std::string& s) {
  if (s == "gauss_newton" || s == "gn") return InversionMode::GaussNewton;
  if (s == "linearized" || s == "lls") return InversionMode::Linearized;
  throw ContractViolation("unknown inversion mode '" + s + "'");
}

struct InversionConfig {
  InversionMode mode = InversionMode::GaussNewton;
  int max_iterations = 10;
  double tolerance = 1e-10;          // stop when the squared residual drops by less than this
  double backtrack = 0.5;
  double min_step = 1e-6;
  double lambda_reg = 0.0;
  double gradient_tolerance = 1e-8;  // stop when |J^T R| <= tol * |J|_F * |R|

  void validate() const {
    CROM_EXPECT(max_iterations >= 0, "inversion: max_iterations must be >= 0");
    CROM_EXPECT(tolerance > 0.0 && gradient_tolerance > 0.0, "inversion: tolerances must be positive");
    CROM_EXPECT(backtrack > 0.0 && backtrack < 1.0, "inversion: backtracking factor must lie in (0, 1)");
    CROM_EXPECT(min_step > 0.0 && min_step <= 1.0, "inversion: min_step must lie in (0, 1]");
    CROM_EXPECT(lambda_reg >= 0.0, "inversion: lambda_reg must be non-negative");
  }
};

struct LatentState {
  Vector q;
  std::optional<Vector> q_prev;
  Index n = 0;

  /// Finite-difference latent velocity; zero before the first step.
  Vector q_dot(double dt) const {
    if (!q_prev || dt <= 0.0) return Vector::Zero(q.size());
    return (q - *q_prev) / dt;
  }
};

struct SampleSet {
  std::vector<Index> indices;
  DenseMatrix coords;  // |M| x m

  Index size() const { return static_cast<Index>(indices.size()); }

  static SampleSet from_indices(std::vector<Index> idx, const DenseMatrix& grid_coords) {
    SampleSet s;
    s.indices = std::move(idx);
    s.validate(grid_coords.rows());
    s.coords.resize(s.size(), grid_coords.cols());
    for (Index k = 0; k < s.size(); ++k) s.coords.row(k) = grid_coords.row(s.indices[static_cast<std::size_t>(k)]);
    return s;
  }

  void validate(Index points) const {
    CROM_EXPECT(!indices.empty(), "sample set is empty");
    std::vector<Index> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    CROM_EXPECT(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "sample indices must be unique");
    CROM_EXPECT(sorted.front() >= 0 && sorted.back() < points, "sample index out of range");
  }
};

/// |M| * d >= r, the necessary condition for a determined inversion.
inline void require_well_posed(Index samples, Index d, Index r) {
  if (samples * d < r)
    throw WellPosednessError("|M| * d = " + std::to_string(samples * d) + " is smaller than r = " + std::to_string(r) +
                             "; the inversion would be underdetermined");
}

struct InversionReport {
  Vector q;
  int iterations = 0;
  double residual = 0.0;              // final objective (squared residual plus proximal term)
  bool converged = false;
  bool regularized = false;
  bool line_search_exhausted = false;
  std::vector<double> history;        // objective of each accepted iterate, starting at q_init
};

/// Gauss-Newton with backtracking on sum_j |g(y_j, q) - f_j|^2 + lambda_reg |q - q_init|^2, starting at q_init.
/// The proximal term is the Tikhonov form of the linearized step, which is exactly the first iterate here.
template <FieldModel F>
InversionReport invert_gauss_newton(const F& field, std::span<const Index> nodes, const Vector& targets,
                                    const Vector& q_init, const InversionConfig& cfg) {
  CROM_EXPECT(targets.size() == static_cast<Index>(nodes.size()) * field.channels(),
              "invert_gauss_newton: target size mismatch");
  CROM_EXPECT(q_init.size() == field.latent_dim(), "invert_gauss_newton: latent size mismatch");
  const Index r = q_init.size();
  const Index rows = targets.size();
  const double sqrt_lambda = std::sqrt(cfg.lambda_reg);
  const bool proximal = cfg.lambda_reg > 0.0;
  InversionReport rep;
  rep.q = q_init;
  Vector values;
  DenseMatrix jac = field.latent_jacobian(nodes, rep.q, &values);
  // Augmented residual [g - f; sqrt(lambda) (q - q_init)] and its jacobian [J; sqrt(lambda) I].
  auto augment = [&](const Vector& vals, const Vector& q) {
    Vector res(rows + (proximal ? r : 0));
    res.head(rows) = vals - targets;
    if (proximal) res.tail(r) = sqrt_lambda * (q - q_init);
    return res;
  };
  auto augment_jac = [&](const DenseMatrix& j) {
    if (!proximal) return j;
    DenseMatrix a(rows + r, r);
    a.topRows(rows) = j;
    a.bottomRows(r) = sqrt_lambda * DenseMatrix::Identity(r, r);
    return a;
  };
  DenseMatrix a = augment_jac(jac);
  Vector res = augment(values, rep.q);
  double s = res.squaredNorm();
  rep.history.push_back(s);
  if (!std::isfinite(s)) {
    rep.residual = s;
    return rep;
  }
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double gnorm = (a.transpose() * res).norm();
    if (s == 0.0 || gnorm <= cfg.gradient_tolerance * a.norm() * res.norm()) {
      rep.converged = true;
      break;
    }
    const NormalSolve ns = solve_normal_equations(a, -res, 0.0);
    rep.regularized = rep.regularized || ns.regularized;
    double alpha = 1.0;
    bool accepted = false;
    Vector q_try;
    double s_try = 0.0;
    while (alpha >= cfg.min_step) {
      q_try = rep.q + alpha * ns.x;
      s_try = augment(field.values(nodes, q_try), q_try).squaredNorm();
      if (std::isfinite(s_try) && s_try < s) {
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) {
      rep.line_search_exhausted = true;
      break;
    }
    const double decrease = s - s_try;
    rep.q = q_try;
    s = s_try;
    ++rep.iterations;
    rep.history.push_back(s);
    if (decrease < cfg.tolerance) {
      rep.converged = true;
      break;
    }
    if (it + 1 < cfg.max_iterations) {
      jac = field.latent_jacobian(nodes, rep.q, &values);
      a = augment_jac(jac);
      res = augment(values, rep.q);
    }
  }
  rep.residual = s;
  return rep;
}

struct LinearizedStep {
  Vector dq;
  bool regularized = false;
};

/// Closed-form dq = (J^T J)^-1 J^T df with J = dg/dq at q_n.
template <FieldModel F>
LinearizedStep invert_linearized(const F& field, std::span<const Index> nodes, const Vector& delta_targets,
                                 const Vector& q_n, double lambda_reg = 0.0) {
  CROM_EXPECT(delta_targets.size() == static_cast<Index>(nodes.size()) * field.channels(),
              "invert_linearized: target size mismatch");
  const DenseMatrix jac = field.latent_jacobian(nodes, q_n, nullptr);
  const NormalSolve ns = solve_normal_equations(jac, delta_targets, lambda_reg);
  return {ns.x, ns.regularized};
}

/// Full-space quantities gathered at the integration samples.
struct InferredSamples {
  std::vector<Index> stencil_nodes;  // sorted union of the nodes every sample update reads
  Vector stencil_values;             // field values there (boundary nodes carry their prescribed value)
  Vector values;                     // f at the samples
  DenseMatrix gradient;              // d f / d x at samples (AnalyticFirstOrder only), (|M| d) x m
  Vector rate;                       // (d g / d q) q_dot at samples, when requested
};

struct StepTiming {
  double inference = 0.0;
  double stepping = 0.0;
  double inversion = 0.0;

  StepTiming& operator+=(const StepTiming& o) {
    inference += o.inference, stepping += o.stepping, inversion += o.inversion;
    return *this;
  }
};

struct StepReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
  bool regularized = false;
  bool line_search_exhausted = false;
  StepTiming timing;
};

/// Latent dynamics of one PDE restricted to a sample set:
/// infer at samples, apply the explicit full-order update there, invert.
template <FieldModel F>
class RomStepper {
 public:
  RomStepper(const F& field, StepContext ctx, SampleSet samples, InversionConfig inversion,
             GradientMode gradient_mode = GradientMode::StencilOnNetwork, bool allow_underdetermined = false)
      : field_(&field), ctx_(std::move(ctx)), samples_(std::move(samples)), inv_(inversion), mode_(gradient_mode) {
    inv_.validate();
    CROM_EXPECT(field.point_count() == ctx_.spec.point_count(), "rom: model and PDE grids differ");
    samples_.validate(ctx_.spec.point_count());
    if (!allow_underdetermined) require_well_posed(samples_.size(), field.channels(), field.latent_dim());
    if (mode_ == GradientMode::AnalyticFirstOrder) {
      if constexpr (!requires(const F& f, std::span<const Index> n, const Vector& q) { f.spatial_gradient(n, q); })
        throw Unsupported("rom: this field model has no spatial gradient");
    }
    for (Index i : samples_.indices) {
      const auto st = ctx_.stencil(i);
      stencil_.insert(stencil_.end(), st.begin(), st.end());
    }
    stencil_.insert(stencil_.end(), samples_.indices.begin(), samples_.indices.end());
    std::sort(stencil_.begin(), stencil_.end());
    stencil_.erase(std::unique(stencil_.begin(), stencil_.end()), stencil_.end());
    for (std::size_t k = 0; k < stencil_.size(); ++k) slot_[stencil_[k]] = k;
  }

  const SampleSet& samples() const { return samples_; }
  const StepContext& context() const { return ctx_; }
  const F& field() const { return *field_; }
  const InversionConfig& inversion() const { return inv_; }

  /// Step 1: network inference at the samples and their stencil neighbours.
  InferredSamples infer(const LatentState& state, bool with_rate = false) const {
    InferredSamples out;
    out.stencil_nodes = stencil_;
    out.stencil_values = field_->values(stencil_, state.q);
    for (std::size_t k = 0; k < stencil_.size(); ++k)
      if (auto b = ctx_.boundary_value(stencil_[k])) out.stencil_values(static_cast<Index>(k)) = *b;
    out.values.resize(samples_.size());
    for (Index j = 0; j < samples_.size(); ++j)
      out.values(j) = out.stencil_values(static_cast<Index>(slot_.at(samples_.indices[static_cast<std::size_t>(j)])));
    if (mode_ == GradientMode::AnalyticFirstOrder) {
      if constexpr (requires(const F& f, std::span<const Index> n, const Vector& q) { f.spatial_gradient(n, q); })
        out.gradient = field_->spatial_gradient(samples_.indices, state.q);
    }
    if (with_rate) {
      const DenseMatrix jac = field_->latent_jacobian(samples_.indices, state.q, nullptr);
      out.rate = jac * state.q_dot(ctx_.spec.dt);
    }
    return out;
  }

  /// Step 2: the explicit update at every sample, reading inferred values.
  Vector update(const InferredSamples& inf) const {
    auto at = [&](Index j) { return inf.stencil_values(static_cast<Index>(slot_.at(j))); };
    Vector next(samples_.size());
    const double dt = ctx_.spec.dt;
    for (Index k = 0; k < samples_.size(); ++k) {
      const Index i = samples_.indices[static_cast<std::size_t>(k)];
      if (mode_ == GradientMode::AnalyticFirstOrder && inf.gradient.size() > 0 &&
          (ctx_.spec.kind == PdeKind::Advect1D || ctx_.spec.kind == PdeKind::Burgers1D)) {
        const double u = at(i), ux = inf.gradient(k, 0);
        if (ctx_.spec.kind == PdeKind::Advect1D) {
          next(k) = u - dt * ctx_.mu[0] * ux;
        } else if (auto b = ctx_.boundary_value(i)) {
          next(k) = *b;
        } else {
          const double x = static_cast<double>(i) * ctx_.spec.spacing(0);
          next(k) = u - dt * u * ux + dt * burgers_source(ctx_.mu[0], x);
        }
      } else {
        next(k) = ctx_.update_at(i, at);
      }
    }
    return next;
  }

  /// Steps 1-3 from `state`.
  LatentState step(const LatentState& state, StepReport* report = nullptr) const {
    using clock = std::chrono::steady_clock;
    StepReport rep;
    auto t0 = clock::now();
    const InferredSamples inf = infer(state);
    auto t1 = clock::now();
    const Vector targets = update(inf);
    auto t2 = clock::now();

    LatentState next;
    next.q_prev = state.q;
    next.n = state.n + 1;
    if (inv_.mode == InversionMode::GaussNewton) {
      const InversionReport ir = invert_gauss_newton(*field_, samples_.indices, targets, state.q, inv_);
      next.q = ir.q;
      rep.iterations = ir.iterations;
      rep.residual = ir.residual;
      rep.converged = ir.converged;
      rep.regularized = ir.regularized;
      rep.line_search_exhausted = ir.line_search_exhausted;
    } else {
      Vector current;
      const DenseMatrix jac = field_->latent_jacobian(samples_.indices, state.q, &current);
      const NormalSolve ns = solve_normal_equations(jac, targets - current, inv_.lambda_reg);
      next.q = state.q + ns.x;
      rep.iterations = 1;
      rep.regularized = ns.regularized;
      rep.residual = std::numeric_limits<double>::quiet_NaN();
    }
    auto t3 = clock::now();
    rep.timing.inference = std::chrono::duration<double>(t1 - t0).count();
    rep.timing.stepping = std::chrono::duration<double>(t2 - t1).count();
    rep.timing.inversion = std::chrono::duration<double>(t3 - t2).count();
    if (report) *report = rep;
    return next;
  }

 private:
  const F* field_;
  StepContext ctx_;
  SampleSet samples_;
  InversionConfig inv_;
  GradientMode mode_;
  std::vector<Index> stencil_;
  std::unordered_map<Index, std::size_t> slot_;
};

struct LatentRecord {
  Index n = 0;
  double t = 0.0;
  Vector q;
  int iterations = 0;
  double residual = 0.0;
};

struct RomRun {
  std::vector<LatentRecord> latents;
  DenseMatrix fields;                 // (P*d) x (steps+1) reconstructions, if recorded
  std::optional<Index> diverged_at;
  StepTiming timing;                  // summed over steps
  int unconverged_steps = 0;
  int regularized_steps = 0;

  DenseMatrix latent_matrix() const {
    DenseMatrix q(latents.empty() ? 0 : latents.front().q.size(), static_cast<Index>(latents.size()));
    for (std::size_t k = 0; k < latents.size(); ++k) q.col(static_cast<Index>(k)) = latents[k].q;
    return q;
  }
};

struct RomRunOptions {
  Index steps = 0;
  bool record_fields = true;
  double divergence_threshold = kDivergenceThreshold;
};

/// Runs `steps` latent steps from q0. Divergence (non-finite latent or sample
/// values beyond the threshold) stops the run and is reported, not thrown.
template <FieldModel F, class Reconstruct>
RomRun run_rom(const RomStepper<F>& stepper, const Vector& q0, const RomRunOptions& opt, Reconstruct&& reconstruct) {
  RomRun run;
  LatentState state{q0, std::nullopt, 0};
  const double dt = stepper.context().spec.dt;
  if (opt.record_fields) {
    run.fields.resize(stepper.field().point_count() * stepper.field().channels(), opt.steps + 1);
    run.fields.col(0) = reconstruct(q0);
  }
  run.latents.push_back({0, 0.0, q0, 0, 0.0});
  for (Index n = 1; n <= opt.steps; ++n) {
    StepReport rep;
    state = stepper.step(state, &rep);
    run.timing += rep.timing;
    if (!rep.converged) ++run.unconverged_steps;
    if (rep.regularized) ++run.regularized_steps;
    run.latents.push_back({n, static_cast<double>(n) * dt, state.q, rep.iterations, rep.residual});
    bool bad = !state.q.allFinite();
    if (!bad) {
      if (opt.record_fields) {
        run.fields.col(n) = reconstruct(state.q);
        bad = !run.fields.col(n).allFinite() || run.fields.col(n).cwiseAbs().maxCoeff() > opt.divergence_threshold;
      } else {
        const Vector v = stepper.field().values(stepper.samples().indices, state.q);
        bad = !v.allFinite() || v.cwiseAbs().maxCoeff() > opt.divergence_threshold;
      }
    }
    if (bad) {
      run.diverged_at = n;
      if (opt.record_fields) run.fields.conservativeResize(Eigen::NoChange, n + 1);
      break;
    }
  }
  return run;
}

template <FieldModel F>
RomRun run_rom(const RomStepper<F>& stepper, const Vector& q0, const RomRunOptions& opt) {
  const F& field = stepper.field();
  std::vector<Index> all(static_cast<std::size_t>(field.point_count()));
  for (Index i = 0; i < field.point_count(); ++i) all[static_cast<std::size_t>(i)] = i;
  return run_rom(stepper, q0, opt, [&](const Vector& q) { return field.values(all, q); });
}

/// Initial latent from the encoder applied to a raw (physical units) snapshot.
inline LatentState encode_initial(const EncoderNet& enc, const Standardization& stats, const Vector& raw_snapshot) {
  if (raw_snapshot.size() != enc.points * enc.channels)
    throw DiscretizationMismatch("encode_initial: snapshot has " + std::to_string(raw_snapshot.size()) +
                                 " values, encoder expects " + std::to_string(enc.points * enc.channels));
  const DenseMatrix normal = normalize_fields(stats, raw_snapshot, enc.channels);
  LatentState s;
  s.q = encoder_forward(enc, normal).col(0);
  return s;
}

/// latent.csv: n, t, q_1..q_r, gn_iterations, residual.
inline void write_latent_csv(const std::filesystem::path& path, const RomRun& run) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  const Index r = run.latents.empty() ? 0 : run.latents.front().q.size();
  out << "n,t";
  for (Index k = 1; k <= r; ++k) out << ",q" << k;
  out << ",gn_iterations,residual\n";
  for (const auto& rec : run.latents) {
    out << rec.n << ',' << rec.t;
    for (Index k = 0; k < r; ++k) out << ',' << rec.q(k);
    out << ',' << rec.iterations << ',' << rec.residual << '\n';
  }
}

}  // namespace crom
