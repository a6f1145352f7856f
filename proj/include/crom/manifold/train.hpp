#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "crom/manifold/networks.hpp"
#include "crom/manifold/standardize.hpp"

namespace crom {

struct TrainConfig {
  Index r = 1;
  Index beta = 20;
  Activation activation{ActivationKind::Elu};
  double learning_rate = 1e-4;
  std::vector<double> schedule{10.0, 5.0, 2.0, 1.0, 0.5, 0.2};
  Index epochs_per_stage = 2000;
  Index batch_size = 16;
  // Nodes sampled per snapshot in each mini-batch; 0 uses every node.
  Index points_per_snapshot = 0;
  std::uint64_t seed = 0;
  bool early_stop = true;
  double plateau_tolerance = 1e-6;
  Index plateau_window = 200;

  void validate() const {
    CROM_EXPECT(r >= 1 && beta >= 1, "train: r and beta must be >= 1");
    CROM_EXPECT(learning_rate > 0.0, "train: learning rate must be positive");
    CROM_EXPECT(!schedule.empty(), "train: empty learning-rate schedule");
    for (double s : schedule) CROM_EXPECT(s > 0.0, "train: schedule multipliers must be positive");
    CROM_EXPECT(epochs_per_stage >= 1 && batch_size >= 1, "train: epochs and batch size must be >= 1");
  }

  /// The schedule used for the published results (30 000 epochs per stage, no early stop).
  static TrainConfig paper_schedule(Index r, Index beta, Activation act) {
    TrainConfig c;
    c.r = r, c.beta = beta, c.activation = act;
    c.epochs_per_stage = 30000;
    c.early_stop = false;
    return c;
  }
};

struct StageHistory {
  double learning_rate = 0.0;
  std::vector<double> epoch_loss;  // mean mini-batch MSE per epoch (normalized units)
  bool stopped_early = false;
};

struct TrainResult {
  DecoderNet decoder;
  EncoderNet encoder;
  std::vector<StageHistory> stages;
  double final_loss = 0.0;  // full-dataset MSE after training (normalized units)
};

/// Raised when the loss turns NaN; carries the last parameters with a finite loss.
class TrainingAborted : public TrainingDivergence {
 public:
  TrainingAborted(const std::string& what, std::shared_ptr<TrainResult> checkpoint)
      : TrainingDivergence(what), checkpoint_(std::move(checkpoint)) {}
  const TrainResult& checkpoint() const { return *checkpoint_; }

 private:
  std::shared_ptr<TrainResult> checkpoint_;
};

/// MSE of g(x, e(f)) against f over every node and snapshot of a normalized dataset.
inline double reconstruction_mse(const DecoderNet& dec, const EncoderNet& enc, const TrajectoryDataset& normal) {
  double sq = 0.0, count = 0.0;
  for (const auto& t : normal.trajectories) {
    const DenseMatrix q = encoder_forward(enc, t.fields);
    for (Index n = 0; n < t.fields.cols(); ++n) {
      const Vector rec = decode_nodes(dec, normal.coords, q.col(n));
      sq += (rec - t.fields.col(n)).squaredNorm();
      count += static_cast<double>(rec.size());
    }
  }
  return sq / count;
}

/// Jointly trains decoder and encoder on the reconstruction loss
///   sum_i sum_n sum_mu || g(x_i, e(f_n)) - f(x_i, t_n) ||^2
/// with Adam over the staged learning-rate schedule. `normal` must be standardized.
inline TrainResult train_manifold(const TrajectoryDataset& normal, const TrainConfig& cfg,
                                  const std::function<void(std::size_t, Index, double)>& on_epoch = {}) {
  cfg.validate();
  CROM_EXPECT(normal.stats.has_value(), "train_manifold: dataset must be standardized first");
  CROM_EXPECT(normal.snapshot_count() > 0, "train_manifold: no snapshots");
  const Index p = normal.point_count(), m = normal.coords.cols(), d = normal.spec.d(), r = cfg.r;

  std::mt19937_64 rng(cfg.seed);
  ManifoldParams params{make_decoder_mlp(m, r, d, cfg.beta, cfg.activation, rng), make_encoder(p, d, r, rng)};
  AdamState<ManifoldParams> adam(params, cfg.learning_rate);

  const DenseMatrix snapshots = normal.snapshot_matrix();
  const Index total = snapshots.cols();
  const Index per_snap = cfg.points_per_snapshot > 0 ? std::min(cfg.points_per_snapshot, p) : p;
  const DenseMatrix coords_t = normal.coords.transpose();  // m x P

  auto package = [&](const ManifoldParams& ps) {
    auto res = std::make_shared<TrainResult>();
    res->decoder.mlp = ps.decoder;
    res->decoder.m = m, res->decoder.r = r, res->decoder.d = d, res->decoder.beta = cfg.beta;
    res->decoder.stats = *normal.stats;
    res->encoder = ps.encoder;
    return res;
  };

  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::vector<Index> nodes(static_cast<std::size_t>(p));
  std::iota(nodes.begin(), nodes.end(), 0);

  TrainResult result;
  ManifoldParams last_good = params;
  EncoderCache enc_cache;
  MlpCache dec_cache;
  for (std::size_t stage = 0; stage < cfg.schedule.size(); ++stage) {
    StageHistory hist;
    hist.learning_rate = cfg.learning_rate * cfg.schedule[stage];
    adam.learning_rate = hist.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    Index best_epoch = 0;
    for (Index epoch = 0; epoch < cfg.epochs_per_stage; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double loss_sum = 0.0;
      Index batches = 0;
      for (Index start = 0; start < total; start += cfg.batch_size) {
        const Index b = std::min(cfg.batch_size, total - start);
        DenseMatrix batch(snapshots.rows(), b);
        for (Index k = 0; k < b; ++k) batch.col(k) = snapshots.col(order[static_cast<std::size_t>(start + k)]);

        const DenseMatrix q = encoder_forward(params.encoder, batch, &enc_cache);
        DenseMatrix in(m + r, b * per_snap);
        DenseMatrix target(d, b * per_snap);
        for (Index k = 0; k < b; ++k) {
          if (per_snap < p) {
            for (Index j = 0; j < per_snap; ++j) {
              std::uniform_int_distribution<Index> pick(j, p - 1);
              std::swap(nodes[static_cast<std::size_t>(j)], nodes[static_cast<std::size_t>(pick(rng))]);
            }
          }
          for (Index j = 0; j < per_snap; ++j) {
            const Index i = nodes[static_cast<std::size_t>(j)];
            const Index col = k * per_snap + j;
            in.col(col).head(m) = coords_t.col(i);
            in.col(col).tail(r) = q.col(k);
            target.col(col) = batch.col(k).segment(i * d, d);
          }
        }
        const DenseMatrix pred = mlp_forward_batch(params.decoder, in, &dec_cache);
        const DenseMatrix diff = pred - target;
        const double count = static_cast<double>(diff.size());
        const double loss = diff.squaredNorm() / count;
        if (!std::isfinite(loss)) {
          auto ckpt = package(last_good);
          throw TrainingAborted("train_manifold: loss became non-finite", ckpt);
        }
        last_good = params;
        DenseMatrix in_grad;
        ManifoldParams grads;
        grads.decoder = mlp_backprop(params.decoder, dec_cache, (2.0 / count) * diff, &in_grad);
        DenseMatrix gq = DenseMatrix::Zero(r, b);
        for (Index k = 0; k < b; ++k) gq.col(k) = in_grad.block(m, k * per_snap, r, per_snap).rowwise().sum();
        grads.encoder = encoder_backprop(params.encoder, enc_cache, gq);
        adam_step(adam, params, grads);
        loss_sum += loss;
        ++batches;
      }
      const double epoch_loss = loss_sum / static_cast<double>(batches);
      hist.epoch_loss.push_back(epoch_loss);
      if (on_epoch) on_epoch(stage, epoch, epoch_loss);
      if (epoch_loss < best * (1.0 - cfg.plateau_tolerance)) {
        best = epoch_loss;
        best_epoch = epoch;
      } else if (cfg.early_stop && epoch - best_epoch >= cfg.plateau_window) {
        hist.stopped_early = true;
        break;
      }
    }
    result.stages.push_back(std::move(hist));
  }

  auto packaged = package(params);
  result.decoder = std::move(packaged->decoder);
  result.encoder = std::move(packaged->encoder);
  result.final_loss = reconstruction_mse(result.decoder, result.encoder, normal);
  return result;
}

}  // namespace crom
