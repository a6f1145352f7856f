#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crom/manifold/train.hpp"
#include "crom/numerics/serialize.hpp"
#include "crom/pde/archive.hpp"

namespace crom {

struct ManifoldModel {
  DecoderNet decoder;
  EncoderNet encoder;
};

/// Model directory: manifest.json plus weights.f64 holding, in order, the decoder
/// layers, each encoder convolution (weight row-major, then bias) and the encoder head.
inline void write_model(const std::filesystem::path& dir, const DecoderNet& dec, const EncoderNet& enc,
                        const json& extra = json::object()) {
  std::filesystem::create_directories(dir);
  std::vector<double> blob;
  append_flat(dec.mlp, blob);
  json convs = json::array();
  for (const auto& c : enc.convs) {
    for (Index i = 0; i < c.weight.rows(); ++i)
      for (Index j = 0; j < c.weight.cols(); ++j) blob.push_back(c.weight(i, j));
    for (Index i = 0; i < c.bias.size(); ++i) blob.push_back(c.bias(i));
    convs.push_back({{"in_channels", c.in_channels}, {"out_channels", c.out_channels}, {"kernel", c.kernel},
                     {"stride", c.stride}});
  }
  append_flat(enc.head, blob);
  json manifest = {{"format", "crom-model"},
                   {"version", 1},
                   {"byte_order", "little"},
                   {"m", dec.m},
                   {"r", dec.r},
                   {"d", dec.d},
                   {"beta", dec.beta},
                   {"activation", to_string(dec.mlp.activation.kind)},
                   {"omega0", dec.mlp.activation.omega0},
                   {"decoder", mlp_manifest(dec.mlp)},
                   {"encoder", {{"points", enc.points}, {"channels", enc.channels}, {"r", enc.r}, {"convs", convs},
                                {"head", mlp_manifest(enc.head)}}},
                   {"standardization", to_json(dec.stats)},
                   {"weights", "weights.f64"},
                   {"weight_count", blob.size()}};
  if (!extra.empty()) manifest["info"] = extra;
  write_f64_blob(dir / "weights.f64", blob);
  write_json(dir / "manifest.json", manifest);
}

inline ManifoldModel read_model(const std::filesystem::path& dir) {
  const json j = read_json(dir / "manifest.json");
  if (j.value("format", "") != "crom-model") throw IoError("not a model manifest: " + dir.string());
  if (j.value("byte_order", "little") != "little") throw IoError("unsupported byte order");
  const auto blob = read_f64_blob(dir / j.value("weights", std::string("weights.f64")));
  std::size_t off = 0;
  ManifoldModel mdl;
  mdl.decoder.mlp = mlp_from_manifest(j.at("decoder"), blob, off);
  mdl.decoder.m = j.at("m").get<Index>();
  mdl.decoder.r = j.at("r").get<Index>();
  mdl.decoder.d = j.at("d").get<Index>();
  mdl.decoder.beta = j.at("beta").get<Index>();
  mdl.decoder.stats = standardization_from_json(j.at("standardization"));
  const json& e = j.at("encoder");
  mdl.encoder.points = e.at("points").get<Index>();
  mdl.encoder.channels = e.at("channels").get<Index>();
  mdl.encoder.r = e.at("r").get<Index>();
  for (const auto& cj : e.at("convs")) {
    ConvLayer c;
    c.in_channels = cj.at("in_channels").get<Index>();
    c.out_channels = cj.at("out_channels").get<Index>();
    c.kernel = cj.at("kernel").get<Index>();
    c.stride = cj.at("stride").get<Index>();
    const Index cols = c.kernel * c.in_channels;
    if (off + static_cast<std::size_t>(c.out_channels * (cols + 1)) > blob.size())
      throw IoError("weight blob shorter than manifest");
    c.weight.resize(c.out_channels, cols);
    for (Index i = 0; i < c.out_channels; ++i)
      for (Index k = 0; k < cols; ++k) c.weight(i, k) = blob[off++];
    c.bias.resize(c.out_channels);
    for (Index i = 0; i < c.out_channels; ++i) c.bias(i) = blob[off++];
    mdl.encoder.convs.push_back(std::move(c));
  }
  mdl.encoder.head = mlp_from_manifest(e.at("head"), blob, off);
  if (off != blob.size()) throw IoError("weight blob longer than manifest");
  return mdl;
}

/// Training report: config echo plus per-stage loss curves.
inline json training_report(const TrainConfig& cfg, const TrainResult& res) {
  json stages = json::array();
  for (const auto& s : res.stages)
    stages.push_back({{"learning_rate", s.learning_rate}, {"epochs", s.epoch_loss.size()},
                      {"stopped_early", s.stopped_early}, {"loss", s.epoch_loss}});
  return {{"config",
           {{"r", cfg.r},
            {"beta", cfg.beta},
            {"activation", to_string(cfg.activation.kind)},
            {"learning_rate", cfg.learning_rate},
            {"schedule", cfg.schedule},
            {"epochs_per_stage", cfg.epochs_per_stage},
            {"batch_size", cfg.batch_size},
            {"points_per_snapshot", cfg.points_per_snapshot},
            {"seed", cfg.seed},
            {"early_stop", cfg.early_stop}}},
          {"stages", stages},
          {"final_loss", res.final_loss},
          {"decoder_parameters", res.decoder.parameter_count()},
          {"encoder_parameters", res.encoder.parameter_count()}};
}

}  // namespace crom
