#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crom/numerics/serialize.hpp"
#include "crom/pde/trajectory.hpp"

namespace crom {

inline json to_json(const PdeSpec& s) {
  return {{"kind", to_string(s.kind)}, {"extent", s.extent}, {"counts", s.counts},
          {"dt", s.dt},                {"steps", s.steps},   {"inflow", s.inflow}};
}

inline PdeSpec pde_spec_from_json(const json& j) {
  PdeSpec s;
  s.kind = pde_kind_from_string(j.at("kind").get<std::string>());
  s.extent = j.at("extent").get<std::vector<double>>();
  s.counts = j.at("counts").get<std::vector<Index>>();
  s.dt = j.at("dt").get<double>();
  s.steps = j.at("steps").get<Index>();
  s.inflow = j.value("inflow", 4.25);
  return s;
}

inline json to_json(const Standardization& st) {
  std::vector<int> floored(st.field_floored.begin(), st.field_floored.end());
  return {{"field_mean", st.field_mean},
          {"field_std", st.field_std},
          {"field_floored", floored},
          {"coord_mode", st.coord_mode == CoordMode::Standardize ? "standardize" : "unit_box"},
          {"coord_offset", st.coord_offset},
          {"coord_scale", st.coord_scale}};
}

inline Standardization standardization_from_json(const json& j) {
  Standardization st;
  st.field_mean = j.at("field_mean").get<std::vector<double>>();
  st.field_std = j.at("field_std").get<std::vector<double>>();
  for (int f : j.value("field_floored", std::vector<int>{})) st.field_floored.push_back(f != 0);
  st.field_floored.resize(st.field_mean.size(), false);
  st.coord_mode = j.at("coord_mode").get<std::string>() == "standardize" ? CoordMode::Standardize : CoordMode::UnitBox;
  st.coord_offset = j.at("coord_offset").get<std::vector<double>>();
  st.coord_scale = j.at("coord_scale").get<std::vector<double>>();
  return st;
}

/// Snapshot archive layout:
///   manifest.json  kind, grid, m, d, dt, T, parameter vectors, stats, byte order
///   coords.f64     P x m, node-major
///   traj_<k>.f64   (T+1) x P x d, time-major
inline void write_archive(const std::filesystem::path& dir, const TrajectoryDataset& ds) {
  std::filesystem::create_directories(dir);
  const Index p = ds.point_count(), m = ds.coords.cols();
  json manifest = {{"format", "crom-snapshots"},
                   {"version", 1},
                   {"byte_order", "little"},
                   {"spec", to_json(ds.spec)},
                   {"points", p},
                   {"m", m},
                   {"d", ds.spec.d()},
                   {"steps", ds.steps()},
                   {"parameters", json::array()},
                   {"trajectory_files", json::array()}};
  if (ds.stats) manifest["standardization"] = to_json(*ds.stats);

  std::vector<double> coords;
  coords.reserve(static_cast<std::size_t>(p * m));
  for (Index i = 0; i < p; ++i)
    for (Index a = 0; a < m; ++a) coords.push_back(ds.coords(i, a));
  write_f64_blob(dir / "coords.f64", coords);

  for (std::size_t k = 0; k < ds.trajectories.size(); ++k) {
    const auto& t = ds.trajectories[k];
    const std::string name = "traj_" + std::to_string(k) + ".f64";
    // Column-major storage of fields is already time-major.
    write_f64_blob(dir / name, std::vector<double>(t.fields.data(), t.fields.data() + t.fields.size()));
    manifest["parameters"].push_back(t.params);
    manifest["trajectory_files"].push_back(name);
  }
  write_json(dir / "manifest.json", manifest);
}

inline TrajectoryDataset read_archive(const std::filesystem::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.value("byte_order", "little") != "little") throw IoError("unsupported byte order");
  TrajectoryDataset ds;
  ds.spec = pde_spec_from_json(manifest.at("spec"));
  const Index p = manifest.at("points").get<Index>(), m = manifest.at("m").get<Index>();
  const Index d = manifest.at("d").get<Index>(), steps = manifest.at("steps").get<Index>();
  const auto coords = read_f64_blob(dir / "coords.f64");
  if (static_cast<Index>(coords.size()) != p * m) throw IoError("coords.f64 has wrong length");
  ds.coords.resize(p, m);
  for (Index i = 0; i < p; ++i)
    for (Index a = 0; a < m; ++a) ds.coords(i, a) = coords[static_cast<std::size_t>(i * m + a)];
  const auto& params = manifest.at("parameters");
  const auto& files = manifest.at("trajectory_files");
  for (std::size_t k = 0; k < files.size(); ++k) {
    const auto blob = read_f64_blob(dir / files[k].get<std::string>());
    if (static_cast<Index>(blob.size()) != (steps + 1) * p * d) throw IoError("trajectory file has wrong length");
    Trajectory t;
    t.params = params.at(k).get<std::vector<double>>();
    t.fields = Eigen::Map<const DenseMatrix>(blob.data(), p * d, steps + 1);
    ds.trajectories.push_back(std::move(t));
  }
  if (manifest.contains("standardization")) ds.stats = standardization_from_json(manifest["standardization"]);
  return ds;
}

}  // namespace crom
