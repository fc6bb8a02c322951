// Copyright 2026 The GeoGNN Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "geognn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "geognn/errors.hpp"

namespace geognn {

using nlohmann::json;
using namespace detail;

namespace {

constexpr char kCheckpointMagic[4] = {'G', 'G', 'C', '1'};
constexpr char kBundleMagic[4] = {'G', 'G', 'F', '1'};
constexpr std::uint32_t kFormatVersion = 1;

json grid_json(const RbfGrid& g) { return {{"start", g.start}, {"stride", g.stride}, {"count", g.count}}; }

RbfGrid grid_from_json(const json& j, RbfGrid base) {
  base.start = j.value("start", base.start);
  base.stride = j.value("stride", base.stride);
  base.count = j.value("count", base.count);
  return base;
}

json blocks_json(const std::vector<FeatureBlock>& blocks) {
  json arr = json::array();
  for (const auto& b : blocks)
    arr.push_back({{"name", b.name}, {"offset", b.offset}, {"width", b.width}, {"one_hot", b.one_hot}});
  return arr;
}

void write_tensor_data(std::ostream& out, const Tensor& t, StorageType storage) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (storage == StorageType::kF64) put_f64(out, t[i]);
    else put_f32(out, static_cast<float>(t[i]));
  }
}

Tensor read_tensor_data(std::istream& in, std::size_t rows, std::size_t cols, StorageType storage) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = storage == StorageType::kF64 ? get_f64(in) : static_cast<double>(get_f32(in));
  return t;
}

void expect_magic(std::istream& in, const char (&magic)[4], const std::filesystem::path& path) {
  char got[4] = {};
  in.read(got, 4);
  if (!in || std::string(got, 4) != std::string(magic, 4)) {
    throw DataError(path.string() + ": not a " + std::string(magic, 4) + " file");
  }
  const auto version = get_uint<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw DataError(path.string() + ": unsupported format version " + std::to_string(version));
  }
}

void put_u32_vector(std::ostream& out, const std::vector<std::uint32_t>& v) {
  put_uint<std::uint64_t>(out, v.size());
  for (auto x : v) put_uint<std::uint32_t>(out, x);
}

std::vector<std::uint32_t> get_u32_vector(std::istream& in) {
  const auto n = get_uint<std::uint64_t>(in);
  std::vector<std::uint32_t> v;
  v.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20)));
  for (std::uint64_t i = 0; i < n; ++i) v.push_back(get_uint<std::uint32_t>(in));
  return v;
}

void put_matrix(std::ostream& out, const Tensor& t) {
  put_uint<std::uint64_t>(out, t.rows());
  put_uint<std::uint64_t>(out, t.cols());
  write_tensor_data(out, t, StorageType::kF64);
}

Tensor get_matrix(std::istream& in) {
  const auto rows = get_uint<std::uint64_t>(in);
  const auto cols = get_uint<std::uint64_t>(in);
  if (rows > (1u << 24) || cols > (1u << 24)) throw DataError("implausible tensor shape in bundle");
  return read_tensor_data(in, rows, cols, StorageType::kF64);
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"num_blocks", c.num_blocks},
          {"hidden", c.hidden},
          {"dropout", c.dropout},
          {"distance_bins", c.distance_bins},
          {"geometry_head_hidden", c.geometry_head_hidden},
          {"downstream_hidden", c.downstream_hidden},
          {"num_tasks", c.num_tasks},
          {"fingerprint_bits", c.fingerprint_bits},
          {"sequential_update", c.sequential_update}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.distance_bins = j.value("distance_bins", c.distance_bins);
  c.geometry_head_hidden = j.value("geometry_head_hidden", c.geometry_head_hidden);
  c.downstream_hidden = j.value("downstream_hidden", c.downstream_hidden);
  c.num_tasks = j.value("num_tasks", c.num_tasks);
  c.fingerprint_bits = j.value("fingerprint_bits", c.fingerprint_bits);
  c.sequential_update = j.value("sequential_update", c.sequential_update);
  return c;
}

json to_json(const FeatureConfig& c) {
  return {{"length_grid", grid_json(c.length_grid)},
          {"angle_grid", grid_json(c.angle_grid)},
          {"gamma", c.gamma},
          {"geometry", c.geometry}};
}

FeatureConfig feature_config_from_json(const json& j, FeatureConfig c) {
  if (j.contains("length_grid")) c.length_grid = grid_from_json(j["length_grid"], c.length_grid);
  if (j.contains("angle_grid")) c.angle_grid = grid_from_json(j["angle_grid"], c.angle_grid);
  c.gamma = j.value("gamma", c.gamma);
  c.geometry = j.value("geometry", c.geometry);
  return c;
}

json to_json(const TaskSelection& t) {
  json tasks = json::array();
  if (t.length) tasks.push_back("length");
  if (t.angle) tasks.push_back("angle");
  if (t.distance) tasks.push_back("distance");
  if (t.fingerprint) tasks.push_back("fingerprint");
  return {{"tasks", tasks},
          {"mask_ratio", t.mask_ratio},
          {"fingerprint_weight", t.fingerprint_weight},
          {"max_distance_pairs", t.max_distance_pairs}};
}

TaskSelection task_selection_from_json(const json& j, TaskSelection t) {
  if (j.contains("tasks")) {
    std::string list;
    for (const auto& name : j["tasks"]) list += name.get<std::string>() + ",";
    t = parse_task_list(list, t);
  }
  t.mask_ratio = j.value("mask_ratio", t.mask_ratio);
  t.fingerprint_weight = j.value("fingerprint_weight", t.fingerprint_weight);
  t.max_distance_pairs = j.value("max_distance_pairs", t.max_distance_pairs);
  return t;
}

json feature_manifest(const FeatureConfig& c) {
  const FeatureLayout layout = feature_layout(c);
  return {{"rbf", to_json(c)},
          {"atom", blocks_json(layout.atom)},
          {"bond", blocks_json(layout.bond)},
          {"angle", blocks_json(layout.angle)},
          {"mask_indicator", "appended"}};
}

void require_compatible_manifest(const json& expected, const json& actual) {
  const json patch = json::diff(expected, actual);
  if (patch.empty()) return;
  std::string msg = "feature manifest mismatch between checkpoint and featurizer config:";
  for (const auto& op : patch) {
    const std::string path = op.value("path", "");
    msg += "\n  " + op.value("op", "?") + " " + path;
    if (op.contains("value")) msg += " -> " + op["value"].dump();
    const json::json_pointer ptr(path);
    if (expected.contains(ptr)) msg += " (expected " + expected.at(ptr).dump() + ")";
  }
  throw ConfigError(msg);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt, StorageType storage) {
  std::ostringstream out(std::ios::binary);
  out.write(kCheckpointMagic, 4);
  put_uint<std::uint32_t>(out, kFormatVersion);
  put_string32(out, to_json(ckpt.model).dump());
  put_string32(out, feature_manifest(ckpt.features).dump());
  put_string32(out, ckpt.meta.dump());
  put_uint<std::uint64_t>(out, ckpt.epoch);
  put_uint<std::uint64_t>(out, ckpt.adam_step);
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const Parameter& p : ckpt.params) {
    put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(storage));
    put_uint<std::uint8_t>(out, 2);
    put_uint<std::uint64_t>(out, p.value.rows());
    put_uint<std::uint64_t>(out, p.value.cols());
    write_tensor_data(out, p.value, storage);
    write_tensor_data(out, p.moment1, storage);
    write_tensor_data(out, p.moment2, storage);
  }
  write_file_atomic(path, out.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  expect_magic(in, kCheckpointMagic, path);
  Checkpoint ckpt;
  try {
    ckpt.model = model_config_from_json(json::parse(get_string32(in)));
    const json manifest = json::parse(get_string32(in));
    ckpt.features = feature_config_from_json(manifest.at("rbf"));
    require_compatible_manifest(feature_manifest(ckpt.features), manifest);
    ckpt.meta = json::parse(get_string32(in));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  ckpt.epoch = get_uint<std::uint64_t>(in);
  ckpt.adam_step = get_uint<std::uint64_t>(in);
  const auto count = get_uint<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get_uint<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto storage = static_cast<StorageType>(get_uint<std::uint8_t>(in));
    if (storage != StorageType::kF64 && storage != StorageType::kF32) {
      throw DataError(path.string() + ": unknown dtype for " + name);
    }
    const auto rank = get_uint<std::uint8_t>(in);
    if (rank != 2) throw DataError(path.string() + ": unsupported rank for " + name);
    const auto rows = get_uint<std::uint64_t>(in);
    const auto cols = get_uint<std::uint64_t>(in);
    if (rows * cols > (std::uint64_t{1} << 28)) throw DataError(path.string() + ": implausible shape for " + name);
    Tensor value = read_tensor_data(in, rows, cols, storage);
    Tensor m1 = read_tensor_data(in, rows, cols, storage);
    Tensor m2 = read_tensor_data(in, rows, cols, storage);
    const std::size_t idx = ckpt.params.add(name, std::move(value));
    ckpt.params[idx].moment1 = std::move(m1);
    ckpt.params[idx].moment2 = std::move(m2);
  }
  return ckpt;
}

void save_feature_bundle(const std::filesystem::path& path, const FeatureConfig& config,
                         const std::vector<Sample>& samples) {
  std::ostringstream out(std::ios::binary);
  out.write(kBundleMagic, 4);
  put_uint<std::uint32_t>(out, kFormatVersion);
  put_string32(out, feature_manifest(config).dump());
  put_uint<std::uint64_t>(out, samples.size());
  for (const Sample& s : samples) {
    put_string32(out, s.id);
    const DualGraph& g = s.graph;
    put_uint<std::uint64_t>(out, g.num_atoms);
    put_u32_vector(out, g.bond_a);
    put_u32_vector(out, g.bond_b);
    std::vector<std::uint32_t> angles;
    for (const BondAngle& a : g.angles) angles.insert(angles.end(), {a.center, a.end1, a.end2, a.bond1, a.bond2});
    put_u32_vector(out, angles);
    put_matrix(out, Tensor(1, g.lengths.size(), g.lengths));
    put_matrix(out, Tensor(1, g.angle_values.size(), g.angle_values));
    put_matrix(out, g.distances);
    put_matrix(out, s.encoded.atom_features);
    put_matrix(out, s.encoded.bond_features);
    put_matrix(out, s.encoded.angle_features);
    if (s.fingerprint) {
      put_uint<std::uint8_t>(out, 1);
      put_u32_vector(out, std::vector<std::uint32_t>(s.fingerprint->begin(), s.fingerprint->end()));
    } else {
      put_uint<std::uint8_t>(out, 0);
    }
  }
  write_file_atomic(path, out.str());
}

std::vector<Sample> load_feature_bundle(const std::filesystem::path& path, FeatureConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature bundle " + path.string());
  expect_magic(in, kBundleMagic, path);
  const json manifest = json::parse(get_string32(in));
  const FeatureConfig fc = feature_config_from_json(manifest.at("rbf"));
  require_compatible_manifest(feature_manifest(fc), manifest);
  if (config) *config = fc;
  const auto count = get_uint<std::uint64_t>(in);
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.id = get_string32(in);
    DualGraph& g = s.graph;
    g.num_atoms = get_uint<std::uint64_t>(in);
    g.bond_a = get_u32_vector(in);
    g.bond_b = get_u32_vector(in);
    const auto angles = get_u32_vector(in);
    if (g.bond_a.size() != g.bond_b.size() || angles.size() % 5 != 0) throw DataError("corrupt feature bundle");
    for (std::size_t k = 0; k < angles.size(); k += 5)
      g.angles.push_back({angles[k], angles[k + 1], angles[k + 2], angles[k + 3], angles[k + 4]});
    const Tensor lengths = get_matrix(in);
    const Tensor angle_values = get_matrix(in);
    g.lengths.assign(lengths.values().begin(), lengths.values().end());
    g.angle_values.assign(angle_values.values().begin(), angle_values.values().end());
    g.distances = get_matrix(in);
    s.encoded.atom_features = get_matrix(in);
    s.encoded.bond_features = get_matrix(in);
    s.encoded.angle_features = get_matrix(in);
    s.encoded.atom_masked.assign(g.num_atoms, 0);
    s.encoded.bond_masked.assign(g.num_bonds(), 0);
    s.encoded.angle_masked.assign(g.num_angles(), 0);
    if (get_uint<std::uint8_t>(in) != 0) {
      const auto bits = get_u32_vector(in);
      s.fingerprint = std::vector<std::uint8_t>(bits.begin(), bits.end());
    }
    index_messages(g);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace geognn
