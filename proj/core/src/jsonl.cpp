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

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geognn/mol_io.hpp"

namespace geognn {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& require(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing required key '") + key + "' in " + where);
  return *it;
}

template <class E>
E enum_or(const json& obj, const char* key, std::optional<E> (*parse)(std::string_view), E fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  const auto s = it->get<std::string>();
  const auto v = parse(s);
  if (!v) throw DataError(std::string("unknown value '") + s + "' for '" + key + "'");
  return *v;
}

Molecule molecule_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  Molecule mol;
  mol.id = require(j, "id", "molecule").get<std::string>();
  for (const json& ja : require(j, "atoms", "molecule")) {
    Atom a;
    const auto symbol = require(ja, "element", "atom").get<std::string>();
    a.atomic_number = atomic_number_from_symbol(symbol);
    if (a.atomic_number == 0) throw DataError("unknown element symbol '" + symbol + "'");
    a.formal_charge = ja.value("formal_charge", 0);
    a.chirality = enum_or(ja, "chirality", &parse_chirality, Chirality::kUnspecified);
    a.aromatic = ja.value("aromatic", false);
    a.num_explicit_h = ja.value("num_h", 0);
    a.hybridization = enum_or(ja, "hybridization", &parse_hybridization, Hybridization::kUnknown);
    mol.atoms.push_back(a);
  }
  for (const json& jb : require(j, "bonds", "molecule")) {
    Bond b;
    const int a = require(jb, "a", "bond").get<int>();
    const int c = require(jb, "b", "bond").get<int>();
    if (a < 0 || c < 0) throw DataError("bond endpoint is negative");
    b.a = static_cast<std::uint32_t>(a);
    b.b = static_cast<std::uint32_t>(c);
    const auto type = require(jb, "type", "bond").get<std::string>();
    const auto t = parse_bond_type(type);
    if (!t) throw DataError("unknown bond type '" + type + "'");
    b.type = *t;
    b.dir = enum_or(jb, "dir", &parse_bond_dir, BondDir::kNone);
    mol.bonds.push_back(b);
  }
  for (const json& jc : require(j, "coords", "molecule")) {
    if (!jc.is_array() || jc.size() != 3) throw DataError("coordinate is not an [x, y, z] triple");
    mol.coords.push_back({jc[0].get<double>(), jc[1].get<double>(), jc[2].get<double>()});
  }
  if (mol.coords.size() != mol.atoms.size()) {
    throw DataError("coords/atoms length mismatch: " + std::to_string(mol.coords.size()) + " vs " +
                    std::to_string(mol.atoms.size()));
  }
  if (auto it = j.find("labels"); it != j.end() && !it->is_null()) {
    for (auto& [task, value] : it->items()) {
      if (value.is_null()) mol.labels[task] = std::nullopt;
      else mol.labels[task] = value.get<double>();
    }
  }
  if (auto it = j.find("fingerprint"); it != j.end() && !it->is_null()) {
    std::vector<std::uint8_t> bits;
    for (const json& bit : *it) {
      const int v = bit.get<int>();
      if (v != 0 && v != 1) throw DataError("fingerprint bit not in {0,1}");
      bits.push_back(static_cast<std::uint8_t>(v));
    }
    mol.fingerprint = std::move(bits);
  }
  if (auto it = j.find("split"); it != j.end() && !it->is_null()) {
    const auto s = it->get<std::string>();
    mol.split = parse_split(s);
    if (!mol.split) throw DataError("unknown split tag '" + s + "'");
  }
  validate(mol);
  const auto ring = ring_membership(mol);
  for (std::size_t i = 0; i < mol.bonds.size(); ++i) mol.bonds[i].in_ring = ring[i];
  return mol;
}

ReadResult read_jsonl_impl(std::string_view text, bool stop_on_error) {
  ReadResult result;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      try {
        result.molecules.push_back(molecule_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        throw DataError(e.what());
      }
    } catch (const DataError& e) {
      ParseError err(line_no, e.what());
      if (stop_on_error) throw err;
      result.errors.push_back(err);
    }
  }
  return result;
}

}  // namespace

std::vector<Molecule> parse_jsonl(std::string_view text) { return read_jsonl_impl(text, true).molecules; }

ReadResult read_jsonl_lenient(std::string_view text) { return read_jsonl_impl(text, false); }

std::string to_json_line(const Molecule& mol) {
  validate(mol);
  ordered_json j;
  j["id"] = mol.id;
  j["atoms"] = ordered_json::array();
  for (const Atom& a : mol.atoms) {
    j["atoms"].push_back({{"element", element_symbol(a.atomic_number)},
                          {"formal_charge", a.formal_charge},
                          {"chirality", to_string(a.chirality)},
                          {"aromatic", a.aromatic},
                          {"num_h", a.num_explicit_h},
                          {"hybridization", to_string(a.hybridization)}});
  }
  j["bonds"] = ordered_json::array();
  for (const Bond& b : mol.bonds) {
    j["bonds"].push_back({{"a", b.a}, {"b", b.b}, {"type", to_string(b.type)}, {"dir", to_string(b.dir)}});
  }
  j["coords"] = ordered_json::array();
  for (const Vec3& p : mol.coords) j["coords"].push_back({p.x, p.y, p.z});
  j["labels"] = ordered_json::object();
  for (const auto& [task, value] : mol.labels) {
    if (value) j["labels"][task] = *value;
    else j["labels"][task] = nullptr;
  }
  if (mol.fingerprint) j["fingerprint"] = *mol.fingerprint;
  if (mol.split) j["split"] = to_string(*mol.split);
  return j.dump();
}

std::string write_jsonl(std::span<const Molecule> molecules) {
  std::string out;
  for (const Molecule& m : molecules) {
    out += to_json_line(m);
    out += '\n';
  }
  return out;
}

MoleculeFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".sdf" || ext == ".mol" || ext == ".sd") return MoleculeFormat::kSdf;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return MoleculeFormat::kJsonl;
  throw ConfigError("cannot infer molecule format from extension of " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReadResult read_molecules(const std::filesystem::path& path, bool strict) {
  const std::string text = read_text_file(path);
  if (format_for_path(path) == MoleculeFormat::kSdf) {
    if (strict) return {parse_sdf(text), {}};
    return read_sdf_lenient(text);
  }
  if (strict) return {parse_jsonl(text), {}};
  return read_jsonl_lenient(text);
}

}  // namespace geognn
