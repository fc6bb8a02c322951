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

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geognn/errors.hpp"
#include "geognn/molecule.hpp"

namespace geognn {

// Outcome of a lenient read: every record that parsed, plus one error per
// record that did not.
struct ReadResult {
  std::vector<Molecule> molecules;
  std::vector<ParseError> errors;
};

// MDL MOL V2000 records separated by "$$$$". Ring membership, aromaticity,
// attached-hydrogen counts and hybridization are perceived from the bond
// block. SD data items become labels (numeric values), "split" and
// "fingerprint" (a 0/1 string).
std::vector<Molecule> parse_sdf(std::string_view text);
ReadResult read_sdf_lenient(std::string_view text);
std::string write_sdf(std::span<const Molecule> molecules);

// One JSON object per line; blank lines are skipped.
std::vector<Molecule> parse_jsonl(std::string_view text);
ReadResult read_jsonl_lenient(std::string_view text);
std::string write_jsonl(std::span<const Molecule> molecules);
std::string to_json_line(const Molecule& mol);

enum class MoleculeFormat { kSdf, kJsonl };

// Chooses the format from the file extension (.sdf/.mol vs .jsonl/.json).
MoleculeFormat format_for_path(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
ReadResult read_molecules(const std::filesystem::path& path, bool strict);

}  // namespace geognn
