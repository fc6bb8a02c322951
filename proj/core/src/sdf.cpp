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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "geognn/mol_io.hpp"

namespace geognn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view field(std::string_view line, std::size_t begin, std::size_t width) {
  if (begin >= line.size()) return {};
  return line.substr(begin, width);
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Splits text into lines without their terminators.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

Chirality chirality_from_parity(int parity) {
  switch (parity) {
    case 1: return Chirality::kCW;
    case 2: return Chirality::kCCW;
    case 3: return Chirality::kOther;
    default: return Chirality::kUnspecified;
  }
}

int parity_from_chirality(Chirality c) {
  switch (c) {
    case Chirality::kCW: return 1;
    case Chirality::kCCW: return 2;
    case Chirality::kOther: return 3;
    default: return 0;
  }
}

int charge_from_code(int code) {
  switch (code) {
    case 1: return 3;
    case 2: return 2;
    case 3: return 1;
    case 5: return -1;
    case 6: return -2;
    case 7: return -3;
    default: return 0;
  }
}

BondDir dir_from_stereo(BondType type, int stereo) {
  if (type == BondType::kDouble) return stereo == 3 ? BondDir::kEitherDouble : BondDir::kNone;
  switch (stereo) {
    case 1: return BondDir::kBeginWedge;
    case 6: return BondDir::kBeginDash;
    case 4: return BondDir::kUnknown;
    default: return BondDir::kNone;
  }
}

int stereo_from_dir(BondDir dir) {
  switch (dir) {
    case BondDir::kBeginWedge: return 1;
    case BondDir::kBeginDash: return 6;
    case BondDir::kUnknown: return 4;
    case BondDir::kEitherDouble: return 3;
    default: return 0;
  }
}

// Parses one record spanning lines[begin, end). Line numbers are 1-based.
Molecule parse_record(const std::vector<std::string_view>& lines, std::size_t begin, std::size_t end,
                      std::size_t record_index) {
  auto line_no = [](std::size_t i) { return i + 1; };
  if (end - begin < 4) throw ParseError(line_no(std::min(end, lines.size() - 1)), "truncated header block");
  Molecule mol;
  mol.id = std::string(trim(lines[begin]));
  if (mol.id.empty()) mol.id = "mol" + std::to_string(record_index);

  const std::size_t counts_idx = begin + 3;
  const std::string_view counts = lines[counts_idx];
  if (counts.find("V3000") != std::string_view::npos) {
    throw ParseError(line_no(counts_idx), "V3000 molfiles are not supported");
  }
  if (counts.size() < 6) throw ParseError(line_no(counts_idx), "counts line shorter than 6 columns");
  const auto num_atoms = parse_number<int>(field(counts, 0, 3));
  const auto num_bonds = parse_number<int>(field(counts, 3, 3));
  if (!num_atoms || !num_bonds || *num_atoms < 0 || *num_bonds < 0) {
    throw ParseError(line_no(counts_idx), "malformed atom/bond counts");
  }
  const std::size_t atoms_begin = counts_idx + 1;
  const std::size_t bonds_begin = atoms_begin + static_cast<std::size_t>(*num_atoms);
  const std::size_t props_begin = bonds_begin + static_cast<std::size_t>(*num_bonds);
  if (props_begin > end) {
    throw ParseError(line_no(end - 1), "record ends before " + std::to_string(*num_atoms) + " atoms and " +
                                           std::to_string(*num_bonds) + " bonds were read");
  }

  std::vector<int> parities;
  for (std::size_t i = atoms_begin; i < bonds_begin; ++i) {
    const std::string_view l = lines[i];
    if (l.size() < 34) throw ParseError(line_no(i), "atom line shorter than 34 columns");
    const auto x = parse_number<double>(field(l, 0, 10));
    const auto y = parse_number<double>(field(l, 10, 10));
    const auto z = parse_number<double>(field(l, 20, 10));
    if (!x || !y || !z || !std::isfinite(*x) || !std::isfinite(*y) || !std::isfinite(*z)) {
      throw ParseError(line_no(i), "non-numeric coordinate");
    }
    const std::string symbol(trim(field(l, 31, 3)));
    const int zn = atomic_number_from_symbol(symbol);
    if (zn == 0) throw ParseError(line_no(i), "unknown element symbol '" + symbol + "'");
    Atom atom;
    atom.atomic_number = zn;
    atom.formal_charge = charge_from_code(parse_number<int>(field(l, 36, 3)).value_or(0));
    parities.push_back(parse_number<int>(field(l, 39, 3)).value_or(0));
    atom.chirality = chirality_from_parity(parities.back());
    mol.atoms.push_back(atom);
    mol.coords.push_back({*x, *y, *z});
  }

  std::vector<int> stereo;
  for (std::size_t i = bonds_begin; i < props_begin; ++i) {
    const std::string_view l = lines[i];
    if (l.size() < 9) throw ParseError(line_no(i), "bond line shorter than 9 columns");
    const auto a = parse_number<int>(field(l, 0, 3));
    const auto b = parse_number<int>(field(l, 3, 3));
    const auto t = parse_number<int>(field(l, 6, 3));
    if (!a || !b || !t) throw ParseError(line_no(i), "malformed bond line");
    if (*a < 1 || *b < 1 || *a > *num_atoms || *b > *num_atoms) {
      throw ParseError(line_no(i), "atom index out of range");
    }
    if (*a == *b) throw ParseError(line_no(i), "bond joins an atom to itself");
    if (*t < 1 || *t > 4) throw ParseError(line_no(i), "unsupported bond type " + std::to_string(*t));
    Bond bond;
    bond.a = static_cast<std::uint32_t>(*a - 1);
    bond.b = static_cast<std::uint32_t>(*b - 1);
    bond.type = static_cast<BondType>(*t - 1);
    bond.dir = dir_from_stereo(bond.type, parse_number<int>(field(l, 9, 3)).value_or(0));
    for (const Bond& prev : mol.bonds) {
      if (std::minmax(prev.a, prev.b) == std::minmax(bond.a, bond.b)) {
        throw ParseError(line_no(i), "duplicate bond " + std::to_string(*a) + "-" + std::to_string(*b));
      }
    }
    mol.bonds.push_back(bond);
  }

  // Property block. Any "M  CHG" line supersedes atom-block charges.
  std::size_t i = props_begin;
  bool saw_chg = false;
  bool saw_end = false;
  for (; i < end; ++i) {
    const std::string_view l = lines[i];
    if (l.starts_with("M  END")) {
      saw_end = true;
      ++i;
      break;
    }
    if (l.starts_with("M  CHG")) {
      if (!saw_chg) {
        for (Atom& a : mol.atoms) a.formal_charge = 0;
        saw_chg = true;
      }
      const auto n = parse_number<int>(field(l, 6, 3));
      if (!n || *n < 0 || *n > 8) throw ParseError(line_no(i), "malformed M  CHG entry count");
      for (int k = 0; k < *n; ++k) {
        const auto idx = parse_number<int>(field(l, 9 + 8 * k, 4));
        const auto val = parse_number<int>(field(l, 13 + 8 * k, 4));
        if (!idx || !val) throw ParseError(line_no(i), "malformed M  CHG entry");
        if (*idx < 1 || *idx > *num_atoms) throw ParseError(line_no(i), "atom index out of range");
        mol.atoms[static_cast<std::size_t>(*idx - 1)].formal_charge = *val;
      }
    }
  }
  if (!saw_end) throw ParseError(line_no(end - 1), "missing 'M  END'");

  // SD data items: "> <name>" followed by value lines up to a blank line.
  while (i < end) {
    const std::string_view header = lines[i];
    if (trim(header).empty()) {
      ++i;
      continue;
    }
    const auto open = header.find('<');
    const auto close = header.find('>', open == std::string_view::npos ? 0 : open);
    if (!header.starts_with(">") || open == std::string_view::npos || close == std::string_view::npos) {
      throw ParseError(line_no(i), "expected SD data header '> <name>'");
    }
    const std::string name(header.substr(open + 1, close - open - 1));
    const std::size_t header_line = i;
    std::string value;
    for (++i; i < end && !trim(lines[i]).empty(); ++i) {
      if (!value.empty()) value += '\n';
      value += trim(lines[i]);
    }
    if (name == "split") {
      const auto s = parse_split(value);
      if (!s) throw ParseError(header_line + 2, "unknown split tag '" + value + "'");
      mol.split = s;
    } else if (name == "fingerprint") {
      std::vector<std::uint8_t> bits;
      for (char c : value) {
        if (c == '0' || c == '1') bits.push_back(static_cast<std::uint8_t>(c - '0'));
        else if (c != ' ' && c != '\n') throw ParseError(header_line + 2, "fingerprint bit not in {0,1}");
      }
      mol.fingerprint = std::move(bits);
    } else {
      const std::string_view v = trim(value);
      if (v.empty() || v == "nan" || v == "NaN" || v == "Nan" || v == "NA") {
        mol.labels[name] = std::nullopt;
      } else if (auto d = parse_number<double>(v); d && std::isfinite(*d)) {
        mol.labels[name] = *d;
      }
    }
  }

  perceive_attributes(mol);
  try {
    validate(mol);
  } catch (const DataError& e) {
    throw ParseError(line_no(begin), e.what());
  }
  return mol;
}

ReadResult read_sdf_impl(std::string_view text, bool stop_on_error) {
  ReadResult result;
  const auto lines = split_lines(text);
  std::size_t begin = 0;
  std::size_t record = 0;
  while (begin < lines.size()) {
    std::size_t end = begin;
    while (end < lines.size() && !lines[end].starts_with("$$$$")) ++end;
    const bool only_blank = std::all_of(lines.begin() + static_cast<std::ptrdiff_t>(begin),
                                        lines.begin() + static_cast<std::ptrdiff_t>(end),
                                        [](std::string_view l) { return trim(l).empty(); });
    if (!only_blank) {
      try {
        result.molecules.push_back(parse_record(lines, begin, end, record));
      } catch (const ParseError& e) {
        if (stop_on_error) throw;
        result.errors.push_back(e);
      }
      ++record;
    }
    begin = end + 1;
  }
  return result;
}

std::string format_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Molecule> parse_sdf(std::string_view text) {
  return read_sdf_impl(text, true).molecules;
}

ReadResult read_sdf_lenient(std::string_view text) { return read_sdf_impl(text, false); }

std::string write_sdf(std::span<const Molecule> molecules) {
  std::string out;
  char buf[128];
  for (const Molecule& mol : molecules) {
    validate(mol);
    if (mol.atoms.size() > 999 || mol.bonds.size() > 999) {
      throw DataError("molecule '" + mol.id + "' is too large for a V2000 record");
    }
    out += mol.id + "\n  geognn\n\n";
    std::snprintf(buf, sizeof buf, "%3zu%3zu  0  0  0  0  0  0  0  0999 V2000\n", mol.atoms.size(),
                  mol.bonds.size());
    out += buf;
    for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
      const Atom& a = mol.atoms[i];
      const Vec3& p = mol.coords[i];
      std::snprintf(buf, sizeof buf, "%10.4f%10.4f%10.4f %-3s 0  0%3d  0  0  0  0  0  0  0  0  0\n", p.x, p.y,
                    p.z, std::string(element_symbol(a.atomic_number)).c_str(),
                    parity_from_chirality(a.chirality));
      out += buf;
    }
    for (const Bond& b : mol.bonds) {
      std::snprintf(buf, sizeof buf, "%3u%3u%3d%3d\n", b.a + 1, b.b + 1, static_cast<int>(b.type) + 1,
                    stereo_from_dir(b.dir));
      out += buf;
    }
    std::vector<std::size_t> charged;
    for (std::size_t i = 0; i < mol.atoms.size(); ++i)
      if (mol.atoms[i].formal_charge != 0) charged.push_back(i);
    for (std::size_t k = 0; k < charged.size(); k += 8) {
      const std::size_t n = std::min<std::size_t>(8, charged.size() - k);
      std::snprintf(buf, sizeof buf, "M  CHG%3zu", n);
      out += buf;
      for (std::size_t j = k; j < k + n; ++j) {
        std::snprintf(buf, sizeof buf, " %3zu %3d", charged[j] + 1, mol.atoms[charged[j]].formal_charge);
        out += buf;
      }
      out += '\n';
    }
    out += "M  END\n";
    for (const auto& [name, value] : mol.labels) {
      out += "> <" + name + ">\n" + (value ? format_label(*value) : std::string("nan")) + "\n\n";
    }
    if (mol.split) out += "> <split>\n" + std::string(to_string(*mol.split)) + "\n\n";
    if (mol.fingerprint) {
      out += "> <fingerprint>\n";
      for (auto bit : *mol.fingerprint) out += static_cast<char>('0' + bit);
      out += "\n\n";
    }
    out += "$$$$\n";
  }
  return out;
}

}  // namespace geognn
