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

// Little-endian primitive readers/writers shared by the checkpoint and
// feature-bundle formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "geognn/errors.hpp"

namespace geognn::detail {

template <class U>
void put_uint(std::ostream& out, U v) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, sizeof(U));
}

template <class U>
U get_uint(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!in) throw DataError("unexpected end of binary file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_uint<std::uint64_t>(in)); }
inline void put_f32(std::ostream& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_uint<std::uint32_t>(in)); }

inline void put_string32(std::ostream& out, const std::string& s) {
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string32(std::istream& in, std::size_t limit = std::size_t{1} << 30) {
  const auto n = get_uint<std::uint32_t>(in);
  if (n > limit) throw DataError("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("unexpected end of binary file");
  return s;
}

}  // namespace geognn::detail
