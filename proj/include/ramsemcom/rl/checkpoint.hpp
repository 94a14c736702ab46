// Copyright 2026 The ramsemcom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Policy checkpoint format (little-endian):
//
//   "RLCK" | u32 version (1) | u32 layer-size count L | L x u32 sizes |
//   params as f64 in Mlp order (per layer: row-major W, then b) | u32 CRC-32
//
// The CRC covers every preceding byte.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "ramsemcom/crc32.hpp"
#include "ramsemcom/error.hpp"
#include "ramsemcom/rl/mlp.hpp"

namespace ramsemcom::rl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::vector<std::uint8_t> serialize_checkpoint(const Mlp& net) {
  std::vector<std::uint8_t> out{'R', 'L', 'C', 'K'};
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put32(kCheckpointVersion);
  put32(static_cast<std::uint32_t>(net.sizes().size()));
  for (auto s : net.sizes()) put32(static_cast<std::uint32_t>(s));
  for (double p : net.params()) {
    const auto bits = std::bit_cast<std::uint64_t>(p);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  put32(crc32(out));
  return out;
}

inline Mlp deserialize_checkpoint(std::span<const std::uint8_t> in) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (in.size() - pos < n) throw LengthError("checkpoint truncated");
  };
  auto get32 = [&] {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
    pos += 4;
    return v;
  };
  need(4);
  if (std::memcmp(in.data(), "RLCK", 4) != 0) throw FormatError("checkpoint: bad magic");
  pos = 4;
  if (get32() != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
  const std::uint32_t count = get32();
  if (count < 2 || count > 64) throw FormatError("checkpoint: implausible layer count");
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i < count; ++i) sizes.push_back(get32());
  Mlp net(sizes);
  for (double& p : net.params()) {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
    pos += 8;
    p = std::bit_cast<double>(bits);
  }
  const std::size_t body = pos;
  const std::uint32_t stored = get32();
  if (pos != in.size()) throw LengthError("checkpoint: trailing bytes");
  if (crc32(in.first(body)) != stored) throw CorruptionError("checkpoint: CRC mismatch");
  return net;
}

inline void save_checkpoint(const Mlp& net, const std::string& path) {
  const auto bytes = serialize_checkpoint(net);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path);
}

inline Mlp load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace ramsemcom::rl
