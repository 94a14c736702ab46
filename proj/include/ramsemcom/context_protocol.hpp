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

// Context blocks: the message unit for every transmission in the simulator.
//
// Wire layout (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "RAMS" (52 41 4D 53)
//   4       1     format version (1)
//   5       4     source_id
//   9       8     timestamp_ms
//   17      1     priority
//   18      4     block version
//   22      1     tag count T (>= 1)
//   23      ...   T x (u8 length, UTF-8 bytes), each tag 1..255 bytes
//   ...     4     payload length
//   ...     ...   payload
//   ...     4     CRC-32 (IEEE) over every preceding byte
//
// Encoded length = 23 + sum(1 + len(tag)) + 4 + len(payload) + 4.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ramsemcom/crc32.hpp"
#include "ramsemcom/error.hpp"

namespace ramsemcom {

inline constexpr std::array<std::uint8_t, 4> kBlockMagic{0x52, 0x41, 0x4D, 0x53};
inline constexpr std::uint8_t kBlockFormatVersion = 1;
inline constexpr std::size_t kBlockHeaderSize = 23;
inline constexpr std::size_t kMaxTagBytes = 255;
inline constexpr std::size_t kMaxTags = 255;

struct ContextBlock {
  std::uint32_t source_id = 0;
  std::uint64_t timestamp_ms = 0;
  std::uint8_t priority = 0;
  std::vector<std::string> tags;
  std::vector<std::uint8_t> payload;
  std::uint32_t version = 0;

  const std::string& key_tag() const { return tags.front(); }

  bool operator==(const ContextBlock&) const = default;
};

namespace detail {

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) throw LengthError(std::string("context block truncated in ") + what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T le(const char* what) {
    auto s = take(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(s[i]) << (8 * i));
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Throws EncodingError if `block` cannot be represented on the wire.
inline void validate_block(const ContextBlock& block) {
  if (block.tags.empty()) throw EncodingError("context block needs at least one tag");
  if (block.tags.size() > kMaxTags) throw EncodingError("context block has more than 255 tags");
  for (const auto& t : block.tags) {
    if (t.empty()) throw EncodingError("context block tags must not be empty");
    if (t.size() > kMaxTagBytes) throw EncodingError("context block tag longer than 255 bytes");
    if (!detail::valid_utf8(t)) throw EncodingError("context block tag is not valid UTF-8");
  }
  if (block.payload.size() > 0xFFFFFFFFULL) throw EncodingError("context block payload exceeds 2^32-1 bytes");
}

inline std::size_t encoded_size(const ContextBlock& block) {
  std::size_t n = kBlockHeaderSize + 4 + block.payload.size() + 4;
  for (const auto& t : block.tags) n += 1 + t.size();
  return n;
}

inline std::vector<std::uint8_t> encode(const ContextBlock& block) {
  validate_block(block);
  detail::Writer w(encoded_size(block));
  w.bytes(kBlockMagic);
  w.u8(kBlockFormatVersion);
  w.le<std::uint32_t>(block.source_id);
  w.le<std::uint64_t>(block.timestamp_ms);
  w.u8(block.priority);
  w.le<std::uint32_t>(block.version);
  w.u8(static_cast<std::uint8_t>(block.tags.size()));
  for (const auto& t : block.tags) {
    w.u8(static_cast<std::uint8_t>(t.size()));
    w.bytes({reinterpret_cast<const std::uint8_t*>(t.data()), t.size()});
  }
  w.le<std::uint32_t>(static_cast<std::uint32_t>(block.payload.size()));
  w.bytes(block.payload);
  const std::uint32_t crc = crc32(w.data());
  w.le<std::uint32_t>(crc);
  return std::move(w.data());
}

inline ContextBlock decode(std::span<const std::uint8_t> bytes) {
  detail::Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kBlockMagic.begin())) throw FormatError("context block: bad magic");
  const auto fmt = r.le<std::uint8_t>("format version");
  if (fmt != kBlockFormatVersion)
    throw FormatError("context block: unsupported format version " + std::to_string(fmt));

  ContextBlock b;
  b.source_id = r.le<std::uint32_t>("source_id");
  b.timestamp_ms = r.le<std::uint64_t>("timestamp");
  b.priority = r.le<std::uint8_t>("priority");
  b.version = r.le<std::uint32_t>("version");
  const auto tag_count = r.le<std::uint8_t>("tag count");
  if (tag_count == 0) throw FormatError("context block: zero tags");
  b.tags.reserve(tag_count);
  for (unsigned i = 0; i < tag_count; ++i) {
    const auto len = r.le<std::uint8_t>("tag length");
    auto s = r.take(len, "tag");
    b.tags.emplace_back(reinterpret_cast<const char*>(s.data()), s.size());
  }
  const auto payload_len = r.le<std::uint32_t>("payload length");
  auto payload = r.take(payload_len, "payload");
  b.payload.assign(payload.begin(), payload.end());
  const std::size_t body_len = r.pos();
  const auto stored_crc = r.le<std::uint32_t>("crc");
  if (r.pos() != bytes.size()) throw LengthError("context block: trailing bytes after CRC");
  if (crc32(bytes.first(body_len)) != stored_crc) throw CorruptionError("context block: CRC mismatch");
  for (const auto& t : b.tags) {
    if (t.empty() || !detail::valid_utf8(t)) throw FormatError("context block: invalid tag");
  }
  return b;
}

/// Versioned in-process block store keyed by (source_id, first tag).
/// Readers share, writers are exclusive; a publish is visible whole or not at all.
class Repository {
 public:
  explicit Repository(std::size_t history_depth = 0) : history_depth_(history_depth) {}

  /// Rejects (returns false) a block whose version is not newer than the stored one.
  bool publish(ContextBlock block) {
    validate_block(block);
    Key key{block.source_id, block.key_tag()};
    std::unique_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      entries_.emplace(std::move(key), Entry{std::move(block), {}});
      return true;
    }
    if (block.version <= it->second.latest.version) return false;
    if (history_depth_ > 0) {
      it->second.history.push_front(std::move(it->second.latest));
      if (it->second.history.size() > history_depth_) it->second.history.pop_back();
    }
    it->second.latest = std::move(block);
    return true;
  }

  /// Latest blocks carrying every tag in `tag_filter` with priority >= `min_priority`,
  /// ordered by priority desc, timestamp desc, source_id asc.
  std::vector<ContextBlock> query(const std::set<std::string>& tag_filter, std::uint8_t min_priority = 0) const {
    std::vector<ContextBlock> out;
    {
      std::shared_lock lock(mutex_);
      for (const auto& [key, entry] : entries_) {
        const auto& b = entry.latest;
        if (b.priority < min_priority) continue;
        const bool all = std::all_of(tag_filter.begin(), tag_filter.end(), [&](const std::string& t) {
          return std::find(b.tags.begin(), b.tags.end(), t) != b.tags.end();
        });
        if (all) out.push_back(b);
      }
    }
    std::stable_sort(out.begin(), out.end(), [](const ContextBlock& a, const ContextBlock& b) {
      return std::forward_as_tuple(b.priority, b.timestamp_ms, a.source_id) <
             std::forward_as_tuple(a.priority, a.timestamp_ms, b.source_id);
    });
    return out;
  }

  /// Older versions for a key, newest first (empty when history is disabled).
  std::vector<ContextBlock> history(std::uint32_t source_id, const std::string& key_tag) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(Key{source_id, key_tag});
    if (it == entries_.end()) return {};
    return {it->second.history.begin(), it->second.history.end()};
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  using Key = std::pair<std::uint32_t, std::string>;
  struct Entry {
    ContextBlock latest;
    std::deque<ContextBlock> history;
  };

  std::size_t history_depth_;
  mutable std::shared_mutex mutex_;
  std::map<Key, Entry> entries_;
};

}  // namespace ramsemcom
