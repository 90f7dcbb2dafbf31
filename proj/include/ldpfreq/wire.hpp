// Copyright 2026 The ldpfreq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ldpfreq/baselines.hpp"
#include "ldpfreq/error.hpp"
#include "ldpfreq/hpg.hpp"
#include "ldpfreq/pirappor.hpp"
#include "ldpfreq/projgeom.hpp"
#include "ldpfreq/pubcoin.hpp"

// Little-endian wire forms of every message type.
//   point               u32
//   block message       u16 block, u32 point
//   PI-RAPPOR message   t+1 x u16 (a_1..a_t, b)
//   subset report       u32 count, count x u32
//   public-coin         u16 a
//   public-coin block   u16 block, u16 a
namespace ldpfreq::wire {

using Bytes = std::vector<std::uint8_t>;

class Writer {
 public:
  template <class UInt>
  void put(std::uint64_t value) {
    if (value > std::numeric_limits<UInt>::max()) {
      throw Error(ErrorCode::kIndexOutOfRange, "value does not fit its wire field");
    }
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
  }

  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class UInt>
  UInt get() {
    if (bytes_.size() - pos_ < sizeof(UInt)) {
      throw Error(ErrorCode::kMalformedMessage, "truncated message");
    }
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      value |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(UInt);
    return static_cast<UInt>(value);
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) throw Error(ErrorCode::kMalformedMessage, "trailing bytes");
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline Bytes encode_point(PointIndex u) {
  Writer w;
  w.put<std::uint32_t>(u);
  return w.take();
}

inline PointIndex decode_point(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const PointIndex u = r.get<std::uint32_t>();
  r.expect_end();
  return u;
}

inline Bytes encode_hpg(const HpgMessage& m) {
  Writer w;
  w.put<std::uint16_t>(m.block);
  w.put<std::uint32_t>(m.point);
  return w.take();
}

inline HpgMessage decode_hpg(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  HpgMessage m;
  m.block = r.get<std::uint16_t>();
  m.point = r.get<std::uint32_t>();
  r.expect_end();
  return m;
}

inline Bytes encode_pirappor(const PiRapporMessage& m) {
  Writer w;
  for (Element x : m.a) w.put<std::uint16_t>(x);
  w.put<std::uint16_t>(m.b);
  return w.take();
}

inline PiRapporMessage decode_pirappor(std::span<const std::uint8_t> bytes, unsigned t) {
  Reader r(bytes);
  PiRapporMessage m;
  m.a.resize(t);
  for (auto& x : m.a) x = r.get<std::uint16_t>();
  m.b = r.get<std::uint16_t>();
  r.expect_end();
  return m;
}

inline Bytes encode_ss(const SsReport& report) {
  Writer w;
  w.put<std::uint32_t>(report.members.size());
  for (auto m : report.members) w.put<std::uint32_t>(m);
  return w.take();
}

inline SsReport decode_ss(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  SsReport report;
  const std::uint32_t count = r.get<std::uint32_t>();
  if (count > bytes.size() / 4) throw Error(ErrorCode::kMalformedMessage, "count too large");
  report.members.resize(count);
  for (auto& m : report.members) m = r.get<std::uint32_t>();
  r.expect_end();
  return report;
}

inline Bytes encode_pub(Element a) {
  Writer w;
  w.put<std::uint16_t>(a);
  return w.take();
}

inline Element decode_pub(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const Element a = r.get<std::uint16_t>();
  r.expect_end();
  return a;
}

inline Bytes encode_hpg_pub(const HpgPubMessage& m) {
  Writer w;
  w.put<std::uint16_t>(m.block);
  w.put<std::uint16_t>(m.a);
  return w.take();
}

inline HpgPubMessage decode_hpg_pub(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  HpgPubMessage m;
  m.block = r.get<std::uint16_t>();
  m.a = r.get<std::uint16_t>();
  r.expect_end();
  return m;
}

}  // namespace ldpfreq::wire
