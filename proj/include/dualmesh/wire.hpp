#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dualmesh/types.hpp"

namespace dualmesh::wire {

// All multi-byte integers are big-endian on the wire.
//
// BLE-borne frames start with a one-byte type tag and fit in a 31-byte
// advertising payload. LoRa frames have no tag: they live on their own
// radio and start directly with the 4-byte inter-cluster header.

enum class FrameType : std::uint8_t {
  Beacon = 0x01,
  Rreq = 0x02,
  Rrep = 0x03,
  Data = 0x04,
};

inline constexpr std::size_t kMaxBleFrameBytes = 31;
inline constexpr std::size_t kMaxLoraFrameBytes = 255;
inline constexpr std::size_t kMaxBeaconNeighbors = 4;
inline constexpr std::size_t kMaxFragmentPayload = 15;
inline constexpr std::size_t kMaxMessagePayload = 120;
inline constexpr int kMaxFragmentsPerMessage = 8;
inline constexpr int kMaxDigestMembers = 60;

// Beacon flag bits (low nibble on the wire).
inline constexpr std::uint8_t kFlagClusterHead = 0x01;
inline constexpr std::uint8_t kFlagDemoting = 0x02;

struct NeighborRef {
  NodeId id = 0;
  std::uint8_t lq = 0;

  bool operator==(const NeighborRef&) const = default;
};

// [type:1][version<<4|flags:1][node:2][advertised_key:2][battery:1]
// [cluster:2][n_count:1][n_count x (id:2, lq:1)]  -> 10..22 bytes
struct Beacon {
  std::uint8_t version = 1;  // 4-bit
  NodeId node = 0;
  std::uint16_t advertised_key = 0;
  std::uint8_t flags = 0;  // 4-bit on the wire
  std::uint8_t battery_pct = 100;
  NodeId cluster = kUnassigned;
  std::vector<NeighborRef> neighbors;  // at most 4

  bool operator==(const Beacon&) const = default;
};

// [type:1][rreq_id:1][origin:2][origin_seq:2][dest:2][dest_seq:2]
// [hop_count:1][path_cost:2][ttl:1]  -> 14 bytes
struct Rreq {
  std::uint8_t rreq_id = 0;
  NodeId origin = 0;
  std::uint16_t origin_seq = 0;
  NodeId dest = 0;
  std::uint16_t dest_seq = 0;  // 0 = unknown
  std::uint8_t hop_count = 0;
  std::uint16_t path_cost = 0;
  std::uint8_t ttl = 0;

  bool operator==(const Rreq&) const = default;
};

// Same layout minus rreq_id, with ttl replaced by lifetime  -> 13 bytes
struct Rrep {
  NodeId origin = 0;
  std::uint16_t origin_seq = 0;
  NodeId dest = 0;
  std::uint16_t dest_seq = 0;
  std::uint8_t hop_count = 0;
  std::uint16_t path_cost = 0;
  std::uint8_t lifetime_s = 0;

  bool operator==(const Rrep&) const = default;
};

// [type:1][src:2][dst:2][msg_seq:2][ttl:1][idx<<4|count:1][len:1]
// [payload:<=15]  -> at most 25 bytes
struct DataFragment {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint16_t msg_seq = 0;
  std::uint8_t ttl = 0;
  std::uint8_t frag_index = 0;  // 4-bit, < frag_count
  std::uint8_t frag_count = 1;  // 4-bit, 1..8
  std::vector<std::uint8_t> payload;

  bool operator==(const DataFragment&) const = default;
};

// LoRa header flag bits (low nibble of byte 2).
inline constexpr std::uint8_t kLoraFlagDigest = 0x01;

// [dest_ch:2][hop_limit<<4|flags:1][backbone_seq:1]  -> exactly 4 bytes
struct InterClusterHeader {
  NodeId dest_ch = 0;
  std::uint8_t hop_limit = 0;  // 4-bit
  std::uint8_t flags = 0;      // 4-bit
  std::uint8_t backbone_seq = 0;

  bool operator==(const InterClusterHeader&) const = default;
};

// [header:4][src_ch:2][count:1][body]
//
// Data frame body: count (1..8) length-prefixed encoded DataFragments.
// Digest frame body (header digest flag set): count (0..60) member ids,
// 2 bytes each. Total encoded size <= 255 bytes.
struct LoraFrame {
  InterClusterHeader header;
  NodeId src_ch = 0;
  std::vector<std::vector<std::uint8_t>> fragments;
  std::vector<NodeId> digest_members;

  bool is_digest() const { return (header.flags & kLoraFlagDigest) != 0; }
  bool operator==(const LoraFrame&) const = default;
};

using Frame = std::variant<Beacon, Rreq, Rrep, DataFragment, LoraFrame>;

enum class DecodeError : std::uint8_t {
  Truncated = 1,
  UnknownType,
  BadValue,
  Oversize,
  TrailingBytes,
};

const char* to_string(DecodeError err);

template <typename T>
class Decoded {
 public:
  Decoded(T value) : value_(std::move(value)) {}
  Decoded(DecodeError error) : error_(error) {}

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }
  const T& operator*() const { return *value_; }
  const T* operator->() const { return &*value_; }
  DecodeError error() const { return error_; }

 private:
  std::optional<T> value_;
  DecodeError error_ = DecodeError::Truncated;
};

// Throws std::invalid_argument when the frame violates its invariants
// (oversize payload, neighbor count > 4, fragment count out of 1..8, ...).
std::vector<std::uint8_t> encode(const Frame& frame);

// The 4-byte inter-cluster header on its own.
std::vector<std::uint8_t> encode_header(const InterClusterHeader& header);

Decoded<Frame> decode_ble(std::span<const std::uint8_t> bytes);
Decoded<LoraFrame> decode_lora(std::span<const std::uint8_t> bytes);
Decoded<Frame> decode(std::span<const std::uint8_t> bytes, Radio radio);

}  // namespace dualmesh::wire
