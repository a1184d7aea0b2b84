#pragma once

#include <cstdint>

namespace dualmesh {

// 16-bit node identity. 0x0000 is reserved as "unassigned" (no node / no
// cluster), 0xFFFF as the broadcast address.
using NodeId = std::uint16_t;

inline constexpr NodeId kUnassigned = 0x0000;
inline constexpr NodeId kBroadcast = 0xFFFF;

enum class Radio : std::uint8_t { Ble = 0, Lora = 1 };

// Wraparound comparison for 16-bit sequence numbers (half-range rule):
// a is newer than b iff 0 < (a - b) mod 2^16 < 2^15.
inline bool seq_newer(std::uint16_t a, std::uint16_t b) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(a - b)) > 0;
}

}  // namespace dualmesh
