#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dualmesh/wire.hpp"

namespace dualmesh::protocol {

// Splits a payload of 1..120 bytes into ceil(len/15) fragments of at most
// 15 payload bytes each, indices 0..count-1. Throws std::invalid_argument
// on an empty or oversize payload.
std::vector<wire::DataFragment> fragment_message(
    NodeId src, NodeId dst, std::uint16_t msg_seq, std::uint8_t ttl,
    std::span<const std::uint8_t> payload);

struct ReassemblyResult {
  enum class Kind { Complete, Pending, Error };
  Kind kind = Kind::Pending;
  std::vector<std::uint8_t> payload;  // set when Complete
  const char* error = nullptr;        // set when Error
};

// Fixed-capacity reassembly state: two buffers keyed by (src, msg_seq).
// Fragments may arrive in any order; duplicates are ignored. A buffer is
// evicted after 5 s without activity, or oldest-first when both are busy.
class Reassembler {
 public:
  explicit Reassembler(double timeout_s = 5.0) : timeout_(timeout_s) {}

  ReassemblyResult add(const wire::DataFragment& frag, double now);
  void evict_expired(double now);

  int active_buffers() const;
  std::uint64_t evictions() const { return evictions_; }

  // (src, msg_seq) keys of buffers evicted since the last call.
  std::vector<std::pair<NodeId, std::uint16_t>> take_evicted();

  static constexpr int kBufferCount = 2;

 private:
  struct Buffer {
    bool in_use = false;
    NodeId src = 0;
    std::uint16_t msg_seq = 0;
    std::uint8_t frag_count = 0;
    std::uint8_t received_mask = 0;
    double last_activity = 0.0;
    std::array<std::vector<std::uint8_t>, wire::kMaxFragmentsPerMessage>
        pieces;
  };

  Buffer* find(NodeId src, std::uint16_t msg_seq);
  Buffer* allocate(double now);

  double timeout_;
  std::array<Buffer, kBufferCount> buffers_{};
  std::uint64_t evictions_ = 0;
  std::vector<std::pair<NodeId, std::uint16_t>> evicted_keys_;
};

}  // namespace dualmesh::protocol
