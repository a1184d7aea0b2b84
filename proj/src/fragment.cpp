#include "dualmesh/fragment.hpp"

#include <bit>
#include <stdexcept>

namespace dualmesh::protocol {

std::vector<wire::DataFragment> fragment_message(
    NodeId src, NodeId dst, std::uint16_t msg_seq, std::uint8_t ttl,
    std::span<const std::uint8_t> payload) {
  if (payload.empty())
    throw std::invalid_argument("fragment_message: empty payload");
  if (payload.size() > wire::kMaxMessagePayload)
    throw std::invalid_argument("fragment_message: payload exceeds 120 bytes");

  const std::size_t count =
      (payload.size() + wire::kMaxFragmentPayload - 1) /
      wire::kMaxFragmentPayload;
  std::vector<wire::DataFragment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    wire::DataFragment f;
    f.src = src;
    f.dst = dst;
    f.msg_seq = msg_seq;
    f.ttl = ttl;
    f.frag_index = static_cast<std::uint8_t>(i);
    f.frag_count = static_cast<std::uint8_t>(count);
    const std::size_t begin = i * wire::kMaxFragmentPayload;
    const std::size_t end =
        std::min(begin + wire::kMaxFragmentPayload, payload.size());
    f.payload.assign(payload.begin() + begin, payload.begin() + end);
    out.push_back(std::move(f));
  }
  return out;
}

Reassembler::Buffer* Reassembler::find(NodeId src, std::uint16_t msg_seq) {
  for (auto& b : buffers_)
    if (b.in_use && b.src == src && b.msg_seq == msg_seq) return &b;
  return nullptr;
}

Reassembler::Buffer* Reassembler::allocate(double now) {
  for (auto& b : buffers_)
    if (!b.in_use) return &b;
  // Both busy: evict the buffer idle the longest.
  Buffer* oldest = &buffers_[0];
  for (auto& b : buffers_)
    if (b.last_activity < oldest->last_activity) oldest = &b;
  evicted_keys_.emplace_back(oldest->src, oldest->msg_seq);
  *oldest = Buffer{};
  ++evictions_;
  (void)now;
  return oldest;
}

std::vector<std::pair<NodeId, std::uint16_t>> Reassembler::take_evicted() {
  auto out = std::move(evicted_keys_);
  evicted_keys_.clear();
  return out;
}

ReassemblyResult Reassembler::add(const wire::DataFragment& frag, double now) {
  evict_expired(now);

  Buffer* b = find(frag.src, frag.msg_seq);
  if (b == nullptr) {
    b = allocate(now);
    b->in_use = true;
    b->src = frag.src;
    b->msg_seq = frag.msg_seq;
    b->frag_count = frag.frag_count;
  } else if (b->frag_count != frag.frag_count) {
    *b = Buffer{};
    return {ReassemblyResult::Kind::Error, {},
            "conflicting frag_count for (src, msg_seq)"};
  }

  b->last_activity = now;
  const std::uint8_t bit = static_cast<std::uint8_t>(1u << frag.frag_index);
  if ((b->received_mask & bit) == 0) {
    b->received_mask |= bit;
    b->pieces[frag.frag_index] = frag.payload;
  }
  // else: duplicate, ignored.

  const std::uint8_t full =
      static_cast<std::uint8_t>((1u << b->frag_count) - 1u);
  if (b->received_mask != full) return {ReassemblyResult::Kind::Pending, {}, nullptr};

  ReassemblyResult result;
  result.kind = ReassemblyResult::Kind::Complete;
  for (int i = 0; i < b->frag_count; ++i)
    result.payload.insert(result.payload.end(), b->pieces[i].begin(),
                          b->pieces[i].end());
  *b = Buffer{};
  return result;
}

void Reassembler::evict_expired(double now) {
  for (auto& b : buffers_) {
    if (b.in_use && now - b.last_activity >= timeout_) {
      evicted_keys_.emplace_back(b.src, b.msg_seq);
      b = Buffer{};
      ++evictions_;
    }
  }
}

int Reassembler::active_buffers() const {
  int n = 0;
  for (const auto& b : buffers_) n += b.in_use ? 1 : 0;
  return n;
}

}  // namespace dualmesh::protocol
