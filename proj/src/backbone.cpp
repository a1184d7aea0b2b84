#include "dualmesh/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualmesh::backbone {

namespace {
constexpr std::size_t kSeenCap = 32;
}

bool in_listen_window(const ListenSchedule& s, double now) {
  double phase = std::fmod(now - s.offset_s, s.period_s);
  if (phase < 0) phase += s.period_s;
  return phase < s.window_s;
}

double listen_time_between(const ListenSchedule& s, double from, double to) {
  if (to <= from) return 0.0;
  // Integrate window coverage over whole periods plus the ragged ends.
  auto covered_until = [&](double t) {
    const double rel = t - s.offset_s;
    const double full = std::floor(rel / s.period_s);
    double phase = rel - full * s.period_s;
    return full * s.window_s + std::min(phase, s.window_s);
  };
  return covered_until(to) - covered_until(from);
}

bool ChState::seen(NodeId src_ch, std::uint8_t seq) const {
  for (const auto& s : seen_)
    if (s.src_ch == src_ch && s.backbone_seq == seq) return true;
  return false;
}

void ChState::remember(NodeId src_ch, std::uint8_t seq) {
  if (seen_.size() < kSeenCap) {
    seen_.push_back(SeenFrame{src_ch, seq});
    return;
  }
  seen_[seen_next_] = SeenFrame{src_ch, seq};
  seen_next_ = (seen_next_ + 1) % kSeenCap;
}

std::optional<NodeId> ChState::lookup_ch(NodeId node, double now) const {
  const double max_age =
      cfg_.directory_expiry_periods * cfg_.digest_period_s;
  for (const auto& e : directory_)
    if (e.node == node && now - e.learned_at < max_age) return e.ch;
  return std::nullopt;
}

void ChState::learn_digest(const wire::LoraFrame& frame, double now) {
  auto learn = [&](NodeId node, NodeId ch) {
    for (auto& e : directory_) {
      if (e.node == node) {
        e.ch = ch;
        e.learned_at = now;
        return;
      }
    }
    directory_.push_back(DirEntry{node, ch, now});
  };
  learn(frame.src_ch, frame.src_ch);
  for (NodeId member : frame.digest_members) learn(member, frame.src_ch);
  const double max_age =
      cfg_.directory_expiry_periods * cfg_.digest_period_s;
  std::erase_if(directory_, [&](const DirEntry& e) {
    return now - e.learned_at >= max_age;
  });
}

wire::LoraFrame ChState::build_frame(
    NodeId dest_ch, std::vector<const wire::DataFragment*> frags) {
  wire::LoraFrame frame;
  frame.header.dest_ch = dest_ch;
  frame.header.hop_limit = cfg_.hop_limit;
  frame.header.flags = 0;
  frame.header.backbone_seq = backbone_seq_++;
  frame.src_ch = self_;
  for (const auto* f : frags)
    frame.fragments.push_back(wire::encode(wire::Frame{*f}));
  ++counters_.frames_sent;
  return frame;
}

std::vector<wire::LoraFrame> ChState::flush_group(NodeId dest_ch) {
  std::vector<wire::LoraFrame> out;
  std::vector<const wire::DataFragment*> batch;
  std::size_t batch_payload = 0;
  for (const auto& q : queue_) {
    if (q.dest_ch != dest_ch) continue;
    if (batch.size() == static_cast<std::size_t>(kQueueFragmentCap) ||
        batch_payload + q.frag.payload.size() > kQueuePayloadCap) {
      out.push_back(build_frame(dest_ch, batch));
      batch.clear();
      batch_payload = 0;
    }
    batch.push_back(&q.frag);
    batch_payload += q.frag.payload.size();
  }
  if (!batch.empty()) out.push_back(build_frame(dest_ch, batch));
  std::erase_if(queue_,
                [&](const QueuedFragment& q) { return q.dest_ch == dest_ch; });
  return out;
}

std::vector<wire::LoraFrame> ChState::flush_aggregate(double now) {
  std::vector<wire::LoraFrame> out;
  // Collect destination groups in FIFO order of their oldest entry.
  std::vector<NodeId> ready;
  for (const auto& q : queue_) {
    if (std::find(ready.begin(), ready.end(), q.dest_ch) != ready.end())
      continue;
    int count = 0;
    std::size_t payload = 0;
    double oldest = q.queued_at;
    for (const auto& other : queue_) {
      if (other.dest_ch != q.dest_ch) continue;
      ++count;
      payload += other.frag.payload.size();
      oldest = std::min(oldest, other.queued_at);
    }
    // The timeout comparison re-derives (queued_at + timeout) - queued_at;
    // allow a rounding ulp so a check scheduled exactly at the deadline
    // always flushes.
    if (count >= kQueueFragmentCap || payload >= kQueuePayloadCap ||
        now - oldest >= cfg_.flush_timeout_s - 1e-9)
      ready.push_back(q.dest_ch);
  }
  for (NodeId dest : ready) {
    auto frames = flush_group(dest);
    out.insert(out.end(), frames.begin(), frames.end());
  }
  return out;
}

std::optional<double> ChState::next_flush_deadline() const {
  std::optional<double> deadline;
  for (const auto& q : queue_) {
    const double t = q.queued_at + cfg_.flush_timeout_s;
    if (!deadline || t < *deadline) deadline = t;
  }
  return deadline;
}

std::vector<wire::LoraFrame> ChState::enqueue_for_backbone(
    const std::vector<wire::DataFragment>& fragments, NodeId dest,
    double now) {
  std::vector<wire::LoraFrame> out;
  const NodeId dest_ch = lookup_ch(dest, now).value_or(kBroadcast);
  for (const auto& frag : fragments) {
    std::size_t payload = frag.payload.size();
    for (const auto& q : queue_) payload += q.frag.payload.size();
    if (queue_.size() >= static_cast<std::size_t>(kQueueFragmentCap) ||
        payload > kQueuePayloadCap) {
      // Staging area is full: flush everything, then enqueue.
      ++counters_.forced_flushes;
      std::vector<NodeId> dests;
      for (const auto& q : queue_)
        if (std::find(dests.begin(), dests.end(), q.dest_ch) == dests.end())
          dests.push_back(q.dest_ch);
      for (NodeId d : dests) {
        auto frames = flush_group(d);
        out.insert(out.end(), frames.begin(), frames.end());
      }
    }
    queue_.push_back(QueuedFragment{frag, dest_ch, now});
  }
  return out;
}

ChState::RxResult ChState::handle_lora_frame(const wire::LoraFrame& frame,
                                             double now) {
  RxResult result;
  if (frame.src_ch == self_ || seen(frame.src_ch, frame.header.backbone_seq)) {
    result.duplicate = true;
    ++counters_.duplicates_dropped;
    return result;
  }
  remember(frame.src_ch, frame.header.backbone_seq);

  auto rebroadcast = [&]() {
    if (frame.header.hop_limit == 0) return;
    wire::LoraFrame copy = frame;
    copy.header.hop_limit = frame.header.hop_limit - 1;
    result.rebroadcast = std::move(copy);
    ++counters_.frames_rebroadcast;
  };

  if (frame.is_digest()) {
    learn_digest(frame, now);
    rebroadcast();
    return result;
  }

  const bool for_us =
      frame.header.dest_ch == self_ || frame.header.dest_ch == kBroadcast;
  if (for_us) {
    for (const auto& raw : frame.fragments) {
      auto decoded = wire::decode_ble(raw);
      if (decoded.ok()) {
        if (const auto* frag = std::get_if<wire::DataFragment>(&*decoded))
          result.deliver.push_back(*frag);
      }
    }
    // Broadcast frames keep flooding so every CH sees them.
    if (frame.header.dest_ch == kBroadcast) rebroadcast();
    return result;
  }

  rebroadcast();
  return result;
}

std::vector<wire::DataFragment> ChState::drain() {
  std::vector<wire::DataFragment> out;
  for (auto& q : queue_) out.push_back(std::move(q.frag));
  queue_.clear();
  return out;
}

wire::LoraFrame ChState::make_digest(const std::vector<NodeId>& members,
                                     double now) {
  (void)now;
  wire::LoraFrame frame;
  frame.header.dest_ch = kBroadcast;
  frame.header.hop_limit = cfg_.hop_limit;
  frame.header.flags = wire::kLoraFlagDigest;
  frame.header.backbone_seq = backbone_seq_++;
  frame.src_ch = self_;
  for (NodeId m : members) {
    if (frame.digest_members.size() ==
        static_cast<std::size_t>(wire::kMaxDigestMembers)) {
      ++counters_.digest_truncated;
      break;
    }
    frame.digest_members.push_back(m);
  }
  ++counters_.frames_sent;
  return frame;
}

}  // namespace dualmesh::backbone
