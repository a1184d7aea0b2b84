#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dualmesh/types.hpp"
#include "dualmesh/wire.hpp"

namespace dualmesh::backbone {

struct Config {
  double listen_period_s = 30.0;
  double listen_window_s = 2.0;
  double epoch_offset_s = 0.0;
  double flush_timeout_s = 0.200;
  std::uint8_t hop_limit = 3;
  double digest_period_s = 60.0;
  int directory_expiry_periods = 3;
};

// Duty-cycled LoRa receive schedule: active for `window` at the start of
// every `period`, relative to the shared epoch.
struct ListenSchedule {
  double period_s = 30.0;
  double window_s = 2.0;
  double offset_s = 0.0;
};

bool in_listen_window(const ListenSchedule& schedule, double now);

// Total active-listen time within [from, to), in seconds.
double listen_time_between(const ListenSchedule& schedule, double from,
                           double to);

struct Counters {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_rebroadcast = 0;
  std::uint64_t duplicates_dropped = 0;
  std::uint64_t digest_truncated = 0;
  std::uint64_t forced_flushes = 0;
};

// Tier-2 state for a cluster head: fragment aggregation toward destination
// CHs, duplicate suppression for the flooded backbone, and the directory of
// node -> CH mappings learned from membership digests.
class ChState {
 public:
  ChState(NodeId self, const Config& cfg) : self_(self), cfg_(cfg) {}

  NodeId self() const { return self_; }
  const Config& config() const { return cfg_; }
  const Counters& counters() const { return counters_; }

  // Queue fragments bound for `dest` (a node id; its CH is resolved via the
  // directory, broadcast when unknown). Flushes first when the staging area
  // is full. Returns any frames that had to be emitted by that flush.
  std::vector<wire::LoraFrame> enqueue_for_backbone(
      const std::vector<wire::DataFragment>& fragments, NodeId dest,
      double now);

  // Emit frames for every destination group that is ready: 8 fragments,
  // 120 payload bytes, or an oldest entry at least flush_timeout old.
  std::vector<wire::LoraFrame> flush_aggregate(double now);

  // Earliest time any queued group becomes flush-ready, if any.
  std::optional<double> next_flush_deadline() const;

  struct RxResult {
    bool duplicate = false;
    std::vector<wire::DataFragment> deliver;  // decapsulated for local BLE
    std::optional<wire::LoraFrame> rebroadcast;
  };
  RxResult handle_lora_frame(const wire::LoraFrame& frame, double now);

  // Periodic broadcast of this cluster's member list (truncated to 60 ids).
  wire::LoraFrame make_digest(const std::vector<NodeId>& members, double now);

  // Directory lookup: the CH believed responsible for `node`.
  std::optional<NodeId> lookup_ch(NodeId node, double now) const;

  // Empties the aggregation queue (role loss); returns what was queued.
  std::vector<wire::DataFragment> drain();

  int queued_fragments() const { return static_cast<int>(queue_.size()); }

  static constexpr int kQueueFragmentCap = 8;
  static constexpr std::size_t kQueuePayloadCap = 120;

 private:
  struct QueuedFragment {
    wire::DataFragment frag;
    NodeId dest_ch = kBroadcast;
    double queued_at = 0.0;
  };

  struct DirEntry {
    NodeId node = 0;
    NodeId ch = 0;
    double learned_at = 0.0;
  };

  struct SeenFrame {
    NodeId src_ch = 0;
    std::uint8_t backbone_seq = 0;
  };

  bool seen(NodeId src_ch, std::uint8_t seq) const;
  void remember(NodeId src_ch, std::uint8_t seq);
  void learn_digest(const wire::LoraFrame& frame, double now);
  wire::LoraFrame build_frame(NodeId dest_ch,
                              std::vector<const wire::DataFragment*> frags);
  std::vector<wire::LoraFrame> flush_group(NodeId dest_ch);

  NodeId self_;
  Config cfg_;
  std::vector<QueuedFragment> queue_;
  std::vector<DirEntry> directory_;
  std::vector<SeenFrame> seen_;  // FIFO ring, cap 32
  std::size_t seen_next_ = 0;
  std::uint8_t backbone_seq_ = 0;
  Counters counters_;
};

}  // namespace dualmesh::backbone
