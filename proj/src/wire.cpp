#include "dualmesh/wire.hpp"

#include <stdexcept>

namespace dualmesh::wire {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) {
  out.push_back(v);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

// Bounds-checked big-endian reader.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool read_u8(std::uint8_t& v) {
    if (pos_ + 1 > bytes_.size()) return false;
    v = bytes_[pos_++];
    return true;
  }

  bool read_u16(std::uint16_t& v) {
    if (pos_ + 2 > bytes_.size()) return false;
    v = static_cast<std::uint16_t>(bytes_[pos_] << 8 | bytes_[pos_ + 1]);
    pos_ += 2;
    return true;
  }

  bool read_bytes(std::vector<std::uint8_t>& v, std::size_t n) {
    if (pos_ + n > bytes_.size()) return false;
    v.assign(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return true;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_beacon(const Beacon& b) {
  require(b.version <= 0x0F, "beacon: version must fit 4 bits");
  require(b.flags <= 0x0F, "beacon: flags must fit 4 bits");
  require(b.battery_pct <= 100, "beacon: battery_pct must be 0..100");
  require(b.neighbors.size() <= kMaxBeaconNeighbors,
          "beacon: at most 4 neighbor entries");
  std::vector<std::uint8_t> out;
  put_u8(out, static_cast<std::uint8_t>(FrameType::Beacon));
  put_u8(out, static_cast<std::uint8_t>(b.version << 4 | (b.flags & 0x0F)));
  put_u16(out, b.node);
  put_u16(out, b.advertised_key);
  put_u8(out, b.battery_pct);
  put_u16(out, b.cluster);
  put_u8(out, static_cast<std::uint8_t>(b.neighbors.size()));
  for (const auto& n : b.neighbors) {
    put_u16(out, n.id);
    put_u8(out, n.lq);
  }
  return out;
}

std::vector<std::uint8_t> encode_rreq(const Rreq& r) {
  std::vector<std::uint8_t> out;
  put_u8(out, static_cast<std::uint8_t>(FrameType::Rreq));
  put_u8(out, r.rreq_id);
  put_u16(out, r.origin);
  put_u16(out, r.origin_seq);
  put_u16(out, r.dest);
  put_u16(out, r.dest_seq);
  put_u8(out, r.hop_count);
  put_u16(out, r.path_cost);
  put_u8(out, r.ttl);
  return out;
}

std::vector<std::uint8_t> encode_rrep(const Rrep& r) {
  std::vector<std::uint8_t> out;
  put_u8(out, static_cast<std::uint8_t>(FrameType::Rrep));
  put_u16(out, r.origin);
  put_u16(out, r.origin_seq);
  put_u16(out, r.dest);
  put_u16(out, r.dest_seq);
  put_u8(out, r.hop_count);
  put_u16(out, r.path_cost);
  put_u8(out, r.lifetime_s);
  return out;
}

std::vector<std::uint8_t> encode_fragment(const DataFragment& f) {
  require(f.frag_count >= 1 && f.frag_count <= kMaxFragmentsPerMessage,
          "fragment: frag_count must be 1..8");
  require(f.frag_index < f.frag_count, "fragment: frag_index < frag_count");
  require(f.payload.size() <= kMaxFragmentPayload,
          "fragment: payload must be at most 15 bytes");
  std::vector<std::uint8_t> out;
  put_u8(out, static_cast<std::uint8_t>(FrameType::Data));
  put_u16(out, f.src);
  put_u16(out, f.dst);
  put_u16(out, f.msg_seq);
  put_u8(out, f.ttl);
  put_u8(out, static_cast<std::uint8_t>(f.frag_index << 4 | f.frag_count));
  put_u8(out, static_cast<std::uint8_t>(f.payload.size()));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

std::vector<std::uint8_t> encode_lora(const LoraFrame& f) {
  require(f.header.hop_limit <= 0x0F, "lora: hop_limit must fit 4 bits");
  require(f.header.flags <= 0x0F, "lora: flags must fit 4 bits");
  std::vector<std::uint8_t> out = encode_header(f.header);
  put_u16(out, f.src_ch);
  if (f.is_digest()) {
    require(f.fragments.empty(), "lora digest: no fragments allowed");
    require(f.digest_members.size() <= static_cast<std::size_t>(kMaxDigestMembers),
            "lora digest: at most 60 member ids");
    put_u8(out, static_cast<std::uint8_t>(f.digest_members.size()));
    for (NodeId id : f.digest_members) put_u16(out, id);
  } else {
    require(f.digest_members.empty(), "lora data: no digest members allowed");
    require(!f.fragments.empty() &&
                f.fragments.size() <=
                    static_cast<std::size_t>(kMaxFragmentsPerMessage),
            "lora data: fragment count must be 1..8");
    put_u8(out, static_cast<std::uint8_t>(f.fragments.size()));
    for (const auto& frag : f.fragments) {
      require(!frag.empty() && frag.size() <= 255,
              "lora data: bad encoded fragment size");
      put_u8(out, static_cast<std::uint8_t>(frag.size()));
      out.insert(out.end(), frag.begin(), frag.end());
    }
  }
  require(out.size() <= kMaxLoraFrameBytes, "lora: frame exceeds 255 bytes");
  return out;
}

Decoded<Frame> decode_beacon(Reader& r) {
  Beacon b;
  std::uint8_t vf = 0, count = 0;
  if (!r.read_u8(vf) || !r.read_u16(b.node) || !r.read_u16(b.advertised_key) ||
      !r.read_u8(b.battery_pct) || !r.read_u16(b.cluster) || !r.read_u8(count))
    return DecodeError::Truncated;
  b.version = vf >> 4;
  b.flags = vf & 0x0F;
  if (b.battery_pct > 100) return DecodeError::BadValue;
  if (count > kMaxBeaconNeighbors) return DecodeError::BadValue;
  for (std::uint8_t i = 0; i < count; ++i) {
    NeighborRef n;
    if (!r.read_u16(n.id) || !r.read_u8(n.lq)) return DecodeError::Truncated;
    b.neighbors.push_back(n);
  }
  if (!r.done()) return DecodeError::TrailingBytes;
  return Frame{std::move(b)};
}

Decoded<Frame> decode_rreq(Reader& r) {
  Rreq q;
  if (!r.read_u8(q.rreq_id) || !r.read_u16(q.origin) ||
      !r.read_u16(q.origin_seq) || !r.read_u16(q.dest) ||
      !r.read_u16(q.dest_seq) || !r.read_u8(q.hop_count) ||
      !r.read_u16(q.path_cost) || !r.read_u8(q.ttl))
    return DecodeError::Truncated;
  if (!r.done()) return DecodeError::TrailingBytes;
  return Frame{q};
}

Decoded<Frame> decode_rrep(Reader& r) {
  Rrep p;
  if (!r.read_u16(p.origin) || !r.read_u16(p.origin_seq) ||
      !r.read_u16(p.dest) || !r.read_u16(p.dest_seq) ||
      !r.read_u8(p.hop_count) || !r.read_u16(p.path_cost) ||
      !r.read_u8(p.lifetime_s))
    return DecodeError::Truncated;
  if (!r.done()) return DecodeError::TrailingBytes;
  return Frame{p};
}

Decoded<DataFragment> decode_fragment_body(Reader& r) {
  DataFragment f;
  std::uint8_t ic = 0, len = 0;
  if (!r.read_u16(f.src) || !r.read_u16(f.dst) || !r.read_u16(f.msg_seq) ||
      !r.read_u8(f.ttl) || !r.read_u8(ic) || !r.read_u8(len))
    return DecodeError::Truncated;
  f.frag_index = ic >> 4;
  f.frag_count = ic & 0x0F;
  if (f.frag_count < 1 || f.frag_count > kMaxFragmentsPerMessage)
    return DecodeError::BadValue;
  if (f.frag_index >= f.frag_count) return DecodeError::BadValue;
  if (len > kMaxFragmentPayload) return DecodeError::BadValue;
  if (!r.read_bytes(f.payload, len)) return DecodeError::Truncated;
  return f;
}

}  // namespace

const char* to_string(DecodeError err) {
  switch (err) {
    case DecodeError::Truncated: return "truncated input";
    case DecodeError::UnknownType: return "unknown frame type";
    case DecodeError::BadValue: return "field violates an invariant";
    case DecodeError::Oversize: return "frame too large";
    case DecodeError::TrailingBytes: return "trailing bytes after frame";
  }
  return "unknown error";
}

std::vector<std::uint8_t> encode_header(const InterClusterHeader& header) {
  std::vector<std::uint8_t> out;
  put_u16(out, header.dest_ch);
  put_u8(out, static_cast<std::uint8_t>(header.hop_limit << 4 |
                                        (header.flags & 0x0F)));
  put_u8(out, header.backbone_seq);
  return out;
}

std::vector<std::uint8_t> encode(const Frame& frame) {
  std::vector<std::uint8_t> out = std::visit(
      [](const auto& f) -> std::vector<std::uint8_t> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Beacon>) return encode_beacon(f);
        if constexpr (std::is_same_v<T, Rreq>) return encode_rreq(f);
        if constexpr (std::is_same_v<T, Rrep>) return encode_rrep(f);
        if constexpr (std::is_same_v<T, DataFragment>)
          return encode_fragment(f);
        if constexpr (std::is_same_v<T, LoraFrame>) return encode_lora(f);
      },
      frame);
  if (!std::holds_alternative<LoraFrame>(frame))
    require(out.size() <= kMaxBleFrameBytes, "frame exceeds 31 bytes");
  return out;
}

Decoded<Frame> decode_ble(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > kMaxBleFrameBytes) return DecodeError::Oversize;
  Reader r(bytes);
  std::uint8_t tag = 0;
  if (!r.read_u8(tag)) return DecodeError::Truncated;
  switch (static_cast<FrameType>(tag)) {
    case FrameType::Beacon: return decode_beacon(r);
    case FrameType::Rreq: return decode_rreq(r);
    case FrameType::Rrep: return decode_rrep(r);
    case FrameType::Data: {
      auto f = decode_fragment_body(r);
      if (!f) return f.error();
      if (!r.done()) return DecodeError::TrailingBytes;
      return Frame{*f};
    }
    default: return DecodeError::UnknownType;
  }
}

Decoded<LoraFrame> decode_lora(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > kMaxLoraFrameBytes) return DecodeError::Oversize;
  Reader r(bytes);
  LoraFrame f;
  std::uint8_t hf = 0, count = 0;
  if (!r.read_u16(f.header.dest_ch) || !r.read_u8(hf) ||
      !r.read_u8(f.header.backbone_seq) || !r.read_u16(f.src_ch) ||
      !r.read_u8(count))
    return DecodeError::Truncated;
  f.header.hop_limit = hf >> 4;
  f.header.flags = hf & 0x0F;
  if (f.is_digest()) {
    if (count > kMaxDigestMembers) return DecodeError::BadValue;
    for (std::uint8_t i = 0; i < count; ++i) {
      NodeId id = 0;
      if (!r.read_u16(id)) return DecodeError::Truncated;
      f.digest_members.push_back(id);
    }
  } else {
    if (count < 1 || count > kMaxFragmentsPerMessage)
      return DecodeError::BadValue;
    for (std::uint8_t i = 0; i < count; ++i) {
      std::uint8_t len = 0;
      if (!r.read_u8(len)) return DecodeError::Truncated;
      std::vector<std::uint8_t> raw;
      if (!r.read_bytes(raw, len)) return DecodeError::Truncated;
      // Each entry must itself be a valid encoded DataFragment.
      Reader fr(raw);
      std::uint8_t tag = 0;
      if (!fr.read_u8(tag)) return DecodeError::Truncated;
      if (static_cast<FrameType>(tag) != FrameType::Data)
        return DecodeError::BadValue;
      auto frag = decode_fragment_body(fr);
      if (!frag) return frag.error();
      if (!fr.done()) return DecodeError::TrailingBytes;
      f.fragments.push_back(std::move(raw));
    }
  }
  if (!r.done()) return DecodeError::TrailingBytes;
  return f;
}

Decoded<Frame> decode(std::span<const std::uint8_t> bytes, Radio radio) {
  if (radio == Radio::Ble) return decode_ble(bytes);
  auto f = decode_lora(bytes);
  if (!f) return f.error();
  return Frame{*f};
}

}  // namespace dualmesh::wire
