#include "magg/message.hpp"

#include <cstring>

namespace magg {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw MalformedFrame("truncated frame");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(in[off + i]) << (8 * i);
  }
  off += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

std::size_t PackedMessage::wire_size() const {
  std::size_t n = 4;
  for (const auto& e : entries) n += e.wire_size();
  return n;
}

std::size_t PackedMessage::payload_bytes() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.payload.size();
  return n;
}

PackedMessage pack(const std::vector<Message>& batch, GroupId target_group, const DomainMap& dm) {
  if (batch.empty()) throw EmptyBatch("cannot pack an empty batch");
  for (const auto& m : batch) {
    if (dm.group_of(m.dst) != target_group) {
      throw MixedTargetGroup("batch entry targets a different group");
    }
  }
  PackedMessage p;
  p.origin_group = dm.group_of(batch.front().src);
  p.target_group = target_group;
  p.entries = batch;
  return p;
}

std::vector<Message> unpack(const PackedMessage& p) { return p.entries; }

std::vector<std::uint8_t> serialize(const PackedMessage& p) {
  std::vector<std::uint8_t> out;
  out.reserve(p.wire_size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.entries.size()));
  for (const auto& e : p.entries) {
    put_le<std::uint32_t>(out, e.src);
    put_le<std::uint32_t>(out, e.dst);
    put_le<std::uint16_t>(out, e.handler_id);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.kind));
    put_le<std::uint64_t>(out, e.request_tag);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.payload.size()));
    out.insert(out.end(), e.payload.begin(), e.payload.end());
  }
  return out;
}

PackedMessage deserialize(const std::vector<std::uint8_t>& bytes, const DomainMap& dm) {
  std::size_t off = 0;
  auto count = get_le<std::uint32_t>(bytes, off);
  if (count == 0) throw MalformedFrame("empty packed frame");
  PackedMessage p;
  p.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Message m;
    m.src = get_le<std::uint32_t>(bytes, off);
    m.dst = get_le<std::uint32_t>(bytes, off);
    m.handler_id = get_le<std::uint16_t>(bytes, off);
    auto kind = get_le<std::uint8_t>(bytes, off);
    if (kind > 2) throw MalformedFrame("bad message kind");
    m.kind = static_cast<MsgKind>(kind);
    m.request_tag = get_le<std::uint64_t>(bytes, off);
    auto len = get_le<std::uint32_t>(bytes, off);
    if (off + len > bytes.size()) throw MalformedFrame("payload length overruns frame");
    m.payload.assign(bytes.begin() + off, bytes.begin() + off + len);
    off += len;
    if (m.src >= dm.total_ranks() || m.dst >= dm.total_ranks()) {
      throw MalformedFrame("rank out of range");
    }
    p.entries.push_back(std::move(m));
  }
  if (off != bytes.size()) throw MalformedFrame("trailing bytes after last entry");
  p.origin_group = dm.group_of(p.entries.front().src);
  p.target_group = dm.group_of(p.entries.front().dst);
  for (const auto& e : p.entries) {
    if (dm.group_of(e.dst) != p.target_group) throw MalformedFrame("mixed target groups in frame");
  }
  return p;
}

std::vector<std::vector<std::uint8_t>> segment_bytes(const std::vector<std::uint8_t>& payload,
                                                     std::size_t seg_bytes) {
  std::vector<std::vector<std::uint8_t>> out;
  if (payload.empty()) return out;
  for (std::size_t off = 0; off < payload.size(); off += seg_bytes) {
    std::size_t n = std::min(seg_bytes, payload.size() - off);
    out.emplace_back(payload.begin() + off, payload.begin() + off + n);
  }
  return out;
}

}  // namespace magg
