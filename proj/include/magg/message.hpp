#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "magg/errors.hpp"
#include "magg/topology.hpp"

namespace magg {

enum class MsgKind : std::uint8_t { one_sided = 0, request = 1, response = 2 };

constexpr std::size_t kMaxPayloadDefault = std::size_t{1} << 26;

/// Unit message envelope. request_tag is meaningful only for
/// request/response kinds (0 otherwise).
struct Message {
  RankId src = 0;
  RankId dst = 0;
  std::uint16_t handler_id = 0;
  MsgKind kind = MsgKind::one_sided;
  std::uint64_t request_tag = 0;
  std::vector<std::uint8_t> payload;

  /// Bytes this entry occupies in the canonical frame.
  std::size_t wire_size() const { return kEntryHeaderBytes + payload.size(); }

  static constexpr std::size_t kEntryHeaderBytes = 4 + 4 + 2 + 1 + 8 + 4;

  bool operator==(const Message& o) const {
    return src == o.src && dst == o.dst && handler_id == o.handler_id && kind == o.kind &&
           request_tag == o.request_tag && payload == o.payload;
  }
};

/// Aggregated long message carried between groups. Every entry targets
/// the same group.
struct PackedMessage {
  GroupId origin_group = 0;
  GroupId target_group = 0;
  std::vector<Message> entries;

  std::size_t wire_size() const;
  std::size_t payload_bytes() const;
};

/// Segment size as a power of two; the exponent is tuned per network.
struct SegScale {
  int exponent;

  explicit SegScale(int e) : exponent(e) {
    if (e < 10 || e > 30) throw Error("seg_scale exponent must be in [10, 30]");
  }
  std::size_t bytes() const { return std::size_t{1} << exponent; }
};

PackedMessage pack(const std::vector<Message>& batch, GroupId target_group, const DomainMap& dm);
std::vector<Message> unpack(const PackedMessage& p);

/// Canonical little-endian framing:
/// [u32 entry_count][per entry: u32 src, u32 dst, u16 handler_id,
///  u8 kind, u64 request_tag, u32 payload_len, payload bytes]
std::vector<std::uint8_t> serialize(const PackedMessage& p);
PackedMessage deserialize(const std::vector<std::uint8_t>& bytes, const DomainMap& dm);

/// Splits payload into chunks of at most seg_bytes; all but the last are
/// exactly seg_bytes. Concatenation reproduces the input.
std::vector<std::vector<std::uint8_t>> segment_bytes(const std::vector<std::uint8_t>& payload,
                                                     std::size_t seg_bytes);

inline std::vector<std::vector<std::uint8_t>> segment(const std::vector<std::uint8_t>& payload,
                                                      SegScale s) {
  return segment_bytes(payload, s.bytes());
}

}  // namespace magg
