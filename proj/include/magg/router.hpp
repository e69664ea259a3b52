#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "magg/errors.hpp"
#include "magg/message.hpp"
#include "magg/topology.hpp"

namespace magg {

enum class Domain : std::uint8_t { intra, inter };

struct Leg {
  RankId from;
  RankId to;
  Domain domain;

  bool operator==(const Leg& o) const {
    return from == o.from && to == o.to && domain == o.domain;
  }
};

enum class Policy : std::uint8_t { aml, mst_one_sided, mst_two_sided, new_mst };

Policy parse_policy(const std::string& name);
std::string policy_name(Policy p);
inline bool policy_aggregates(Policy p) { return p != Policy::aml; }
inline bool policy_two_sided(Policy p) {
  return p == Policy::mst_two_sided || p == Policy::new_mst;
}

/// Local rank of the in-group forwarder that gathers traffic bound for
/// target_group. Pure function, identical on every rank.
inline std::uint32_t route_select(GroupId target_group, std::uint32_t group_size) {
  return target_group % group_size;
}

/// Inter-first flow: hop across groups to the rank sharing the sender's
/// local index, then forward inside the destination group.
std::vector<Leg> route_aml(RankId src, RankId dst, const DomainMap& dm);

/// Intra-first flow: hop inside the sender's group to the rank sharing
/// the destination's local index, then across groups along that row.
std::vector<Leg> route_mst(RankId src, RankId dst, const DomainMap& dm);

using Handler = std::function<void(RankId src, const std::uint8_t* data, std::size_t len)>;
using RequestHandler =
    std::function<std::vector<std::uint8_t>(RankId src, const std::uint8_t* data, std::size_t len)>;

class HandlerRegistry {
 public:
  void add(std::uint16_t id, Handler fn);
  void add_request(std::uint16_t id, RequestHandler fn);

  bool has(std::uint16_t id) const { return handlers_.count(id) || request_handlers_.count(id); }
  bool has_request(std::uint16_t id) const { return request_handlers_.count(id) != 0; }

  void invoke(std::uint16_t id, RankId src, const std::uint8_t* data, std::size_t len) const;
  std::vector<std::uint8_t> invoke_request(std::uint16_t id, RankId src, const std::uint8_t* data,
                                           std::size_t len) const;

 private:
  std::unordered_map<std::uint16_t, Handler> handlers_;
  std::unordered_map<std::uint16_t, RequestHandler> request_handlers_;
};

/// Counting-barrier bookkeeping: the epoch completes when every delivery
/// obligation created in it has run its handler.
struct BarrierState {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t epoch = 0;
};

}  // namespace magg
