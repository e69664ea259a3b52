#pragma once

#include <cstdint>

#include "magg/errors.hpp"

namespace magg {

using RankId = std::uint32_t;
using GroupId = std::uint32_t;

/// Per-message hop constants for the two communication domains.
/// Intra-group hops are cheap, inter-group hops are expensive.
struct HopModel {
  int hops_intra = 1;
  int hops_inter = 10;
};

/// Two-level rank layout: rank = group * group_size + local.
/// All ranks sharing a group form one comm_intra; all ranks sharing a
/// local index form one comm_inter row.
class DomainMap {
 public:
  DomainMap(std::uint32_t total_ranks, std::uint32_t group_size)
      : total_ranks_(total_ranks), group_size_(group_size) {
    if (group_size == 0 || total_ranks == 0 || total_ranks % group_size != 0) {
      throw NonDivisibleLayout("total_ranks must be a positive multiple of group_size");
    }
  }

  std::uint32_t total_ranks() const { return total_ranks_; }
  std::uint32_t group_size() const { return group_size_; }
  std::uint32_t num_groups() const { return total_ranks_ / group_size_; }

  GroupId group_of(RankId r) const { return r / group_size_; }
  std::uint32_t local_of(RankId r) const { return r % group_size_; }
  RankId rank_of(GroupId g, std::uint32_t local) const { return g * group_size_ + local; }

  bool same_group(RankId a, RankId b) const { return group_of(a) == group_of(b); }

 private:
  std::uint32_t total_ranks_;
  std::uint32_t group_size_;
};

inline DomainMap build_domains(std::uint32_t total_ranks, std::uint32_t group_size) {
  return DomainMap(total_ranks, group_size);
}

/// Total hops for s messages under the inter-first (AML) flow:
/// each message pays one inter and one intra hop.
inline long long aml_hops(long long s, const HopModel& m) {
  return s * m.hops_inter + s * m.hops_intra;
}

/// Total hops for a batch of s messages under the intra-first aggregated
/// flow: gather legs, one inter transfer, scatter legs.
inline long long mst_hops(long long s, const HopModel& m) {
  if (s < 1) throw ZeroMessages("mst_hops requires a non-empty batch");
  return m.hops_inter + 2 * (s - 1) * m.hops_intra;
}

/// mst_hops - aml_hops, in closed form.
inline long long hops_delta(long long s, const HopModel& m) {
  if (s < 1) throw ZeroMessages("hops_delta requires a non-empty batch");
  return (1 - s) * m.hops_inter + (s - 2) * m.hops_intra;
}

}  // namespace magg
