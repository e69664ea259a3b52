#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "magg/buffers.hpp"
#include "magg/errors.hpp"
#include "magg/message.hpp"
#include "magg/router.hpp"
#include "magg/topology.hpp"

namespace magg {

struct SimConfig {
  std::uint32_t total_ranks = 4;
  std::uint32_t group_size = 2;
  HopModel hop_model;
  Policy policy = Policy::aml;
  BufferConfig buffers;
  int seg_scale = 20;  // log2 of segment bytes

  // Linear latency/bandwidth cost model per leg. Injection overhead is
  // charged per segment and scales with the leg's hop count.
  double per_hop_latency = 1.0;
  double per_byte_cost = 0.001;
  double per_msg_overhead = 0.5;

  std::uint64_t scheduler_seed = 1;
  double response_timeout = 1e12;
  std::uint64_t memory_cap_bytes = std::uint64_t{2} << 30;
  bool record_trace = false;
};

struct CommStats {
  std::uint64_t comm_volume = 0;  // payload bytes moved, summed per leg
  double comm_time = 0.0;
  std::uint64_t intra_msgs = 0;
  std::uint64_t inter_msgs = 0;
  std::uint64_t total_hops = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t flushes = 0;
  std::uint64_t handler_faults = 0;

  double efficiency() const {
    return comm_time > 0.0 ? static_cast<double>(comm_volume) / comm_time : 0.0;
  }
};

inline double efficiency(const CommStats& s) { return s.efficiency(); }

struct TraceRecord {
  double time;
  RankId sender;
  RankId receiver;
  Domain domain;
  std::uint64_t bytes;
  char kind;  // 'd' direct, 'g' gather, 'p' packed, 's' scatter, 'r' response
  std::uint64_t tag;
};

/// Forward/response leg sequences recorded per request tag when tracing.
struct RequestPaths {
  std::vector<Leg> forward;
  std::vector<Leg> response;
  int responses_delivered = 0;
};

class Simulator;
namespace detail {
struct RankState;
}

/// Per-rank handle passed to the workload program. All communication and
/// synchronization flows through it; one execution context owns it.
class Rank {
 public:
  RankId id() const;
  std::uint32_t size() const;
  const DomainMap& domains() const;
  double now() const;

  void register_handler(std::uint16_t handler_id, Handler fn);
  void register_request_handler(std::uint16_t handler_id, RequestHandler fn);

  void send(RankId dst, std::uint16_t handler_id, std::vector<std::uint8_t> payload);
  /// Non-blocking two-sided send; on_response runs on this rank when the
  /// reply arrives. Safe to call from inside a handler.
  std::uint64_t send_request(RankId dst, std::uint16_t handler_id,
                             std::vector<std::uint8_t> payload,
                             std::function<void(std::vector<std::uint8_t>)> on_response);
  /// Blocking two-sided round trip. Refused inside a handler; use
  /// send_request there instead.
  std::vector<std::uint8_t> request(RankId dst, std::uint16_t handler_id,
                                    std::vector<std::uint8_t> payload);

  void flush();
  void barrier();

  /// Router-backed global reductions; internally a gather to rank 0 plus
  /// a broadcast, fenced by barriers. Collective: every rank must call.
  std::uint64_t allreduce_sum(std::uint64_t value);
  std::uint64_t allreduce_min(std::uint64_t value);

 private:
  friend class Simulator;
  Rank(Simulator* sim, detail::RankState* st) : sim_(sim), st_(st) {}
  Simulator* sim_;
  detail::RankState* st_;
};

using RankProgram = std::function<void(Rank&)>;

class Simulator {
 public:
  explicit Simulator(SimConfig cfg);
  ~Simulator();

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Runs the same program on every rank to completion and returns the
  /// accumulated statistics. Deterministic for a fixed config.
  CommStats run(const RankProgram& program);

  const CommStats& stats() const;
  const std::vector<TraceRecord>& trace() const;
  const std::unordered_map<std::uint64_t, RequestPaths>& request_paths() const;
  const DomainMap& domains() const;

  /// Newline-delimited trace dump: time sender receiver domain bytes kind.
  std::string dump_trace() const;

 private:
  friend class Rank;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace magg
