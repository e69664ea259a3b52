#include "magg/simnet.hpp"

#include <boost/context/continuation.hpp>

#include <algorithm>
#include <cassert>
#include <random>
#include <sstream>

namespace magg {

namespace ctx = boost::context;

namespace detail {

/// A message plus the legs it has actually traversed and, for responses
/// or unaggregated sends, the legs it still has to follow.
struct Envelope {
  Message msg;
  std::vector<Leg> path;
  std::vector<Leg> route;
};

struct Frame {
  enum class Kind : std::uint8_t { direct, gather, packed, scatter };
  Kind kind;
  std::vector<Envelope> envs;
  GroupId target_group = 0;
};

struct Event {
  double time;
  std::uint64_t seq;
  enum class Type : std::uint8_t { frame, completion } type;
  RankId rank;
  std::shared_ptr<Frame> frame;
  int buf_index = -1;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

struct PendingFlush {
  int buf_index;  // -1 for a dynamic-regime flush
  GroupId target;
  std::vector<Envelope> envs;
};

struct PendingRequest {
  std::function<void(std::vector<std::uint8_t>)> on_response;
  double issued;
};

struct RankState {
  RankId id = 0;
  enum class Status : std::uint8_t { runnable, blocked, done } status = Status::runnable;
  ctx::continuation fiber;
  ctx::continuation sched;
  std::exception_ptr error;

  std::unique_ptr<SendBufferPool> pool;
  std::unique_ptr<RecvBufferPool> recv_pool;
  std::unique_ptr<DynamicBufferState> dyn;
  std::vector<std::vector<std::vector<Leg>>> buf_paths;  // aligned with pool entries
  std::map<GroupId, std::vector<Envelope>> dyn_aggr;
  std::vector<Envelope> dyn_responses;
  std::uint64_t dyn_resident = 0;
  std::deque<Envelope> pending_appends;
  std::deque<PendingFlush> deferred_flushes;

  HandlerRegistry handlers;
  std::unordered_map<std::uint64_t, PendingRequest> pending;
  std::uint64_t next_tag = 1;

  bool in_barrier = false;
  std::uint64_t barrier_epoch = 0;
  std::uint64_t released_epoch = 0;
  bool in_handler = false;
  int busy_send_handles = 0;
  int send_handle_count = 4;
  double busy_until = 0.0;

  // allreduce scratch
  std::uint64_t ar_acc = 0;
  std::uint64_t ar_acc_min = ~std::uint64_t{0};
  std::uint64_t ar_result = 0;
};

}  // namespace detail

using detail::Envelope;
using detail::Event;
using detail::Frame;
using detail::RankState;

namespace {

constexpr std::uint16_t kAllreduceSum = 0xFFF0;
constexpr std::uint16_t kAllreduceResult = 0xFFF1;
constexpr std::uint16_t kAllreduceMin = 0xFFF2;

std::vector<std::uint8_t> encode_u64(std::uint64_t v) {
  std::vector<std::uint8_t> out(8);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
  return out;
}

std::uint64_t decode_u64(const std::uint8_t* d, std::size_t len) {
  if (len != 8) throw MalformedFrame("bad u64 payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(d[i]) << (8 * i);
  return v;
}

std::vector<Leg> reversed_path(const std::vector<Leg>& fwd) {
  std::vector<Leg> out;
  out.reserve(fwd.size());
  for (auto it = fwd.rbegin(); it != fwd.rend(); ++it) {
    out.push_back({it->to, it->from, it->domain});
  }
  return out;
}

}  // namespace

struct Simulator::Impl {
  SimConfig cfg;
  DomainMap dm;
  std::vector<std::unique_ptr<RankState>> ranks;
  std::priority_queue<Event, std::vector<Event>, detail::EventLater> events;
  std::uint64_t next_seq = 0;
  double clock = 0.0;
  std::mt19937_64 rng;
  CommStats stats;
  std::vector<TraceRecord> trace;
  std::unordered_map<std::uint64_t, RequestPaths> req_paths;
  std::uint64_t tags_outstanding = 0;
  std::uint64_t sim_alloc = 0;  // simulated buffer bytes
  bool ran = false;

  Impl(SimConfig c) : cfg(c), dm(c.total_ranks, c.group_size), rng(c.scheduler_seed) {}

  int hops_for(Domain d) const {
    return d == Domain::intra ? cfg.hop_model.hops_intra : cfg.hop_model.hops_inter;
  }

  void push_event(Event ev) {
    ev.seq = next_seq++;
    events.push(std::move(ev));
  }

  void wake(RankState& st) {
    if (st.status == RankState::Status::blocked) st.status = RankState::Status::runnable;
  }

  void record(double t, RankId from, RankId to, Domain d, std::uint64_t bytes, char kind,
              std::uint64_t tag) {
    if (cfg.record_trace) trace.push_back({t, from, to, d, bytes, kind, tag});
  }

  /// Occupies the sender, accounts the leg, and returns the arrival time.
  double charge_send(RankState& s, Domain d, std::uint64_t wire_bytes,
                     std::uint64_t payload_bytes, char kind, RankId to, std::uint64_t tag) {
    double start = std::max(clock, s.busy_until);
    std::uint64_t seg = std::uint64_t{1} << cfg.seg_scale;
    std::uint64_t nseg = std::max<std::uint64_t>(1, (wire_bytes + seg - 1) / seg);
    int h = hops_for(d);
    // Injection overhead grows with the leg's hop distance, so a frame
    // crossing groups occupies the sender far longer than a local one.
    s.busy_until = start + static_cast<double>(nseg) * cfg.per_msg_overhead * h +
                   static_cast<double>(wire_bytes) * cfg.per_byte_cost;
    stats.total_hops += static_cast<std::uint64_t>(h);
    if (d == Domain::intra) {
      stats.intra_msgs++;
    } else {
      stats.inter_msgs++;
    }
    stats.comm_volume += payload_bytes;
    record(start, s.id, to, d, wire_bytes, kind, tag);
    return s.busy_until + static_cast<double>(h) * cfg.per_hop_latency;
  }

  // ---- delivery ---------------------------------------------------------

  void deliver_final(RankState& st, Envelope&& env) {
    stats.delivered++;
    const Message& m = env.msg;
    bool prev = st.in_handler;
    st.in_handler = true;
    switch (m.kind) {
      case MsgKind::one_sided:
        try {
          st.handlers.invoke(m.handler_id, m.src, m.payload.data(), m.payload.size());
        } catch (const UnknownHandler&) {
          stats.handler_faults++;
        }
        break;
      case MsgKind::request: {
        if (cfg.record_trace) req_paths[m.request_tag].forward = env.path;
        std::vector<std::uint8_t> reply =
            st.handlers.invoke_request(m.handler_id, m.src, m.payload.data(), m.payload.size());
        Envelope resp;
        resp.msg.src = st.id;
        resp.msg.dst = m.src;
        resp.msg.handler_id = m.handler_id;
        resp.msg.kind = MsgKind::response;
        resp.msg.request_tag = m.request_tag;
        resp.msg.payload = std::move(reply);
        resp.route = reversed_path(env.path);
        stats.sent++;
        if (resp.route.empty()) {
          st.in_handler = prev;
          deliver_final(st, std::move(resp));
          st.in_handler = true;
        } else if (cfg.policy == Policy::new_mst) {
          st.dyn_responses.push_back(std::move(resp));
          dyn_expand(st, st.dyn_responses.back().msg.wire_size());
          if (st.dyn->barrier_back()) flush_dynamic(st);
        } else {
          transmit_routed(st, std::move(resp), 'r');
        }
        break;
      }
      case MsgKind::response: {
        if (cfg.record_trace) {
          auto& rp = req_paths[m.request_tag];
          rp.response = env.path;
          rp.responses_delivered++;
        }
        auto it = st.pending.find(m.request_tag);
        if (it == st.pending.end()) throw Error("response for an unknown request tag");
        auto cb = std::move(it->second.on_response);
        st.pending.erase(it);
        tags_outstanding--;
        cb(m.payload);
        break;
      }
    }
    st.in_handler = prev;
  }

  /// Sends env along env.route, consuming the first leg.
  void transmit_routed(RankState& s, Envelope&& env, char kind) {
    assert(!env.route.empty());
    Leg leg = env.route.front();
    env.route.erase(env.route.begin());
    env.path.push_back(leg);
    double arrival =
        charge_send(s, leg.domain, env.msg.wire_size(), env.msg.payload.size(), kind, leg.to,
                    env.msg.kind == MsgKind::one_sided ? 0 : env.msg.request_tag);
    auto fr = std::make_shared<Frame>();
    fr->kind = Frame::Kind::direct;
    fr->envs.push_back(std::move(env));
    push_event({arrival, 0, Event::Type::frame, leg.to, std::move(fr), -1});
  }

  void transmit_gather(RankState& s, Envelope&& env, RankId fwd, GroupId target_group) {
    Leg leg{s.id, fwd, Domain::intra};
    env.path.push_back(leg);
    double arrival = charge_send(s, Domain::intra, env.msg.wire_size(), env.msg.payload.size(),
                                 'g', fwd, env.msg.request_tag);
    auto fr = std::make_shared<Frame>();
    fr->kind = Frame::Kind::gather;
    fr->target_group = target_group;
    fr->envs.push_back(std::move(env));
    push_event({arrival, 0, Event::Type::frame, fwd, std::move(fr), -1});
  }

  void transmit_packed(RankState& s, GroupId target_group, std::vector<Envelope>&& envs,
                       int buf_index) {
    RankId peer = dm.rank_of(target_group, dm.local_of(s.id));
    PackedMessage p;
    p.origin_group = dm.group_of(s.id);
    p.target_group = target_group;
    std::uint64_t payload_bytes = 0;
    for (auto& e : envs) {
      e.path.push_back({s.id, peer, Domain::inter});
      payload_bytes += e.msg.payload.size();
      p.entries.push_back(e.msg);
    }
    std::uint64_t wire = p.wire_size();
    double arrival = charge_send(s, Domain::inter, wire, payload_bytes, 'p', peer, 0);
    stats.flushes++;
    auto fr = std::make_shared<Frame>();
    fr->kind = Frame::Kind::packed;
    fr->target_group = target_group;
    fr->envs = std::move(envs);
    push_event({arrival, 0, Event::Type::frame, peer, std::move(fr), -1});
    if (buf_index >= 0) {
      s.busy_send_handles++;
      push_event({arrival, 0, Event::Type::completion, s.id, nullptr, buf_index});
    }
  }

  // ---- aggregation ------------------------------------------------------

  void dyn_expand(RankState& st, std::uint64_t bytes) {
    std::uint64_t before = st.dyn->total_buf;
    st.dyn->expand(bytes);
    st.dyn_resident += bytes;
    sim_alloc += st.dyn->total_buf - before;
    if (sim_alloc > cfg.memory_cap_bytes) {
      throw OutOfMemory("simulated buffer allocation exceeds the configured cap");
    }
  }

  void flush_dynamic(RankState& st) {
    for (auto& [tg, envs] : st.dyn_aggr) {
      if (!envs.empty()) transmit_packed(st, tg, std::move(envs), -1);
    }
    st.dyn_aggr.clear();
    for (auto& env : st.dyn_responses) transmit_routed(st, std::move(env), 'r');
    st.dyn_responses.clear();
    st.dyn_resident = 0;
    st.dyn->on_flush();
  }

  void start_flush(RankState& st, int buf_index) {
    GroupId target = st.pool->buf(buf_index).target;
    std::vector<Message> msgs = st.pool->take_for_flight(buf_index);
    std::vector<Envelope> envs;
    envs.reserve(msgs.size());
    auto& paths = st.buf_paths[buf_index];
    assert(paths.size() == msgs.size());
    for (std::size_t i = 0; i < msgs.size(); ++i) {
      envs.push_back({std::move(msgs[i]), std::move(paths[i]), {}});
    }
    paths.clear();
    if (st.busy_send_handles >= st.send_handle_count) {
      st.deferred_flushes.push_back({buf_index, target, std::move(envs)});
      return;
    }
    transmit_packed(st, target, std::move(envs), buf_index);
  }

  void forward_append(RankState& st, Envelope&& env) {
    GroupId tg = dm.group_of(env.msg.dst);
    if (cfg.policy == Policy::new_mst) {
      std::uint64_t wire = env.msg.wire_size();
      st.dyn_aggr[tg].push_back(std::move(env));
      dyn_expand(st, wire);
      if (st.dyn->barrier_back()) flush_dynamic(st);
      return;
    }
    auto res = st.pool->append(tg, env.msg);
    if (res.status == SendBufferPool::AppendStatus::no_buffer && st.busy_send_handles > 0) {
      try {
        st.pool->switch_active();
        res = st.pool->append(tg, env.msg);
      } catch (const SwitchWhileAvailable&) {
      }
    }
    if (res.status == SendBufferPool::AppendStatus::no_buffer) {
      st.pending_appends.push_back(std::move(env));
      return;
    }
    st.buf_paths[res.buf_index].push_back(std::move(env.path));
    if (res.flush_needed) start_flush(st, res.buf_index);
  }

  void retry_pending(RankState& st) {
    while (!st.pending_appends.empty()) {
      Envelope env = std::move(st.pending_appends.front());
      st.pending_appends.pop_front();
      std::size_t before = st.pending_appends.size();
      forward_append(st, std::move(env));
      if (st.pending_appends.size() > before) break;  // still no room
    }
  }

  void flush_all(RankState& st) {
    if (cfg.policy == Policy::new_mst) {
      if (!st.dyn_aggr.empty() || !st.dyn_responses.empty()) flush_dynamic(st);
      return;
    }
    if (!st.pool) return;
    for (int idx : st.pool->filling_buffers()) start_flush(st, idx);
    retry_pending(st);
  }

  // ---- send entry points ------------------------------------------------

  void submit(RankState& from, Envelope&& env) {
    stats.sent++;
    const Message& m = env.msg;
    if (m.dst == from.id) {
      deliver_final(from, std::move(env));
      return;
    }
    if (cfg.policy == Policy::aml) {
      env.route = route_aml(m.src, m.dst, dm);
      transmit_routed(from, std::move(env), 'd');
      return;
    }
    if (dm.same_group(m.src, m.dst)) {
      env.route = {{m.src, m.dst, Domain::intra}};
      transmit_routed(from, std::move(env), 'd');
      return;
    }
    GroupId tg = dm.group_of(m.dst);
    RankId fwd = dm.rank_of(dm.group_of(m.src), route_select(tg, dm.group_size()));
    if (fwd == from.id) {
      forward_append(from, std::move(env));
    } else {
      transmit_gather(from, std::move(env), fwd, tg);
    }
  }

  // ---- event processing -------------------------------------------------

  void process_frame(RankState& st, Frame& fr, double arrival) {
    // Ingesting a frame costs like injecting one: scaled by the hop
    // distance of the leg it arrived on.
    Domain in_domain = Domain::intra;
    if (fr.kind == Frame::Kind::packed) {
      in_domain = Domain::inter;
    } else if ((fr.kind == Frame::Kind::direct || fr.kind == Frame::Kind::scatter) &&
               !fr.envs.front().path.empty()) {
      in_domain = fr.envs.front().path.back().domain;
    }
    st.busy_until =
        std::max(st.busy_until, arrival) + cfg.per_msg_overhead * hops_for(in_domain);
    switch (fr.kind) {
      case Frame::Kind::direct:
      case Frame::Kind::scatter: {
        Envelope env = std::move(fr.envs.front());
        if (env.route.empty()) {
          deliver_final(st, std::move(env));
        } else {
          transmit_routed(st, std::move(env), env.msg.kind == MsgKind::response ? 'r' : 'd');
        }
        break;
      }
      case Frame::Kind::gather:
        forward_append(st, std::move(fr.envs.front()));
        break;
      case Frame::Kind::packed: {
        auto slot = st.recv_pool->acquire();
        if (slot) st.recv_pool->start_drain(*slot);
        for (auto& env : fr.envs) {
          if (env.msg.dst == st.id) {
            deliver_final(st, std::move(env));
          } else {
            Leg leg{st.id, env.msg.dst, Domain::intra};
            env.path.push_back(leg);
            double a = charge_send(st, Domain::intra, env.msg.wire_size(),
                                   env.msg.payload.size(), 's', env.msg.dst,
                                   env.msg.request_tag);
            auto sf = std::make_shared<Frame>();
            sf->kind = Frame::Kind::scatter;
            sf->envs.push_back(std::move(env));
            push_event({a, 0, Event::Type::frame, leg.to, std::move(sf), -1});
          }
        }
        if (slot) st.recv_pool->release(*slot);
        break;
      }
    }
  }

  void dispatch(Event& ev) {
    RankState& st = *ranks[ev.rank];
    if (ev.type == Event::Type::completion) {
      st.busy_send_handles--;
      st.pool->on_send_complete(ev.buf_index);
      while (!st.deferred_flushes.empty() && st.busy_send_handles < st.send_handle_count) {
        auto pf = std::move(st.deferred_flushes.front());
        st.deferred_flushes.pop_front();
        transmit_packed(st, pf.target, std::move(pf.envs), pf.buf_index);
      }
      retry_pending(st);
      wake(st);
      return;
    }
    process_frame(st, *ev.frame, ev.time);
    wake(st);
  }

  // ---- scheduling -------------------------------------------------------

  void yield(RankState& st) { st.sched = std::move(st.sched).resume(); }

  void block(RankState& st) {
    st.status = RankState::Status::blocked;
    yield(st);
  }

  void stall_or_release() {
    // A rank parked on a blocking wait may still hold partially filled
    // buffers that other ranks' progress depends on; drain those before
    // judging the stall.
    bool flushed_any = false;
    for (auto& r : ranks) {
      if (r->status == RankState::Status::done) continue;
      if (cfg.policy == Policy::new_mst) {
        if (!r->dyn_aggr.empty() || !r->dyn_responses.empty()) {
          flush_dynamic(*r);
          flushed_any = true;
        }
      } else if (r->pool && !r->pool->filling_buffers().empty()) {
        flush_all(*r);
        flushed_any = true;
      }
    }
    if (flushed_any && !events.empty()) return;

    bool all_done = true;
    bool all_barrier = true;
    for (auto& r : ranks) {
      if (r->status == RankState::Status::done) continue;
      all_done = false;
      if (!r->in_barrier) all_barrier = false;
    }
    if (all_done) return;
    if (all_barrier) {
      if (stats.sent != stats.delivered) {
        throw Error("barrier reached quiescence with undelivered messages");
      }
      for (auto& r : ranks) {
        if (r->status == RankState::Status::done) continue;
        if (!r->pending_appends.empty() || !r->deferred_flushes.empty()) {
          throw Error("barrier reached quiescence with unflushed buffers");
        }
        r->released_epoch = r->barrier_epoch;
        if (r->dyn) {
          sim_alloc -= r->dyn->total_buf - r->dyn->ini_buf;
          r->dyn->release_epoch();
        }
        wake(*r);
      }
      return;
    }
    if (tags_outstanding > 0) {
      throw ResponseTimeout("no progress possible with outstanding requests");
    }
    throw Deadlock("no runnable rank and no pending events");
  }

  void run_loop() {
    std::vector<std::uint32_t> runnable;
    while (true) {
      runnable.clear();
      for (std::uint32_t i = 0; i < ranks.size(); ++i) {
        if (ranks[i]->status == RankState::Status::runnable) runnable.push_back(i);
      }
      if (!runnable.empty()) {
        std::uint32_t pick = runnable[rng() % runnable.size()];
        RankState& st = *ranks[pick];
        st.fiber = std::move(st.fiber).resume();
        if (st.error) std::rethrow_exception(st.error);
        continue;
      }
      if (!events.empty()) {
        Event ev = events.top();
        events.pop();
        clock = ev.time;
        dispatch(ev);
        continue;
      }
      bool all_done = std::all_of(ranks.begin(), ranks.end(), [](const auto& r) {
        return r->status == RankState::Status::done;
      });
      if (all_done) break;
      stall_or_release();
    }
    double t = clock;
    for (auto& r : ranks) t = std::max(t, r->busy_until);
    stats.comm_time = t;
  }
};

// ---- Rank ---------------------------------------------------------------

RankId Rank::id() const { return st_->id; }
std::uint32_t Rank::size() const { return sim_->impl_->dm.total_ranks(); }
const DomainMap& Rank::domains() const { return sim_->impl_->dm; }
double Rank::now() const { return sim_->impl_->clock; }

void Rank::register_handler(std::uint16_t handler_id, Handler fn) {
  st_->handlers.add(handler_id, std::move(fn));
}

void Rank::register_request_handler(std::uint16_t handler_id, RequestHandler fn) {
  st_->handlers.add_request(handler_id, std::move(fn));
}

void Rank::send(RankId dst, std::uint16_t handler_id, std::vector<std::uint8_t> payload) {
  auto* impl = sim_->impl_.get();
  if (dst >= impl->dm.total_ranks()) throw Error("destination rank out of range");
  if (payload.size() > kMaxPayloadDefault) throw Error("payload exceeds max_payload");
  Envelope env;
  env.msg.src = st_->id;
  env.msg.dst = dst;
  env.msg.handler_id = handler_id;
  env.msg.kind = MsgKind::one_sided;
  env.msg.payload = std::move(payload);
  impl->submit(*st_, std::move(env));
}

std::uint64_t Rank::send_request(RankId dst, std::uint16_t handler_id,
                                 std::vector<std::uint8_t> payload,
                                 std::function<void(std::vector<std::uint8_t>)> on_response) {
  auto* impl = sim_->impl_.get();
  if (!policy_two_sided(impl->cfg.policy)) {
    throw Error("policy " + policy_name(impl->cfg.policy) + " does not support two-sided messages");
  }
  if (dst >= impl->dm.total_ranks()) throw Error("destination rank out of range");
  std::uint64_t tag = (static_cast<std::uint64_t>(st_->id) << 40) | st_->next_tag++;
  st_->pending.emplace(tag, detail::PendingRequest{std::move(on_response), impl->clock});
  impl->tags_outstanding++;
  Envelope env;
  env.msg.src = st_->id;
  env.msg.dst = dst;
  env.msg.handler_id = handler_id;
  env.msg.kind = MsgKind::request;
  env.msg.request_tag = tag;
  env.msg.payload = std::move(payload);
  impl->submit(*st_, std::move(env));
  return tag;
}

std::vector<std::uint8_t> Rank::request(RankId dst, std::uint16_t handler_id,
                                        std::vector<std::uint8_t> payload) {
  auto* impl = sim_->impl_.get();
  if (st_->in_handler) {
    throw Error("blocking request inside a handler; use send_request for a deferred reply");
  }
  bool done = false;
  std::vector<std::uint8_t> result;
  double issued = impl->clock;
  send_request(dst, handler_id, std::move(payload), [&](std::vector<std::uint8_t> r) {
    result = std::move(r);
    done = true;
  });
  impl->flush_all(*st_);  // the request itself may sit in a local buffer
  while (!done) {
    if (impl->clock - issued > impl->cfg.response_timeout) {
      throw ResponseTimeout("request exceeded the simulated-time bound");
    }
    impl->block(*st_);
  }
  return result;
}

void Rank::flush() { sim_->impl_->flush_all(*st_); }

void Rank::barrier() {
  // Parked aggregates are drained by the scheduler once the epoch
  // quiesces, so entering the barrier does not force a partial flush.
  auto* impl = sim_->impl_.get();
  st_->barrier_epoch++;
  st_->in_barrier = true;
  while (st_->released_epoch < st_->barrier_epoch) {
    impl->block(*st_);
  }
  st_->in_barrier = false;
}

std::uint64_t Rank::allreduce_sum(std::uint64_t value) {
  auto* impl = sim_->impl_.get();
  if (st_->id == 0) {
    st_->ar_acc += value;
  } else {
    send(0, kAllreduceSum, encode_u64(value));
  }
  barrier();
  if (st_->id == 0) {
    st_->ar_result = st_->ar_acc;
    st_->ar_acc = 0;
    for (RankId r = 1; r < impl->dm.total_ranks(); ++r) {
      send(r, kAllreduceResult, encode_u64(st_->ar_result));
    }
  }
  barrier();
  return st_->ar_result;
}

std::uint64_t Rank::allreduce_min(std::uint64_t value) {
  auto* impl = sim_->impl_.get();
  if (st_->id == 0) {
    st_->ar_acc_min = std::min(st_->ar_acc_min, value);
  } else {
    send(0, kAllreduceMin, encode_u64(value));
  }
  barrier();
  if (st_->id == 0) {
    st_->ar_result = st_->ar_acc_min;
    st_->ar_acc_min = ~std::uint64_t{0};
    for (RankId r = 1; r < impl->dm.total_ranks(); ++r) {
      send(r, kAllreduceResult, encode_u64(st_->ar_result));
    }
  }
  barrier();
  return st_->ar_result;
}

// ---- Simulator ----------------------------------------------------------

Simulator::Simulator(SimConfig cfg) : impl_(std::make_unique<Impl>(cfg)) {
  auto* impl = impl_.get();
  for (std::uint32_t i = 0; i < cfg.total_ranks; ++i) {
    auto st = std::make_unique<RankState>();
    st->id = i;
    if (policy_aggregates(cfg.policy)) {
      if (cfg.policy == Policy::new_mst) {
        st->dyn = std::make_unique<DynamicBufferState>(cfg.buffers);
        impl->sim_alloc += cfg.buffers.ini_buf;
      } else {
        st->pool = std::make_unique<SendBufferPool>(cfg.buffers);
        st->buf_paths.resize(static_cast<std::size_t>(st->pool->size()));
        impl->sim_alloc +=
            static_cast<std::uint64_t>(st->pool->size()) * cfg.buffers.buf_capacity_bytes;
      }
      st->recv_pool = std::make_unique<RecvBufferPool>(cfg.buffers);
      st->send_handle_count = cfg.buffers.reserved_buf_num;
    }
    impl->ranks.push_back(std::move(st));
  }
  if (impl->sim_alloc > cfg.memory_cap_bytes) {
    throw OutOfMemory("static pool allocation exceeds the configured cap");
  }
}

Simulator::~Simulator() = default;

CommStats Simulator::run(const RankProgram& program) {
  auto* impl = impl_.get();
  if (impl->ran) throw Error("Simulator::run may only be called once per instance");
  impl->ran = true;
  for (auto& stp : impl->ranks) {
    RankState* st = stp.get();
    // Engine-internal collective plumbing.
    st->handlers.add(kAllreduceSum, [st](RankId, const std::uint8_t* d, std::size_t n) {
      st->ar_acc += decode_u64(d, n);
    });
    st->handlers.add(kAllreduceResult, [st](RankId, const std::uint8_t* d, std::size_t n) {
      st->ar_result = decode_u64(d, n);
    });
    st->handlers.add(kAllreduceMin, [st](RankId, const std::uint8_t* d, std::size_t n) {
      st->ar_acc_min = std::min(st->ar_acc_min, decode_u64(d, n));
    });
    st->fiber = ctx::callcc([this, st, &program](ctx::continuation&& sched) {
      st->sched = std::move(sched);
      st->status = RankState::Status::blocked;
      st->sched = std::move(st->sched).resume();  // wait for the first scheduling slot
      Rank rank(this, st);
      try {
        program(rank);
        rank.barrier();  // drain everything before retiring
      } catch (...) {
        st->error = std::current_exception();
      }
      st->status = RankState::Status::done;
      return std::move(st->sched);
    });
    st->status = RankState::Status::runnable;
  }
  impl->run_loop();
  return impl->stats;
}

const CommStats& Simulator::stats() const { return impl_->stats; }
const std::vector<TraceRecord>& Simulator::trace() const { return impl_->trace; }
const std::unordered_map<std::uint64_t, RequestPaths>& Simulator::request_paths() const {
  return impl_->req_paths;
}
const DomainMap& Simulator::domains() const { return impl_->dm; }

std::string Simulator::dump_trace() const {
  std::ostringstream os;
  for (const auto& t : impl_->trace) {
    os << t.time << ' ' << t.sender << ' ' << t.receiver << ' '
       << (t.domain == Domain::intra ? "intra" : "inter") << ' ' << t.bytes << ' ' << t.kind
       << '\n';
  }
  return os.str();
}

}  // namespace magg
