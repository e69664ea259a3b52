// End-to-end acceptance checks. Each criterion prints one [PASS]/[FAIL]
// line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "magg/graph500.hpp"
#include "magg/simnet.hpp"
#include "magg/topology.hpp"

using namespace magg;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail = "") {
  std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : ": ",
              detail.c_str());
  if (!ok) failures++;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::vector<std::uint8_t> enc64(std::uint64_t v) {
  std::vector<std::uint8_t> out(8);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
  return out;
}

std::uint64_t dec64(const std::uint8_t* d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(d[i]) << (8 * i);
  return v;
}

// ---- 1. closed-form hop model -------------------------------------------

void check_hop_model() {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (int intra = 1; intra <= 4 && ok; ++intra) {
    for (int inter = 5; inter <= 100 && ok; ++inter) {
      HopModel m{intra, inter};
      for (long long s = 1; s <= 1000; ++s) {
        if (hops_delta(s, m) != mst_hops(s, m) - aml_hops(s, m)) {
          ok = false;
          break;
        }
        if (inter >= intra && mst_hops(s, m) > aml_hops(s, m) - intra) {
          ok = false;
          break;
        }
      }
    }
  }
  double el = seconds_since(t0);
  report("hop model closed forms exact over the full grid", ok && el < 5.0,
         "384k combinations in " + std::to_string(el) + "s");
}

// ---- 2. worked routing examples -----------------------------------------

void check_routing_examples() {
  DomainMap dm(16, 4);
  auto eq = [](const std::vector<Leg>& got, const std::vector<Leg>& want) {
    return got == want;
  };
  bool ok = eq(route_aml(4, 2, dm), {{4, 0, Domain::inter}, {0, 2, Domain::intra}}) &&
            eq(route_mst(4, 2, dm), {{4, 6, Domain::intra}, {6, 2, Domain::inter}}) &&
            eq(route_aml(1, 11, dm), {{1, 9, Domain::inter}, {9, 11, Domain::intra}}) &&
            eq(route_mst(1, 11, dm), {{1, 3, Domain::intra}, {3, 11, Domain::inter}});
  report("worked routing examples on the 16-rank layout", ok);
}

// ---- 3. exactly-once delivery fuzz --------------------------------------

void check_exactly_once_fuzz() {
  auto t0 = std::chrono::steady_clock::now();
  constexpr std::uint32_t kRanks = 64;
  constexpr std::uint32_t kGroupSize = 8;
  constexpr int kSeeds = 100;
  // 1e5 messages per policy spread across the seeds, plus one full-volume
  // 1e5-message run per policy (seed 0) to cover the bulk case.
  constexpr std::uint64_t kLightPerRank = 16;   // 100 seeds x 1024 msgs
  constexpr std::uint64_t kHeavyPerRank = 1563; // ~1e5 msgs in one run
  bool ok = true;
  std::string detail;
  for (auto policy :
       {Policy::aml, Policy::mst_one_sided, Policy::mst_two_sided, Policy::new_mst}) {
    for (int seed = 0; seed <= kSeeds && ok; ++seed) {
      std::uint64_t per_rank = seed == 0 ? kHeavyPerRank : kLightPerRank;
      SimConfig cfg;
      cfg.total_ranks = kRanks;
      cfg.group_size = kGroupSize;
      cfg.policy = policy;
      cfg.scheduler_seed = static_cast<std::uint64_t>(seed + 1);
      std::uint64_t sent_sum = 0, sent_xor = 0, sent_n = 0;
      std::uint64_t recv_sum = 0, recv_xor = 0, recv_n = 0;
      Simulator sim(cfg);
      auto stats = sim.run([&](Rank& rank) {
        rank.register_handler(1, [&](RankId, const std::uint8_t* d, std::size_t) {
          std::uint64_t v = dec64(d);
          recv_sum += v;
          recv_xor ^= mix64(v);
          recv_n++;
        });
        rank.barrier();
        std::mt19937_64 rng(mix64(seed * 1000 + rank.id()));
        for (std::uint64_t i = 0; i < per_rank; ++i) {
          RankId dst = static_cast<RankId>(rng() % kRanks);
          std::uint64_t v = rng();
          sent_sum += v;
          sent_xor ^= mix64(v);
          sent_n++;
          rank.send(dst, 1, enc64(v));
        }
        rank.barrier();
      });
      ok = sent_n == recv_n && sent_sum == recv_sum && sent_xor == recv_xor &&
           stats.sent == stats.delivered;
      if (!ok) {
        detail = "multiset mismatch, policy " + policy_name(policy) + " seed " +
                 std::to_string(seed);
      }
    }
  }
  double el = seconds_since(t0);
  if (ok && el >= 120.0) {
    ok = false;
    detail = "over the 120s budget";
  }
  if (detail.empty()) {
    detail = "404 runs, 2e5 msgs per policy, in " + std::to_string(el) + "s";
  }
  report("exactly-once delivery under 100 scheduler seeds per policy", ok, detail);
}

// ---- 4. aggregation traffic bound ---------------------------------------

void check_traffic_bound() {
  constexpr std::uint32_t kRanks = 64;
  constexpr std::uint32_t kGroupSize = 8;
  DomainMap dm(kRanks, kGroupSize);
  std::mt19937_64 rng(404);
  // At least two messages for every ordered cross-group pair.
  std::vector<std::vector<std::pair<RankId, std::uint64_t>>> sends(kRanks);
  std::uint64_t cross_msgs = 0;
  std::set<std::pair<GroupId, GroupId>> pairs;
  for (GroupId g = 0; g < dm.num_groups(); ++g) {
    for (GroupId t = 0; t < dm.num_groups(); ++t) {
      if (g == t) continue;
      int n = 2 + static_cast<int>(rng() % 4);
      for (int k = 0; k < n; ++k) {
        RankId src = dm.rank_of(g, static_cast<std::uint32_t>(rng() % kGroupSize));
        RankId dst = dm.rank_of(t, static_cast<std::uint32_t>(rng() % kGroupSize));
        sends[src].push_back({dst, rng()});
        cross_msgs++;
        pairs.insert({g, t});
      }
    }
  }
  auto run_policy = [&](Policy p) {
    SimConfig cfg;
    cfg.total_ranks = kRanks;
    cfg.group_size = kGroupSize;
    cfg.policy = p;
    cfg.buffers.flush_threshold = cfg.buffers.buf_capacity_bytes;  // one flush window
    Simulator sim(cfg);
    return sim.run([&](Rank& rank) {
      rank.register_handler(1, [](RankId, const std::uint8_t*, std::size_t) {});
      rank.barrier();
      for (const auto& [dst, v] : sends[rank.id()]) rank.send(dst, 1, enc64(v));
      rank.barrier();
    });
  };
  auto aml = run_policy(Policy::aml);
  auto mst = run_policy(Policy::mst_two_sided);
  auto nmst = run_policy(Policy::new_mst);
  bool ok = mst.inter_msgs == pairs.size() && nmst.inter_msgs == pairs.size() &&
            aml.inter_msgs == cross_msgs && mst.inter_msgs < aml.inter_msgs;
  report("one inter crossing per group pair in a single flush window", ok,
         std::to_string(pairs.size()) + " pairs, mst=" + std::to_string(mst.inter_msgs) +
             " new-mst=" + std::to_string(nmst.inter_msgs) +
             " aml=" + std::to_string(aml.inter_msgs));
}

// ---- 5. two-sided request/response --------------------------------------

void check_two_sided() {
  constexpr std::uint32_t kRanks = 16;
  constexpr std::uint64_t kPerRank = 313;  // ~5e3 pairs per policy
  bool ok = true;
  std::string detail;
  for (auto policy : {Policy::mst_two_sided, Policy::new_mst}) {
    SimConfig cfg;
    cfg.total_ranks = kRanks;
    cfg.group_size = 4;
    cfg.policy = policy;
    cfg.record_trace = true;
    std::uint64_t answered = 0;
    std::uint64_t echo_errors = 0;
    Simulator sim(cfg);
    sim.run([&](Rank& rank) {
      rank.register_request_handler(1, [](RankId, const std::uint8_t* d, std::size_t len) {
        std::vector<std::uint8_t> r(d, d + len);
        r.push_back(1);
        return r;
      });
      rank.barrier();
      std::mt19937_64 rng(rank.id() + 7);
      for (std::uint64_t i = 0; i < kPerRank; ++i) {
        RankId dst = static_cast<RankId>(rng() % kRanks);
        std::uint64_t v = rng();
        rank.send_request(dst, 1, enc64(v), [&, v](std::vector<std::uint8_t> reply) {
          answered++;
          if (reply.size() != 9 || dec64(reply.data()) != v || reply[8] != 1) echo_errors++;
        });
      }
      rank.barrier();
    });
    bool run_ok = answered == kPerRank * kRanks && echo_errors == 0 &&
                  sim.request_paths().size() == kPerRank * kRanks;
    for (const auto& [tag, rp] : sim.request_paths()) {
      if (rp.responses_delivered != 1 || rp.forward.size() != rp.response.size()) {
        run_ok = false;
        break;
      }
      for (std::size_t i = 0; i < rp.forward.size(); ++i) {
        const Leg& f = rp.forward[rp.forward.size() - 1 - i];
        if (rp.response[i].from != f.to || rp.response[i].to != f.from ||
            rp.response[i].domain != f.domain) {
          run_ok = false;
          break;
        }
      }
      if (!run_ok) break;
    }
    if (!run_ok) {
      ok = false;
      detail = "policy " + policy_name(policy);
    }
  }
  report("every request answered once along the reversed path", ok, detail);
}

// ---- 6. buffer invariants ------------------------------------------------

void check_buffer_invariants() {
  bool ok = true;
  BufferConfig cfg;
  cfg.buf_capacity_bytes = 512;
  cfg.flush_threshold = 384;
  cfg.initial_buf_num = 3;
  cfg.reserved_buf_num = 3;
  SendBufferPool pool(cfg);
  std::mt19937_64 rng(606);
  std::uint64_t flushed = 0;
  std::vector<int> in_flight;
  for (int step = 0; step < 10000 && ok; ++step) {
    int action = static_cast<int>(rng() % 10);
    if (action < 6) {
      GroupId tg = static_cast<GroupId>(rng() % 4);
      Message m;
      m.dst = tg;
      m.payload.assign(rng() % 200, 0x11);
      auto r = pool.append(tg, m);
      if (r.status == SendBufferPool::AppendStatus::accepted && r.flush_needed) {
        auto batch = pool.take_for_flight(r.buf_index);
        for (const auto& e : batch) flushed += e.wire_size();
        in_flight.push_back(r.buf_index);
      }
    } else if (action < 8) {
      // The switch must be refused exactly when the active set still has
      // room: a free buffer or one filling below the threshold.
      int begin = pool.active_set() == ActiveSet::initial ? 0 : cfg.initial_buf_num;
      int end = begin + (pool.active_set() == ActiveSet::initial ? cfg.initial_buf_num
                                                                 : cfg.reserved_buf_num);
      bool room = false;
      for (int i = begin; i < end; ++i) {
        const auto& b = pool.buf(i);
        if (b.state == BufState::free_buf ||
            (b.state == BufState::filling && b.fill < cfg.flush_threshold)) {
          room = true;
        }
      }
      bool threw = false;
      try {
        pool.switch_active();
      } catch (const SwitchWhileAvailable&) {
        threw = true;
      }
      ok = threw == room;
    } else if (!in_flight.empty()) {
      std::size_t pick = rng() % in_flight.size();
      pool.on_send_complete(in_flight[pick]);
      in_flight.erase(in_flight.begin() + static_cast<long>(pick));
    }
    if (pool.appended_bytes() != pool.flushed_bytes() + pool.resident_bytes()) ok = false;
    if (pool.flushed_bytes() != flushed) ok = false;
  }

  // Dynamic regime mirrored against an independent model of its rule.
  BufferConfig dcfg;
  dcfg.ini_buf = 4096;
  dcfg.bw = 8192.0;
  dcfg.bw_target = 1.0;
  DynamicBufferState dyn(dcfg);
  std::uint64_t m_cur = 0, m_total = dcfg.ini_buf, m_prev_total = dcfg.ini_buf;
  for (int step = 0; step < 10000 && ok; ++step) {
    if (rng() % 8 == 0) {
      dyn.on_flush();
      m_cur = 0;
    } else {
      std::uint64_t seg = 1 + rng() % 3000;
      dyn.expand(seg);
      m_cur += seg;
      if (m_cur > m_total) m_total = m_cur + dcfg.ini_buf;
    }
    ok = dyn.cur_buf == m_cur && dyn.total_buf == m_total && m_total >= m_prev_total &&
         dyn.bw_piwi == static_cast<double>(m_total) / dcfg.bw;
    m_prev_total = m_total;
  }
  report("buffer pools conserve bytes and obey the switching and growth rules", ok);
}

// ---- 7. generator statistics --------------------------------------------

void check_kronecker_stats() {
  graph500::KroneckerParams p;
  std::mt19937_64 rng(77);
  std::array<std::uint64_t, 4> counts{};
  constexpr int kDraws = 1000000;
  for (int i = 0; i < kDraws; ++i) counts[graph500::quadrant_draw(rng, p)]++;
  const double want[4] = {0.57, 0.19, 0.19, 0.05};
  bool ok = true;
  for (int q = 0; q < 4; ++q) {
    double freq = static_cast<double>(counts[q]) / kDraws;
    if (std::abs(freq - want[q]) >= 0.01) ok = false;
  }
  graph500::KroneckerParams gp;
  gp.scale = 8;
  gp.seed = 5;
  ok = ok && graph500::generate(gp).edges == graph500::generate(gp).edges;
  gp.seed = 6;
  auto other = graph500::generate(gp);
  gp.seed = 5;
  ok = ok && graph500::generate(gp).edges != other.edges;
  report("quadrant frequencies within 0.01 and seed-determinism", ok);
}

// ---- 8. BFS against the sequential oracle --------------------------------

std::vector<std::int64_t> bfs_oracle(const graph500::CsrGraph& g, graph500::Vertex root) {
  std::vector<std::int64_t> level(g.n, -1);
  std::queue<graph500::Vertex> q;
  level[root] = 0;
  q.push(root);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (std::uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      if (level[g.cols[i]] < 0) {
        level[g.cols[i]] = level[u] + 1;
        q.push(g.cols[i]);
      }
    }
  }
  return level;
}

void check_bfs_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  struct Tier {
    int scale;
    int roots;
  };
  const Tier tiers[] = {{10, 40}, {12, 16}, {14, 8}};  // 64 roots total
  bool ok = true;
  std::string detail;
  int runs = 0;
  for (const auto& tier : tiers) {
    graph500::KroneckerParams kp;
    kp.scale = tier.scale;
    kp.seed = static_cast<std::uint64_t>(tier.scale);
    auto g = graph500::build_csr(graph500::generate(kp));
    std::mt19937_64 root_rng(kp.seed * 31);
    int done = 0;
    while (done < tier.roots && ok) {
      graph500::Vertex root = root_rng() % g.n;
      if (g.degree(root) == 0) continue;
      done++;
      auto want = bfs_oracle(g, root);
      for (auto policy : {Policy::aml, Policy::mst_two_sided, Policy::new_mst}) {
        SimConfig cfg;
        cfg.total_ranks = 8;
        cfg.group_size = 4;
        cfg.policy = policy;
        auto run = graph500::run_bfs(g, root, cfg);
        runs++;
        if (run.tree.level != want || !graph500::validate_bfs(g, run.tree, root).ok) {
          ok = false;
          detail = "scale " + std::to_string(tier.scale) + " root " + std::to_string(root) +
                   " policy " + policy_name(policy);
          break;
        }
      }
    }
  }
  double el = seconds_since(t0);
  if (ok && el >= 180.0) {
    ok = false;
    detail = "over the 180s budget";
  }
  if (detail.empty()) {
    detail = std::to_string(runs) + " runs in " + std::to_string(el) + "s";
  }
  report("BFS levels equal the sequential oracle for all policies", ok, detail);
}

// ---- 9. SSSP against Dijkstra -------------------------------------------

std::vector<double> dijkstra(const graph500::CsrGraph& g, graph500::Vertex root) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.n, inf);
  using Item = std::pair<double, graph500::Vertex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[root] = 0.0;
  pq.push({0.0, root});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (std::uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      double nd = d + g.weights[i];
      if (nd < dist[g.cols[i]]) {
        dist[g.cols[i]] = nd;
        pq.push({nd, g.cols[i]});
      }
    }
  }
  return dist;
}

void check_sssp_oracle() {
  graph500::KroneckerParams kp;
  kp.scale = 10;
  kp.seed = 23;
  kp.weighted = true;
  auto g = graph500::build_csr(graph500::generate(kp));
  const double deltas[3] = {0.05, 0.25, 2.0};
  std::mt19937_64 root_rng(55);
  bool ok = true;
  std::string detail;
  int done = 0;
  while (done < 16 && ok) {
    graph500::Vertex root = root_rng() % g.n;
    if (g.degree(root) == 0) continue;
    auto want = dijkstra(g, root);
    graph500::SsspOptions opt;
    opt.delta = deltas[done % 3];
    opt.hybrid = done % 2 == 1;
    done++;
    SimConfig cfg;
    cfg.total_ranks = 8;
    cfg.group_size = 4;
    cfg.policy = Policy::mst_two_sided;
    auto run = graph500::run_sssp(g, root, cfg, opt);
    for (graph500::Vertex v = 0; v < g.n; ++v) {
      bool match = std::isinf(want[v]) ? std::isinf(run.dist[v])
                                       : std::abs(run.dist[v] - want[v]) < 1e-9;
      if (!match) {
        ok = false;
        detail = "root " + std::to_string(root) + " delta " + std::to_string(opt.delta) +
                 (opt.hybrid ? " hybrid" : "");
        break;
      }
    }
  }
  report("SSSP distances match Dijkstra within 1e-9", ok, detail);
}

// ---- 10. qualitative policy ordering ------------------------------------

void check_qualitative_ordering() {
  auto comm_run = [](Policy p) {
    SimConfig cfg;
    cfg.total_ranks = 64;
    cfg.group_size = 8;
    cfg.policy = p;
    cfg.scheduler_seed = 1;
    Simulator sim(cfg);
    return sim.run([&](Rank& rank) {
      rank.register_handler(1, [](RankId, const std::uint8_t*, std::size_t) {});
      rank.barrier();
      std::mt19937_64 rng(rank.id() + 1);
      for (int i = 0; i < 512; ++i) {  // 2^20 payload bytes in total
        RankId dst = static_cast<RankId>(rng() % rank.size());
        rank.send(dst, 1, std::vector<std::uint8_t>(32, 0x2a));
      }
      rank.barrier();
    });
  };
  auto c_aml = comm_run(Policy::aml);
  auto c_mst = comm_run(Policy::mst_two_sided);
  auto c_new = comm_run(Policy::new_mst);
  bool comm_ok = c_new.comm_time <= c_mst.comm_time && c_mst.comm_time < c_aml.comm_time &&
                 c_new.efficiency() >= c_mst.efficiency() &&
                 c_mst.efficiency() > c_aml.efficiency();

  graph500::KroneckerParams kp;
  kp.scale = 14;
  kp.seed = 1;
  auto g = graph500::build_csr(graph500::generate(kp));
  auto bfs_mean = [&](Policy p) {
    SimConfig cfg;
    cfg.total_ranks = 16;
    cfg.group_size = 4;
    cfg.policy = p;
    cfg.scheduler_seed = 1;
    double time_sum = 0.0, vol_sum = 0.0;
    std::mt19937_64 root_rng(99);
    int done = 0;
    while (done < 4) {
      graph500::Vertex root = root_rng() % g.n;
      if (g.degree(root) == 0) continue;
      done++;
      auto run = graph500::run_bfs(g, root, cfg);
      time_sum += run.stats.comm_time;
      vol_sum += static_cast<double>(run.stats.comm_volume);
    }
    return std::make_pair(time_sum / done, vol_sum / time_sum);
  };
  auto b_aml = bfs_mean(Policy::aml);
  auto b_mst = bfs_mean(Policy::mst_two_sided);
  auto b_new = bfs_mean(Policy::new_mst);
  bool bfs_ok = b_new.first <= b_mst.first && b_mst.first < b_aml.first &&
                b_new.second >= b_mst.second && b_mst.second > b_aml.second;

  char buf[256];
  std::snprintf(buf, sizeof buf, "comm %.0f/%.0f/%.0f bfs %.0f/%.0f/%.0f (new-mst/mst/aml)",
                c_new.comm_time, c_mst.comm_time, c_aml.comm_time, b_new.first, b_mst.first,
                b_aml.first);
  report("aggregation policies order as expected on time and efficiency", comm_ok && bfs_ok,
         buf);
}

}  // namespace

int main() {
  check_hop_model();
  check_routing_examples();
  check_exactly_once_fuzz();
  check_traffic_bound();
  check_two_sided();
  check_buffer_invariants();
  check_kronecker_stats();
  check_bfs_oracle();
  check_sssp_oracle();
  check_qualitative_ordering();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
