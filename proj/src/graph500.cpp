#include "magg/graph500.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace magg {
namespace graph500 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void enc_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint64_t dec_u64(const std::uint8_t* d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(d[i]) << (8 * i);
  return v;
}

void enc_f64(std::vector<std::uint8_t>& out, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  enc_u64(out, v);
}

double dec_f64(const std::uint8_t* d) {
  std::uint64_t v = dec_u64(d);
  double x;
  std::memcpy(&x, &v, 8);
  return x;
}

}  // namespace

int quadrant_draw(std::mt19937_64& rng, const KroneckerParams& p) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double r = uni(rng);
  if (r < p.a) return 0;
  if (r < p.a + p.b) return 1;
  if (r < p.a + p.b + p.c) return 2;
  return 3;
}

EdgeList generate(const KroneckerParams& p) {
  if (p.scale < 1) throw Error("scale must be at least 1");
  if (std::abs(p.a + p.b + p.c + p.d - 1.0) > 1e-12) {
    throw Error("quadrant probabilities must sum to 1");
  }
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  EdgeList el;
  el.vertex_count = p.num_vertices();
  el.edges.reserve(p.num_edges());
  if (p.weighted) el.weights.reserve(p.num_edges());
  for (std::uint64_t i = 0; i < p.num_edges(); ++i) {
    Vertex u = 0;
    Vertex v = 0;
    for (int bit = 0; bit < p.scale; ++bit) {
      int q = quadrant_draw(rng, p);
      u |= static_cast<Vertex>(q >> 1) << bit;
      v |= static_cast<Vertex>(q & 1) << bit;
    }
    el.edges.emplace_back(u, v);
    if (p.weighted) el.weights.push_back(1.0 - uni(rng));  // uniform in (0, 1]
  }
  return el;
}

CsrGraph build_csr(const EdgeList& el) {
  bool weighted = el.weighted();
  std::vector<std::tuple<Vertex, Vertex, double>> dir;
  dir.reserve(el.edges.size() * 2);
  for (std::size_t i = 0; i < el.edges.size(); ++i) {
    auto [u, v] = el.edges[i];
    if (u == v) continue;  // self-loops dropped
    double w = weighted ? el.weights[i] : 0.0;
    dir.emplace_back(u, v, w);
    dir.emplace_back(v, u, w);
  }
  std::sort(dir.begin(), dir.end());
  // Duplicate edges keep the smallest weight.
  std::vector<std::tuple<Vertex, Vertex, double>> uniq;
  uniq.reserve(dir.size());
  for (const auto& e : dir) {
    if (!uniq.empty() && std::get<0>(uniq.back()) == std::get<0>(e) &&
        std::get<1>(uniq.back()) == std::get<1>(e)) {
      continue;
    }
    uniq.push_back(e);
  }
  CsrGraph g;
  g.n = el.vertex_count;
  g.offsets.assign(g.n + 1, 0);
  for (const auto& e : uniq) g.offsets[std::get<0>(e) + 1]++;
  for (std::uint64_t v = 0; v < g.n; ++v) g.offsets[v + 1] += g.offsets[v];
  g.cols.reserve(uniq.size());
  if (weighted) g.weights.reserve(uniq.size());
  for (const auto& e : uniq) {
    g.cols.push_back(std::get<1>(e));
    if (weighted) g.weights.push_back(std::get<2>(e));
  }
  return g;
}

ValidationResult validate_bfs(const CsrGraph& g, const BfsTree& tree, Vertex root) {
  ValidationResult res;
  auto fail = [&](const std::string& reason) {
    res.ok = false;
    if (std::find(res.reasons.begin(), res.reasons.end(), reason) == res.reasons.end()) {
      res.reasons.push_back(reason);
    }
  };
  if (root >= g.n || tree.parent.size() != g.n || tree.level.size() != g.n) {
    fail("shape-mismatch");
    return res;
  }
  if (tree.parent[root] != static_cast<std::int64_t>(root) || tree.level[root] != 0) {
    fail("root-invalid");
  }
  auto is_neighbor = [&](Vertex u, Vertex v) {
    auto begin = g.cols.begin() + g.offsets[u];
    auto end = g.cols.begin() + g.offsets[u + 1];
    return std::binary_search(begin, end, v);
  };
  for (Vertex v = 0; v < g.n; ++v) {
    bool has_parent = tree.parent[v] >= 0;
    bool has_level = tree.level[v] >= 0;
    if (has_parent != has_level) fail("partial-entry");
    if (!has_parent || v == root) continue;
    Vertex p = static_cast<Vertex>(tree.parent[v]);
    if (p >= g.n || !is_neighbor(v, p)) {
      fail("tree-edge-missing");
      continue;
    }
    if (tree.level[p] < 0 || tree.level[v] != tree.level[p] + 1) fail("level-mismatch");
  }
  for (Vertex u = 0; u < g.n; ++u) {
    for (std::uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      Vertex v = g.cols[i];
      bool vu = tree.level[u] >= 0;
      bool vv = tree.level[v] >= 0;
      if (vu != vv) fail("reachable-missing");
      if (vu && vv && std::llabs(tree.level[u] - tree.level[v]) > 1) fail("edge-spans-levels");
    }
  }
  return res;
}

// ---- distributed BFS -----------------------------------------------------

namespace {

constexpr std::uint16_t kVisit = 1;
constexpr std::uint16_t kAskVisited = 2;
constexpr std::uint16_t kRelax = 3;
constexpr std::uint16_t kBucketStats = 4;

struct Partition {
  std::uint64_t n;
  std::uint32_t ranks;
  std::uint64_t block;

  Partition(std::uint64_t n_, std::uint32_t ranks_)
      : n(n_), ranks(ranks_), block((n_ + ranks_ - 1) / ranks_) {}

  RankId owner(Vertex v) const { return static_cast<RankId>(std::min<std::uint64_t>(v / block, ranks - 1)); }
  std::uint64_t lo(RankId r) const { return std::min<std::uint64_t>(r * block, n); }
  std::uint64_t hi(RankId r) const { return std::min<std::uint64_t>((r + std::uint64_t{1}) * block, n); }
};

}  // namespace

BfsRun run_bfs(const CsrGraph& g, Vertex root, const SimConfig& cfg, const BfsOptions& opt) {
  if (root >= g.n) throw InvalidRoot("bfs root out of range");
  Partition part(g.n, cfg.total_ranks);
  bool two_sided = policy_two_sided(cfg.policy);
  bool bottom_up_allowed = opt.bottom_up && two_sided;

  std::vector<std::vector<std::int64_t>> parents(cfg.total_ranks);
  std::vector<std::vector<std::int64_t>> levels(cfg.total_ranks);

  Simulator sim(cfg);
  CommStats stats = sim.run([&](Rank& rank) {
    RankId me = rank.id();
    std::uint64_t lo = part.lo(me);
    std::uint64_t hi = part.hi(me);
    std::uint64_t local_n = hi - lo;
    std::vector<std::int64_t> parent(local_n, -1);
    std::vector<std::int64_t> level(local_n, -1);
    std::vector<std::uint8_t> in_frontier(local_n, 0);
    std::vector<Vertex> frontier, next;
    std::int64_t cur_level = 0;

    auto visit = [&](Vertex v, Vertex from) {
      std::uint64_t idx = v - lo;
      if (parent[idx] < 0) {
        parent[idx] = static_cast<std::int64_t>(from);
        level[idx] = cur_level + 1;
        next.push_back(v);
      }
    };

    rank.register_handler(kVisit, [&](RankId, const std::uint8_t* d, std::size_t len) {
      if (len != 16) throw MalformedFrame("bad visit payload");
      visit(dec_u64(d), dec_u64(d + 8));
    });
    if (two_sided) {
      rank.register_request_handler(kAskVisited,
                                    [&](RankId, const std::uint8_t* d, std::size_t len) {
                                      if (len != 8) throw MalformedFrame("bad query payload");
                                      Vertex v = dec_u64(d);
                                      return std::vector<std::uint8_t>{in_frontier[v - lo]};
                                    });
    }

    if (part.owner(root) == me) {
      parent[root - lo] = static_cast<std::int64_t>(root);
      level[root - lo] = 0;
      frontier.push_back(root);
    }

    while (true) {
      std::uint64_t global_frontier = rank.allreduce_sum(frontier.size());
      if (global_frontier == 0) break;
      for (Vertex v : frontier) in_frontier[v - lo] = 1;
      bool bottom_up = bottom_up_allowed &&
                       static_cast<double>(global_frontier) >
                           opt.bottom_up_fraction * static_cast<double>(g.n);
      if (!bottom_up) {
        for (Vertex v : frontier) {
          for (std::uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
            Vertex w = g.cols[i];
            if (part.owner(w) == me) {
              visit(w, v);
            } else {
              std::vector<std::uint8_t> payload;
              payload.reserve(16);
              enc_u64(payload, w);
              enc_u64(payload, v);
              rank.send(part.owner(w), kVisit, std::move(payload));
            }
          }
        }
      } else {
        for (std::uint64_t idx = 0; idx < local_n; ++idx) {
          if (parent[idx] >= 0) continue;
          Vertex v = lo + idx;
          for (std::uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
            Vertex u = g.cols[i];
            if (part.owner(u) == me) {
              if (in_frontier[u - lo]) visit(v, u);
            } else {
              std::vector<std::uint8_t> q;
              enc_u64(q, u);
              rank.send_request(part.owner(u), kAskVisited, std::move(q),
                                [&, v, u](std::vector<std::uint8_t> reply) {
                                  if (!reply.empty() && reply[0]) visit(v, u);
                                });
            }
          }
        }
      }
      rank.barrier();
      for (Vertex v : frontier) in_frontier[v - lo] = 0;
      frontier = std::move(next);
      next.clear();
      cur_level++;
    }

    parents[me] = std::move(parent);
    levels[me] = std::move(level);
  });

  BfsRun out;
  out.stats = stats;
  out.tree.root = root;
  out.tree.parent.reserve(g.n);
  out.tree.level.reserve(g.n);
  for (std::uint32_t r = 0; r < cfg.total_ranks; ++r) {
    out.tree.parent.insert(out.tree.parent.end(), parents[r].begin(), parents[r].end());
    out.tree.level.insert(out.tree.level.end(), levels[r].begin(), levels[r].end());
  }
  return out;
}

// ---- distributed SSSP ----------------------------------------------------

SsspRun run_sssp(const CsrGraph& g, Vertex root, const SimConfig& cfg, const SsspOptions& opt) {
  if (root >= g.n) throw InvalidRoot("sssp root out of range");
  if (opt.delta <= 0.0) throw Error("delta must be positive");
  if (g.weights.size() != g.cols.size()) throw NonPositiveWeight("graph is not weighted");
  for (double w : g.weights) {
    if (!(w > 0.0)) throw NonPositiveWeight("edge weights must be positive");
  }
  Partition part(g.n, cfg.total_ranks);
  bool two_sided = policy_two_sided(cfg.policy);
  bool hybrid = opt.hybrid;
  double delta = opt.delta;

  std::vector<std::vector<double>> dists(cfg.total_ranks);
  std::vector<std::vector<std::int64_t>> parents(cfg.total_ranks);

  Simulator sim(cfg);
  CommStats stats = sim.run([&](Rank& rank) {
    RankId me = rank.id();
    std::uint64_t lo = part.lo(me);
    std::uint64_t hi = part.hi(me);
    std::uint64_t local_n = hi - lo;
    std::vector<double> dist(local_n, kInf);
    std::vector<std::int64_t> parent(local_n, -1);
    std::map<std::uint64_t, std::vector<Vertex>> buckets;
    std::uint64_t stats_light = 0, stats_total = 0;  // rank-0 accumulators

    auto bucket_of = [&](double d) {
      return static_cast<std::uint64_t>(d / delta);
    };
    auto relax_local = [&](Vertex v, double nd, std::int64_t from) {
      std::uint64_t idx = v - lo;
      if (nd < dist[idx]) {
        dist[idx] = nd;
        parent[idx] = from;
        buckets[bucket_of(nd)].push_back(v);
      }
    };
    auto relax = [&](Vertex v, double nd, Vertex from) {
      if (part.owner(v) == me) {
        relax_local(v, nd, static_cast<std::int64_t>(from));
      } else {
        std::vector<std::uint8_t> payload;
        payload.reserve(24);
        enc_u64(payload, v);
        enc_f64(payload, nd);
        enc_u64(payload, from);
        rank.send(part.owner(v), kRelax, std::move(payload));
      }
    };

    rank.register_handler(kRelax, [&](RankId, const std::uint8_t* d, std::size_t len) {
      if (len != 24) throw MalformedFrame("bad relax payload");
      relax_local(dec_u64(d), dec_f64(d + 8), static_cast<std::int64_t>(dec_u64(d + 16)));
    });
    if (two_sided) {
      rank.register_request_handler(kBucketStats,
                                    [&](RankId, const std::uint8_t* d, std::size_t len) {
                                      if (len != 16) throw MalformedFrame("bad stats payload");
                                      stats_light += dec_u64(d);
                                      stats_total += dec_u64(d + 8);
                                      return std::vector<std::uint8_t>{1};
                                    });
    }

    if (part.owner(root) == me) {
      dist[root - lo] = 0.0;
      parent[root - lo] = static_cast<std::int64_t>(root);
      buckets[0].push_back(root);
    }

    auto bellman_ford_remainder = [&]() {
      std::vector<Vertex> active;
      for (std::uint64_t idx = 0; idx < local_n; ++idx) {
        if (dist[idx] < kInf) active.push_back(lo + idx);
      }
      while (true) {
        std::vector<double> before = dist;
        for (Vertex v : active) {
          double dv = dist[v - lo];
          for (std::uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
            relax(g.cols[i], dv + g.weights[i], v);
          }
        }
        rank.barrier();
        active.clear();
        for (std::uint64_t idx = 0; idx < local_n; ++idx) {
          if (dist[idx] < before[idx]) active.push_back(lo + idx);
        }
        if (rank.allreduce_sum(active.size()) == 0) break;
      }
      // Sweeps converged the whole remainder; pending bucket work is moot.
      buckets.clear();
    };

    while (true) {
      // Discard stale bucket entries, then find the globally lowest bucket.
      std::uint64_t local_min = ~std::uint64_t{0};
      for (auto it = buckets.begin(); it != buckets.end();) {
        auto& vec = it->second;
        vec.erase(std::remove_if(vec.begin(), vec.end(),
                                 [&](Vertex v) {
                                   return dist[v - lo] >= kInf ||
                                          bucket_of(dist[v - lo]) != it->first;
                                 }),
                  vec.end());
        if (vec.empty()) {
          it = buckets.erase(it);
        } else {
          local_min = std::min(local_min, it->first);
          ++it;
        }
      }
      std::uint64_t k = rank.allreduce_min(local_min);
      if (k == ~std::uint64_t{0}) break;

      if (hybrid) {
        // Light-edge share of the active bucket decides whether plain
        // sweeps finish the job faster than more bucket rounds.
        std::uint64_t light = 0, total = 0;
        auto bit = buckets.find(k);
        if (bit != buckets.end()) {
          for (Vertex v : bit->second) {
            for (std::uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
              total++;
              if (g.weights[i] <= delta) light++;
            }
          }
        }
        std::uint64_t lg, tg;
        if (two_sided) {
          if (me != 0) {
            std::vector<std::uint8_t> payload;
            enc_u64(payload, light);
            enc_u64(payload, total);
            rank.request(0, kBucketStats, std::move(payload));
          } else {
            stats_light += light;
            stats_total += total;
          }
          rank.barrier();
          lg = rank.allreduce_sum(me == 0 ? stats_light : 0);
          tg = rank.allreduce_sum(me == 0 ? stats_total : 0);
          stats_light = stats_total = 0;
        } else {
          lg = rank.allreduce_sum(light);
          tg = rank.allreduce_sum(total);
        }
        if (tg > 0 && static_cast<double>(lg) < opt.hybrid_light_fraction * static_cast<double>(tg)) {
          bellman_ford_remainder();
          continue;
        }
      }

      std::vector<Vertex> deleted;
      std::vector<std::uint8_t> in_deleted(local_n, 0);
      while (true) {
        std::vector<Vertex> settle;
        auto it = buckets.find(k);
        if (it != buckets.end()) {
          for (Vertex v : it->second) {
            if (dist[v - lo] < kInf && bucket_of(dist[v - lo]) == k) settle.push_back(v);
          }
          buckets.erase(it);
        }
        std::sort(settle.begin(), settle.end());
        settle.erase(std::unique(settle.begin(), settle.end()), settle.end());
        for (Vertex v : settle) {
          if (!in_deleted[v - lo]) {
            in_deleted[v - lo] = 1;
            deleted.push_back(v);
          }
          double dv = dist[v - lo];
          for (std::uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
            if (g.weights[i] <= delta) relax(g.cols[i], dv + g.weights[i], v);
          }
        }
        rank.barrier();
        std::uint64_t refill = 0;
        auto rit = buckets.find(k);
        if (rit != buckets.end()) {
          for (Vertex v : rit->second) {
            if (dist[v - lo] < kInf && bucket_of(dist[v - lo]) == k) refill++;
          }
        }
        if (rank.allreduce_sum(refill) == 0) break;
      }
      for (Vertex v : deleted) {
        double dv = dist[v - lo];
        for (std::uint64_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
          if (g.weights[i] > delta) relax(g.cols[i], dv + g.weights[i], v);
        }
      }
      rank.barrier();
    }

    dists[me] = std::move(dist);
    parents[me] = std::move(parent);
  });

  SsspRun out;
  out.stats = stats;
  out.dist.reserve(g.n);
  out.parent.reserve(g.n);
  for (std::uint32_t r = 0; r < cfg.total_ranks; ++r) {
    out.dist.insert(out.dist.end(), dists[r].begin(), dists[r].end());
    out.parent.insert(out.parent.end(), parents[r].begin(), parents[r].end());
  }
  return out;
}

double teps(std::uint64_t edges_traversed, double elapsed) {
  if (elapsed <= 0.0) throw ZeroElapsed("elapsed time must be positive");
  return static_cast<double>(edges_traversed) / elapsed;
}

std::uint64_t traversed_edges(const CsrGraph& g, const BfsTree& tree) {
  std::uint64_t deg_sum = 0;
  for (Vertex v = 0; v < g.n; ++v) {
    if (tree.level[v] >= 0) deg_sum += g.degree(v);
  }
  return deg_sum / 2;
}

// ---- edge list files -----------------------------------------------------

namespace {
bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}
}  // namespace

void write_edge_list(const std::string& path, const EdgeList& el) {
  if (has_suffix(path, ".bin")) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path);
    for (std::size_t i = 0; i < el.edges.size(); ++i) {
      std::uint64_t u = el.edges[i].first;
      std::uint64_t v = el.edges[i].second;
      double w = el.weighted() ? el.weights[i] : 0.0;
      out.write(reinterpret_cast<const char*>(&u), 8);
      out.write(reinterpret_cast<const char*>(&v), 8);
      out.write(reinterpret_cast<const char*>(&w), 8);
    }
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out.precision(17);
  for (std::size_t i = 0; i < el.edges.size(); ++i) {
    out << el.edges[i].first << ' ' << el.edges[i].second;
    if (el.weighted()) out << ' ' << el.weights[i];
    out << '\n';
  }
}

EdgeList read_edge_list(const std::string& path) {
  EdgeList el;
  bool any_weight = false;
  if (has_suffix(path, ".bin")) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::uint64_t u, v;
    double w;
    while (in.read(reinterpret_cast<char*>(&u), 8) && in.read(reinterpret_cast<char*>(&v), 8) &&
           in.read(reinterpret_cast<char*>(&w), 8)) {
      el.edges.emplace_back(u, v);
      el.weights.push_back(w);
      if (w != 0.0) any_weight = true;
    }
  } else {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::uint64_t u, v;
      double w;
      if (!(ls >> u >> v)) throw Error("malformed edge list line: " + line);
      el.edges.emplace_back(u, v);
      if (ls >> w) {
        el.weights.push_back(w);
        any_weight = true;
      } else {
        el.weights.push_back(0.0);
      }
    }
  }
  if (!any_weight) el.weights.clear();
  for (const auto& [u, v] : el.edges) {
    el.vertex_count = std::max(el.vertex_count, std::max(u, v) + 1);
  }
  return el;
}

}  // namespace graph500
}  // namespace magg
