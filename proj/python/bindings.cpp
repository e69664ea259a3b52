// Python bindings for the aggregation library: hop model, routing,
// simulated all-to-all runs, and the graph benchmark kernels.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

#include "magg/graph500.hpp"
#include "magg/simnet.hpp"
#include "magg/topology.hpp"

namespace py = pybind11;
using namespace magg;

namespace {

SimConfig make_config(std::uint32_t total_ranks, std::uint32_t group_size,
                      const std::string& policy, std::uint64_t seed, int seg_scale,
                      int hops_intra, int hops_inter) {
  SimConfig cfg;
  cfg.total_ranks = total_ranks;
  cfg.group_size = group_size;
  cfg.policy = parse_policy(policy);
  cfg.scheduler_seed = seed;
  cfg.seg_scale = seg_scale;
  cfg.hop_model = HopModel{hops_intra, hops_inter};
  return cfg;
}

py::dict stats_dict(const CommStats& s) {
  py::dict d;
  d["comm_volume"] = s.comm_volume;
  d["comm_time"] = s.comm_time;
  d["intra_msgs"] = s.intra_msgs;
  d["inter_msgs"] = s.inter_msgs;
  d["total_hops"] = s.total_hops;
  d["sent"] = s.sent;
  d["delivered"] = s.delivered;
  d["flushes"] = s.flushes;
  d["efficiency"] = s.efficiency();
  return d;
}

std::vector<py::tuple> legs_list(const std::vector<Leg>& legs) {
  std::vector<py::tuple> out;
  out.reserve(legs.size());
  for (const Leg& l : legs) {
    out.push_back(py::make_tuple(l.from, l.to, l.domain == Domain::intra ? "intra" : "inter"));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_magg, m) {
  m.doc() = "Topology-aware message aggregation over a simulated two-level cluster";

  // Closed-form hop model.
  m.def(
      "aml_hops",
      [](long long s, int intra, int inter) { return aml_hops(s, HopModel{intra, inter}); },
      py::arg("s"), py::arg("hops_intra") = 1, py::arg("hops_inter") = 10);
  m.def(
      "mst_hops",
      [](long long s, int intra, int inter) { return mst_hops(s, HopModel{intra, inter}); },
      py::arg("s"), py::arg("hops_intra") = 1, py::arg("hops_inter") = 10);
  m.def(
      "hops_delta",
      [](long long s, int intra, int inter) { return hops_delta(s, HopModel{intra, inter}); },
      py::arg("s"), py::arg("hops_intra") = 1, py::arg("hops_inter") = 10);

  py::class_<DomainMap>(m, "DomainMap")
      .def(py::init<std::uint32_t, std::uint32_t>(), py::arg("total_ranks"),
           py::arg("group_size"))
      .def_property_readonly("total_ranks", &DomainMap::total_ranks)
      .def_property_readonly("group_size", &DomainMap::group_size)
      .def_property_readonly("num_groups", &DomainMap::num_groups)
      .def("group_of", &DomainMap::group_of)
      .def("local_of", &DomainMap::local_of)
      .def("rank_of", &DomainMap::rank_of)
      .def("same_group", &DomainMap::same_group);

  m.def(
      "route_aml",
      [](RankId src, RankId dst, const DomainMap& dm) { return legs_list(route_aml(src, dst, dm)); },
      py::arg("src"), py::arg("dst"), py::arg("domains"));
  m.def(
      "route_mst",
      [](RankId src, RankId dst, const DomainMap& dm) { return legs_list(route_mst(src, dst, dm)); },
      py::arg("src"), py::arg("dst"), py::arg("domains"));
  m.def("route_select", &route_select, py::arg("target_group"), py::arg("group_size"));
  m.def("policies", [] {
    return std::vector<std::string>{"aml", "mst-one-sided", "mst", "new-mst"};
  });

  // Random all-to-all under a given policy; the core communication run.
  m.def(
      "all_to_all",
      [](std::uint32_t total_ranks, std::uint32_t group_size, const std::string& policy,
         std::uint64_t msgs_per_rank, std::size_t payload_bytes, std::uint64_t seed,
         int seg_scale, int hops_intra, int hops_inter) {
        SimConfig cfg = make_config(total_ranks, group_size, policy, seed, seg_scale,
                                    hops_intra, hops_inter);
        std::uint64_t received = 0;
        Simulator sim(cfg);
        auto stats = sim.run([&](Rank& rank) {
          rank.register_handler(1, [&](RankId, const std::uint8_t*, std::size_t) { received++; });
          rank.barrier();
          std::mt19937_64 rng(seed * 1315423911ull + rank.id());
          for (std::uint64_t i = 0; i < msgs_per_rank; ++i) {
            RankId dst = static_cast<RankId>(rng() % total_ranks);
            rank.send(dst, 1, std::vector<std::uint8_t>(payload_bytes, 0x5a));
          }
          rank.barrier();
        });
        py::dict d = stats_dict(stats);
        d["received"] = received;
        return d;
      },
      py::arg("total_ranks") = 16, py::arg("group_size") = 4, py::arg("policy") = "aml",
      py::arg("msgs_per_rank") = 64, py::arg("payload_bytes") = 32, py::arg("seed") = 1,
      py::arg("seg_scale") = 20, py::arg("hops_intra") = 1, py::arg("hops_inter") = 10);

  py::class_<graph500::CsrGraph>(m, "CsrGraph")
      .def_readonly("n", &graph500::CsrGraph::n)
      .def_readonly("offsets", &graph500::CsrGraph::offsets)
      .def_readonly("cols", &graph500::CsrGraph::cols)
      .def_readonly("weights", &graph500::CsrGraph::weights)
      .def("degree", &graph500::CsrGraph::degree)
      .def("edge_count", &graph500::CsrGraph::edge_count);

  m.def(
      "generate_graph",
      [](int scale, int edgefactor, std::uint64_t seed, bool weighted) {
        graph500::KroneckerParams p;
        p.scale = scale;
        p.edgefactor = edgefactor;
        p.seed = seed;
        p.weighted = weighted;
        return graph500::build_csr(graph500::generate(p));
      },
      py::arg("scale") = 10, py::arg("edgefactor") = 16, py::arg("seed") = 1,
      py::arg("weighted") = false);

  m.def(
      "run_bfs",
      [](const graph500::CsrGraph& g, graph500::Vertex root, std::uint32_t total_ranks,
         std::uint32_t group_size, const std::string& policy, std::uint64_t seed,
         bool bottom_up) {
        SimConfig cfg = make_config(total_ranks, group_size, policy, seed, 20, 1, 10);
        graph500::BfsOptions opt;
        opt.bottom_up = bottom_up;
        auto run = graph500::run_bfs(g, root, cfg, opt);
        auto check = graph500::validate_bfs(g, run.tree, root);
        py::dict d;
        d["parent"] = run.tree.parent;
        d["level"] = run.tree.level;
        d["stats"] = stats_dict(run.stats);
        d["valid"] = check.ok;
        d["reasons"] = check.reasons;
        d["traversed_edges"] = graph500::traversed_edges(g, run.tree);
        return d;
      },
      py::arg("graph"), py::arg("root"), py::arg("total_ranks") = 8, py::arg("group_size") = 4,
      py::arg("policy") = "mst", py::arg("seed") = 1, py::arg("bottom_up") = false);

  m.def(
      "run_sssp",
      [](const graph500::CsrGraph& g, graph500::Vertex root, std::uint32_t total_ranks,
         std::uint32_t group_size, const std::string& policy, std::uint64_t seed, double delta,
         bool hybrid) {
        SimConfig cfg = make_config(total_ranks, group_size, policy, seed, 20, 1, 10);
        graph500::SsspOptions opt;
        opt.delta = delta;
        opt.hybrid = hybrid;
        auto run = graph500::run_sssp(g, root, cfg, opt);
        py::dict d;
        d["dist"] = run.dist;
        d["parent"] = run.parent;
        d["stats"] = stats_dict(run.stats);
        return d;
      },
      py::arg("graph"), py::arg("root"), py::arg("total_ranks") = 8, py::arg("group_size") = 4,
      py::arg("policy") = "mst", py::arg("seed") = 1, py::arg("delta") = 0.1,
      py::arg("hybrid") = false);

  m.def("teps", &graph500::teps, py::arg("edges_traversed"), py::arg("elapsed"));
}
