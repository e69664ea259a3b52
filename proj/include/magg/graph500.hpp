#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "magg/simnet.hpp"

namespace magg {
namespace graph500 {

using Vertex = std::uint64_t;

struct KroneckerParams {
  int scale = 10;
  int edgefactor = 16;
  double a = 0.57;
  double b = 0.19;
  double c = 0.19;
  double d = 0.05;
  std::uint64_t seed = 1;
  bool weighted = false;

  std::uint64_t num_vertices() const { return std::uint64_t{1} << scale; }
  std::uint64_t num_edges() const {
    return static_cast<std::uint64_t>(edgefactor) * num_vertices();
  }
};

struct EdgeList {
  std::uint64_t vertex_count = 0;
  std::vector<std::pair<Vertex, Vertex>> edges;
  std::vector<double> weights;  // empty for unweighted

  bool weighted() const { return !weights.empty(); }
};

struct CsrGraph {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> offsets;  // n + 1 entries
  std::vector<Vertex> cols;
  std::vector<double> weights;  // aligned with cols, empty if unweighted

  std::uint64_t degree(Vertex v) const { return offsets[v + 1] - offsets[v]; }
  std::uint64_t edge_count() const { return cols.size() / 2; }
};

struct BfsTree {
  Vertex root = 0;
  std::vector<std::int64_t> parent;  // -1 for unreached
  std::vector<std::int64_t> level;   // -1 for unreached
};

/// One recursive quadrant draw: 0 = A, 1 = B, 2 = C, 3 = D.
int quadrant_draw(std::mt19937_64& rng, const KroneckerParams& p);

EdgeList generate(const KroneckerParams& params);
CsrGraph build_csr(const EdgeList& edges);

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> reasons;
};

ValidationResult validate_bfs(const CsrGraph& g, const BfsTree& tree, Vertex root);

struct BfsOptions {
  bool bottom_up = false;  // needs a two-sided policy
  double bottom_up_fraction = 1.0 / 16.0;
};

struct BfsRun {
  BfsTree tree;
  CommStats stats;
};

BfsRun run_bfs(const CsrGraph& g, Vertex root, const SimConfig& cfg, const BfsOptions& opt = {});

struct SsspOptions {
  double delta = 0.1;
  bool hybrid = false;  // Bellman-Ford fallback for long-edge buckets
  double hybrid_light_fraction = 0.10;
};

struct SsspRun {
  std::vector<double> dist;  // infinity for unreached
  std::vector<std::int64_t> parent;
  CommStats stats;
};

SsspRun run_sssp(const CsrGraph& g, Vertex root, const SimConfig& cfg,
                 const SsspOptions& opt = {});

double teps(std::uint64_t edges_traversed, double elapsed);

/// Edges within the component actually reached by the tree, the quantity
/// TEPS is normalized by.
std::uint64_t traversed_edges(const CsrGraph& g, const BfsTree& tree);

/// Text format: one "u v [w]" per line. A ".bin" extension selects the
/// little-endian binary record format (u64 u, u64 v, f64 w).
void write_edge_list(const std::string& path, const EdgeList& el);
EdgeList read_edge_list(const std::string& path);

}  // namespace graph500
}  // namespace magg
