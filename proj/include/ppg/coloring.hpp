#ifndef PPG_COLORING_HPP
#define PPG_COLORING_HPP

#include "ppg/core.hpp"

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ppg {

/// Simple undirected graph on vertices 0..vertices-1.
struct Graph {
  Index vertices = 0;
  std::vector<std::pair<Index, Index>> edges;

  Index max_degree() const {
    std::vector<Index> deg(static_cast<std::size_t>(vertices), 0);
    for (auto [u, v] : edges) {
      ++deg[static_cast<std::size_t>(u)];
      ++deg[static_cast<std::size_t>(v)];
    }
    Index m = 0;
    for (Index x : deg) m = std::max(m, x);
    return m;
  }

  void validate() const {
    std::set<std::pair<Index, Index>> seen;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto [u, v] = edges[e];
      if (u < 0 || v < 0 || u >= vertices || v >= vertices)
        throw std::invalid_argument("edge " + std::to_string(e) + " references a missing vertex");
      if (u == v) throw std::invalid_argument("self-loop at vertex " + std::to_string(u));
      if (!seen.insert({std::min(u, v), std::max(u, v)}).second)
        throw std::invalid_argument("duplicate edge {" + std::to_string(u) + "," + std::to_string(v) + "}");
    }
  }

  static Graph hypercube(int dim) {
    Graph g;
    g.vertices = Index{1} << dim;
    for (Index v = 0; v < g.vertices; ++v)
      for (int b = 0; b < dim; ++b) {
        const Index u = v ^ (Index{1} << b);
        if (v < u) g.edges.emplace_back(v, u);
      }
    return g;
  }

  static Graph path(Index n) {
    Graph g;
    g.vertices = n;
    for (Index v = 0; v + 1 < n; ++v) g.edges.emplace_back(v, v + 1);
    return g;
  }
};

/// Color classes of edge indices; each class is a matching.
struct EdgeColoring {
  std::vector<std::vector<Index>> classes;
  Index colors() const { return static_cast<Index>(classes.size()); }
};

/// First-fit greedy coloring in edge input order: each edge takes the
/// smallest color free at both endpoints. Uses at most 2*Delta - 1 colors.
inline EdgeColoring greedy_edge_coloring(const Graph& graph) {
  graph.validate();
  std::vector<std::vector<bool>> used(static_cast<std::size_t>(graph.vertices));
  EdgeColoring out;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    auto [u, v] = graph.edges[e];
    auto& cu = used[static_cast<std::size_t>(u)];
    auto& cv = used[static_cast<std::size_t>(v)];
    std::size_t c = 0;
    while ((c < cu.size() && cu[c]) || (c < cv.size() && cv[c])) ++c;
    if (cu.size() <= c) cu.resize(c + 1, false);
    if (cv.size() <= c) cv.resize(c + 1, false);
    cu[c] = cv[c] = true;
    if (out.classes.size() <= c) out.classes.resize(c + 1);
    out.classes[c].push_back(static_cast<Index>(e));
  }
  return out;
}

/// True when the classes partition the edge set and no two edges of a class
/// share a vertex.
inline bool is_valid_edge_coloring(const Graph& graph, const EdgeColoring& coloring) {
  std::vector<int> hits(graph.edges.size(), 0);
  for (const auto& cls : coloring.classes) {
    std::set<Index> touched;
    for (Index e : cls) {
      if (e < 0 || static_cast<std::size_t>(e) >= graph.edges.size()) return false;
      ++hits[static_cast<std::size_t>(e)];
      auto [u, v] = graph.edges[static_cast<std::size_t>(e)];
      if (!touched.insert(u).second || !touched.insert(v).second) return false;
    }
  }
  for (int h : hits)
    if (h != 1) return false;
  return true;
}

}  // namespace ppg

#endif  // PPG_COLORING_HPP
