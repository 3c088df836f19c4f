#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "problem.hpp"

namespace bosim {

struct Edge {
  int u = 0;  // u < v
  int v = 0;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

struct Graph {
  int n_vertices = 0;
  std::vector<Edge> edges;

  bool operator==(const Graph&) const = default;
};

// Edge-list text: one "u v [weight]" per line, whitespace separated, 0-based
// ids, '#' starts a comment, blank lines ignored, weight defaults to 1.
// The vertex count is one past the largest id seen.
inline Graph parse_edge_list(std::string_view text) {
  Graph graph;
  std::set<std::pair<int, int>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::istringstream in(line);
    std::vector<std::string> tokens;
    for (std::string tok; in >> tok;) tokens.push_back(tok);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (tokens.size() < 2 || tokens.size() > 3) throw ParseError(line_no, "expected 'u v [weight]'");

    auto parse_vertex = [&](const std::string& tok) {
      std::size_t used = 0;
      long value = -1;
      try {
        value = std::stol(tok, &used);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad vertex id '" + tok + "'");
      }
      if (used != tok.size() || value < 0 || value > 1'000'000)
        throw ParseError(line_no, "bad vertex id '" + tok + "'");
      return static_cast<int>(value);
    };
    int u = parse_vertex(tokens[0]);
    int v = parse_vertex(tokens[1]);
    double w = 1.0;
    if (tokens.size() == 3) {
      std::size_t used = 0;
      try {
        w = std::stod(tokens[2], &used);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad weight '" + tokens[2] + "'");
      }
      if (used != tokens[2].size() || !std::isfinite(w) || !(w > 0.0))
        throw ParseError(line_no, "weight must be a positive number");
    }
    if (u == v) throw ParseError(line_no, "self-loop on vertex " + std::to_string(u));
    if (u > v) std::swap(u, v);
    if (!seen.emplace(u, v).second)
      throw ParseError(line_no, "duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
    graph.edges.push_back({u, v, w});
    graph.n_vertices = std::max(graph.n_vertices, v + 1);
    if (end == text.size()) break;
  }
  return graph;
}

inline std::string serialize_edge_list(const Graph& graph) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const Edge& e : graph.edges) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
  return out.str();
}

// Ising encoding of MAX-CUT: J_uv = +w_uv, so a cut edge (opposite signs)
// lowers the energy by w_uv per unit spin product.
inline ProblemInstance maxcut_instance(const Graph& graph, int bosons, double lambda_bias = 0.0) {
  if (graph.n_vertices < 1) throw InvalidArgument("graph has no vertices");
  const auto m = static_cast<std::size_t>(graph.n_vertices);
  std::vector<double> j(m * m, 0.0);
  for (const Edge& e : graph.edges) {
    if (e.u < 0 || e.v >= graph.n_vertices || e.u >= e.v) throw InvalidArgument("malformed edge");
    j[e.u * m + e.v] += e.weight;
    j[e.v * m + e.u] += e.weight;
  }
  return ProblemInstance(graph.n_vertices, bosons, std::move(j), lambda_bias);
}

inline double cut_value(const Graph& graph, std::span<const int> signs) {
  if (signs.size() != static_cast<std::size_t>(graph.n_vertices)) throw InvalidArgument("one sign per vertex");
  for (int s : signs)
    if (s != 1 && s != -1) throw InvalidArgument("signs must be +1 or -1");
  double cut = 0.0;
  for (const Edge& e : graph.edges) cut += e.weight * (1 - signs[e.u] * signs[e.v]) / 2;
  return cut;
}

struct MaxCutSolution {
  double value = 0.0;
  std::vector<int> signs;
};

// Exhaustive over the 2^(n-1) partitions with vertex 0 fixed to +1.
inline MaxCutSolution brute_force_maxcut(const Graph& graph) {
  if (graph.n_vertices > 20) throw InvalidArgument("brute force limited to 20 vertices");
  MaxCutSolution best;
  best.signs.assign(static_cast<std::size_t>(graph.n_vertices), 1);
  best.value = graph.n_vertices == 0 ? 0.0 : cut_value(graph, best.signs);
  if (graph.n_vertices <= 1) return best;
  std::vector<int> signs(static_cast<std::size_t>(graph.n_vertices), 1);
  const std::uint32_t patterns = 1u << (graph.n_vertices - 1);
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    for (int v = 1; v < graph.n_vertices; ++v) signs[v] = (mask >> (v - 1)) & 1u ? -1 : 1;
    const double value = cut_value(graph, signs);
    if (value > best.value) {
      best.value = value;
      best.signs = signs;
    }
  }
  return best;
}

// Sign readout of an occupation state for a flip-symmetric problem: S_i = 0
// reads as +1, and the pattern is flipped so that vertex 0 is +1.
inline std::vector<int> canonical_signs(int bosons, std::span<const int> state) {
  std::vector<int> signs(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) signs[i] = site_spin(bosons, state[i]) >= 0 ? 1 : -1;
  if (!signs.empty() && signs[0] < 0)
    for (int& s : signs) s = -s;
  return signs;
}

// G(n, p) with unit weights.
template <typename Uniform>
Graph random_graph(int n_vertices, double edge_probability, Uniform&& uniform01) {
  Graph g;
  g.n_vertices = n_vertices;
  for (int u = 0; u < n_vertices; ++u)
    for (int v = u + 1; v < n_vertices; ++v)
      if (uniform01() < edge_probability) g.edges.push_back({u, v, 1.0});
  return g;
}

}  // namespace bosim
