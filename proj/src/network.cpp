#include "pushpull/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "pushpull/errors.hpp"

namespace pushpull {

DiGraph::DiGraph(int nodes, std::vector<Edge> edges) : nodes_(nodes), edges_(std::move(edges)) {
  if (nodes < 1) throw InvalidArgument("graph needs at least one node");
  for (const auto& e : edges_)
    if (e.from < 0 || e.from >= nodes || e.to < 0 || e.to >= nodes)
      throw InvalidArgument("edge endpoint out of range");
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

DiGraph DiGraph::with_self_loops(int nodes, std::vector<Edge> edges) {
  for (int i = 0; i < nodes; ++i) edges.push_back({i, i});
  return DiGraph(nodes, std::move(edges));
}

bool DiGraph::has_edge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

bool DiGraph::has_all_self_loops() const {
  for (int i = 0; i < nodes_; ++i)
    if (!has_edge(i, i)) return false;
  return true;
}

int DiGraph::in_degree(int node) const {
  return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.to == node; }));
}

int DiGraph::out_degree(int node) const {
  return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.from == node; }));
}

GraphSchedule canonical_schedule() {
  // The directed ring 0->1->2->3->4->5->0 is split across the four graphs,
  // with a few chords. Each graph has at most three non-loop edges, so no
  // single graph can be strongly connected on six nodes.
  GraphSchedule sched;
  sched.connectivity_window = 4;
  sched.graphs = {
      DiGraph::with_self_loops(6, {{0, 1}, {1, 2}, {4, 0}}),
      DiGraph::with_self_loops(6, {{2, 3}, {3, 4}}),
      DiGraph::with_self_loops(6, {{4, 5}, {5, 0}, {2, 5}}),
      DiGraph::with_self_loops(6, {{5, 1}, {0, 4}}),
  };
  return sched;
}

GraphSchedule random_schedule(int nodes, int period, int extra_edges, std::uint64_t seed) {
  if (nodes < 1 || period < 1) throw InvalidArgument("random_schedule needs nodes, period >= 1");
  std::mt19937_64 engine(seed);
  std::vector<std::vector<Edge>> edges(static_cast<std::size_t>(period));
  for (int i = 0; i < nodes; ++i) {
    if (nodes > 1) edges[static_cast<std::size_t>(i % period)].push_back({i, (i + 1) % nodes});
  }
  for (int k = 0; k < period; ++k) {
    for (int e = 0; e < extra_edges && nodes > 1; ++e) {
      const int from = static_cast<int>(engine() % static_cast<std::uint64_t>(nodes));
      const int to = static_cast<int>(engine() % static_cast<std::uint64_t>(nodes));
      if (from != to) edges[static_cast<std::size_t>(k)].push_back({from, to});
    }
  }
  GraphSchedule sched;
  sched.connectivity_window = period;
  for (auto& list : edges) sched.graphs.push_back(DiGraph::with_self_loops(nodes, std::move(list)));
  return sched;
}

namespace {

std::vector<char> reachable(int nodes, const std::vector<std::vector<int>>& adj, int start) {
  std::vector<char> seen(static_cast<std::size_t>(nodes), 0);
  std::vector<int> stack{start};
  seen[static_cast<std::size_t>(start)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

bool strongly_connected_edges(int nodes, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> forward(static_cast<std::size_t>(nodes));
  std::vector<std::vector<int>> backward(static_cast<std::size_t>(nodes));
  for (const auto& e : edges) {
    forward[static_cast<std::size_t>(e.from)].push_back(e.to);
    backward[static_cast<std::size_t>(e.to)].push_back(e.from);
  }
  const auto all = [](const std::vector<char>& v) { return std::all_of(v.begin(), v.end(), [](char c) { return c != 0; }); };
  return all(reachable(nodes, forward, 0)) && all(reachable(nodes, backward, 0));
}

}  // namespace

bool strongly_connected(const DiGraph& g) { return strongly_connected_edges(g.nodes(), g.edges()); }

bool check_connectivity(const GraphSchedule& sched, int window) {
  if (window < 1) throw InvalidArgument("connectivity window must be >= 1");
  if (sched.period() == 0) return false;
  for (int offset = 0; offset < sched.period(); ++offset) {
    std::vector<Edge> merged;
    for (int t = 0; t < window; ++t) {
      const auto& edges = sched.at(offset + t).edges();
      merged.insert(merged.end(), edges.begin(), edges.end());
    }
    if (!strongly_connected_edges(sched.nodes(), merged)) return false;
  }
  return true;
}

Matrix uniform_row_weights(const DiGraph& g) {
  const int m = g.nodes();
  Matrix a = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const int deg = g.in_degree(i);
    if (deg == 0 || !g.has_edge(i, i)) throw MissingSelfLoop("node " + std::to_string(i) + " has no self-loop");
    for (const auto& e : g.edges())
      if (e.to == i) a(i, e.from) = 1.0 / deg;
  }
  return a;
}

Matrix uniform_col_weights(const DiGraph& g) {
  const int m = g.nodes();
  Matrix b = Matrix::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    const int deg = g.out_degree(j);
    if (deg == 0 || !g.has_edge(j, j)) throw MissingSelfLoop("node " + std::to_string(j) + " has no self-loop");
    for (const auto& e : g.edges())
      if (e.from == j) b(e.to, j) = 1.0 / deg;
  }
  return b;
}

WeightSchedule uniform_weights(const GraphSchedule& sched) {
  WeightSchedule ws;
  ws.positivity_floor = 1.0;
  for (const auto& g : sched.graphs) {
    ws.row_weights.push_back(uniform_row_weights(g));
    ws.col_weights.push_back(uniform_col_weights(g));
    for (const Matrix* w : {&ws.row_weights.back(), &ws.col_weights.back()})
      for (Eigen::Index k = 0; k < w->size(); ++k)
        if (w->data()[k] > 0) ws.positivity_floor = std::min(ws.positivity_floor, w->data()[k]);
  }
  return ws;
}

ValidationReport validate_weights(const WeightSchedule& ws, const GraphSchedule& sched, double tol) {
  ValidationReport report;
  report.tolerance = tol;
  const auto fail = [&](std::string msg) {
    report.ok = false;
    report.problems.push_back(std::move(msg));
  };
  if (ws.period() == 0 || ws.period() != sched.period() ||
      static_cast<int>(ws.col_weights.size()) != ws.period()) {
    fail("weight period does not match schedule period");
    return report;
  }
  const int m = sched.nodes();
  for (int k = 0; k < ws.period(); ++k) {
    WeightCheck check;
    check.k = k;
    const Matrix& a = ws.row_weights[static_cast<std::size_t>(k)];
    const Matrix& b = ws.col_weights[static_cast<std::size_t>(k)];
    const DiGraph& g = sched.graphs[static_cast<std::size_t>(k)];
    if (a.rows() != m || a.cols() != m || b.rows() != m || b.cols() != m) {
      check.ok = false;
      fail("k=" + std::to_string(k) + ": weight matrix shape differs from node count");
      report.per_round.push_back(check);
      continue;
    }
    check.row_sum_deviation = (a.rowwise().sum().array() - 1.0).abs().maxCoeff();
    check.col_sum_deviation = (b.colwise().sum().array() - 1.0).abs().maxCoeff();
    check.min_positive = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const bool edge = g.has_edge(j, i);
        for (double w : {a(i, j), b(i, j)}) {
          if (w < 0 || (w > 0) != edge) ++check.pattern_mismatches;
          if (w > 0) check.min_positive = std::min(check.min_positive, w);
        }
      }
      if (!(a(i, i) > 0) || !(b(i, i) > 0) || !g.has_edge(i, i)) check.self_loops = false;
    }
    if (check.row_sum_deviation > tol) fail("k=" + std::to_string(k) + ": A(k) row sums deviate by " + std::to_string(check.row_sum_deviation));
    if (check.col_sum_deviation > tol) fail("k=" + std::to_string(k) + ": B(k) column sums deviate by " + std::to_string(check.col_sum_deviation));
    if (check.pattern_mismatches > 0) fail("k=" + std::to_string(k) + ": " + std::to_string(check.pattern_mismatches) + " entries off the edge pattern");
    if (!check.self_loops) fail("k=" + std::to_string(k) + ": missing self-loop weight");
    const bool above_floor = !(ws.positivity_floor > 0 && check.min_positive < ws.positivity_floor * (1 - 1e-12));
    if (!above_floor) fail("k=" + std::to_string(k) + ": positive entry below eta");
    check.ok = check.row_sum_deviation <= tol && check.col_sum_deviation <= tol && check.pattern_mismatches == 0 &&
               check.self_loops && above_floor;
    report.per_round.push_back(check);
  }
  return report;
}

}  // namespace pushpull
