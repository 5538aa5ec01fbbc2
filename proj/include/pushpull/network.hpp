#pragma once

// Time-varying directed communication graphs and their push/pull weights.
//
// Conventions: an Edge{from, to} means `from` transmits to `to`. Row weight
// a_ij (A(i, j)) is what node i applies to the value pulled from j; column
// weight b_ij (B(i, j)) is the share node j pushes to i. Both are positive
// exactly when the edge j -> i is present.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pushpull {

using Matrix = Eigen::MatrixXd;

struct Edge {
  int from = 0;
  int to = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class DiGraph {
 public:
  DiGraph() = default;
  /// Edges are sorted and deduplicated. Self-loops are not added.
  DiGraph(int nodes, std::vector<Edge> edges);
  /// Same, plus a self-loop at every node.
  static DiGraph with_self_loops(int nodes, std::vector<Edge> edges);

  int nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(int from, int to) const;
  bool has_all_self_loops() const;
  /// |N_i^in|, counting the self-loop.
  int in_degree(int node) const;
  /// |N_j^out|, counting the self-loop.
  int out_degree(int node) const;

 private:
  int nodes_ = 0;
  std::vector<Edge> edges_;
};

/// Periodic schedule: G(k) = graphs[k mod period].
struct GraphSchedule {
  std::vector<DiGraph> graphs;
  int connectivity_window = 1;

  int period() const { return static_cast<int>(graphs.size()); }
  int nodes() const { return graphs.empty() ? 0 : graphs.front().nodes(); }
  const DiGraph& at(long k) const { return graphs[static_cast<std::size_t>(k % period())]; }
};

/// A(k), B(k) for one period of a schedule.
struct WeightSchedule {
  std::vector<Matrix> row_weights;
  std::vector<Matrix> col_weights;
  /// Smallest positive entry realized across all matrices (eta).
  double positivity_floor = 0;

  int period() const { return static_cast<int>(row_weights.size()); }
  const Matrix& row_at(long k) const { return row_weights[static_cast<std::size_t>(k % period())]; }
  const Matrix& col_at(long k) const { return col_weights[static_cast<std::size_t>(k % period())]; }
};

/// Fixed period-4 schedule on 6 nodes; no single graph is strongly
/// connected, every 4-window union is.
GraphSchedule canonical_schedule();

/// Seeded period-P schedule on m nodes for scaling experiments: a directed
/// ring split across the period plus `extra_edges` random chords per graph.
GraphSchedule random_schedule(int nodes, int period, int extra_edges, std::uint64_t seed);

bool strongly_connected(const DiGraph& g);
/// True iff every window of B consecutive graphs has a strongly connected union.
bool check_connectivity(const GraphSchedule& sched, int window);

/// a_ij = 1 / |N_i^in| on edges j -> i. Throws MissingSelfLoop.
Matrix uniform_row_weights(const DiGraph& g);
/// b_ij = 1 / |N_j^out| on edges j -> i. Throws MissingSelfLoop.
Matrix uniform_col_weights(const DiGraph& g);
WeightSchedule uniform_weights(const GraphSchedule& sched);

struct WeightCheck {
  int k = 0;
  double row_sum_deviation = 0;  // max_i |sum_j A(k)_ij - 1|
  double col_sum_deviation = 0;  // max_j |sum_i B(k)_ij - 1|
  double min_positive = 0;
  int pattern_mismatches = 0;
  bool self_loops = true;
  bool ok = true;
};

struct ValidationReport {
  std::vector<WeightCheck> per_round;
  double tolerance = 1e-12;
  std::vector<std::string> problems;
  bool ok = true;
};

/// Checks stochasticity, sparsity pattern, self-loops and the positivity
/// floor of every matrix in one period. Never throws.
ValidationReport validate_weights(const WeightSchedule& ws, const GraphSchedule& sched, double tol = 1e-12);

}  // namespace pushpull
