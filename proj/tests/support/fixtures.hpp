#pragma once

// Hand-built instances and schedules shared by several tests.

#include <vector>

#include "pushpull/network.hpp"
#include "pushpull/problem.hpp"

namespace fixtures {

using pushpull::Matrix;
using pushpull::Vector;

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v(k++) = x;
  return v;
}

/// m agents in R^n with zero objectives, p = 1 (quad row |x|^2 - 1 summed
/// to m(|x|^2 - 1)) and q equality rows with zero coefficients.
inline pushpull::ProblemInstance blank_instance(int m, int n, int q, double half_width = 3.0) {
  pushpull::ProblemInstance inst;
  inst.m = m;
  inst.n = n;
  inst.p = 1;
  inst.q = q;
  for (int i = 0; i < m; ++i) {
    inst.objectives.push_back({Vector::Zero(n), 0.0, 0.0, Vector::Zero(n)});
    pushpull::LocalConstraint con;
    con.quad_weight = 1.0;
    con.quad_offset = -1.0;
    con.affine_rows = Matrix::Zero(q, n);
    con.affine_offsets = Vector::Zero(q);
    inst.constraints.push_back(con);
  }
  inst.feasible_set = {Vector::Constant(n, -half_width), Vector::Constant(n, half_width)};
  inst.slater_point = Vector::Zero(n);
  inst.dual_radius = 10.0;
  return inst;
}

inline pushpull::GraphSchedule complete_schedule(int m) {
  std::vector<pushpull::Edge> edges;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) edges.push_back({j, i});
  pushpull::GraphSchedule s;
  s.graphs.emplace_back(m, edges);
  s.connectivity_window = 1;
  return s;
}

inline pushpull::GraphSchedule self_loop_schedule(int m) {
  pushpull::GraphSchedule s;
  s.graphs.push_back(pushpull::DiGraph::with_self_loops(m, {}));
  s.connectivity_window = 1;
  return s;
}

}  // namespace fixtures
