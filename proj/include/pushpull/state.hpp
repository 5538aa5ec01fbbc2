#pragma once

#include <vector>

#include "pushpull/problem.hpp"

namespace pushpull {

/// Iterates and trackers held by one agent at a round.
struct AgentState {
  Vector x;       // primal iterate
  Vector lambda;  // dual iterate
  Vector z;       // tracks sum_i grad_x L_i
  Vector y;       // tracks sum_i h_i
  Vector d;       // grad_x L_i(x, lambda), cached from the previous round
};

struct SwarmState {
  long round = 0;
  std::vector<AgentState> agents;

  int size() const { return static_cast<int>(agents.size()); }
  /// (1/m) sum_i x_i
  Vector mean_x() const;
  Vector mean_lambda() const;
};

}  // namespace pushpull
