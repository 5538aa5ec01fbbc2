#pragma once

#include <limits>

#include "pushpull/problem.hpp"

namespace pushpull {

/// Q = {l in R^p_+ : |l| <= radius} x R^q. radius = +inf leaves only the
/// orthant constraint.
struct DualSet {
  int p = 0;
  int q = 0;
  double radius = std::numeric_limits<double>::infinity();

  bool contains(const Vector& lambda, double tol = 0) const;
};

DualSet dual_set_of(const ProblemInstance& inst);

/// Componentwise clamp onto [lo, hi].
Vector project_box(const Vector& x, const BoxSet& box);

/// Euclidean projection onto Q: the equality block passes through, the
/// inequality block is clipped at zero and then scaled back onto the ball.
/// Clip-then-scale is exact because the ball is centred at the apex of the
/// orthant cone.
Vector project_dual(const Vector& lambda, const DualSet& ds);

}  // namespace pushpull
