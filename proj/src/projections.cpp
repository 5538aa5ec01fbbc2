#include "pushpull/projections.hpp"

#include <cmath>

#include "pushpull/errors.hpp"

namespace pushpull {

bool DualSet::contains(const Vector& lambda, double tol) const {
  if (lambda.size() != p + q) return false;
  const auto ineq = lambda.head(p);
  if (p > 0 && ineq.minCoeff() < -tol) return false;
  return !(ineq.norm() > radius + tol);
}

DualSet dual_set_of(const ProblemInstance& inst) { return DualSet{inst.p, inst.q, inst.dual_radius}; }

Vector project_box(const Vector& x, const BoxSet& box) {
  if (x.size() != box.dim()) throw DimensionMismatch("project_box: dimension mismatch");
  return x.cwiseMax(box.lo).cwiseMin(box.hi);
}

Vector project_dual(const Vector& lambda, const DualSet& ds) {
  if (lambda.size() != ds.p + ds.q) throw DimensionMismatch("project_dual: dimension mismatch");
  if (!(ds.radius >= 0)) throw InvalidArgument("project_dual: negative radius");
  Vector out = lambda;
  auto ineq = out.head(ds.p);
  ineq = ineq.cwiseMax(0.0);
  if (std::isfinite(ds.radius)) {
    const double norm = ineq.norm();
    if (norm > ds.radius) {
      if ((ineq.array() > 0).count() == 1) {
        ineq = (ineq.array() > 0).select(Vector::Constant(ds.p, ds.radius), 0.0);
        return out;
      }
      // Rounding may leave the scaled block an ulp outside the ball.
      double scale = ds.radius / norm;
      Vector scaled = ineq * scale;
      while (scaled.norm() > ds.radius) {
        scale = std::nextafter(scale, 0.0);
        scaled = ineq * scale;
      }
      ineq = scaled;
    }
  }
  return out;
}

}  // namespace pushpull
