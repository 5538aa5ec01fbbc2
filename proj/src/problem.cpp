#include "pushpull/problem.hpp"

#include <cmath>
#include <limits>
#include <type_traits>

#include "pushpull/errors.hpp"

namespace pushpull {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double eval_objective(const LocalObjective& obj, const Vector& x) {
  double value = obj.a.dot(x) + obj.b;
  if (obj.c != 0) value += obj.c * softplus(obj.d.dot(x));
  return value;
}

Vector grad_objective(const LocalObjective& obj, const Vector& x) {
  Vector g = obj.a;
  if (obj.c != 0) g += (obj.c * logistic(obj.d.dot(x))) * obj.d;
  return g;
}

double row_value(const ConvexRow& row, const Vector& x) {
  return std::visit(
      [&](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, QuadraticRow>) {
          return r.weight * (x - r.center).squaredNorm() + r.offset;
        } else if constexpr (std::is_same_v<T, SoftplusRow>) {
          return r.a.dot(x) + r.b + r.c * softplus(r.d.dot(x));
        } else {
          return r.value(x);
        }
      },
      row);
}

Vector row_gradient(const ConvexRow& row, const Vector& x) {
  return std::visit(
      [&](const auto& r) -> Vector {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, QuadraticRow>) {
          return 2.0 * r.weight * (x - r.center);
        } else if constexpr (std::is_same_v<T, SoftplusRow>) {
          return r.a + (r.c * logistic(r.d.dot(x))) * r.d;
        } else {
          return r.gradient(x);
        }
      },
      row);
}

Vector eval_constraints(const LocalConstraint& con, const Vector& x) {
  const int p = con.ineq_rows();
  const int q = con.eq_rows();
  Vector h(p + q);
  h(0) = con.quad_weight * x.squaredNorm() + con.quad_offset;
  for (int j = 1; j < p; ++j) h(j) = row_value(con.extra_ineq[j - 1], x);
  if (q > 0) h.tail(q) = con.affine_rows * x + con.affine_offsets;
  return h;
}

Matrix jac_constraints(const LocalConstraint& con, const Vector& x) {
  const int p = con.ineq_rows();
  const int q = con.eq_rows();
  Matrix jac(x.size(), p + q);
  jac.col(0) = (2.0 * con.quad_weight) * x;
  for (int j = 1; j < p; ++j) jac.col(j) = row_gradient(con.extra_ineq[j - 1], x);
  if (q > 0) jac.rightCols(q) = con.affine_rows.transpose();
  return jac;
}

Vector primal_grad(const LocalObjective& obj, const LocalConstraint& con, const Vector& x,
                   const Vector& lambda) {
  return grad_objective(obj, x) + jac_constraints(con, x) * lambda;
}

bool BoxSet::contains(const Vector& x) const {
  if (x.size() != lo.size()) return false;
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

bool BoxSet::interior(const Vector& x, double margin) const {
  if (x.size() != lo.size()) return false;
  return (x.array() > lo.array() + margin).all() && (x.array() < hi.array() - margin).all();
}

double ProblemInstance::objective(const Vector& x) const {
  double total = 0;
  for (const auto& obj : objectives) total += eval_objective(obj, x);
  return total;
}

Vector ProblemInstance::constraint_sum(const Vector& x) const {
  Vector total = Vector::Zero(p + q);
  for (const auto& con : constraints) total += eval_constraints(con, x);
  return total;
}

double ProblemInstance::slater_margin(const Vector& x) const {
  const Vector h = constraint_sum(x);
  return -h.head(p).maxCoeff();
}

void ProblemInstance::validate_structure() const {
  if (m < 1 || n < 1 || p < 1 || q < 0) throw DimensionMismatch("instance needs m, n, p >= 1 and q >= 0");
  if (static_cast<int>(objectives.size()) != m || static_cast<int>(constraints.size()) != m)
    throw DimensionMismatch("instance must hold one objective and one constraint per agent");
  if (feasible_set.dim() != n || feasible_set.hi.size() != n)
    throw DimensionMismatch("box dimension differs from n");
  if ((feasible_set.lo.array() > feasible_set.hi.array()).any())
    throw InvalidArgument("box has lo > hi");
  if (slater_point.size() != n) throw DimensionMismatch("slater_point dimension differs from n");
  for (int i = 0; i < m; ++i) {
    const auto& obj = objectives[i];
    const auto& con = constraints[i];
    if (obj.a.size() != n || obj.d.size() != n)
      throw DimensionMismatch("objective " + std::to_string(i) + " has wrong dimension");
    if (!(obj.c >= 0)) throw InvalidArgument("objective " + std::to_string(i) + " has c < 0");
    if (!(con.quad_weight >= 0))
      throw InvalidArgument("constraint " + std::to_string(i) + " has quad_weight < 0");
    if (con.ineq_rows() != p || con.eq_rows() != q)
      throw DimensionMismatch("constraint " + std::to_string(i) + " row counts differ from p, q");
    if (q > 0 && (con.affine_rows.cols() != n || con.affine_offsets.size() != q))
      throw DimensionMismatch("constraint " + std::to_string(i) + " affine block has wrong shape");
    for (const auto& row : con.extra_ineq) {
      if (const auto* quad = std::get_if<QuadraticRow>(&row); quad && !(quad->weight >= 0))
        throw InvalidArgument("quadratic inequality row with negative weight");
      if (const auto* sp = std::get_if<SoftplusRow>(&row); sp && !(sp->c >= 0))
        throw InvalidArgument("softplus inequality row with negative weight");
    }
  }
  if (!(dual_radius >= 0)) throw InvalidArgument("dual_radius must be >= 0");
}

void ProblemInstance::validate_slater() const {
  if (!feasible_set.interior(slater_point))
    throw SlaterViolation("slater_point is not strictly inside X");
  const Vector h = constraint_sum(slater_point);
  for (int j = 0; j < p; ++j)
    if (!(h(j) < -1e-6))
      throw SlaterViolation("inequality row " + std::to_string(j) + " not strictly satisfied at slater_point");
  for (int j = p; j < p + q; ++j)
    if (!(std::abs(h(j)) <= 1e-12))
      throw SlaterViolation("equality row " + std::to_string(j) + " not satisfied at slater_point");
}

double compute_dual_radius(const ProblemInstance& inst, const Vector& lambda_bar,
                           const DualFunction& dual_value) {
  const double gamma = inst.slater_margin(inst.slater_point);
  if (!(gamma > 0)) throw SlaterViolation("gamma(xbar) <= 0; no Slater certificate");
  const double q_bar = dual_value(lambda_bar);
  // q(lambda_bar) <= L(xbar, lambda_bar) <= f(xbar) for lambda_bar in K°;
  // clamp the tolerance-level negative difference of the inner solve.
  return std::max(0.0, (inst.objective(inst.slater_point) - q_bar) / gamma);
}

}  // namespace pushpull
