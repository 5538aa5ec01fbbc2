#pragma once

// Coupled-constraint convex problem class:
//
//   min_{x in X}  sum_i f_i(x)   s.t.  sum_i h_i(x) in K = R^p_- x {0_q}
//
// with f_i(x) = a_i'x + b_i + c_i log(1 + exp(d_i'x)), inequality rows
// h_i^1(x) = alpha_i |x|^2 + beta_i followed by optional extra smooth convex
// rows, and q affine equality rows gamma_i'x + delta_i. X is a box.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace pushpull {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// log(1 + e^z), stable for large |z|.
double softplus(double z);
/// 1 / (1 + e^-z), stable for large |z|.
double logistic(double z);

struct LocalObjective {
  Vector a;      // linear coefficients
  double b = 0;  // offset
  double c = 0;  // softplus weight, >= 0
  Vector d;      // softplus direction
};

double eval_objective(const LocalObjective& obj, const Vector& x);
Vector grad_objective(const LocalObjective& obj, const Vector& x);

/// weight * |x - center|^2 + offset, weight >= 0.
struct QuadraticRow {
  double weight = 0;
  Vector center;
  double offset = 0;
};

/// a'x + b + c * softplus(d'x), c >= 0. Same family as LocalObjective.
struct SoftplusRow {
  Vector a;
  double b = 0;
  double c = 0;
  Vector d;
};

/// Caller-supplied smooth convex row. Not serializable.
struct CustomRow {
  std::string name;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

using ConvexRow = std::variant<QuadraticRow, SoftplusRow, CustomRow>;

double row_value(const ConvexRow& row, const Vector& x);
Vector row_gradient(const ConvexRow& row, const Vector& x);

/// Agent i's share of the coupled constraints.
///
/// Row order is fixed: the quadratic row quad_weight*|x|^2 + quad_offset,
/// then extra_ineq in order (together the p inequality rows), then the q
/// affine rows affine_rows*x + affine_offsets.
struct LocalConstraint {
  double quad_weight = 0;
  double quad_offset = 0;
  Matrix affine_rows;  // q x n
  Vector affine_offsets;
  std::vector<ConvexRow> extra_ineq;

  int ineq_rows() const { return 1 + static_cast<int>(extra_ineq.size()); }
  int eq_rows() const { return static_cast<int>(affine_rows.rows()); }
};

Vector eval_constraints(const LocalConstraint& con, const Vector& x);
/// n x (p+q); column j is the gradient of row j.
Matrix jac_constraints(const LocalConstraint& con, const Vector& x);

/// grad f_i(x) + jac h_i(x) * lambda.
Vector primal_grad(const LocalObjective& obj, const LocalConstraint& con, const Vector& x,
                   const Vector& lambda);

struct BoxSet {
  Vector lo;
  Vector hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vector& x) const;
  /// Strictly inside with margin.
  bool interior(const Vector& x, double margin = 0) const;
};

struct ProblemInstance {
  int m = 0;
  int n = 0;
  int p = 0;
  int q = 0;
  std::vector<LocalObjective> objectives;
  std::vector<LocalConstraint> constraints;
  BoxSet feasible_set;
  Vector slater_point;
  double dual_radius = 0;
  std::optional<std::uint64_t> seed;

  int dual_dim() const { return p + q; }

  /// f(x) = sum_i f_i(x).
  double objective(const Vector& x) const;
  /// sum_i h_i(x).
  Vector constraint_sum(const Vector& x) const;
  /// gamma(x) = min_{j<=p} -sum_i h_i^j(x).
  double slater_margin(const Vector& x) const;

  /// Checks dimensions and coefficient signs. Throws DimensionMismatch or
  /// InvalidArgument.
  void validate_structure() const;
  /// Checks the Slater certificate (inequality rows < -1e-6, equality rows
  /// within 1e-12, point strictly inside X). Throws SlaterViolation.
  void validate_slater() const;
};

/// Computes q(lambda) = min_{x in X} L(x, lambda).
using DualFunction = std::function<double(const Vector& lambda)>;

/// (f(xbar) - q(lambda_bar)) / gamma(xbar); the radius of Q_I.
/// Throws SlaterViolation when gamma(xbar) <= 0.
double compute_dual_radius(const ProblemInstance& inst, const Vector& lambda_bar,
                           const DualFunction& dual_value);

struct GenerationOptions {
  int m = 6;
  int n = 2;
  double box_half_width = 3.0;
  /// Radius of the disc sum_i h_i^1(x) <= 0 around the Slater point 0.
  double feasible_radius = 1.5;
  int max_attempts = 1000;
};

/// Seeded member of the logistic/ellipse/affine family with the Slater
/// point at the origin and dual_radius filled in.
ProblemInstance generate_instance(std::uint64_t seed, const GenerationOptions& opts);

/// m = 6, n = 2, p = 1, q = 1, X = [-3, 3]^2.
ProblemInstance canonical_instance(std::uint64_t seed);

}  // namespace pushpull
