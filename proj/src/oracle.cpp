#include "pushpull/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <limits>
#include <random>
#include <type_traits>

#include "pushpull/errors.hpp"

namespace pushpull {
namespace {

// Oracle-side evaluations. Deliberately written apart from the problem
// module's evaluators.

double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) { return z > 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

struct Aggregate {
  const ProblemInstance& inst;

  double objective(const Vector& x) const {
    double total = 0;
    for (const auto& o : inst.objectives) total += o.a.dot(x) + o.b + o.c * log1pexp(o.d.dot(x));
    return total;
  }

  Vector objective_grad(const Vector& x) const {
    Vector g = Vector::Zero(inst.n);
    for (const auto& o : inst.objectives) g += o.a + o.c * sigmoid(o.d.dot(x)) * o.d;
    return g;
  }

  static double extra_value(const ConvexRow& row, const Vector& x) {
    if (const auto* r = std::get_if<QuadraticRow>(&row)) return r->weight * (x - r->center).squaredNorm() + r->offset;
    if (const auto* r = std::get_if<SoftplusRow>(&row)) return r->a.dot(x) + r->b + r->c * log1pexp(r->d.dot(x));
    return std::get<CustomRow>(row).value(x);
  }

  static Vector extra_grad(const ConvexRow& row, const Vector& x) {
    if (const auto* r = std::get_if<QuadraticRow>(&row)) return 2.0 * r->weight * (x - r->center);
    if (const auto* r = std::get_if<SoftplusRow>(&row)) return r->a + r->c * sigmoid(r->d.dot(x)) * r->d;
    return std::get<CustomRow>(row).gradient(x);
  }

  // sum_i h_i(x)
  Vector constraints(const Vector& x) const {
    Vector h = Vector::Zero(inst.p + inst.q);
    const double sq = x.squaredNorm();
    for (const auto& c : inst.constraints) {
      h(0) += c.quad_weight * sq + c.quad_offset;
      for (int j = 1; j < inst.p; ++j) h(j) += extra_value(c.extra_ineq[static_cast<std::size_t>(j - 1)], x);
      for (int j = 0; j < inst.q; ++j) h(inst.p + j) += c.affine_rows.row(j).dot(x) + c.affine_offsets(j);
    }
    return h;
  }

  // n x (p+q), columns are row gradients of sum_i h_i.
  Matrix jacobian(const Vector& x) const {
    Matrix jac = Matrix::Zero(inst.n, inst.p + inst.q);
    for (const auto& c : inst.constraints) {
      jac.col(0) += 2.0 * c.quad_weight * x;
      for (int j = 1; j < inst.p; ++j) jac.col(j) += extra_grad(c.extra_ineq[static_cast<std::size_t>(j - 1)], x);
      for (int j = 0; j < inst.q; ++j) jac.col(inst.p + j) += c.affine_rows.row(j).transpose();
    }
    return jac;
  }
};

Vector clamp_box(const Vector& x, const BoxSet& box) { return x.cwiseMax(box.lo).cwiseMin(box.hi); }

Vector clamp_dual(Vector lambda, int p, double radius) {
  auto ineq = lambda.head(p);
  ineq = ineq.cwiseMax(0.0);
  const double norm = ineq.norm();
  if (std::isfinite(radius) && norm > radius) ineq *= radius / norm;
  return lambda;
}

struct SmoothBoxProblem {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

struct BoxSolve {
  Vector x;
  double value = 0;
  double residual = 0;
  long iterations = 0;
};

// Spectral projected gradient with a nonmonotone Armijo search.
BoxSolve spg(const SmoothBoxProblem& prob, const BoxSet& box, Vector x, double tol, long max_iter) {
  constexpr double kMinStep = 1e-12;
  constexpr double kMaxStep = 1e12;
  constexpr std::size_t kMemory = 10;
  x = clamp_box(x, box);
  double fx = prob.value(x);
  Vector g = prob.gradient(x);
  std::deque<double> history{fx};
  double spectral = 1.0;
  BoxSolve out;
  for (long it = 0; it < max_iter; ++it) {
    const double residual = (clamp_box(x - g, box) - x).norm();
    if (residual <= tol) {
      out = {x, fx, residual, it};
      return out;
    }
    const Vector dir = clamp_box(x - spectral * g, box) - x;
    const double slope = g.dot(dir);
    const double reference = *std::max_element(history.begin(), history.end());
    double t = 1.0;
    Vector trial = x + dir;
    double ft = prob.value(trial);
    int halvings = 0;
    while (ft > reference + 1e-4 * t * slope && halvings < 60) {
      t *= 0.5;
      trial = x + t * dir;
      ft = prob.value(trial);
      ++halvings;
    }
    const Vector g_new = prob.gradient(trial);
    const Vector s = trial - x;
    const Vector yv = g_new - g;
    const double sty = s.dot(yv);
    spectral = sty > 0 ? std::clamp(s.squaredNorm() / sty, kMinStep, kMaxStep) : kMaxStep;
    if (s.squaredNorm() == 0) spectral = 1.0;
    x = trial;
    fx = ft;
    g = g_new;
    history.push_back(fx);
    if (history.size() > kMemory) history.pop_front();
    out = {x, fx, residual, it + 1};
  }
  out.residual = (clamp_box(x - g, box) - x).norm();
  return out;
}

// Coarse grid scan for n <= 2: returns a grid point beating `value` by a
// margin, if any.
std::optional<Vector> grid_improvement(const SmoothBoxProblem& prob, const BoxSet& box, double value) {
  const int n = box.dim();
  if (n > 2) return std::nullopt;
  const int per_axis = n == 1 ? 401 : 61;
  const double margin = 1e-9 * (1.0 + std::abs(value));
  std::optional<Vector> best;
  double best_value = value - margin;
  Vector x(n);
  const auto coord = [&](int axis, int t) {
    return box.lo(axis) + (box.hi(axis) - box.lo(axis)) * t / (per_axis - 1);
  };
  const int outer = n == 2 ? per_axis : 1;
  for (int a = 0; a < outer; ++a) {
    for (int b = 0; b < per_axis; ++b) {
      if (n == 2) {
        x(0) = coord(0, a);
        x(1) = coord(1, b);
      } else {
        x(0) = coord(0, b);
      }
      const double v = prob.value(x);
      if (v < best_value) {
        best_value = v;
        best = x;
      }
    }
  }
  return best;
}

BoxSolve minimize_on_box(const SmoothBoxProblem& prob, const BoxSet& box, const Vector& start, double tol,
                         long max_iter = 200'000) {
  BoxSolve sol = spg(prob, box, start, tol, max_iter);
  for (int restart = 0; restart < 3; ++restart) {
    const auto better = grid_improvement(prob, box, sol.value);
    if (!better) break;
    BoxSolve again = spg(prob, box, *better, tol, max_iter);
    again.iterations += sol.iterations;
    sol = again;
  }
  return sol;
}

}  // namespace

double lagrangian(const ProblemInstance& inst, const Vector& x, const Vector& lambda) {
  const Aggregate agg{inst};
  return agg.objective(x) + lambda.dot(agg.constraints(x));
}

double kkt_residual(const ProblemInstance& inst, const Vector& x, const Vector& lambda) {
  const Aggregate agg{inst};
  const Vector grad_x = agg.objective_grad(x) + agg.jacobian(x) * lambda;
  const Vector grad_lambda = agg.constraints(x);
  return (x - clamp_box(x - grad_x, inst.feasible_set)).norm() +
         (lambda - clamp_dual(lambda + grad_lambda, inst.p, inst.dual_radius)).norm();
}

MinResult min_over_X(const ProblemInstance& inst, const Vector& lambda, double tol) {
  if (lambda.size() != inst.p + inst.q) throw DimensionMismatch("min_over_X: lambda has wrong dimension");
  if (!lambda.allFinite()) throw InvalidArgument("min_over_X: lambda must be finite");
  const Aggregate agg{inst};
  const SmoothBoxProblem prob{
      [&](const Vector& x) { return agg.objective(x) + lambda.dot(agg.constraints(x)); },
      [&](const Vector& x) -> Vector { return agg.objective_grad(x) + agg.jacobian(x) * lambda; }};
  const Vector start = clamp_box(Vector::Zero(inst.n), inst.feasible_set);
  const BoxSolve sol = minimize_on_box(prob, inst.feasible_set, start, tol);
  if (!(sol.residual <= tol)) throw NoConvergence("min_over_X did not converge", sol.residual);
  return MinResult{sol.x, sol.value, sol.iterations};
}

SaddleCertificate solve_centralized(const ProblemInstance& inst, double tol, const OracleOptions& opts) {
  if (!(tol > 0)) throw InvalidArgument("solve_centralized: tol must be > 0");
  const Aggregate agg{inst};
  const int p = inst.p;
  const int q = inst.q;
  const BoxSet& box = inst.feasible_set;

  Vector best_x = clamp_box(inst.slater_point.size() == inst.n ? inst.slater_point : Vector::Zero(inst.n), box);
  Vector best_lambda = Vector::Zero(p + q);
  double best_residual = kkt_residual(inst, best_x, best_lambda);

  const auto finish = [&](const Vector& x, const Vector& lambda, double residual, std::string method) {
    SaddleCertificate cert;
    cert.x_star = x;
    cert.lambda_star = lambda;
    cert.f_star = agg.objective(x);
    cert.kkt_residual = residual;
    cert.tolerance = tol;
    cert.method = std::move(method);
    const SaddleReport report = verify_saddle(inst, x, lambda, opts.saddle_probes, tol, opts.probe_seed);
    cert.saddle_gap = std::max(report.max_left_violation, report.max_right_violation);
    return cert;
  };

  // Iterations of both phases draw on one budget.
  long budget = opts.max_iterations;

  // Phase 1: projected primal-dual (Arrow-Hurwicz) iteration with step
  // c / (k+1)^exponent, averaged over dyadic epochs [2^j, 2^{j+1}).
  {
    Vector x = best_x;
    Vector lambda = best_lambda;
    Vector sum_x = Vector::Zero(inst.n);
    Vector sum_lambda = Vector::Zero(p + q);
    double sum_alpha = 0;
    long epoch_end = 1;
    for (long k = 0; k < opts.max_iterations; ++k) {
      --budget;
      const double alpha = opts.step_c / std::pow(static_cast<double>(k + 1), opts.step_exponent);
      const Vector grad_x = agg.objective_grad(x) + agg.jacobian(x) * lambda;
      const Vector h = agg.constraints(x);
      x = clamp_box(x - alpha * grad_x, box);
      lambda = clamp_dual(lambda + alpha * h, p, inst.dual_radius);
      sum_x += alpha * x;
      sum_lambda += alpha * lambda;
      sum_alpha += alpha;
      if (k + 1 == epoch_end) {
        const Vector avg_x = sum_x / sum_alpha;
        const Vector avg_lambda = sum_lambda / sum_alpha;
        const double residual = kkt_residual(inst, avg_x, avg_lambda);
        if (residual < best_residual) {
          best_residual = residual;
          best_x = avg_x;
          best_lambda = avg_lambda;
        }
        if (best_residual < tol) return finish(best_x, best_lambda, best_residual, "arrow-hurwicz");
        if (best_residual < opts.warm_start_residual) break;
        sum_x.setZero();
        sum_lambda.setZero();
        sum_alpha = 0;
        epoch_end *= 2;
      }
    }
  }

  // Phase 2: augmented Lagrangian refinement from the best average.
  Vector mu = best_lambda.head(p).cwiseMax(0.0);
  Vector nu = best_lambda.tail(q);
  Vector x = best_x;
  double rho = 10.0;
  double previous_violation = std::numeric_limits<double>::infinity();
  const double inner_tol = std::max(1e-13, 1e-3 * tol);
  for (int outer = 0; outer < 200 && budget > 0; ++outer) {
    const SmoothBoxProblem sub{
        [&](const Vector& v) {
          const Vector h = agg.constraints(v);
          double value = agg.objective(v) + nu.dot(h.tail(q)) + 0.5 * rho * h.tail(q).squaredNorm();
          for (int j = 0; j < p; ++j) {
            const double shifted = std::max(0.0, mu(j) + rho * h(j));
            value += (shifted * shifted - mu(j) * mu(j)) / (2.0 * rho);
          }
          return value;
        },
        [&](const Vector& v) -> Vector {
          const Vector h = agg.constraints(v);
          Vector weights(p + q);
          for (int j = 0; j < p; ++j) weights(j) = std::max(0.0, mu(j) + rho * h(j));
          weights.tail(q) = nu + rho * h.tail(q);
          return agg.objective_grad(v) + agg.jacobian(v) * weights;
        }};
    const BoxSolve inner = minimize_on_box(sub, box, x, inner_tol, std::min<long>(budget, 200'000));
    budget -= std::max<long>(inner.iterations, 1);
    x = inner.x;
    const Vector h = agg.constraints(x);
    for (int j = 0; j < p; ++j) mu(j) = std::max(0.0, mu(j) + rho * h(j));
    nu += rho * h.tail(q);
    Vector lambda(p + q);
    lambda << mu, nu;
    lambda = clamp_dual(lambda, p, inst.dual_radius);
    mu = lambda.head(p);

    const double residual = kkt_residual(inst, x, lambda);
    if (residual < best_residual) {
      best_residual = residual;
      best_x = x;
      best_lambda = lambda;
    }
    if (residual < tol) return finish(x, lambda, residual, "arrow-hurwicz+augmented-lagrangian");

    double violation = h.tail(q).norm();
    for (int j = 0; j < p; ++j) violation = std::max(violation, std::max(h(j), -mu(j) / rho));
    if (violation > 0.25 * previous_violation) rho = std::min(rho * 5.0, 1e8);
    previous_violation = violation;
  }
  throw NoConvergence("solve_centralized did not reach tolerance", best_residual);
}

SaddleReport verify_saddle(const ProblemInstance& inst, const Vector& x, const Vector& lambda, int probes, double tol,
                           std::uint64_t seed) {
  SaddleReport report;
  report.probes = std::max(probes, 0);
  report.tolerance = tol;
  if (probes <= 0) return report;

  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = inst.n;
  const int p = inst.p;
  const int q = inst.q;
  const double ball = std::isfinite(inst.dual_radius) ? inst.dual_radius : std::max(10.0, 2.0 * lambda.head(p).norm());
  const double eq_half_width = std::max(10.0, std::isfinite(inst.dual_radius) ? inst.dual_radius : 0.0);
  const double center = lagrangian(inst, x, lambda);

  for (int t = 0; t < probes; ++t) {
    Vector xp(n);
    for (int k = 0; k < n; ++k) xp(k) = inst.feasible_set.lo(k) + unit(engine) * (inst.feasible_set.hi(k) - inst.feasible_set.lo(k));
    Vector lp(p + q);
    Vector dir(p);
    for (int j = 0; j < p; ++j) dir(j) = std::abs(normal(engine));
    const double norm = dir.norm();
    const double r = ball * std::pow(unit(engine), 1.0 / p);
    lp.head(p) = norm > 0 ? Vector(dir * (r / norm)) : Vector::Zero(p);
    for (int j = 0; j < q; ++j) lp(p + j) = lambda(p + j) + (2.0 * unit(engine) - 1.0) * eq_half_width;

    report.max_left_violation = std::max(report.max_left_violation, lagrangian(inst, x, lp) - center);
    report.max_right_violation = std::max(report.max_right_violation, center - lagrangian(inst, xp, lambda));
  }
  report.pass = report.max_left_violation <= tol && report.max_right_violation <= tol;
  return report;
}

}  // namespace pushpull
