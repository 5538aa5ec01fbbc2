#include "pushpull/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pushpull/engine.hpp"
#include "pushpull/errors.hpp"

namespace pushpull {

TraceRow compute_row(const SwarmState& state, const ProblemInstance& inst, const SaddleCertificate* certificate,
                     const BalanceVector* balance, double alpha) {
  TraceRow row;
  row.k = state.round;
  row.alpha = alpha;
  const Vector x_mean = state.mean_x();
  const Vector lambda_mean = state.mean_lambda();

  Vector z_sum = Vector::Zero(inst.n);
  Vector d_sum = Vector::Zero(inst.n);
  Vector y_sum = Vector::Zero(inst.dual_dim());
  Vector h_sum = Vector::Zero(inst.dual_dim());
  for (int i = 0; i < state.size(); ++i) {
    const auto& a = state.agents[static_cast<std::size_t>(i)];
    row.consensus_x = std::max(row.consensus_x, (a.x - x_mean).norm());
    row.consensus_lambda = std::max(row.consensus_lambda, (a.lambda - lambda_mean).norm());
    z_sum += a.z;
    d_sum += a.d;
    y_sum += a.y;
    h_sum += eval_constraints(inst.constraints[static_cast<std::size_t>(i)], a.x);
  }
  row.tracking_z = (z_sum - d_sum).norm();
  row.tracking_y = (y_sum - h_sum).norm();

  const Vector h_mean = inst.constraint_sum(x_mean);
  row.violation_ineq = h_mean.head(inst.p).cwiseMax(0.0);
  row.violation_eq = h_mean.tail(inst.q).cwiseAbs();

  if (certificate != nullptr) {
    row.gap = inst.objective(x_mean) - certificate->f_star;
    for (const auto& a : state.agents) {
      row.dist_x.push_back((a.x - certificate->x_star).norm());
      row.dist_lambda.push_back((a.lambda - certificate->lambda_star).norm());
      row.agent_gap.push_back(inst.objective(a.x) - certificate->f_star);
    }
  }
  if (balance != nullptr) row.s_norm = transformed_tracker(state, *balance).norm;
  return row;
}

BalanceVector propagate_balance(const BalanceVector& bv, const Matrix& col_weights) {
  const int m = bv.agents();
  if (col_weights.rows() != m || col_weights.cols() != m)
    throw DimensionMismatch("propagate_balance: weight matrix does not match balance vector");
  const double deviation = (col_weights.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (deviation > 1e-9) throw NonStochastic("propagate_balance: column sums deviate by " + std::to_string(deviation));
  BalanceVector out;
  out.v.resize(2 * m);
  out.v.head(m).noalias() = col_weights * bv.v.head(m);
  out.v.tail(m).noalias() = col_weights * bv.v.tail(m);
  return out;
}

TransformedTracker transformed_tracker(const SwarmState& state, const BalanceVector& bv) {
  const int m = state.size();
  if (bv.agents() != m) throw DimensionMismatch("transformed_tracker: balance vector size differs from agents");
  if (bv.v.minCoeff() < 1e-12) throw DegenerateBalance("balance vector entry below 1e-12");
  const auto n = state.agents.front().z.size();
  const auto r = state.agents.front().y.size();
  TransformedTracker t;
  t.primal_block.resize(m, n);
  t.dual_block.resize(m, r);
  t.primal_mean = Vector::Zero(n);
  t.dual_mean = Vector::Zero(r);
  for (int i = 0; i < m; ++i) {
    const auto& a = state.agents[static_cast<std::size_t>(i)];
    t.primal_block.row(i) = a.z.transpose() / bv.v(i);
    t.dual_block.row(i) = -a.y.transpose() / bv.v(m + i);
    // (1/2m) v' s collapses to (1/2m) 1' eta.
    t.primal_mean += bv.v(i) * t.primal_block.row(i).transpose();
    t.dual_mean += bv.v(m + i) * t.dual_block.row(i).transpose();
  }
  t.primal_mean /= 2.0 * m;
  t.dual_mean /= 2.0 * m;
  t.norm = std::sqrt(t.primal_block.squaredNorm() + t.dual_block.squaredNorm());
  return t;
}

double row_spread(const Matrix& product) {
  return (product.colwise().maxCoeff() - product.colwise().minCoeff()).maxCoeff();
}

Matrix weight_product(const WeightSchedule& ws, long s, long horizon) {
  if (ws.period() == 0) throw InvalidArgument("weight_product: empty schedule");
  if (s < 0 || horizon < 1) throw RangeError("weight_product: need s >= 0 and horizon >= 1");
  const auto m = ws.row_weights.front().rows();
  Matrix product = Matrix::Identity(m, m);
  for (long k = s; k < s + horizon; ++k) product = ws.row_at(k) * product;
  return product;
}

AbsProbEstimate estimate_abs_prob(const WeightSchedule& ws, long s, long horizon, double tol) {
  const Matrix product = weight_product(ws, s, horizon);
  const double spread = row_spread(product);
  if (!(spread < tol)) throw NotConverged(spread);
  AbsProbEstimate est;
  est.mu = product.colwise().mean().transpose();
  est.spread = spread;
  return est;
}

Vector weighted_mean_x(const SwarmState& state, const Vector& mu) {
  if (mu.size() != state.size()) throw DimensionMismatch("weighted_mean_x: weight vector size differs from agents");
  Vector acc = mu(0) * state.agents.front().x;
  for (int i = 1; i < state.size(); ++i) acc += mu(i) * state.agents[static_cast<std::size_t>(i)].x;
  return acc;
}

RateFit fit_rate(const Trace& trace, const StepSchedule& ss, long s, const SaddleCertificate& certificate,
                 const ProblemInstance& inst, const RateFitOptions& opts) {
  const long last = trace.last_round();
  if (s < 0 || s >= last) throw RangeError("fit_rate: need 0 <= s < last recorded round");
  if (opts.grid_points < 2) throw RangeError("fit_rate: need at least two grid points");
  const long lo = std::max({s + 1, opts.burn_in, 1L});
  if (lo > last) throw RangeError("fit_rate: burn-in leaves no rounds to fit");

  // Prefix sums of alpha_k x^_k make every window average O(1).
  std::vector<double> alpha_prefix(static_cast<std::size_t>(last + 2), 0.0);
  std::vector<Vector> weighted_prefix(static_cast<std::size_t>(last + 2), Vector::Zero(inst.n));
  for (long k = 0; k <= last; ++k) {
    const double alpha = step_size(ss, k);
    alpha_prefix[static_cast<std::size_t>(k + 1)] = alpha_prefix[static_cast<std::size_t>(k)] + alpha;
    weighted_prefix[static_cast<std::size_t>(k + 1)] =
        weighted_prefix[static_cast<std::size_t>(k)] + alpha * trace.mean_x[static_cast<std::size_t>(k)];
  }

  RateFit fit;
  const double log_lo = std::log(static_cast<double>(lo));
  const double log_hi = std::log(static_cast<double>(last));
  long previous = -1;
  for (int g = 0; g < opts.grid_points; ++g) {
    const double t = static_cast<double>(g) / (opts.grid_points - 1);
    const long n = std::clamp(static_cast<long>(std::llround(std::exp(log_lo + t * (log_hi - log_lo)))), lo, last);
    if (n == previous) continue;
    previous = n;
    const long start = opts.halving_start ? n / 2 : s;
    const double step_sum = alpha_prefix[static_cast<std::size_t>(n + 1)] - alpha_prefix[static_cast<std::size_t>(start)];
    const Vector average = (weighted_prefix[static_cast<std::size_t>(n + 1)] -
                            weighted_prefix[static_cast<std::size_t>(start)]) / step_sum;
    const double gap = inst.objective(average) - certificate.f_star;
    fit.n.push_back(n);
    fit.start.push_back(start);
    fit.gap.push_back(gap);
    fit.step_sum.push_back(step_sum);
    fit.product.push_back(std::abs(gap) * step_sum);
    fit.running_max.push_back(std::max(fit.running_max.empty() ? 0.0 : fit.running_max.back(), fit.product.back()));
  }
  fit.empirical_m1 = fit.running_max.empty() ? 0.0 : fit.running_max.back();

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t t = 0; t < fit.n.size(); ++t) {
    if (fit.gap[t] == 0) continue;
    const double lx = std::log(static_cast<double>(fit.n[t]));
    const double ly = std::log(std::abs(fit.gap[t]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  const double denom = count * sxx - sx * sx;
  fit.slope = count >= 2 && denom > 0 ? (count * sxy - sx * sy) / denom : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

}  // namespace pushpull
