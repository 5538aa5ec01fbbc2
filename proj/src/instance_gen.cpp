#include <cmath>
#include <random>

#include "pushpull/errors.hpp"
#include "pushpull/oracle.hpp"
#include "pushpull/problem.hpp"

namespace pushpull {
namespace {

// Uniform draws built from raw mt19937_64 output so that instances do not
// depend on the standard library's distribution implementation.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }

  Vector uniform_vector(int n, double lo, double hi) {
    Vector v(n);
    for (int k = 0; k < n; ++k) v(k) = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

constexpr double kMinEqualityNorm = 0.2;

}  // namespace

ProblemInstance generate_instance(std::uint64_t seed, const GenerationOptions& opts) {
  if (opts.m < 1 || opts.n < 1) throw InvalidArgument("generate_instance needs m, n >= 1");
  if (!(opts.feasible_radius > 0) || !(opts.feasible_radius < opts.box_half_width))
    throw InvalidArgument("feasible_radius must lie in (0, box_half_width)");

  Sampler sampler(seed);
  const int m = opts.m;
  const int n = opts.n;

  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    ProblemInstance inst;
    inst.m = m;
    inst.n = n;
    inst.p = 1;
    inst.q = 1;
    inst.seed = seed;
    inst.feasible_set.lo = Vector::Constant(n, -opts.box_half_width);
    inst.feasible_set.hi = Vector::Constant(n, opts.box_half_width);
    inst.slater_point = Vector::Zero(n);
    inst.objectives.resize(m);
    inst.constraints.resize(m);

    for (int i = 0; i < m; ++i) {
      auto& obj = inst.objectives[i];
      obj.a = sampler.uniform_vector(n, -1, 1);
      obj.b = sampler.uniform(-1, 1);
      obj.c = sampler.uniform(0.5, 2);
      obj.d = sampler.uniform_vector(n, -1, 1);

      auto& con = inst.constraints[i];
      con.quad_weight = sampler.uniform(0.1, 1);
      con.quad_offset = sampler.uniform(-1, 1);
      con.affine_rows = sampler.uniform_vector(n, -1, 1).transpose();
      con.affine_offsets = Vector::Constant(1, sampler.uniform(-1, 1));
    }

    // Offsets are shifted so that sum_i h_i^1 <= 0 is the disc of radius
    // feasible_radius and sum_i h_i^2 = 0 passes through the origin.
    double weight_sum = 0;
    double beta_sum = 0;
    double delta_sum = 0;
    Vector gamma_sum = Vector::Zero(n);
    for (const auto& con : inst.constraints) {
      weight_sum += con.quad_weight;
      beta_sum += con.quad_offset;
      delta_sum += con.affine_offsets(0);
      gamma_sum += con.affine_rows.row(0).transpose();
    }
    const double beta_shift = (-weight_sum * opts.feasible_radius * opts.feasible_radius - beta_sum) / m;
    const double delta_shift = -delta_sum / m;
    for (auto& con : inst.constraints) {
      con.quad_offset += beta_shift;
      con.affine_offsets(0) += delta_shift;
    }
    // Make the equality offsets cancel exactly in left-to-right summation.
    double partial = 0;
    for (int i = 0; i + 1 < m; ++i) partial += inst.constraints[i].affine_offsets(0);
    inst.constraints[m - 1].affine_offsets(0) = -partial;

    if (gamma_sum.norm() < kMinEqualityNorm) continue;

    try {
      inst.validate_structure();
      inst.validate_slater();
    } catch (const Error&) {
      continue;
    }

    const double radius = compute_dual_radius(inst, Vector::Zero(inst.dual_dim()), [&](const Vector& lambda) {
      return min_over_X(inst, lambda, 1e-10).value;
    });
    if (!std::isfinite(radius)) continue;
    inst.dual_radius = radius;
    return inst;
  }
  throw GenerationFailure("no valid instance after " + std::to_string(opts.max_attempts) + " attempts");
}

ProblemInstance canonical_instance(std::uint64_t seed) { return generate_instance(seed, GenerationOptions{}); }

}  // namespace pushpull
