#include <doctest.h>

#include <limits>
#include <random>

#include "pushpull/errors.hpp"
#include "pushpull/projections.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace pushpull;
using fixtures::vec;
namespace os = oracle_support;

namespace {

const BoxSet kBox{Vector::Constant(2, -3), Vector::Constant(2, 3)};

Vector random_box_point(std::mt19937_64& rng, const BoxSet& box) { return os::random_in_box(rng, box); }

Vector random_dual_point(std::mt19937_64& rng, const DualSet& ds) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector l = os::random_normal(rng, ds.p + ds.q, 3.0);
  l.head(ds.p) = l.head(ds.p).cwiseAbs();
  const double n = l.head(ds.p).norm();
  const double r = ds.radius * std::pow(u(rng), 1.0 / std::max(ds.p, 1));
  if (n > 0) l.head(ds.p) *= r / n;
  return l;
}

}  // namespace

TEST_CASE("box projection") {
  CHECK(project_box(vec({5, -7}), kBox) == vec({3, -3}));
  CHECK(project_box(vec({0.25, -1.5}), kBox) == vec({0.25, -1.5}));
  CHECK(project_box(vec({-3, 4}), kBox) == vec({-3, 3}));
  CHECK_THROWS_AS(project_box(vec({1, 2, 3}), kBox), DimensionMismatch);
}

TEST_CASE("dual projection") {
  CHECK(project_dual(vec({-2, 5}), DualSet{1, 1, 10}) == vec({0, 5}));
  const Vector scaled = project_dual(vec({3, 4}), DualSet{2, 0, 2.5});
  CHECK(scaled(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(scaled(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(project_dual(vec({1, 2, -9}), DualSet{2, 1, 10}) == vec({1, 2, -9}));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(project_dual(vec({-1, 1e6, 3}), DualSet{2, 1, inf}) == vec({0, 1e6, 3}));
  CHECK(project_dual(vec({4, -2}), DualSet{1, 1, 0}) == vec({0, -2}));
  CHECK_THROWS_AS(project_dual(vec({1, 2}), DualSet{2, 1, 1}), DimensionMismatch);
  CHECK_THROWS_AS(project_dual(vec({1, 2}), DualSet{1, 1, -1}), InvalidArgument);
}

TEST_CASE("dual projection matches a grid-search projection") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> radius(0.5, 4.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int p = 1 + trial % 3;
    const DualSet ds{p, 1, radius(rng)};
    const Vector l = os::random_normal(rng, p + 1, 3.0);
    const Vector want = os::grid_project_dual(l, p, ds.radius, 1e-4);
    CHECK((project_dual(l, ds) - want).norm() <= 1e-3);
  }
}

TEST_CASE("projections are idempotent, nonexpansive and feasible") {
  std::mt19937_64 rng(22);
  const DualSet ds{2, 1, 2.0};
  const BoxSet box3{vec({-1, 0, -5}), vec({2, 0.5, 5})};
  for (int c = 0; c < 1000; ++c) {
    const Vector u = os::random_normal(rng, 3, 4.0), v = os::random_normal(rng, 3, 4.0);
    const Vector pu = project_box(u, box3), pv = project_box(v, box3);
    CHECK(project_box(pu, box3) == pu);
    CHECK((pu - pv).norm() <= (u - v).norm() + 1e-12);
    CHECK(box3.contains(pu));

    const Vector du = project_dual(u, ds), dv = project_dual(v, ds);
    CHECK(project_dual(du, ds) == du);
    CHECK((du - dv).norm() <= (u - v).norm() + 1e-12);
    CHECK(ds.contains(du, 1e-12));
  }
}

TEST_CASE("projections satisfy the variational inequality") {
  std::mt19937_64 rng(23);
  const DualSet ds{2, 2, 1.5};
  for (int c = 0; c < 100; ++c) {
    const Vector v = os::random_normal(rng, 2, 6.0);
    const Vector pv = project_box(v, kBox);
    const Vector l = os::random_normal(rng, 4, 3.0);
    const Vector pl = project_dual(l, ds);
    for (int w = 0; w < 100; ++w) {
      CHECK((v - pv).dot(random_box_point(rng, kBox) - pv) <= 1e-10);
      CHECK((l - pl).dot(random_dual_point(rng, ds) - pl) <= 1e-10);
    }
  }
}

TEST_CASE("dual set membership") {
  const DualSet ds{2, 1, 1.0};
  CHECK(ds.contains(vec({0.6, 0.8, -40})));
  CHECK_FALSE(ds.contains(vec({-0.1, 0.5, 0})));
  CHECK_FALSE(ds.contains(vec({0.8, 0.8, 0})));
  const ProblemInstance inst = fixtures::blank_instance(2, 2, 1);
  const DualSet from_inst = dual_set_of(inst);
  CHECK(from_inst.p == 1);
  CHECK(from_inst.q == 1);
  CHECK(from_inst.radius == inst.dual_radius);
}
