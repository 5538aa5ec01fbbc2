#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pushpull/engine.hpp"
#include "pushpull/io.hpp"
#include "support/fixtures.hpp"

using namespace pushpull;
using fixtures::vec;
namespace fs = std::filesystem;

#ifndef PUSHPULL_GOLDEN_DIR
#define PUSHPULL_GOLDEN_DIR "tests/golden"
#endif

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pushpull_io_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("instances round-trip exactly") {
  const ProblemInstance inst = canonical_instance(42);
  const io::Json doc = io::instance_to_json(inst);
  const ProblemInstance back = io::instance_from_json(io::Json::parse(doc.dump()));
  CHECK(io::instance_to_json(back).dump() == doc.dump());
  CHECK(back.seed == inst.seed);
  for (int i = 0; i < inst.m; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    CHECK(back.objectives[idx].a == inst.objectives[idx].a);
    CHECK(back.objectives[idx].c == inst.objectives[idx].c);
    CHECK(back.constraints[idx].quad_offset == inst.constraints[idx].quad_offset);
    CHECK(back.constraints[idx].affine_rows == inst.constraints[idx].affine_rows);
  }
  CHECK(back.dual_radius == inst.dual_radius);
  CHECK(io::instance_hash(back) == io::instance_hash(inst));
}

TEST_CASE("extra inequality rows serialize except custom ones") {
  ProblemInstance inst = fixtures::blank_instance(2, 2, 1);
  inst.p = 3;
  for (auto& con : inst.constraints) {
    con.extra_ineq.push_back(QuadraticRow{0.5, vec({1, -1}), -4.0});
    con.extra_ineq.push_back(SoftplusRow{vec({0.1, 0.2}), -3.0, 0.7, vec({1, 1})});
  }
  const ProblemInstance back = io::instance_from_json(io::instance_to_json(inst));
  const Vector x = vec({0.3, 1.7});
  CHECK(eval_constraints(back.constraints[1], x) == eval_constraints(inst.constraints[1], x));

  inst.constraints[0].extra_ineq[0] = CustomRow{"mine", [](const Vector&) { return 0.0; },
                                                [](const Vector& v) { return Vector::Zero(v.size()); }};
  CHECK_THROWS_AS(io::instance_to_json(inst), io::FormatError);
}

TEST_CASE("instance hash depends on every coefficient") {
  const ProblemInstance a = canonical_instance(42);
  ProblemInstance b = a;
  b.constraints[4].affine_offsets(0) = std::nextafter(b.constraints[4].affine_offsets(0), 1.0);
  CHECK(io::instance_hash(a) != io::instance_hash(b));
  CHECK(io::instance_hash(a).size() == 16);
  CHECK(io::instance_hash(a) == io::instance_hash(canonical_instance(42)));
}

TEST_CASE("malformed instance documents are rejected") {
  io::Json doc = io::instance_to_json(canonical_instance(1));
  doc["format"] = "something.else";
  CHECK_THROWS_AS(io::instance_from_json(doc), io::FormatError);
  doc = io::instance_to_json(canonical_instance(1));
  doc.erase("agents");
  CHECK_THROWS_AS(io::instance_from_json(doc), io::FormatError);
  doc = io::instance_to_json(canonical_instance(1));
  doc["agents"][2]["objective"]["a"] = io::Json::array({1.0});
  CHECK_THROWS_AS(io::instance_from_json(doc), io::FormatError);
  doc = io::instance_to_json(canonical_instance(1));
  doc["agents"][0]["objective"]["c"] = "two";
  CHECK_THROWS_AS(io::instance_from_json(doc), io::FormatError);
}

TEST_CASE("schedules and weights round-trip") {
  const GraphSchedule s = canonical_schedule();
  const GraphSchedule back = io::schedule_from_json(io::schedule_to_json(s));
  REQUIRE(back.period() == 4);
  CHECK(back.connectivity_window == 4);
  for (int k = 0; k < 4; ++k) CHECK(back.graphs[static_cast<std::size_t>(k)].edges() == s.graphs[static_cast<std::size_t>(k)].edges());
  const io::Json doc = io::schedule_to_json(s);
  CHECK(doc["nodes"] == 6);
  CHECK(doc["period"] == 4);

  io::Json bad = doc;
  bad["graphs"][1][0] = io::Json::array({0, 9});
  CHECK_THROWS_AS(io::schedule_from_json(bad), io::FormatError);
  bad = doc;
  bad["period"] = 3;
  CHECK_THROWS_AS(io::schedule_from_json(bad), io::FormatError);

  const WeightSchedule ws = uniform_weights(s);
  const WeightSchedule wb = io::weights_from_json(io::Json::parse(io::weights_to_json(ws).dump()));
  REQUIRE(wb.period() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(wb.row_at(k) == ws.row_at(k));
    CHECK(wb.col_at(k) == ws.col_at(k));
  }
  CHECK(wb.positivity_floor == ws.positivity_floor);
}

TEST_CASE("certificates and states round-trip") {
  SaddleCertificate cert{vec({0.1, 1.0 / 3}), vec({0, -2.5}), 5.5, 1e-9, 2e-8, 1e-8, "arrow-hurwicz"};
  const SaddleCertificate cb = io::certificate_from_json(io::Json::parse(io::certificate_to_json(cert).dump()));
  CHECK(cb.x_star == cert.x_star);
  CHECK(cb.lambda_star == cert.lambda_star);
  CHECK(cb.f_star == cert.f_star);
  CHECK(cb.kkt_residual == cert.kkt_residual);
  CHECK(cb.saddle_gap == cert.saddle_gap);
  CHECK(cb.tolerance == cert.tolerance);
  CHECK(cb.method == cert.method);

  const ProblemInstance inst = canonical_instance(42);
  const WeightSchedule ws = uniform_weights(canonical_schedule());
  SwarmState s = init_state_zeros(inst);
  for (int k = 0; k < 13; ++k) s = step(s, inst, ws, StepSchedule{});
  const SwarmState sb = io::state_from_json(io::Json::parse(io::state_to_json(s).dump()));
  CHECK(sb.round == 13);
  REQUIRE(sb.size() == 6);
  for (int i = 0; i < 6; ++i) {
    const auto& a = s.agents[static_cast<std::size_t>(i)];
    const auto& b = sb.agents[static_cast<std::size_t>(i)];
    CHECK(a.x == b.x);
    CHECK(a.lambda == b.lambda);
    CHECK(a.z == b.z);
    CHECK(a.y == b.y);
    CHECK(a.d == b.d);
  }
}

TEST_CASE("shortest round-trip number formatting") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 2000; ++t) {
    double v;
    const std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(std::strtod(io::format_double(v).c_str(), nullptr) == v);
  }
  CHECK(io::format_double(2.0) == "2");
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-0.0) == "-0");
}

TEST_CASE("CSV header is stable") {
  std::ifstream golden(fs::path(PUSHPULL_GOLDEN_DIR) / "trace_header.csv");
  REQUIRE(golden.good());
  std::string expected;
  std::getline(golden, expected);
  std::string got;
  for (const auto& col : io::csv_header(6, 1, 1)) got += (got.empty() ? "" : ",") + col;
  CHECK(got == expected);
}

TEST_CASE("CSV rows") {
  TraceRow row;
  row.k = 3;
  row.alpha = 0.5;
  row.violation_ineq = vec({0.0, 0.25});
  row.violation_eq = vec({1e-20});
  row.s_norm = 4.0;
  std::ostringstream out;
  io::write_csv(out, {row}, 2, 2, 1);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(line == "3,0.5,0,0,0,0,0,0.25,1e-20,,4,,,,,,");
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(line.begin(), line.end(), ','));
}

TEST_CASE("JSON parse errors carry the line number") {
  const fs::path p = scratch("broken.json");
  {
    std::ofstream f(p);
    f << "{\n  \"rounds\": 10,\n  \"step\": {\"c\": 2,, }\n}\n";
  }
  try {
    io::read_json_file(p);
    FAIL("expected FormatError");
  } catch (const io::FormatError& e) {
    CHECK(std::string(e.what()).find("broken.json:3:") != std::string::npos);
  }
  CHECK_THROWS_AS(io::read_json_file(scratch("does_not_exist.json")), io::FormatError);
}
