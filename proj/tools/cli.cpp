#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "pushpull/analysis.hpp"
#include "pushpull/engine.hpp"
#include "pushpull/errors.hpp"
#include "pushpull/network.hpp"
#include "pushpull/oracle.hpp"
#include "pushpull/projections.hpp"

namespace pushpull::cli {
namespace {

using io::FormatError;
using io::Json;

constexpr const char* kCanonicalSchedule = "canonical4";
constexpr int kVerifyRounds = 100;
constexpr int kProjectionCases = 1000;
constexpr int kSaddleProbes = 1000;
constexpr double kSaddleTol = 1e-4;

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string file_of(const Json& j, const char* what) {
  if (!j.is_object() || !j.contains("file") || !j["file"].is_string())
    throw FormatError(std::string("config: '") + what + "' needs a \"file\" string");
  return j["file"].get<std::string>();
}

void reject_unknown(const Json& doc, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : doc.items())
    if (!allowed.count(item.key())) throw FormatError("config: unknown key '" + item.key() + "' in " + where);
}

// Everything the engine needs, materialized from a config.
struct Setup {
  ProblemInstance inst;
  GraphSchedule sched;
  WeightSchedule weights;
};

Setup materialize(const ExperimentConfig& cfg) {
  Setup s;
  if (cfg.instance_file) {
    s.inst = io::instance_from_json(io::read_json_file(*cfg.instance_file));
  } else {
    s.inst = canonical_instance(*cfg.instance_seed);
  }
  s.sched = cfg.schedule_file ? io::schedule_from_json(io::read_json_file(*cfg.schedule_file)) : canonical_schedule();
  s.weights = cfg.weights_file ? io::weights_from_json(io::read_json_file(*cfg.weights_file)) : uniform_weights(s.sched);
  if (s.sched.nodes() != s.inst.m)
    throw DimensionMismatch("schedule has " + std::to_string(s.sched.nodes()) + " nodes but the instance has " +
                            std::to_string(s.inst.m) + " agents");
  return s;
}

std::pair<std::vector<Vector>, std::vector<Vector>> initial_points(const ExperimentConfig& cfg,
                                                                    const ProblemInstance& inst) {
  const auto m = static_cast<std::size_t>(inst.m);
  if (cfg.init == "zeros") {
    const SwarmState s = init_state_zeros(inst);
    std::vector<Vector> x0, l0;
    for (const auto& a : s.agents) {
      x0.push_back(a.x);
      l0.push_back(a.lambda);
    }
    return {x0, l0};
  }
  std::mt19937_64 rng(cfg.init_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const DualSet ds = dual_set_of(inst);
  std::vector<Vector> x0(m), l0(m);
  for (std::size_t i = 0; i < m; ++i) {
    x0[i].resize(inst.n);
    for (int t = 0; t < inst.n; ++t)
      x0[i](t) = inst.feasible_set.lo(t) + unit(rng) * (inst.feasible_set.hi(t) - inst.feasible_set.lo(t));
    l0[i].resize(inst.dual_dim());
    for (int t = 0; t < inst.p; ++t) l0[i](t) = unit(rng);
    for (int t = inst.p; t < inst.dual_dim(); ++t) l0[i](t) = 2 * unit(rng) - 1;
    l0[i] = project_dual(l0[i], ds);
  }
  return {x0, l0};
}

std::string tol_tag(double tol) {
  std::string t = io::format_double(tol);
  std::replace(t.begin(), t.end(), '.', 'p');
  std::replace(t.begin(), t.end(), '-', 'm');
  std::replace(t.begin(), t.end(), '+', 'P');
  return t;
}

struct OracleResult {
  SaddleCertificate cert;
  bool cached = false;
  fs::path path;
};

OracleResult certified_solution(const ExperimentConfig& cfg, const ProblemInstance& inst) {
  OracleResult r;
  const fs::path dir = cache_dir(cfg);
  r.path = dir / ("certificate-" + io::instance_hash(inst) + "-tol" + tol_tag(cfg.oracle_tol) + ".json");
  if (fs::exists(r.path)) {
    try {
      r.cert = io::certificate_from_json(io::read_json_file(r.path));
      if (r.cert.tolerance == cfg.oracle_tol && r.cert.x_star.size() == inst.n &&
          r.cert.lambda_star.size() == inst.dual_dim()) {
        r.cached = true;
        return r;
      }
    } catch (const FormatError&) {
      // Unreadable cache entries are recomputed and overwritten.
    }
  }
  r.cert = solve_centralized(inst, cfg.oracle_tol);
  std::error_code ec;
  fs::create_directories(dir, ec);
  try {
    io::write_json_file(r.path, io::certificate_to_json(r.cert));
  } catch (const FormatError&) {
    // A read-only cache only costs a recomputation next time.
  }
  return r;
}

Json vec(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void report(std::ostream& out, bool pass, const std::string& name, const std::string& detail) {
  out << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
}

std::string sci(double x) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << x;
  return s.str();
}

bool is_validation_error(const std::exception& e) {
  return dynamic_cast<const PreconditionFailed*>(&e) || dynamic_cast<const SlaterViolation*>(&e) ||
         dynamic_cast<const NonStochastic*>(&e) || dynamic_cast<const MissingSelfLoop*>(&e);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (instance_file.has_value() == instance_seed.has_value())
    throw FormatError("config: instance needs exactly one of \"seed\" or \"file\"");
  for (const auto* f : {&instance_file, &schedule_file, &weights_file})
    if (*f && !fs::exists(**f)) throw FormatError("file not found: '" + (*f)->string() + "'");
  if (rounds < 0) throw FormatError("config: rounds must be >= 0");
  if (record_every < 1) throw FormatError("config: record_every must be >= 1");
  if (!(step_c > 0)) throw FormatError("config: step.c must be > 0");
  if (!(step_exponent > 0.5 && step_exponent <= 1.0)) throw FormatError("config: step.exponent must lie in (0.5, 1]");
  if (!(oracle_tol > 0)) throw FormatError("config: oracle_tol must be > 0");
  if (init != "zeros" && init != "random") throw FormatError("config: init must be \"zeros\" or \"random\"");
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["instance"] = instance_file ? Json{{"file", instance_file->string()}} : Json{{"seed", *instance_seed}};
  j["schedule"] = schedule_file ? Json{{"file", schedule_file->string()}} : Json(kCanonicalSchedule);
  j["weights"] = weights_file ? Json{{"file", weights_file->string()}} : Json("uniform");
  j["step"] = {{"c", step_c}, {"exponent", step_exponent}};
  j["rounds"] = rounds;
  j["record_every"] = record_every;
  j["init"] = init;
  j["init_seed"] = init_seed;
  j["oracle_tol"] = oracle_tol;
  j["output_dir"] = output_dir.string();
  return j;
}

ExperimentConfig config_from_json(const Json& doc, const fs::path& base) {
  if (!doc.is_object()) throw FormatError("config: top level must be a JSON object");
  reject_unknown(doc, {"instance", "schedule", "weights", "step", "rounds", "record_every", "init", "init_seed",
                       "oracle_tol", "output_dir"},
                 "config");
  ExperimentConfig cfg;
  try {
    if (doc.contains("instance")) {
      const Json& in = doc["instance"];
      if (!in.is_object()) throw FormatError("config: 'instance' must be an object");
      reject_unknown(in, {"seed", "file"}, "instance");
      cfg.instance_seed.reset();
      if (in.contains("seed")) cfg.instance_seed = in["seed"].get<std::uint64_t>();
      if (in.contains("file")) cfg.instance_file = resolve(base, file_of(in, "instance"));
    }
    if (doc.contains("schedule")) {
      const Json& s = doc["schedule"];
      if (s.is_string()) {
        if (s.get<std::string>() != kCanonicalSchedule)
          throw FormatError("config: unknown named schedule '" + s.get<std::string>() + "'");
      } else {
        cfg.schedule_file = resolve(base, file_of(s, "schedule"));
      }
    }
    if (doc.contains("weights")) {
      const Json& w = doc["weights"];
      if (!(w.is_string() && w.get<std::string>() == "uniform")) cfg.weights_file = resolve(base, file_of(w, "weights"));
    }
    if (doc.contains("step")) {
      const Json& st = doc["step"];
      reject_unknown(st, {"c", "exponent"}, "step");
      cfg.step_c = st.value("c", cfg.step_c);
      cfg.step_exponent = st.value("exponent", cfg.step_exponent);
    }
    cfg.rounds = doc.value("rounds", cfg.rounds);
    cfg.record_every = doc.value("record_every", cfg.record_every);
    cfg.init = doc.value("init", cfg.init);
    cfg.init_seed = doc.value("init_seed", cfg.init_seed);
    cfg.oracle_tol = doc.value("oracle_tol", cfg.oracle_tol);
    if (doc.contains("output_dir")) cfg.output_dir = resolve(base, doc["output_dir"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: wrong value type: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(io::read_json_file(path), path.parent_path());
}

void Overrides::apply(ExperimentConfig& cfg) const {
  if (seed) {
    cfg.instance_seed = *seed;
    cfg.instance_file.reset();
  }
  if (rounds) cfg.rounds = *rounds;
  if (step_c) cfg.step_c = *step_c;
  if (step_exponent) cfg.step_exponent = *step_exponent;
  if (record_every) cfg.record_every = *record_every;
  if (out) cfg.output_dir = *out;
  if (oracle_tol) cfg.oracle_tol = *oracle_tol;
}

fs::path cache_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("PUSHPULL_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  if (cfg.instance_file) return cfg.instance_file->parent_path().empty() ? fs::path(".") : cfg.instance_file->parent_path();
  return cfg.output_dir;
}

int cmd_generate(std::uint64_t seed, const fs::path& out_dir, std::ostream& out) {
  const ProblemInstance inst = canonical_instance(seed);
  const GraphSchedule sched = canonical_schedule();
  fs::create_directories(out_dir);
  io::write_json_file(out_dir / "instance.json", io::instance_to_json(inst));
  io::write_json_file(out_dir / "schedule.json", io::schedule_to_json(sched));

  bool slater_ok = true;
  std::string slater_detail = "margin " + sci(inst.slater_margin(inst.slater_point)) + ", dual radius " +
                              sci(inst.dual_radius);
  try {
    inst.validate_slater();
  } catch (const SlaterViolation& e) {
    slater_ok = false;
    slater_detail = e.what();
  }
  const bool connected = check_connectivity(sched, sched.connectivity_window);
  report(out, slater_ok, "slater", slater_detail);
  report(out, connected, "connectivity", "window " + std::to_string(sched.connectivity_window));
  out << "instance " << io::instance_hash(inst) << " written to " << (out_dir / "instance.json").string() << '\n';
  return slater_ok && connected ? kSuccess : kValidationFailure;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Setup s = materialize(cfg);
  s.inst.validate_slater();
  const OracleResult oracle = certified_solution(cfg, s.inst);

  const StepSchedule ss{cfg.step_c, cfg.step_exponent};
  const auto [x0, l0] = initial_points(cfg, s.inst);
  RunOptions opts;
  opts.rounds = cfg.rounds;
  opts.record_every = cfg.record_every;
  opts.certificate = &oracle.cert;
  const Trace trace = run(s.inst, s.sched, s.weights, ss, x0, l0, opts);

  fs::create_directories(cfg.output_dir);
  {
    std::ofstream csv(cfg.output_dir / "trace.csv");
    if (!csv) throw FormatError("cannot write '" + (cfg.output_dir / "trace.csv").string() + "'");
    io::write_csv(csv, trace.rows, s.inst.m, s.inst.p, s.inst.q);
  }
  io::write_json_file(cfg.output_dir / "state.json", io::state_to_json(trace.final_state()));

  Json rate = nullptr;
  if (cfg.rounds >= 4) {
    RateFitOptions ro;
    ro.burn_in = std::min<long>(ro.burn_in, cfg.rounds / 2);
    const RateFit fit = fit_rate(trace, ss, cfg.rounds / 2, oracle.cert, s.inst, ro);
    rate = {{"empirical_m1", fit.empirical_m1}, {"slope", number_or_null(fit.slope)}, {"points", fit.n.size()}};
  }

  const TraceRow& last = trace.rows.back();
  double max_dx = 0, max_dl = 0;
  for (double d : last.dist_x) max_dx = std::max(max_dx, d);
  for (double d : last.dist_lambda) max_dl = std::max(max_dl, d);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json summary{{"format", "pushpull.summary"},
               {"version", 1},
               {"config", cfg.to_json()},
               {"instance_hash", io::instance_hash(s.inst)},
               {"oracle",
                {{"f_star", oracle.cert.f_star},
                 {"x_star", vec(oracle.cert.x_star)},
                 {"lambda_star", vec(oracle.cert.lambda_star)},
                 {"kkt_residual", oracle.cert.kkt_residual},
                 {"saddle_gap", oracle.cert.saddle_gap},
                 {"method", oracle.cert.method},
                 {"cached", oracle.cached}}},
               {"final",
                {{"round", last.k},
                 {"consensus_x", last.consensus_x},
                 {"consensus_lambda", last.consensus_lambda},
                 {"tracking_z", last.tracking_z},
                 {"tracking_y", last.tracking_y},
                 {"violation_ineq", vec(last.violation_ineq)},
                 {"violation_eq", vec(last.violation_eq)},
                 {"gap", last.gap ? Json(*last.gap) : Json(nullptr)},
                 {"max_dist_x", max_dx},
                 {"max_dist_lambda", max_dl}}},
               {"max_tracking_z", trace.max_tracking_z},
               {"max_tracking_y", trace.max_tracking_y},
               {"max_s_norm", trace.max_s_norm},
               {"rate", rate},
               {"wall_time_seconds", wall}};
  io::write_json_file(cfg.output_dir / "summary.json", summary);

  out << "rounds " << cfg.rounds << ", consensus_x " << sci(last.consensus_x) << ", max dist x* "
      << sci(max_dx) << ", max dist lambda* " << sci(max_dl) << '\n';
  out << "wrote " << (cfg.output_dir / "trace.csv").string() << " and " << (cfg.output_dir / "summary.json").string()
      << '\n';
  return kSuccess;
}

int cmd_verify(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Setup s = materialize(cfg);
  bool all = true;
  const auto check = [&](bool pass, const std::string& name, const std::string& detail) {
    report(out, pass, name, detail);
    all = all && pass;
  };

  const ValidationReport weights = validate_weights(s.weights, s.sched);
  check(weights.ok, "weights", weights.ok ? "row/column stochastic, pattern and floor ok"
                                          : weights.problems.front());
  check(check_connectivity(s.sched, s.sched.connectivity_window), "connectivity",
        "window " + std::to_string(s.sched.connectivity_window));

  bool slater_ok = true;
  std::string slater_detail = "margin " + sci(s.inst.slater_margin(s.inst.slater_point));
  try {
    s.inst.validate_slater();
  } catch (const SlaterViolation& e) {
    slater_ok = false;
    slater_detail = e.what();
  }
  check(slater_ok, "slater", slater_detail);

  // Projection idempotence and nonexpansiveness on random points.
  {
    std::mt19937_64 rng(cfg.init_seed + 1);
    std::normal_distribution<double> gauss(0.0, 5.0);
    const DualSet ds = dual_set_of(s.inst);
    const auto draw = [&](int dim) {
      Vector v(dim);
      for (int t = 0; t < dim; ++t) v(t) = gauss(rng);
      return v;
    };
    double worst_idem = 0, worst_expand = 0;
    for (int c = 0; c < kProjectionCases; ++c) {
      const Vector a = draw(s.inst.n), b = draw(s.inst.n);
      const Vector pa = project_box(a, s.inst.feasible_set), pb = project_box(b, s.inst.feasible_set);
      worst_idem = std::max(worst_idem, (project_box(pa, s.inst.feasible_set) - pa).norm());
      worst_expand = std::max(worst_expand, (pa - pb).norm() - (a - b).norm());
      const Vector la = draw(s.inst.dual_dim()), lb = draw(s.inst.dual_dim());
      const Vector pla = project_dual(la, ds), plb = project_dual(lb, ds);
      worst_idem = std::max(worst_idem, (project_dual(pla, ds) - pla).norm());
      worst_expand = std::max(worst_expand, (pla - plb).norm() - (la - lb).norm());
    }
    check(worst_idem <= 1e-12 && worst_expand <= 1e-12, "projections",
          "idempotence " + sci(worst_idem) + ", expansion " + sci(worst_expand));
  }

  // Tracking identities over a short run; preconditions are reported above.
  try {
    const auto [x0, l0] = initial_points(cfg, s.inst);
    RunOptions opts;
    opts.rounds = kVerifyRounds;
    opts.record_every = kVerifyRounds;
    opts.skip_preconditions = true;
    const Trace t = run(s.inst, s.sched, s.weights, StepSchedule{cfg.step_c, cfg.step_exponent}, x0, l0, opts);
    const double bound = 1e-9 * s.inst.m;
    check(t.max_tracking_z <= bound && t.max_tracking_y <= bound, "tracking",
          "max |sum z - sum d| " + sci(t.max_tracking_z) + ", max |sum y - sum h| " + sci(t.max_tracking_y));
  } catch (const Error& e) {
    check(false, "tracking", e.what());
  }

  try {
    const OracleResult oracle = certified_solution(cfg, s.inst);
    const SaddleReport rep =
        verify_saddle(s.inst, oracle.cert.x_star, oracle.cert.lambda_star, kSaddleProbes, kSaddleTol);
    check(rep.pass, "saddle", "kkt residual " + sci(oracle.cert.kkt_residual) + ", worst probe violation " +
                                  sci(std::max(rep.max_left_violation, rep.max_right_violation)));
  } catch (const Error& e) {
    check(false, "saddle", e.what());
  }

  out << (all ? "all checks passed" : "some checks failed") << '\n';
  return all ? kSuccess : kValidationFailure;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Push-pull distributed primal-dual solver for coupled constraints over directed networks"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::uint64_t gen_seed = 42;
  std::string gen_out = ".";

  auto* gen = app.add_subcommand("generate", "Write the canonical instance and schedule for a seed");
  gen->add_option("--seed", gen_seed, "Instance seed");
  gen->add_option("--out", gen_out, "Output directory");

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Experiment config (JSON)");
    sub->add_option("--seed", ov.seed, "Use the canonical instance for this seed");
    sub->add_option("--rounds", ov.rounds, "Number of rounds N");
    sub->add_option("--step-c", ov.step_c, "Step size constant c");
    sub->add_option("--step-exponent", ov.step_exponent, "Step size exponent in (0.5, 1]");
    sub->add_option("--record-every", ov.record_every, "Trace stride");
    sub->add_option("--out", ov.out, "Output directory");
    sub->add_option("--oracle-tol", ov.oracle_tol, "Oracle KKT tolerance");
  };
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write trace.csv and summary.json");
  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant checks for a setup");
  add_common(run_cmd);
  add_common(verify_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kRuntimeError;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_seed, gen_out, out);
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    ov.apply(cfg);
    return run_cmd->parsed() ? cmd_run(cfg, out) : cmd_verify(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return is_validation_error(e) ? kValidationFailure : kRuntimeError;
  }
}

}  // namespace pushpull::cli
