#include "pushpull/io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pushpull/errors.hpp"

namespace pushpull::io {
namespace {

constexpr int kFormatVersion = 1;

Json vector_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v(k));
  return arr;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string("expected a number for '") + what + "'");
  return j.get<double>();
}

Vector vector_from(const Json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string("expected an array for '") + what + "'");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], what);
  return v;
}

Matrix matrix_from(const Json& j, const char* what, Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) throw FormatError(std::string("expected an array of rows for '") + what + "'");
  if (j.empty()) return Matrix(0, cols_if_empty);
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from(j[i], what);
    if (row.size() != cols) throw FormatError(std::string("ragged rows in '") + what + "'");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

void expect_format(const Json& doc, const char* format) {
  if (!doc.is_object()) throw FormatError("document is not a JSON object");
  if (doc.value("format", std::string()) != format)
    throw FormatError(std::string("expected \"format\": \"") + format + "\"");
  if (doc.value("version", 0) != kFormatVersion) throw FormatError("unsupported format version");
}

Json row_json(const ConvexRow& row) {
  if (const auto* r = std::get_if<QuadraticRow>(&row))
    return Json{{"kind", "quadratic"}, {"weight", r->weight}, {"center", vector_json(r->center)}, {"offset", r->offset}};
  if (const auto* r = std::get_if<SoftplusRow>(&row))
    return Json{{"kind", "softplus"}, {"a", vector_json(r->a)}, {"b", r->b}, {"c", r->c}, {"d", vector_json(r->d)}};
  throw FormatError("custom inequality row '" + std::get<CustomRow>(row).name + "' cannot be serialized");
}

ConvexRow row_from(const Json& j) {
  const auto kind = field(j, "kind").get<std::string>();
  if (kind == "quadratic")
    return QuadraticRow{number(field(j, "weight"), "weight"), vector_from(field(j, "center"), "center"),
                        number(field(j, "offset"), "offset")};
  if (kind == "softplus")
    return SoftplusRow{vector_from(field(j, "a"), "a"), number(field(j, "b"), "b"), number(field(j, "c"), "c"),
                       vector_from(field(j, "d"), "d")};
  throw FormatError("unknown inequality row kind '" + kind + "'");
}

}  // namespace

Json instance_to_json(const ProblemInstance& inst) {
  Json agents = Json::array();
  for (int i = 0; i < inst.m; ++i) {
    const auto& obj = inst.objectives[static_cast<std::size_t>(i)];
    const auto& con = inst.constraints[static_cast<std::size_t>(i)];
    Json extra = Json::array();
    for (const auto& row : con.extra_ineq) extra.push_back(row_json(row));
    agents.push_back(Json{
        {"objective", {{"a", vector_json(obj.a)}, {"b", obj.b}, {"c", obj.c}, {"d", vector_json(obj.d)}}},
        {"constraint",
         {{"quad_weight", con.quad_weight},
          {"quad_offset", con.quad_offset},
          {"affine_rows", matrix_json(con.affine_rows)},
          {"affine_offsets", vector_json(con.affine_offsets)},
          {"extra_ineq", extra}}}});
  }
  Json doc{{"format", "pushpull.instance"},
           {"version", kFormatVersion},
           {"m", inst.m},
           {"n", inst.n},
           {"p", inst.p},
           {"q", inst.q},
           {"seed", inst.seed ? Json(*inst.seed) : Json(nullptr)},
           {"box", {{"lo", vector_json(inst.feasible_set.lo)}, {"hi", vector_json(inst.feasible_set.hi)}}},
           {"slater_point", vector_json(inst.slater_point)},
           {"dual_radius", inst.dual_radius},
           {"agents", agents}};
  return doc;
}

ProblemInstance instance_from_json(const Json& doc) {
  expect_format(doc, "pushpull.instance");
  ProblemInstance inst;
  inst.m = field(doc, "m").get<int>();
  inst.n = field(doc, "n").get<int>();
  inst.p = field(doc, "p").get<int>();
  inst.q = field(doc, "q").get<int>();
  if (doc.contains("seed") && !doc["seed"].is_null()) inst.seed = doc["seed"].get<std::uint64_t>();
  inst.feasible_set.lo = vector_from(field(field(doc, "box"), "lo"), "box.lo");
  inst.feasible_set.hi = vector_from(field(field(doc, "box"), "hi"), "box.hi");
  inst.slater_point = vector_from(field(doc, "slater_point"), "slater_point");
  inst.dual_radius = number(field(doc, "dual_radius"), "dual_radius");
  const Json& agents = field(doc, "agents");
  if (!agents.is_array()) throw FormatError("'agents' must be an array");
  for (const auto& agent : agents) {
    const Json& o = field(agent, "objective");
    inst.objectives.push_back(LocalObjective{vector_from(field(o, "a"), "a"), number(field(o, "b"), "b"),
                                             number(field(o, "c"), "c"), vector_from(field(o, "d"), "d")});
    const Json& c = field(agent, "constraint");
    LocalConstraint con;
    con.quad_weight = number(field(c, "quad_weight"), "quad_weight");
    con.quad_offset = number(field(c, "quad_offset"), "quad_offset");
    con.affine_rows = matrix_from(field(c, "affine_rows"), "affine_rows", inst.n);
    con.affine_offsets = vector_from(field(c, "affine_offsets"), "affine_offsets");
    if (c.contains("extra_ineq"))
      for (const auto& row : c["extra_ineq"]) con.extra_ineq.push_back(row_from(row));
    inst.constraints.push_back(std::move(con));
  }
  try {
    inst.validate_structure();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid instance: ") + e.what());
  }
  return inst;
}

Json schedule_to_json(const GraphSchedule& sched) {
  Json graphs = Json::array();
  for (const auto& g : sched.graphs) {
    Json edges = Json::array();
    for (const auto& e : g.edges()) edges.push_back(Json::array({e.from, e.to}));
    graphs.push_back(edges);
  }
  return Json{{"format", "pushpull.schedule"},
              {"version", kFormatVersion},
              {"nodes", sched.nodes()},
              {"period", sched.period()},
              {"connectivity_window", sched.connectivity_window},
              {"graphs", graphs}};
}

GraphSchedule schedule_from_json(const Json& doc) {
  expect_format(doc, "pushpull.schedule");
  GraphSchedule sched;
  const int nodes = field(doc, "nodes").get<int>();
  sched.connectivity_window = field(doc, "connectivity_window").get<int>();
  const Json& graphs = field(doc, "graphs");
  if (!graphs.is_array() || graphs.empty()) throw FormatError("'graphs' must be a non-empty array");
  if (doc.contains("period") && doc["period"].get<std::size_t>() != graphs.size())
    throw FormatError("'period' differs from the number of graphs");
  for (const auto& list : graphs) {
    std::vector<Edge> edges;
    for (const auto& e : list) {
      if (!e.is_array() || e.size() != 2) throw FormatError("edges must be [from, to] pairs");
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    try {
      sched.graphs.emplace_back(nodes, std::move(edges));
    } catch (const Error& err) {
      throw FormatError(std::string("invalid graph: ") + err.what());
    }
  }
  return sched;
}

Json weights_to_json(const WeightSchedule& ws) {
  Json rows = Json::array();
  Json cols = Json::array();
  for (const auto& a : ws.row_weights) rows.push_back(matrix_json(a));
  for (const auto& b : ws.col_weights) cols.push_back(matrix_json(b));
  return Json{{"format", "pushpull.weights"},
              {"version", kFormatVersion},
              {"positivity_floor", ws.positivity_floor},
              {"row_weights", rows},
              {"col_weights", cols}};
}

WeightSchedule weights_from_json(const Json& doc) {
  expect_format(doc, "pushpull.weights");
  WeightSchedule ws;
  for (const auto& a : field(doc, "row_weights")) ws.row_weights.push_back(matrix_from(a, "row_weights"));
  for (const auto& b : field(doc, "col_weights")) ws.col_weights.push_back(matrix_from(b, "col_weights"));
  if (ws.row_weights.size() != ws.col_weights.size()) throw FormatError("row and column weight periods differ");
  ws.positivity_floor = doc.contains("positivity_floor") ? number(doc["positivity_floor"], "positivity_floor") : 0.0;
  return ws;
}

Json certificate_to_json(const SaddleCertificate& cert) {
  return Json{{"format", "pushpull.certificate"},
              {"version", kFormatVersion},
              {"x_star", vector_json(cert.x_star)},
              {"lambda_star", vector_json(cert.lambda_star)},
              {"f_star", cert.f_star},
              {"kkt_residual", cert.kkt_residual},
              {"saddle_gap", cert.saddle_gap},
              {"tolerance", cert.tolerance},
              {"method", cert.method}};
}

SaddleCertificate certificate_from_json(const Json& doc) {
  expect_format(doc, "pushpull.certificate");
  SaddleCertificate cert;
  cert.x_star = vector_from(field(doc, "x_star"), "x_star");
  cert.lambda_star = vector_from(field(doc, "lambda_star"), "lambda_star");
  cert.f_star = number(field(doc, "f_star"), "f_star");
  cert.kkt_residual = number(field(doc, "kkt_residual"), "kkt_residual");
  cert.saddle_gap = number(field(doc, "saddle_gap"), "saddle_gap");
  cert.tolerance = number(field(doc, "tolerance"), "tolerance");
  cert.method = field(doc, "method").get<std::string>();
  return cert;
}

Json state_to_json(const SwarmState& state) {
  Json agents = Json::array();
  for (const auto& a : state.agents)
    agents.push_back(Json{{"x", vector_json(a.x)},
                          {"lambda", vector_json(a.lambda)},
                          {"z", vector_json(a.z)},
                          {"y", vector_json(a.y)},
                          {"d", vector_json(a.d)}});
  return Json{{"format", "pushpull.state"}, {"version", kFormatVersion}, {"round", state.round}, {"agents", agents}};
}

SwarmState state_from_json(const Json& doc) {
  expect_format(doc, "pushpull.state");
  SwarmState state;
  state.round = field(doc, "round").get<long>();
  for (const auto& a : field(doc, "agents"))
    state.agents.push_back(AgentState{vector_from(field(a, "x"), "x"), vector_from(field(a, "lambda"), "lambda"),
                                      vector_from(field(a, "z"), "z"), vector_from(field(a, "y"), "y"),
                                      vector_from(field(a, "d"), "d")});
  return state;
}

std::string instance_hash(const ProblemInstance& inst) {
  const std::string text = instance_to_json(inst).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw FormatError(path.string() + ":" + std::to_string(line) + ": JSON parse error: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw FormatError("write to '" + path.string() + "' failed");
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), result.ptr);
}

std::vector<std::string> csv_header(int m, int p, int q) {
  std::vector<std::string> cols{"k", "alpha", "consensus_x", "consensus_lambda", "tracking_z", "tracking_y"};
  for (int j = 1; j <= p; ++j) cols.push_back("violation_ineq_" + std::to_string(j));
  for (int j = 1; j <= q; ++j) cols.push_back("violation_eq_" + std::to_string(j));
  cols.push_back("gap");
  cols.push_back("s_norm");
  for (int i = 1; i <= m; ++i) cols.push_back("dist_x_" + std::to_string(i));
  for (int i = 1; i <= m; ++i) cols.push_back("dist_lambda_" + std::to_string(i));
  for (int i = 1; i <= m; ++i) cols.push_back("gap_agent_" + std::to_string(i));
  return cols;
}

std::vector<std::string> csv_fields(const TraceRow& row, int m, int p, int q) {
  std::vector<std::string> f{std::to_string(row.k),         format_double(row.alpha),
                             format_double(row.consensus_x), format_double(row.consensus_lambda),
                             format_double(row.tracking_z),  format_double(row.tracking_y)};
  for (int j = 0; j < p; ++j) f.push_back(format_double(row.violation_ineq(j)));
  for (int j = 0; j < q; ++j) f.push_back(format_double(row.violation_eq(j)));
  f.push_back(row.gap ? format_double(*row.gap) : "");
  f.push_back(row.s_norm ? format_double(*row.s_norm) : "");
  for (const auto* per_agent : {&row.dist_x, &row.dist_lambda, &row.agent_gap})
    for (int i = 0; i < m; ++i)
      f.push_back(per_agent->size() == static_cast<std::size_t>(m) ? format_double((*per_agent)[static_cast<std::size_t>(i)]) : "");
  return f;
}

void write_csv(std::ostream& out, const std::vector<TraceRow>& rows, int m, int p, int q) {
  const auto join = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << ',';
      out << cells[c];
    }
    out << '\n';
  };
  join(csv_header(m, p, q));
  for (const auto& row : rows) join(csv_fields(row, m, p, q));
}

}  // namespace pushpull::io
