#pragma once

// JSON documents for instances, schedules, weights, certificates and swarm
// states, and the CSV trace format. Doubles are written in shortest
// round-trip form, so reading back reproduces every finite value exactly.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushpull/analysis.hpp"
#include "pushpull/network.hpp"
#include "pushpull/oracle.hpp"
#include "pushpull/problem.hpp"
#include "pushpull/state.hpp"

namespace pushpull::io {

using Json = nlohmann::ordered_json;

/// Malformed document or unsupported content (e.g. a CustomRow).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const Json& doc);

Json schedule_to_json(const GraphSchedule& sched);
GraphSchedule schedule_from_json(const Json& doc);

Json weights_to_json(const WeightSchedule& ws);
WeightSchedule weights_from_json(const Json& doc);

Json certificate_to_json(const SaddleCertificate& cert);
SaddleCertificate certificate_from_json(const Json& doc);

Json state_to_json(const SwarmState& state);
SwarmState state_from_json(const Json& doc);

/// FNV-1a 64 over the compact dump of instance_to_json, as 16 hex digits.
std::string instance_hash(const ProblemInstance& inst);

/// Parses a file; parse errors name the path and the line number.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);

/// Column order: k, alpha, consensus_x, consensus_lambda, tracking_z,
/// tracking_y, violation_ineq_1..p, violation_eq_1..q, gap, s_norm,
/// dist_x_1..m, dist_lambda_1..m, gap_agent_1..m.
std::vector<std::string> csv_header(int m, int p, int q);
/// Optional fields are written as empty cells.
std::vector<std::string> csv_fields(const TraceRow& row, int m, int p, int q);
void write_csv(std::ostream& out, const std::vector<TraceRow>& rows, int m, int p, int q);

}  // namespace pushpull::io
