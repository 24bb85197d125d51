#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gpsmpc/sim.hpp"

namespace gpsmpc {

inline constexpr const char* kToolVersion = "0.1.0";

// Fixed-order CSV trace. Two metadata comment lines (# key=value) precede the
// mandatory header row; floats carry 17 significant digits so records
// round-trip exactly.
void write_trace_csv(std::ostream& out, const RunResult& result, int horizon,
                     const std::string& config_hash);
void write_trace_csv(const std::string& path, const RunResult& result,
                     int horizon, const std::string& config_hash);

std::string trace_csv_string(const RunResult& result, int horizon,
                             const std::string& config_hash);

// Parses a trace written by write_trace_csv back into records.
std::vector<StepRecord> read_trace_csv(std::istream& in);
std::vector<StepRecord> read_trace_csv_file(const std::string& path);

// Per-seed results plus aggregate statistics.
std::string summary_json(const std::vector<RunResult>& results,
                         const std::string& config_hash);

}  // namespace gpsmpc
