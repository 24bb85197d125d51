#include "gpsmpc/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gpsmpc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ConstraintCase case_from_string(const std::string& s) {
  if (s == "A") return ConstraintCase::A;
  if (s == "B") return ConstraintCase::B;
  if (s == "C") return ConstraintCase::C;
  if (s == "D") return ConstraintCase::D;
  if (s == "E") return ConstraintCase::E;
  throw std::runtime_error("trace: bad case label '" + s + "'");
}

QpStatus status_from_string(const std::string& s) {
  if (s == "optimal") return QpStatus::optimal;
  if (s == "infeasible") return QpStatus::infeasible;
  if (s == "max_iter") return QpStatus::max_iter;
  throw std::runtime_error("trace: bad solver status '" + s + "'");
}

TvDirection direction_from_string(const std::string& s) {
  if (s == "none") return TvDirection::none;
  if (s == "left") return TvDirection::left;
  if (s == "right") return TvDirection::right;
  if (s == "straight") return TvDirection::straight;
  throw std::runtime_error("trace: bad direction '" + s + "'");
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunResult& result, int horizon,
                     const std::string& config_hash) {
  out << "# tool_version=" << kToolVersion << " config_hash=" << config_hash
      << " seed=" << result.seed << "\n";
  out << "# horizon=" << horizon << "\n";

  out << "step,time,ev_s,ev_d,ev_phi,ev_v,u_a,u_delta,tv_x,tv_vx,tv_y,tv_vy,"
         "solver_status,case,gp_points,tv_committed";
  for (int k = 1; k <= horizon; ++k) {
    out << ",pred_x_" << k << ",pred_vx_" << k << ",pred_y_" << k
        << ",pred_vy_" << k;
  }
  for (int k = 1; k <= horizon; ++k) {
    out << ",var_x_" << k << ",var_vx_" << k << ",var_y_" << k << ",var_vy_"
        << k;
  }
  for (int k = 1; k <= horizon; ++k) {
    out << ",plan_s_" << k << ",plan_d_" << k << ",plan_phi_" << k << ",plan_v_"
        << k;
  }
  out << "\n";

  for (const StepRecord& r : result.records) {
    out << r.step << ',' << fmt(r.time) << ',' << fmt(r.ev.s) << ','
        << fmt(r.ev.d) << ',' << fmt(r.ev.phi) << ',' << fmt(r.ev.v) << ','
        << fmt(r.input.a) << ',' << fmt(r.input.delta) << ',' << fmt(r.tv.x)
        << ',' << fmt(r.tv.vx) << ',' << fmt(r.tv.y) << ',' << fmt(r.tv.vy)
        << ',' << to_string(r.solver_status) << ',' << to_string(r.ccase)
        << ',' << r.gp_points << ',' << to_string(r.tv_committed);
    for (int k = 0; k < horizon; ++k) {
      const Vec4 m = k < static_cast<int>(r.pred_means.size())
                         ? r.pred_means[static_cast<std::size_t>(k)]
                         : Vec4::Zero().eval();
      out << ',' << fmt(m(0)) << ',' << fmt(m(1)) << ',' << fmt(m(2)) << ','
          << fmt(m(3));
    }
    for (int k = 0; k < horizon; ++k) {
      const Vec4 v = k < static_cast<int>(r.pred_variances.size())
                         ? r.pred_variances[static_cast<std::size_t>(k)]
                         : Vec4::Zero().eval();
      out << ',' << fmt(v(0)) << ',' << fmt(v(1)) << ',' << fmt(v(2)) << ','
          << fmt(v(3));
    }
    for (int k = 0; k < horizon; ++k) {
      const EvState p = k < static_cast<int>(r.planned.size())
                            ? r.planned[static_cast<std::size_t>(k)]
                            : EvState{};
      out << ',' << fmt(p.s) << ',' << fmt(p.d) << ',' << fmt(p.phi) << ','
          << fmt(p.v);
    }
    out << "\n";
  }
}

void write_trace_csv(const std::string& path, const RunResult& result,
                     int horizon, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("trace: cannot open '" + path + "' for writing");
  }
  write_trace_csv(out, result, horizon, config_hash);
  if (!out.good()) {
    throw std::runtime_error("trace: write failed for '" + path + "'");
  }
}

std::string trace_csv_string(const RunResult& result, int horizon,
                             const std::string& config_hash) {
  std::ostringstream ss;
  write_trace_csv(ss, result, horizon, config_hash);
  return ss.str();
}

std::vector<StepRecord> read_trace_csv(std::istream& in) {
  std::vector<StepRecord> records;
  std::string line;
  int horizon = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      const auto pos = line.find("horizon=");
      if (pos != std::string::npos) {
        horizon = std::stoi(line.substr(pos + 8));
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    const std::size_t expected = 16 + 12 * static_cast<std::size_t>(horizon);
    if (cells.size() != expected) {
      throw std::runtime_error("trace: bad row width");
    }
    StepRecord r;
    std::size_t i = 0;
    r.step = std::stoi(cells[i++]);
    r.time = std::stod(cells[i++]);
    r.ev.s = std::stod(cells[i++]);
    r.ev.d = std::stod(cells[i++]);
    r.ev.phi = std::stod(cells[i++]);
    r.ev.v = std::stod(cells[i++]);
    r.input.a = std::stod(cells[i++]);
    r.input.delta = std::stod(cells[i++]);
    r.tv.x = std::stod(cells[i++]);
    r.tv.vx = std::stod(cells[i++]);
    r.tv.y = std::stod(cells[i++]);
    r.tv.vy = std::stod(cells[i++]);
    r.solver_status = status_from_string(cells[i++]);
    r.ccase = case_from_string(cells[i++]);
    r.gp_points = std::stoi(cells[i++]);
    r.tv_committed = direction_from_string(cells[i++]);
    r.pred_means.resize(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) {
      for (int d = 0; d < 4; ++d) {
        r.pred_means[static_cast<std::size_t>(k)](d) = std::stod(cells[i++]);
      }
    }
    r.pred_variances.resize(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) {
      for (int d = 0; d < 4; ++d) {
        r.pred_variances[static_cast<std::size_t>(k)](d) = std::stod(cells[i++]);
      }
    }
    r.planned.resize(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) {
      Vec4 p;
      for (int d = 0; d < 4; ++d) {
        p(d) = std::stod(cells[i++]);
      }
      r.planned[static_cast<std::size_t>(k)] = EvState::from_vec(p);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<StepRecord> read_trace_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("trace: cannot open '" + path + "'");
  }
  return read_trace_csv(in);
}

std::string summary_json(const std::vector<RunResult>& results,
                         const std::string& config_hash) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = config_hash;
  nlohmann::json runs = nlohmann::json::array();
  int successes = 0;
  int collisions = 0;
  int failures = 0;
  int infeasible = 0;
  double gap_sum = 0.0;
  for (const RunResult& r : results) {
    nlohmann::json e;
    e["seed"] = r.seed;
    e["overtake_success"] = r.overtake_success;
    if (r.overtake_step) {
      e["overtake_step"] = *r.overtake_step;
    } else {
      e["overtake_step"] = nullptr;
    }
    e["min_gap"] = r.min_gap;
    e["collision"] = r.collision;
    e["infeasible_cycles"] = r.infeasible_cycles;
    e["steps"] = r.records.size();
    e["failed"] = r.failed;
    if (r.failed) {
      e["failure_reason"] = r.failure_reason;
    }
    runs.push_back(std::move(e));
    successes += r.overtake_success ? 1 : 0;
    collisions += r.collision ? 1 : 0;
    failures += r.failed ? 1 : 0;
    infeasible += r.infeasible_cycles;
    gap_sum += r.min_gap;
  }
  j["runs"] = std::move(runs);
  j["aggregate"] = {
      {"num_runs", results.size()},
      {"success_count", successes},
      {"success_rate",
       results.empty() ? 0.0 : static_cast<double>(successes) / results.size()},
      {"collision_count", collisions},
      {"failure_count", failures},
      {"mean_min_gap", results.empty() ? 0.0 : gap_sum / results.size()},
      {"total_infeasible_cycles", infeasible},
  };
  return j.dump(2);
}

}  // namespace gpsmpc
