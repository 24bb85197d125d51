#include "gpsmpc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gpsmpc {

using nlohmann::json;

std::array<KernelParams, 4> GpConfig::kernel_params() const {
  std::array<KernelParams, 4> out;
  for (int d = 0; d < 4; ++d) {
    out[static_cast<std::size_t>(d)].sigma2 = sigma2[static_cast<std::size_t>(d)];
    for (int i = 0; i < 8; ++i) {
      out[static_cast<std::size_t>(d)].lengthscales(i) =
          lengthscales[static_cast<std::size_t>(i)];
    }
    out[static_cast<std::size_t>(d)].noise2 = noise2;
  }
  return out;
}

SmpcConfig ScenarioConfig::smpc_config() const {
  SmpcConfig c;
  c.N = N;
  c.T = T;
  c.weights = weights;
  c.bounds = bounds;
  c.road = road();
  c.v_ref = ev.v_ref;
  c.d_ref = ev.d_ref;
  c.phi_ref = ev.phi_ref;
  c.beta = beta;
  c.eps_safe = eps_safe;
  c.t_headway = t_headway;
  c.eps_anchor = eps_anchor;
  c.hessian_reg = hessian_reg;
  c.literal_tightening_pairing = literal_tightening_pairing;
  return c;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check(bool ok, const std::string& msg) {
  if (!ok) {
    fail(msg);
  }
}

template <int Rows>
Eigen::Matrix<double, Rows, 1> to_vec(const json& j, const std::string& key) {
  check(j.is_array() && j.size() == Rows,
        "config: '" + key + "' must be an array of " + std::to_string(Rows));
  Eigen::Matrix<double, Rows, 1> v;
  for (int i = 0; i < Rows; ++i) {
    check(j[static_cast<std::size_t>(i)].is_number(),
          "config: '" + key + "' entries must be numbers");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

template <std::size_t Len>
std::array<double, Len> to_array(const json& j, const std::string& key) {
  check(j.is_array() && j.size() == Len,
        "config: '" + key + "' must be an array of " + std::to_string(Len));
  std::array<double, Len> out;
  for (std::size_t i = 0; i < Len; ++i) {
    check(j[i].is_number(), "config: '" + key + "' entries must be numbers");
    out[i] = j[i].get<double>();
  }
  return out;
}

// Tracks which keys a section consumed so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    check(j_.is_object(), "config: section '" + name_ + "' must be an object");
  }

  ~Section() = default;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    check(j_.contains(key), "config: missing required key '" + name_ + "." + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json& v = j_.at(key);
    check(v.is_number(), "config: '" + name_ + "." + key + "' must be a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json& v = j_.at(key);
    check(v.is_number_integer(), "config: '" + name_ + "." + key + "' must be an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json& v = j_.at(key);
    check(v.is_boolean(), "config: '" + name_ + "." + key + "' must be a boolean");
    return v.get<bool>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.find(it.key()) == seen_.end()) {
        fail("config: unknown key '" + name_ + "." + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("config: parse error: ") + e.what());
  }
  check(root.is_object(), "config: top level must be an object");

  ScenarioConfig cfg;
  Section top(root, "");

  if (top.has("mpc")) {
    Section mpc(root.at("mpc"), "mpc");
    cfg.T = mpc.number("T", cfg.T);
    cfg.N = mpc.integer("N", cfg.N);
    if (mpc.has("q_diag")) cfg.weights.q_diag = to_vec<4>(root.at("mpc").at("q_diag"), "mpc.q_diag");
    if (mpc.has("r_diag")) cfg.weights.r_diag = to_vec<2>(root.at("mpc").at("r_diag"), "mpc.r_diag");
    if (mpc.has("s_diag")) cfg.weights.s_diag = to_vec<2>(root.at("mpc").at("s_diag"), "mpc.s_diag");
    if (mpc.has("u_min")) cfg.bounds.u_min = to_vec<2>(root.at("mpc").at("u_min"), "mpc.u_min");
    if (mpc.has("u_max")) cfg.bounds.u_max = to_vec<2>(root.at("mpc").at("u_max"), "mpc.u_max");
    if (mpc.has("du_min")) cfg.bounds.du_min = to_vec<2>(root.at("mpc").at("du_min"), "mpc.du_min");
    if (mpc.has("du_max")) cfg.bounds.du_max = to_vec<2>(root.at("mpc").at("du_max"), "mpc.du_max");
    cfg.beta = mpc.number("beta", cfg.beta);
    cfg.eps_anchor = mpc.number("eps_anchor", cfg.eps_anchor);
    cfg.hessian_reg = mpc.number("hessian_reg", cfg.hessian_reg);
    mpc.finish();
  }
  if (top.has("road")) {
    Section road(root.at("road"), "road");
    cfg.w_lane = road.number("w_lane", cfg.w_lane);
    road.finish();
  }
  if (top.has("vehicle")) {
    Section veh(root.at("vehicle"), "vehicle");
    cfg.geometry.l_f = veh.number("l_f", cfg.geometry.l_f);
    cfg.geometry.l_r = veh.number("l_r", cfg.geometry.l_r);
    cfg.geometry.l_veh = veh.number("l_veh", cfg.geometry.l_veh);
    cfg.geometry.w_veh = veh.number("w_veh", cfg.geometry.w_veh);
    veh.finish();
  }
  if (top.has("safety")) {
    Section safety(root.at("safety"), "safety");
    cfg.eps_safe = safety.number("eps_safe", cfg.eps_safe);
    cfg.t_headway = safety.number("t_headway", cfg.t_headway);
    cfg.literal_tightening_pairing = safety.boolean(
        "literal_tightening_pairing", cfg.literal_tightening_pairing);
    safety.finish();
  }
  if (top.has("gp")) {
    Section gp(root.at("gp"), "gp");
    if (gp.has("sigma2")) cfg.gp.sigma2 = to_array<4>(root.at("gp").at("sigma2"), "gp.sigma2");
    if (gp.has("lengthscales")) {
      cfg.gp.lengthscales = to_array<8>(root.at("gp").at("lengthscales"), "gp.lengthscales");
    }
    cfg.gp.noise2 = gp.number("noise2", cfg.gp.noise2);
    cfg.gp.capacity = gp.integer("capacity", cfg.gp.capacity);
    cfg.gp.samples = gp.integer("samples", cfg.gp.samples);
    cfg.gp.warmup_steps = gp.integer("warmup_steps", cfg.gp.warmup_steps);
    if (gp.has("warmup_var_rate")) {
      cfg.gp.warmup_var_rate =
          to_array<4>(root.at("gp").at("warmup_var_rate"), "gp.warmup_var_rate");
    }
    gp.finish();
  }
  if (top.has("tv")) {
    Section tv(root.at("tv"), "tv");
    if (tv.has("initial")) {
      cfg.tv.initial = TvState::from_vec(to_vec<4>(root.at("tv").at("initial"), "tv.initial"));
    }
    if (tv.has("feedback")) {
      const json& K = root.at("tv").at("feedback");
      check(K.is_array() && K.size() == 2, "config: 'tv.feedback' must be 2 rows");
      for (int r = 0; r < 2; ++r) {
        const Vec4 rowv = to_vec<4>(K[static_cast<std::size_t>(r)], "tv.feedback row");
        cfg.tv.policy.K.row(r) = rowv.transpose();
      }
    }
    if (tv.has("u_min")) cfg.tv.policy.u_min = to_vec<2>(root.at("tv").at("u_min"), "tv.u_min");
    if (tv.has("u_max")) cfg.tv.policy.u_max = to_vec<2>(root.at("tv").at("u_max"), "tv.u_max");
    cfg.tv.policy.commit_threshold =
        tv.number("commit_threshold", cfg.tv.policy.commit_threshold);
    tv.finish();
  }
  if (top.has("ev")) {
    Section ev(root.at("ev"), "ev");
    if (ev.has("initial")) {
      cfg.ev.initial = EvState::from_vec(to_vec<4>(root.at("ev").at("initial"), "ev.initial"));
    }
    cfg.ev.v_ref = ev.number("v_ref", cfg.ev.v_ref);
    cfg.ev.d_ref = ev.number("d_ref", cfg.ev.d_ref);
    cfg.ev.phi_ref = ev.number("phi_ref", cfg.ev.phi_ref);
    ev.finish();
  }
  if (top.has("run")) {
    Section run(root.at("run"), "run");
    cfg.run.max_steps = run.integer("max_steps", cfg.run.max_steps);
    cfg.run.settle_steps = run.integer("settle_steps", cfg.run.settle_steps);
    if (run.has("seeds")) {
      const json& seeds = root.at("run").at("seeds");
      check(seeds.is_array() && !seeds.empty(), "config: 'run.seeds' must be a non-empty array");
      cfg.run.seeds.clear();
      for (const auto& s : seeds) {
        check(s.is_number_integer() && s.get<std::int64_t>() >= 0,
              "config: 'run.seeds' entries must be non-negative integers");
        cfg.run.seeds.push_back(s.get<std::uint64_t>());
      }
    }
    run.finish();
  }
  top.finish();

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail("config: cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ScenarioConfig::validate() const {
  check(T > 0.0, "config: T must be > 0");
  check(N >= 1, "config: N must be >= 1");
  check(beta > 0.0 && beta < 1.0, "config: beta out of (0,1)");
  check(gp.samples >= 2, "config: gp.samples (M) must be >= 2");
  check(gp.capacity >= 1, "config: gp.capacity must be >= 1");
  check(gp.warmup_steps >= 1, "config: gp.warmup_steps must be >= 1");
  check(gp.noise2 >= 0.0, "config: gp.noise2 must be >= 0");
  for (double s2 : gp.sigma2) check(s2 > 0.0, "config: gp.sigma2 entries must be > 0");
  for (double l : gp.lengthscales) check(l > 0.0, "config: gp.lengthscales entries must be > 0");
  for (double r : gp.warmup_var_rate) check(r >= 0.0, "config: gp.warmup_var_rate entries must be >= 0");
  check(w_lane > 0.0, "config: road.w_lane must be > 0");
  check(geometry.valid(), "config: vehicle geometry invalid (positive sizes, l_f+l_r <= l_veh)");
  check(eps_safe >= 0.0, "config: eps_safe must be >= 0");
  check(t_headway >= 0.0, "config: t_headway must be >= 0");
  check(eps_anchor >= 0.0, "config: eps_anchor must be >= 0");
  check(hessian_reg >= 0.0, "config: hessian_reg must be >= 0");
  check((bounds.u_min.array() <= bounds.u_max.array()).all(),
        "config: mpc.u_min must be <= mpc.u_max");
  check((bounds.du_min.array() <= bounds.du_max.array()).all(),
        "config: mpc.du_min must be <= mpc.du_max");
  check((tv.policy.u_min.array() <= tv.policy.u_max.array()).all(),
        "config: tv.u_min must be <= tv.u_max");
  check(tv.policy.commit_threshold >= 0.0, "config: tv.commit_threshold must be >= 0");
  check(run.max_steps >= 1, "config: run.max_steps must be >= 1");
  check(run.settle_steps >= 1, "config: run.settle_steps must be >= 1");
  check(!run.seeds.empty(), "config: run.seeds must be non-empty");
  check(ev.initial.v >= 0.0, "config: ev.initial speed must be >= 0");
}

namespace {

json to_json(const ScenarioConfig& c) {
  json j;
  j["mpc"] = {
      {"T", c.T},
      {"N", c.N},
      {"q_diag", {c.weights.q_diag(0), c.weights.q_diag(1), c.weights.q_diag(2), c.weights.q_diag(3)}},
      {"r_diag", {c.weights.r_diag(0), c.weights.r_diag(1)}},
      {"s_diag", {c.weights.s_diag(0), c.weights.s_diag(1)}},
      {"u_min", {c.bounds.u_min(0), c.bounds.u_min(1)}},
      {"u_max", {c.bounds.u_max(0), c.bounds.u_max(1)}},
      {"du_min", {c.bounds.du_min(0), c.bounds.du_min(1)}},
      {"du_max", {c.bounds.du_max(0), c.bounds.du_max(1)}},
      {"beta", c.beta},
      {"eps_anchor", c.eps_anchor},
      {"hessian_reg", c.hessian_reg},
  };
  j["road"] = {{"w_lane", c.w_lane}};
  j["vehicle"] = {{"l_f", c.geometry.l_f},
                  {"l_r", c.geometry.l_r},
                  {"l_veh", c.geometry.l_veh},
                  {"w_veh", c.geometry.w_veh}};
  j["safety"] = {{"eps_safe", c.eps_safe},
                 {"t_headway", c.t_headway},
                 {"literal_tightening_pairing", c.literal_tightening_pairing}};
  j["gp"] = {{"sigma2", c.gp.sigma2},
             {"lengthscales", c.gp.lengthscales},
             {"noise2", c.gp.noise2},
             {"capacity", c.gp.capacity},
             {"samples", c.gp.samples},
             {"warmup_steps", c.gp.warmup_steps},
             {"warmup_var_rate", c.gp.warmup_var_rate}};
  j["tv"] = {
      {"initial", {c.tv.initial.x, c.tv.initial.vx, c.tv.initial.y, c.tv.initial.vy}},
      {"feedback",
       {{c.tv.policy.K(0, 0), c.tv.policy.K(0, 1), c.tv.policy.K(0, 2), c.tv.policy.K(0, 3)},
        {c.tv.policy.K(1, 0), c.tv.policy.K(1, 1), c.tv.policy.K(1, 2), c.tv.policy.K(1, 3)}}},
      {"u_min", {c.tv.policy.u_min(0), c.tv.policy.u_min(1)}},
      {"u_max", {c.tv.policy.u_max(0), c.tv.policy.u_max(1)}},
      {"commit_threshold", c.tv.policy.commit_threshold},
  };
  j["ev"] = {
      {"initial", {c.ev.initial.s, c.ev.initial.d, c.ev.initial.phi, c.ev.initial.v}},
      {"v_ref", c.ev.v_ref},
      {"d_ref", c.ev.d_ref},
      {"phi_ref", c.ev.phi_ref},
  };
  j["run"] = {{"max_steps", c.run.max_steps},
              {"settle_steps", c.run.settle_steps},
              {"seeds", c.run.seeds}};
  return j;
}

}  // namespace

std::string canonical_json(const ScenarioConfig& config) {
  return to_json(config).dump(2);
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names = {
      "beta", "samples", "t_headway", "commit_threshold", "lengthscale_scale"};
  return names;
}

void set_sweep_parameter(ScenarioConfig& config, const std::string& name,
                         double value) {
  if (name == "beta") {
    config.beta = value;
  } else if (name == "samples") {
    config.gp.samples = static_cast<int>(std::lround(value));
  } else if (name == "t_headway") {
    config.t_headway = value;
  } else if (name == "commit_threshold") {
    config.tv.policy.commit_threshold = value;
  } else if (name == "lengthscale_scale") {
    check(value > 0.0, "sweep: lengthscale_scale must be > 0");
    for (double& l : config.gp.lengthscales) {
      l *= value;
    }
  } else {
    std::string msg = "sweep: unknown parameter '" + name + "'; sweepable:";
    for (const auto& n : sweepable_parameters()) {
      msg += " " + n;
    }
    fail(msg);
  }
  config.validate();
}

std::string config_hash(const ScenarioConfig& config) {
  const std::string bytes = canonical_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace gpsmpc
