#include "weakh/cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "weakh/control/control.hpp"
#include "weakh/hoermander/determinant.hpp"
#include "weakh/malliavin/flow.hpp"
#include "weakh/mc/density.hpp"
#include "weakh/model/conductance_model.hpp"
#include "weakh/model/hh.hpp"
#include "weakh/ode/hh_ode.hpp"
#include "weakh/sde/simulate.hpp"
#include "weakh/util/error.hpp"
#include "weakh/util/format.hpp"

namespace weakh::cli {

using nlohmann::json;

namespace {

const json kDefaultNoise = {{"kind", "ou"}, {"tau", 1.0}, {"gamma", 1.0}, {"signal", {{"kind", "constant"}, {"value", 0.0}}}};

std::vector<KeySpec> with_common(std::vector<KeySpec> keys) {
  keys.push_back({"out", KeyType::string, nullptr, "output CSV path (default: stdout or $WEAKH_OUTPUT_DIR)"});
  keys.push_back({"threads", KeyType::integer, 1, "worker threads for Monte Carlo commands"});
  return keys;
}

std::vector<KeySpec> stochastic_keys(std::vector<KeySpec> keys) {
  keys.push_back({"model", KeyType::string, "hh", "membrane model: hh"});
  keys.push_back({"model_file", KeyType::string, nullptr, "conductance model JSON (overrides model)"});
  keys.push_back({"noise", KeyType::object, kDefaultNoise, "input law {kind: ou|cir, tau, gamma, K, signal}"});
  keys.push_back({"x0", KeyType::array, nullptr, "initial state (v, p_1..p_k, xi)"});
  keys.push_back({"xi0", KeyType::number, 0.0, "initial input value when x0 is not given"});
  return keys;
}

std::vector<CommandSpec> build_commands() {
  std::vector<CommandSpec> out;
  out.push_back({"det-scan", "Delta along the equilibrium curve, zeros and input window",
                 with_common({{"v_lo", KeyType::number, -15.0, "scan start (mV)"},
                              {"v_hi", KeyType::number, 30.0, "scan end (mV)"},
                              {"step", KeyType::number, 0.01, "scan step (mV)"}})});
  out.push_back({"orbit", "stable orbit under deterministic input and Delta along it",
                 with_common({{"input", KeyType::object, json{{"kind", "constant"}, {"value", 15.0}}, "input signal"},
                              {"dt", KeyType::number, 0.01, "RK4 step (ms)"},
                              {"max_time", KeyType::number, 600.0, "integration budget (ms)"},
                              {"transient", KeyType::number, 300.0, "discarded transient (ms)"},
                              {"samples", KeyType::integer, 256, "samples per period"},
                              {"trajectory_out", KeyType::string, nullptr, "CSV of one period t,v,n,m,h"}})});
  out.push_back({"simulate", "one SDE path",
                 with_common(stochastic_keys({{"t_end", KeyType::number, 20.0, "end time (ms)"},
                                              {"dt", KeyType::number, sde::kDefaultDt, "step (ms)"},
                                              {"seed", KeyType::integer, 0, "root seed"},
                                              {"path_index", KeyType::integer, 0, "stream index"},
                                              {"stride", KeyType::integer, 1, "store every stride-th state"},
                                              {"binary_out", KeyType::string, nullptr, "binary path file"}}))});
  out.push_back(
      {"hit", "ball-hitting probabilities",
       with_common(stochastic_keys(
           {{"t", KeyType::number, 200.0, "time (ms)"},
            {"target", KeyType::object, json{{"kind", "equilibrium"}, {"c", 10.0}, {"zeta", 10.0}, {"xi", "noise_mean"}},
             "{kind: equilibrium|orbit|point, ...}"},
            {"eps", KeyType::number_or_array, json::array({0.5, 1.0, 2.0, 4.0}), "ball radii"},
            {"weights", KeyType::array, nullptr, "ball metric weights"},
            {"n_paths", KeyType::integer, 1000, "paths"},
            {"seed", KeyType::integer, 0, "root seed"},
            {"dt", KeyType::number, sde::kDefaultDt, "step (ms)"},
            {"density", KeyType::object, nullptr, "{i, j, grid: [xlo,xhi,nx,ylo,yhi,ny], bandwidth: [bx,by], out}"}}))});
  out.push_back({"tube", "probability of staying in a tube around a control path",
                 with_common(stochastic_keys(
                     {{"path", KeyType::object, json{{"kind", "ramp"}, {"z1", 3.0}, {"t_end", 20.0}}, "control path"},
                      {"dt", KeyType::number, 1e-3, "grid step (ms)"},
                      {"match_signal", KeyType::boolean, false, "OU signal chosen so that hdot = 0"},
                      {"delta", KeyType::number_or_array, json::array({1.0}), "tube radii"},
                      {"weights", KeyType::array, nullptr, "tube metric weights"},
                      {"n_paths", KeyType::integer, 1000, "paths"},
                      {"seed", KeyType::integer, 0, "root seed"}}))});
  out.push_back({"control", "control path and its roundtrip deviation",
                 with_common(stochastic_keys(
                     {{"path", KeyType::object, json{{"kind", "ramp"}, {"z1", 3.0}, {"t_end", 20.0}}, "control path"},
                      {"dt", KeyType::number, 1e-3, "grid step (ms)"},
                      {"match_signal", KeyType::boolean, false, "OU signal chosen so that hdot = 0"}}))});
  out.push_back({"malliavin", "Malliavin covariance along a path, or a degeneracy scan over points",
                 with_common(stochastic_keys({{"t_end", KeyType::number, 1.0, "end time (ms)"},
                                              {"dt", KeyType::number, 1e-3, "step (ms)"},
                                              {"seed", KeyType::integer, 0, "root seed"},
                                              {"path_index", KeyType::integer, 0, "stream index"},
                                              {"sample_every", KeyType::integer, 100, "steps between samples"},
                                              {"points", KeyType::array, nullptr, "states for a degeneracy scan"},
                                              {"n_paths", KeyType::integer, 100, "paths per scan point"}}))});
  return out;
}

bool type_ok(KeyType t, const json& v) {
  switch (t) {
    case KeyType::number: return v.is_number();
    case KeyType::integer: return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    case KeyType::boolean: return v.is_boolean();
    case KeyType::string: return v.is_string();
    case KeyType::object: return v.is_object();
    case KeyType::array: return v.is_array();
    case KeyType::number_or_array: return v.is_number() || v.is_array();
    case KeyType::any: return true;
  }
  return false;
}

std::string type_name(KeyType t) {
  switch (t) {
    case KeyType::number: return "a number";
    case KeyType::integer: return "an integer";
    case KeyType::boolean: return "a boolean";
    case KeyType::string: return "a string";
    case KeyType::object: return "an object";
    case KeyType::array: return "an array";
    case KeyType::number_or_array: return "a number or an array";
    case KeyType::any: return "any value";
  }
  return "?";
}

json parse_flag(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error&) {
    return raw;
  }
}

// ---- helpers shared by the commands ----

std::shared_ptr<const model::MembraneModel> load_model(const RunConfig& cfg) {
  if (cfg.has("model_file")) {
    return std::make_shared<model::ConductanceModel>(model::ConductanceModel::load(cfg.at("model_file").get<std::string>()));
  }
  const auto name = cfg.at("model").get<std::string>();
  if (name != "hh") throw ConfigError("config: key 'model' must be \"hh\" (or give model_file)");
  return std::make_shared<model::HodgkinHuxley>();
}

model::StochasticSystem load_system(const RunConfig& cfg, const model::NoiseSpec* noise_override = nullptr) {
  auto m = load_model(cfg);
  return {m, noise_override ? *noise_override : model::NoiseSpec::from_json(cfg.at("noise"))};
}

Eigen::VectorXd vector_of(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config: key '" + key + "' must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("config: key '" + key + "' must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::VectorXd initial_state(const RunConfig& cfg, const model::StochasticSystem& sys) {
  const auto m = static_cast<Eigen::Index>(sys.dimension());
  if (cfg.has("x0")) {
    auto x = vector_of(cfg.at("x0"), "x0");
    if (x.size() != m) throw ConfigError("config: key 'x0' must have " + std::to_string(m) + " entries");
    return x;
  }
  // Resting gates at v = 0.
  const std::size_t k = sys.model().channel_count();
  std::vector<double> a(k), b(k);
  sys.model().kinetics(0.0, a, b);
  Eigen::VectorXd x(m);
  x[0] = 0.0;
  for (std::size_t i = 0; i < k; ++i) x[static_cast<Eigen::Index>(i + 1)] = b[i] / a[i];
  x[m - 1] = cfg.at("xi0").get<double>();
  return x;
}

std::vector<double> number_list(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError("config: expected a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Eigen::VectorXd weights_of(const RunConfig& cfg, const model::StochasticSystem& sys) {
  if (!cfg.has("weights")) return mc::default_weights(sys);
  auto w = vector_of(cfg.at("weights"), "weights");
  if (static_cast<std::size_t>(w.size()) != sys.dimension()) throw ConfigError("config: key 'weights' has the wrong length");
  return w;
}

std::uint64_t u64(const RunConfig& cfg, const std::string& key) {
  const auto v = cfg.at(key);
  if (v.is_number_integer() && v.get<long long>() < 0) throw ConfigError("config: key '" + key + "' must be >= 0");
  return v.is_number_unsigned() ? v.get<std::uint64_t>() : static_cast<std::uint64_t>(v.get<double>());
}

std::size_t positive_size(const RunConfig& cfg, const std::string& key) {
  const auto v = u64(cfg, key);
  if (v == 0) throw ConfigError("config: key '" + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

std::string manifest(const RunConfig& cfg) {
  std::string line = "# weakh " + std::string(kVersion) + " command=" + cfg.command + " config=" + config_digest(cfg);
  if (cfg.values.contains("seed")) line += " seed=" + cfg.values.at("seed").dump();
  return line + '\n';
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [k, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("config: unknown key '" + k + "' in '" + where + "'");
  }
}

control::ControlPath build_path(const RunConfig& cfg, const model::StochasticSystem& sys, const Eigen::VectorXd& x0) {
  const auto& p = cfg.at("path");
  check_keys(p, "path", {"kind", "z1", "t_end", "input"});
  const auto kind = p.value("kind", std::string("ramp"));
  const double t_end = p.value("t_end", 20.0);
  const double dt = cfg.at("dt").get<double>();
  if (kind == "ramp") return control::build_ramp_path(sys, x0, p.value("z1", 3.0), t_end, dt);
  if (kind == "imitation") {
    if (!p.contains("input")) throw ConfigError("config: imitation path needs 'input'");
    return control::build_imitation_path(sys, x0, model::InputSignal::from_json(p.at("input")), t_end, dt);
  }
  throw ConfigError("config: path kind must be 'ramp' or 'imitation'");
}

// With match_signal, an OU law whose signal makes the drift equal the
// imitation input along the path.
model::NoiseSpec noise_for_path(const RunConfig& cfg, const Eigen::VectorXd& x0) {
  auto noise = model::NoiseSpec::from_json(cfg.at("noise"));
  if (!cfg.at("match_signal").get<bool>()) return noise;
  const auto& p = cfg.at("path");
  if (p.value("kind", std::string("ramp")) != "imitation" || noise.kind() != model::NoiseSpec::Kind::ou)
    throw ConfigError("config: match_signal needs an imitation path and OU noise");
  const auto I = model::InputSignal::from_json(p.at("input"));
  const double t_end = p.value("t_end", 20.0);
  return model::NoiseSpec::ou(noise.tau(), noise.gamma(),
                              control::matched_ou_signal(I, x0[x0.size() - 1], noise.tau(), t_end, cfg.at("dt").get<double>()));
}

// ---- commands ----

CommandOutput cmd_det_scan(const RunConfig& cfg) {
  CommandOutput out;
  const double lo = cfg.at("v_lo").get<double>(), hi = cfg.at("v_hi").get<double>();
  const double step = cfg.at("step").get<double>();
  if (!(step > 0.0)) throw ConfigError("config: key 'step' must be > 0");
  const auto scan = hoermander::scan_delta_equilibrium(lo, hi, step);
  out.csv = manifest(cfg);
  for (double z : scan.zeros) {
    out.csv += "# zero v=" + util::format_double(z) + " input=" + util::format_double(model::balancing_input(z)) + '\n';
    out.summary.push_back("zero of Delta at v = " + util::format_double(z));
  }
  if (lo < hi) {
    out.csv += "# window |F_inf(-10)|=" + util::format_double(std::abs(model::balancing_input(-10.0))) +
               " |F_inf(10)|=" + util::format_double(std::abs(model::balancing_input(10.0))) + '\n';
  }
  out.csv += hoermander::delta_scan_csv(scan);
  out.summary.push_back(std::to_string(scan.rows.size()) + " rows, " + std::to_string(scan.zeros.size()) + " zeros");
  return out;
}

CommandOutput cmd_orbit(const RunConfig& cfg) {
  CommandOutput out;
  const auto input = model::InputSignal::from_json(cfg.at("input"));
  ode::OrbitOptions opt;
  opt.dt = cfg.at("dt").get<double>();
  opt.transient = cfg.at("transient").get<double>();
  opt.samples = positive_size(cfg, "samples");
  const auto orbit = ode::detect_stable_orbit(input, model::equilibrium_curve(0.0), cfg.at("max_time").get<double>(), opt);
  if (!orbit.converged) throw ComputationError("orbit did not converge: " + orbit.diagnostics);
  const auto table = ode::delta_along_orbit(orbit);
  out.csv = manifest(cfg);
  out.csv += "# period=" + util::format_double(orbit.period) + " window_fraction=" + util::format_double(table.window.fraction) +
             " window_start_v=" + util::format_double(table.window.start_v) +
             " window_end_v=" + util::format_double(table.window.end_v) + '\n';
  out.csv += ode::orbit_delta_csv(table);
  out.summary.push_back("period " + util::format_double(orbit.period) + " ms");
  if (cfg.has("trajectory_out")) {
    ode::OdePath path;
    path.dt = orbit.period / static_cast<double>(orbit.samples.size());
    for (std::size_t i = 0; i < orbit.samples.size(); ++i) {
      path.t.push_back(path.dt * static_cast<double>(i));
      path.states.push_back(orbit.samples[i]);
    }
    out.extra.emplace_back(cfg.at("trajectory_out").get<std::string>(), manifest(cfg) + ode::ode_path_csv(path));
  }
  return out;
}

CommandOutput cmd_simulate(const RunConfig& cfg) {
  CommandOutput out;
  const auto sys = load_system(cfg);
  const auto x0 = initial_state(cfg, sys);
  sde::SimOptions o;
  o.t_end = cfg.at("t_end").get<double>();
  o.dt = cfg.at("dt").get<double>();
  o.seed = u64(cfg, "seed");
  o.path_index = u64(cfg, "path_index");
  o.stride = positive_size(cfg, "stride");
  sde::RunStats stats;
  const auto path = sde::simulate(sys, x0, o, &stats);
  out.csv = manifest(cfg);
  out.csv += "# steps=" + std::to_string(stats.steps) + " cir_floor_events=" + std::to_string(stats.cir_floor_events) +
             " clamp_events=" + std::to_string(stats.clamp_events) + '\n';
  out.csv += sde::path_csv(path, sde::state_columns(sys));
  if (cfg.has("binary_out")) sde::write_path_binary(path, cfg.at("binary_out").get<std::string>());
  out.summary.push_back(std::to_string(stats.steps) + " steps");
  return out;
}

Eigen::VectorXd hit_target(const RunConfig& cfg, const model::StochasticSystem& sys, double t) {
  const auto& j = cfg.at("target");
  const auto kind = j.value("kind", std::string("equilibrium"));
  if (kind == "point") {
    check_keys(j, "target", {"kind", "x"});
    auto x = vector_of(j.at("x"), "target.x");
    if (static_cast<std::size_t>(x.size()) != sys.dimension()) throw ConfigError("config: target.x has the wrong length");
    return x;
  }
  if (kind == "equilibrium") {
    check_keys(j, "target", {"kind", "c", "zeta", "xi"});
    const auto xi = j.value("xi", std::string("noise_mean"));
    if (xi != "noise_mean" && xi != "linear_shift") throw ConfigError("config: target.xi must be noise_mean or linear_shift");
    return mc::equilibrium_target(sys, j.value("c", 10.0), j.value("zeta", 0.0), t,
                                  xi == "noise_mean" ? mc::XiTarget::noise_mean : mc::XiTarget::linear_shift);
  }
  if (kind == "orbit") {
    check_keys(j, "target", {"kind", "input", "zeta"});
    const auto input = j.contains("input") ? model::InputSignal::from_json(j.at("input")) : model::InputSignal::constant(15.0);
    const auto orbit = ode::detect_stable_orbit(input, model::equilibrium_curve(0.0), 600.0);
    return mc::orbit_target(orbit, input, j.value("zeta", 0.0), orbit.period);
  }
  throw ConfigError("config: target kind must be point, equilibrium or orbit");
}

CommandOutput cmd_hit(const RunConfig& cfg) {
  CommandOutput out;
  const auto sys = load_system(cfg);
  const auto x0 = initial_state(cfg, sys);
  const double t = cfg.at("t").get<double>();
  const auto target = hit_target(cfg, sys, t);
  auto eps = number_list(cfg.at("eps"));
  std::sort(eps.begin(), eps.end());
  mc::McOptions o;
  o.dt = cfg.at("dt").get<double>();
  o.seed = u64(cfg, "seed");
  o.threads = cfg.threads;
  const auto n = static_cast<std::size_t>(u64(cfg, "n_paths"));
  const auto w = weights_of(cfg, sys);
  if (n == 0) throw std::invalid_argument("hit_probability: n_paths must be > 0");
  const auto pts = mc::endpoints(sys, x0, t, n, o);
  std::vector<mc::HitEstimate> rows;
  for (double e : eps) rows.push_back(mc::score_hits(pts, t, target, e, w));
  out.csv = manifest(cfg);
  std::vector<double> tv(target.data(), target.data() + target.size());
  out.csv += "# target=" + util::csv_row(tv) + '\n';
  out.csv += mc::estimates_csv(rows);
  for (const auto& r : rows)
    out.summary.push_back("eps " + util::format_double(r.epsilon) + ": p = " + util::format_double(r.probability) + " [" +
                          util::format_double(r.ci_low) + ", " + util::format_double(r.ci_high) + "]");
  if (cfg.has("density")) {
    const auto& d = cfg.at("density");
    check_keys(d, "density", {"i", "j", "grid", "bandwidth", "out"});
    const auto g = number_list(d.at("grid"));
    const auto bw = number_list(d.at("bandwidth"));
    if (g.size() != 6 || bw.size() != 2) throw ConfigError("config: density needs grid[6] and bandwidth[2]");
    mc::Grid2 grid{g[0], g[1], static_cast<std::size_t>(g[2]), g[3], g[4], static_cast<std::size_t>(g[5])};
    const auto table = mc::projected_density(pts, d.value("i", 0u), d.value("j", 4u), grid, bw[0], bw[1]);
    if (!d.contains("out")) throw ConfigError("config: density needs 'out'");
    out.extra.emplace_back(d.at("out").get<std::string>(), manifest(cfg) + mc::density_csv(table));
  }
  return out;
}

CommandOutput cmd_tube(const RunConfig& cfg) {
  CommandOutput out;
  const auto base = load_system(cfg);
  const auto x0 = initial_state(cfg, base);
  const auto noise = noise_for_path(cfg, x0);
  const model::StochasticSystem sys(base.model_ptr(), noise);
  const auto path = build_path(cfg, sys, x0);
  auto deltas = number_list(cfg.at("delta"));
  std::sort(deltas.begin(), deltas.end());
  mc::McOptions o;
  o.seed = u64(cfg, "seed");
  o.threads = cfg.threads;
  const auto w = weights_of(cfg, sys);
  std::vector<mc::HitEstimate> rows;
  for (double d : deltas)
    rows.push_back(control::tube_probability(path, sys, d, w, static_cast<std::size_t>(u64(cfg, "n_paths")), o));
  out.csv = manifest(cfg) + mc::estimates_csv(rows);
  for (const auto& r : rows)
    out.summary.push_back("delta " + util::format_double(r.epsilon) + ": p = " + util::format_double(r.probability));
  return out;
}

CommandOutput cmd_control(const RunConfig& cfg) {
  CommandOutput out;
  const auto base = load_system(cfg);
  const auto x0 = initial_state(cfg, base);
  const model::StochasticSystem sys(base.model_ptr(), noise_for_path(cfg, x0));
  const auto path = build_path(cfg, sys, x0);
  const double dev = control::verify_roundtrip(path, sys);
  out.csv = manifest(cfg);
  out.csv += "# kind=" + path.kind + " admissible=" + (path.admissible ? "true" : "false") +
             " roundtrip_deviation=" + util::format_double(dev) + '\n';
  out.csv += control::control_csv(path, sde::state_columns(sys));
  out.summary.push_back("roundtrip deviation " + util::format_double(dev));
  return out;
}

CommandOutput cmd_malliavin(const RunConfig& cfg) {
  CommandOutput out;
  const auto sys = load_system(cfg);
  out.csv = manifest(cfg);
  if (cfg.has("points")) {
    std::vector<Eigen::VectorXd> pts;
    for (const auto& p : cfg.at("points")) {
      auto x = vector_of(p, "points");
      if (static_cast<std::size_t>(x.size()) != sys.dimension()) throw ConfigError("config: a point has the wrong length");
      pts.push_back(x);
    }
    const auto rows = malliavin::degeneracy_scan(sys, pts, cfg.at("t_end").get<double>(), positive_size(cfg, "n_paths"),
                                                 cfg.at("dt").get<double>(), u64(cfg, "seed"), cfg.threads);
    std::vector<std::string> head;
    for (const auto& c : sde::state_columns(sys)) head.push_back(c);
    for (const char* c : {"delta", "median_lambda_min", "median_det", "flagged"}) head.emplace_back(c);
    out.csv += util::csv_row(head) + '\n';
    for (const auto& r : rows) {
      std::vector<double> v(r.point.data(), r.point.data() + r.point.size());
      v.push_back(r.delta);
      v.push_back(r.median_lambda_min);
      v.push_back(r.median_det);
      out.csv += util::csv_row(v) + ',' + std::to_string(r.flagged) + '\n';
    }
    out.summary.push_back(std::to_string(rows.size()) + " points scanned");
    return out;
  }
  malliavin::FlowOptions o;
  o.t_end = cfg.at("t_end").get<double>();
  o.dt = cfg.at("dt").get<double>();
  o.seed = u64(cfg, "seed");
  o.path_index = u64(cfg, "path_index");
  o.sample_every = positive_size(cfg, "sample_every");
  const auto p = malliavin::simulate_with_flow(sys, initial_state(cfg, sys), o);
  const double res = malliavin::inverse_flow_consistency(sys, p.run);
  out.csv += "# inverse_flow_residual=" + util::format_double(res) + " exited_box=" + (p.run.exited_box ? "true" : "false") + '\n';
  out.csv += malliavin::samples_csv(p.samples);
  out.summary.push_back("inverse flow residual " + util::format_double(res));
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> list = build_commands();
  return list;
}

const CommandSpec& command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return c;
  throw ConfigError("unknown command '" + name + "'");
}

RunConfig make_config(const std::string& name, const std::string& text,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  const auto& spec = command(name);
  RunConfig cfg;
  cfg.command = name;
  cfg.values = json::object();
  for (const auto& k : spec.keys) cfg.values[k.name] = k.fallback;

  auto find = [&](const std::string& key) -> const KeySpec& {
    for (const auto& k : spec.keys)
      if (k.name == key) return k;
    throw ConfigError("config: unknown key '" + key + "' for command " + name);
  };
  auto set = [&](const std::string& key, const json& v) {
    const auto& k = find(key);
    if (!v.is_null() && !type_ok(k.type, v))
      throw ConfigError("config: key '" + key + "' must be " + type_name(k.type) + ", got " + v.dump());
    cfg.values[key] = v;
  };

  if (!text.empty()) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [k, v] : doc.items()) {
      if (k == "command") {
        if (v != name) throw ConfigError("config: file is for command " + v.dump() + ", not " + name);
        continue;
      }
      set(k, v);
    }
  }
  for (const auto& [k, raw] : overrides) set(k, parse_flag(raw));

  const auto threads = cfg.values.at("threads");
  if (!threads.is_number() || threads.get<double>() < 1) throw ConfigError("config: key 'threads' must be >= 1");
  cfg.threads = static_cast<unsigned>(threads.get<double>());
  return cfg;
}

std::string config_digest(const RunConfig& cfg) {
  json canon = cfg.values;
  canon.erase("threads");
  canon.erase("out");
  canon["command"] = cfg.command;
  return util::hex64(util::fnv1a64(canon.dump()));
}

CommandOutput execute(const RunConfig& cfg) {
  try {
    if (cfg.command == "det-scan") return cmd_det_scan(cfg);
    if (cfg.command == "orbit") return cmd_orbit(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "hit") return cmd_hit(cfg);
    if (cfg.command == "tube") return cmd_tube(cfg);
    if (cfg.command == "control") return cmd_control(cfg);
    if (cfg.command == "malliavin") return cmd_malliavin(cfg);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  throw ConfigError("unknown command '" + cfg.command + "'");
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string output_path(const RunConfig& cfg) {
  if (cfg.has("out")) return cfg.at("out").get<std::string>();
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir)
    return (std::filesystem::path(dir) / (cfg.command + ".csv")).string();
  return {};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hoermander-condition and positivity diagnostics for Hodgkin-Huxley type neurons with random input"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  struct Parsed {
    std::string config_file;
    std::vector<std::string> raw;
  };
  std::vector<Parsed> parsed(commands().size());
  std::vector<CLI::App*> subs;
  for (std::size_t c = 0; c < commands().size(); ++c) {
    const auto& spec = commands()[c];
    auto* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", parsed[c].config_file, "JSON configuration file");
    parsed[c].raw.resize(spec.keys.size());
    for (std::size_t k = 0; k < spec.keys.size(); ++k) {
      std::string flag = spec.keys[k].name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      sub->add_option("--" + flag, parsed[c].raw[k], spec.keys[k].help);
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfig;
  }

  std::size_t which = 0;
  while (which < subs.size() && !subs[which]->parsed()) ++which;
  const auto& spec = commands()[which];
  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (std::size_t k = 0; k < spec.keys.size(); ++k) {
      std::string flag = spec.keys[k].name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (subs[which]->count("--" + flag) > 0) overrides.emplace_back(spec.keys[k].name, parsed[which].raw[k]);
    }
    const std::string text = parsed[which].config_file.empty() ? std::string() : read_file(parsed[which].config_file);
    const auto cfg = make_config(spec.name, text, overrides);
    const auto result = execute(cfg);
    const auto path = output_path(cfg);
    if (path.empty()) {
      out << result.csv;
    } else {
      write_file(path, result.csv);
    }
    for (const auto& [p, text_out] : result.extra) write_file(p, text_out);
    for (const auto& line : result.summary) err << line << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ComputationError& e) {
    err << "error: " << e.what() << '\n';
    return kComputation;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid parameter: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kComputation;
  }
}

}  // namespace weakh::cli
