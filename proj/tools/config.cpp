#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace coisac::cli {

namespace {

using nlohmann::json;

// Typed access to one JSON object; remembers which keys were read so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, field(key)) : fallback;
  }

  int integer(const std::string& key, int fallback) {
    const json* v = find(key);
    return v ? as_integer(*v, field(key)) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(field(key), "must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(field(key), "must be a string");
    return v->get<std::string>();
  }

  /// A number or a list of numbers.
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number()) return {as_number(*v, field(key))};
    if (!v->is_array()) throw ConfigError(field(key), "must be a number or a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i)
      out.push_back(as_number((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<Point2> points(const std::string& key, bool required) {
    const json* v = find(key);
    if (!v) {
      if (required) throw ConfigError(field(key), "is required");
      return {};
    }
    if (!v->is_array()) throw ConfigError(field(key), "must be a list of [x, y] pairs");
    std::vector<Point2> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string name = field(key) + "[" + std::to_string(i) + "]";
      const json& p = (*v)[i];
      if (!p.is_array() || p.size() != 2) throw ConfigError(name, "must be an [x, y] pair");
      out.push_back({as_number(p[0], name), as_number(p[1], name)});
    }
    return out;
  }

  /// Value given either in mW (`<stem>_mw`) or dBm (`<stem>_dbm`), at most one of them.
  std::optional<std::vector<double>> power_mw(const std::string& stem) {
    const bool mw = has(stem + "_mw"), dbm = has(stem + "_dbm");
    if (mw && dbm) throw ConfigError(field(stem + "_mw"), "give either _mw or _dbm, not both");
    if (mw) return numbers(stem + "_mw", {});
    if (dbm) {
      std::vector<double> out = numbers(stem + "_dbm", {});
      for (double& v : out) v = db2lin(v);
      return out;
    }
    return std::nullopt;
  }

  std::optional<Section> child(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return Section(*v, field(key));
  }

  void reject_unknown() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  static double as_number(const json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError(name, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(name, "must be finite");
    return x;
  }

  static int as_integer(const json& v, const std::string& name) {
    const double x = as_number(v, name);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError(name, "must be an integer");
    return static_cast<int>(x);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

// Library validators report "field: reason"; requalify the field with the section path.
[[noreturn]] void rethrow_in(const Section& s, const std::invalid_argument& e) {
  const std::string msg = e.what();
  const auto colon = msg.find(": ");
  if (colon == std::string::npos) throw ConfigError(s.field("<section>"), msg);
  throw ConfigError(s.field(msg.substr(0, colon)), msg.substr(colon + 2));
}

void parse_scene(Section s, ExperimentConfig& cfg) {
  NetworkScene& sc = cfg.scene;
  sc.ap_positions = s.points("ap_positions_m", true);
  sc.ue_positions = s.points("ue_positions_m", true);
  sc.target_positions = s.points("target_positions_m", false);
  sc.clutter_positions = s.points("clutter_positions_m", false);
  for (double deg : s.numbers("ap_broadside_deg", {}))
    sc.ap_broadside.push_back({std::cos(deg2rad(deg)), std::sin(deg2rad(deg))});
  sc.n_tx = s.integer("n_tx", sc.n_tx);
  sc.n_rx = s.integer("n_rx", sc.n_rx);
  sc.n_rf = s.integer("n_rf", sc.n_rf);
  if (auto p = s.power_mw("tx_power")) {
    if (p->size() != 1) throw ConfigError(s.field("tx_power_mw"), "must be a single number");
    sc.tx_power_budget = p->front();
  }
  if (auto p = s.power_mw("noise_comm")) sc.noise_power_comm = *p;
  if (auto p = s.power_mw("noise_radar")) {
    if (p->size() != 1) throw ConfigError(s.field("noise_radar_mw"), "must be a single number");
    sc.noise_power_radar = p->front();
  }
  sc.rician_factor = s.number("rician_factor", sc.rician_factor);
  sc.n_paths = s.integer("n_paths", sc.n_paths);
  sc.reference_pathloss_db = s.number("reference_pathloss_db", sc.reference_pathloss_db);
  const std::vector<double> w = s.numbers("rate_weights", {});
  if (!w.empty()) {
    if (static_cast<int>(w.size()) != sc.num_ues())
      throw ConfigError(s.field("rate_weights"), "needs one weight per UE");
    for (double x : w)
      if (!(x > 0.0)) throw ConfigError(s.field("rate_weights"), "weights must be positive");
    cfg.weights = Eigen::Map<const RVec>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  s.reject_unknown();
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_in(s, e);
  }
}

void parse_beampattern(Section s, BeampatternParams& bp) {
  bp.grid_size = s.integer("grid_size", 61);
  bp.mainlobe_halfwidth = deg2rad(s.number("mainlobe_halfwidth_deg", rad2deg(bp.mainlobe_halfwidth)));
  bp.notch_halfwidth = deg2rad(s.number("notch_halfwidth_deg", rad2deg(bp.notch_halfwidth)));
  bp.mse_budget = s.number("mse_budget", bp.mse_budget);
  if (s.has("notch_budget_db") && s.has("notch_budget"))
    throw ConfigError(s.field("notch_budget_db"), "give either notch_budget_db or notch_budget, not both");
  if (s.has("notch_budget_db"))
    bp.notch_budget = db2lin(s.number("notch_budget_db", 0.0));
  else
    bp.notch_budget = s.number("notch_budget", bp.notch_budget);
  s.reject_unknown();
  if (bp.grid_size < 2) throw ConfigError(s.field("grid_size"), "must be >= 2");
  if (!(bp.mainlobe_halfwidth > 0.0)) throw ConfigError(s.field("mainlobe_halfwidth_deg"), "must be positive");
  if (!(bp.notch_halfwidth > 0.0)) throw ConfigError(s.field("notch_halfwidth_deg"), "must be positive");
  if (!(bp.mse_budget > 0.0)) throw ConfigError(s.field("mse_budget"), "must be positive");
  if (!(bp.notch_budget > 0.0)) throw ConfigError(s.field("notch_budget"), "must be positive");
}

void parse_solver(Section s, ExperimentConfig& cfg) {
  SolverOptions& o = cfg.solver;
  PenaltyConfig& p = o.penalties;
  const std::string algorithm = s.string("algorithm", "panda");
  if (algorithm == "panda")
    cfg.algorithm = Algorithm::Distributed;
  else if (algorithm == "centralized")
    cfg.algorithm = Algorithm::Centralized;
  else
    throw ConfigError(s.field("algorithm"), "must be \"panda\" or \"centralized\"");
  const double seed = s.number("seed", 1.0);
  if (seed < 0.0 || seed != std::floor(seed) || seed > 9.007199254740992e15)
    throw ConfigError(s.field("seed"), "must be a nonnegative integer");
  cfg.seed = static_cast<std::uint64_t>(seed);
  p.rho = s.number("rho", p.rho);
  p.varrho = s.number("varrho", p.varrho);
  p.lambda = s.number("lambda", p.lambda);
  p.max_outer_iters = s.integer("max_outer_iters", p.max_outer_iters);
  p.min_outer_iters = s.integer("min_outer_iters", p.min_outer_iters);
  p.primal_tolerance = s.number("primal_tolerance", p.primal_tolerance);
  p.al_change_tolerance = s.number("al_change_tolerance", p.al_change_tolerance);
  p.stall_window = s.integer("stall_window", p.stall_window);
  o.bsum_max_iters = s.integer("bsum_max_iters", o.bsum_max_iters);
  o.bsum_tolerance = s.number("bsum_tolerance", o.bsum_tolerance);
  o.central_max_sweeps = s.integer("central_max_sweeps", o.central_max_sweeps);
  o.central_sweep_tolerance = s.number("central_sweep_tolerance", o.central_sweep_tolerance);
  o.restore_feasibility = s.boolean("restore_feasibility", o.restore_feasibility);
  s.reject_unknown();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_in(s, e);
  }
  if (o.bsum_max_iters < 1) throw ConfigError(s.field("bsum_max_iters"), "must be >= 1");
  if (!(o.bsum_tolerance > 0.0)) throw ConfigError(s.field("bsum_tolerance"), "must be positive");
  if (o.central_max_sweeps < 1) throw ConfigError(s.field("central_max_sweeps"), "must be >= 1");
  if (!(o.central_sweep_tolerance > 0.0)) throw ConfigError(s.field("central_sweep_tolerance"), "must be positive");
}

SweepConfig parse_sweep(Section s) {
  SweepConfig sw;
  const json* var = s.find("variable");
  if (!var) throw ConfigError(s.field("variable"), "is required");
  if (!var->is_string()) throw ConfigError(s.field("variable"), "must be a string");
  const std::string name = var->get<std::string>();
  if (name == "gamma")
    sw.variable = SweepVariable::Gamma;
  else if (name == "Gamma_notch")
    sw.variable = SweepVariable::GammaNotch;
  else if (name == "n_tx")
    sw.variable = SweepVariable::NTx;
  else if (name == "n_rf")
    sw.variable = SweepVariable::NRf;
  else
    throw ConfigError(s.field("variable"), "must be one of gamma, Gamma_notch, n_tx, n_rf");
  sw.values = s.numbers("values", {});
  sw.trials = s.integer("trials", sw.trials);
  s.reject_unknown();
  if (sw.values.empty()) throw ConfigError(s.field("values"), "must not be empty");
  if (sw.trials < 1) throw ConfigError(s.field("trials"), "must be >= 1");
  for (double v : sw.values) {
    const bool integral = sw.variable == SweepVariable::NTx || sw.variable == SweepVariable::NRf;
    if (integral && (v != std::floor(v) || v < 1.0)) throw ConfigError(s.field("values"), "must be positive integers");
    if (sw.variable == SweepVariable::Gamma && !(v > 0.0)) throw ConfigError(s.field("values"), "must be positive");
  }
  return sw;
}

void parse_detection(Section s, DetectionConfig& d) {
  d.pr_fa = s.numbers("pr_fa", d.pr_fa);
  const std::string source = s.string("sinr_source", "design");
  if (source == "design")
    d.sinr_source = SinrSource::Design;
  else if (source == "random")
    d.sinr_source = SinrSource::Random;
  else
    throw ConfigError(s.field("sinr_source"), "must be \"design\" or \"random\"");
  d.trials = s.integer("trials", static_cast<int>(d.trials));
  d.target = s.integer("target", d.target);
  d.radar.time_bandwidth = s.number("time_bandwidth", d.radar.time_bandwidth);
  d.radar.target_rcs = s.numbers("target_rcs", d.radar.target_rcs);
  d.radar.clutter_rcs = s.numbers("clutter_rcs", d.radar.clutter_rcs);
  d.radar.clutter_correlation = s.number("clutter_correlation", d.radar.clutter_correlation);
  s.reject_unknown();
  if (d.pr_fa.empty()) throw ConfigError(s.field("pr_fa"), "must not be empty");
  for (double p : d.pr_fa)
    if (!(p > 0.0 && p < 1.0)) throw ConfigError(s.field("pr_fa"), "values must lie in (0, 1)");
  if (d.trials < 1) throw ConfigError(s.field("trials"), "must be >= 1");
  if (d.target < 0) throw ConfigError(s.field("target"), "must be >= 0");
  if (!(d.radar.time_bandwidth > 0.0)) throw ConfigError(s.field("time_bandwidth"), "must be positive");
  for (double r : d.radar.target_rcs)
    if (r < 0.0) throw ConfigError(s.field("target_rcs"), "must be nonnegative");
  for (double r : d.radar.clutter_rcs)
    if (r < 0.0) throw ConfigError(s.field("clutter_rcs"), "must be nonnegative");
  if (d.radar.clutter_correlation < 0.0 || d.radar.clutter_correlation > 1.0)
    throw ConfigError(s.field("clutter_correlation"), "must lie in [0, 1]");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  cfg.source = doc;
  Section root(doc, "");
  auto scene = root.child("scene");
  if (!scene) throw ConfigError("scene", "is required");
  parse_scene(*scene, cfg);
  cfg.beampattern.grid_size = 61;
  if (auto bp = root.child("beampattern")) parse_beampattern(*bp, cfg.beampattern);
  if (auto sv = root.child("solver")) parse_solver(*sv, cfg);
  if (auto sw = root.child("sweep")) cfg.sweep = parse_sweep(*sw);
  if (auto det = root.child("detection")) parse_detection(*det, cfg.detection);
  root.reject_unknown();
  if (cfg.weights.size() == 0) cfg.weights = RVec::Ones(cfg.scene.num_ues());
  cfg.solver.seed = cfg.seed;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config.source.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::Gamma: return "gamma";
    case SweepVariable::GammaNotch: return "Gamma_notch";
    case SweepVariable::NTx: return "n_tx";
    case SweepVariable::NRf: return "n_rf";
  }
  return "unknown";
}

}  // namespace coisac::cli
