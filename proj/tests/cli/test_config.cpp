#include <doctest.h>

#include <fstream>
#include <string>

#include "config.hpp"

using namespace coisac;
using namespace coisac::cli;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "scene": {"ap_positions_m": [[0, 0], [90, 0]], "ue_positions_m": [[20, 60], [70, 35]],
              "target_positions_m": [[33, 26]], "n_tx": 8, "n_rx": 8, "n_rf": 2}
  })");
}

std::string error_field(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("minimal config takes the defaults") {
  const ExperimentConfig cfg = parse_config(minimal());
  CHECK(cfg.scene.num_aps() == 2);
  CHECK(cfg.scene.tx_power_budget == doctest::Approx(100.0));
  CHECK(cfg.beampattern.grid_size == 61);
  CHECK(cfg.algorithm == Algorithm::Distributed);
  CHECK(cfg.seed == 1);
  CHECK(cfg.weights.size() == 2);
  CHECK_FALSE(cfg.sweep.has_value());
}

TEST_CASE("units are converted") {
  json doc = minimal();
  doc["scene"]["tx_power_dbm"] = 20.0;
  doc["scene"]["noise_comm_dbm"] = {-90.0, -80.0};
  doc["scene"]["ap_broadside_deg"] = {90.0, 0.0};
  doc["beampattern"] = {{"notch_budget_db", -30.0}, {"mainlobe_halfwidth_deg", 5.0}};
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.scene.tx_power_budget == doctest::Approx(100.0));
  CHECK(cfg.scene.comm_noise(1) == doctest::Approx(1e-8));
  CHECK(cfg.scene.broadside(1).x == doctest::Approx(1.0));
  CHECK(cfg.beampattern.notch_budget == doctest::Approx(1e-3));
  CHECK(cfg.beampattern.mainlobe_halfwidth == doctest::Approx(deg2rad(5.0)));
}

TEST_CASE("errors name the offending field") {
  json doc = minimal();
  doc["scene"]["n_rf"] = 1;
  CHECK(error_field(doc) == "scene.n_rf");

  doc = minimal();
  doc["scene"]["n_tx"] = "many";
  CHECK(error_field(doc) == "scene.n_tx");

  doc = minimal();
  doc["scene"]["tx_power_mw"] = 100;
  doc["scene"]["tx_power_dbm"] = 20;
  CHECK(error_field(doc) == "scene.tx_power_mw");

  doc = minimal();
  doc["scene"]["ue_positions_m"][1] = {1.0};
  CHECK(error_field(doc) == "scene.ue_positions_m[1]");

  doc = minimal();
  doc["scene"].erase("ap_positions_m");
  CHECK(error_field(doc) == "scene.ap_positions_m");

  doc = minimal();
  doc["solver"] = {{"rho", -1.0}};
  CHECK(error_field(doc) == "solver.rho");

  doc = minimal();
  doc["solver"] = {{"algorithm", "gossip"}};
  CHECK(error_field(doc) == "solver.algorithm");

  doc = minimal();
  doc["sweep"] = {{"variable", "gamma"}, {"values", json::array()}};
  CHECK(error_field(doc) == "sweep.values");

  doc = minimal();
  doc["sweep"] = {{"variable", "n_tx"}, {"values", {8, 12.5}}};
  CHECK(error_field(doc) == "sweep.values");

  doc = minimal();
  doc["sweep"] = {{"variable", "gamma"}, {"values", {1}}, {"trials", 0}};
  CHECK(error_field(doc) == "sweep.trials");

  doc = minimal();
  doc["detection"] = {{"pr_fa", {0.1, 1.5}}};
  CHECK(error_field(doc) == "detection.pr_fa");

  doc = minimal();
  doc["beampattern"] = {{"gird_size", 61}};
  CHECK(error_field(doc) == "beampattern.gird_size");

  doc = minimal();
  doc["extra"] = 1;
  CHECK(error_field(doc) == "extra");

  CHECK(error_field(json::array()) == "<root>");
}

TEST_CASE("config hash is stable and content sensitive") {
  const ExperimentConfig a = parse_config(minimal());
  const ExperimentConfig b = parse_config(json::parse(minimal().dump()));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  json doc = minimal();
  doc["scene"]["n_tx"] = 9;
  CHECK(config_hash(parse_config(doc)) != config_hash(a));
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"scenario1.json", "tdd_single_ap.json", "sweep_notch.json", "sweep_gamma.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(std::string(COISAC_CONFIG_DIR) + "/" + name));
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
