#include "dualmesh/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace dualmesh::sim {

ScenarioParseError::ScenarioParseError(int line_no, std::string field_name,
                                       const std::string& message)
    : std::runtime_error("scenario line " + std::to_string(line_no) + " (" +
                         field_name + "): " + message),
      line(line_no),
      field(std::move(field_name)) {}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double parse_number(const std::string& v, int line, const std::string& key) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ScenarioParseError(line, key, "expected a number, got '" + v + "'");
  return d;
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ScenarioParseError(line, key, "expected true/false, got '" + v + "'");
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig cfg;
  cfg.traffic.rate_per_node_per_min = 0.0;

  std::stringstream ss(text);
  std::string raw;
  std::string section;
  int line_no = 0;

  while (std::getline(ss, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ScenarioParseError(line_no, line, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "scenario" && section != "radio.ble" &&
          section != "radio.lora" && section != "backbone" &&
          section != "traffic" && section != "nodes" && section != "inject" &&
          section != "battery")
        throw ScenarioParseError(line_no, section, "unknown section");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioParseError(line_no, line, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ScenarioParseError(line_no, key, "key before any [section]");

    auto num = [&]() { return parse_number(value, line_no, key); };
    auto boolean = [&]() { return parse_bool(value, line_no, key); };

    if (section == "scenario") {
      if (key == "duration") cfg.duration_s = num();
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(num());
      else if (key == "airtime_mode") {
        if (value == "paper") cfg.airtime_mode = AirtimeMode::PaperConstants;
        else if (value == "formula") cfg.airtime_mode = AirtimeMode::Formula;
        else
          throw ScenarioParseError(line_no, key, "must be paper or formula");
      } else if (key == "payload_bytes")
        cfg.payload_bytes = static_cast<int>(num());
      else if (key == "beacon_interval") cfg.beacon_interval_s = num();
      else if (key == "ble_channels") cfg.ble_channels = static_cast<int>(num());
      else
        throw ScenarioParseError(line_no, key, "unknown key in [scenario]");
    } else if (section == "radio.ble") {
      if (key == "range") cfg.ble_range_m = num();
      else if (key == "airtime") cfg.ble_airtime_s = num();
      else if (key == "tx_power_mw") cfg.ble_tx_mw = num();
      else
        throw ScenarioParseError(line_no, key, "unknown key in [radio.ble]");
    } else if (section == "radio.lora") {
      if (key == "range") cfg.lora_range_m = num();
      else if (key == "airtime") cfg.lora_airtime_s = num();
      else if (key == "tx_power_mw") cfg.lora_tx_mw = num();
      else if (key == "listen_active_ma") cfg.lora_listen_active_ma = num();
      else if (key == "supply_voltage") cfg.supply_voltage = num();
      else if (key == "sf") cfg.lora_phy.spreading_factor = static_cast<int>(num());
      else if (key == "bandwidth") cfg.lora_phy.bandwidth_hz = num();
      else if (key == "coding_rate")
        cfg.lora_phy.coding_rate_index = static_cast<int>(num());
      else if (key == "preamble_symbols")
        cfg.lora_phy.preamble_symbols = static_cast<int>(num());
      else if (key == "explicit_header") cfg.lora_phy.explicit_header = boolean();
      else if (key == "crc") cfg.lora_phy.crc_on = boolean();
      else if (key == "low_data_rate_opt")
        cfg.lora_phy.low_data_rate_opt = boolean();
      else
        throw ScenarioParseError(line_no, key, "unknown key in [radio.lora]");
    } else if (section == "backbone") {
      if (key == "listen_period") cfg.backbone.listen_period_s = num();
      else if (key == "listen_window") cfg.backbone.listen_window_s = num();
      else if (key == "flush_timeout") cfg.backbone.flush_timeout_s = num();
      else if (key == "hop_limit")
        cfg.backbone.hop_limit = static_cast<std::uint8_t>(num());
      else if (key == "digest_period") cfg.backbone.digest_period_s = num();
      else
        throw ScenarioParseError(line_no, key, "unknown key in [backbone]");
    } else if (section == "traffic") {
      if (key == "beta") cfg.traffic.beta = num();
      else if (key == "rate_per_node")
        cfg.traffic.rate_per_node_per_min = num();
      else if (key == "start") cfg.traffic.start = num();
      else
        throw ScenarioParseError(line_no, key, "unknown key in [traffic]");
    } else if (section == "nodes") {
      if (key != "node")
        throw ScenarioParseError(line_no, key, "only 'node' entries allowed");
      const auto parts = split_list(value);
      if (parts.size() != 3)
        throw ScenarioParseError(line_no, key, "expected: node = id, x, y");
      NodePlacement p;
      p.id = static_cast<NodeId>(parse_number(parts[0], line_no, key));
      p.x = parse_number(parts[1], line_no, key);
      p.y = parse_number(parts[2], line_no, key);
      cfg.nodes.push_back(p);
    } else if (section == "inject") {
      if (key != "message")
        throw ScenarioParseError(line_no, key, "only 'message' entries allowed");
      const auto parts = split_list(value);
      if (parts.size() != 3)
        throw ScenarioParseError(line_no, key,
                                 "expected: message = time, src, dst");
      InjectedMessage m;
      m.time = parse_number(parts[0], line_no, key);
      m.src = static_cast<NodeId>(parse_number(parts[1], line_no, key));
      m.dst = static_cast<NodeId>(parse_number(parts[2], line_no, key));
      cfg.injections.push_back(m);
    } else if (section == "battery") {
      if (key != "set")
        throw ScenarioParseError(line_no, key, "only 'set' entries allowed");
      const auto parts = split_list(value);
      if (parts.size() != 3)
        throw ScenarioParseError(line_no, key,
                                 "expected: set = time, node, pct");
      BatteryEvent b;
      b.time = parse_number(parts[0], line_no, key);
      b.node = static_cast<NodeId>(parse_number(parts[1], line_no, key));
      b.pct = parse_number(parts[2], line_no, key);
      cfg.battery_events.push_back(b);
    }
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioParseError(line_no, "scenario", e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ScenarioParseError(0, path, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace dualmesh::sim
