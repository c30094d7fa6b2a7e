#include "guk/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace guk::scenario {
namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ScenarioError(key + ": " + what);
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

const json& require_object(const json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected an object");
  return doc;
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  require_object(obj, where);
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(join(where, key), "unknown key");
    }
  }
}

const json& member(const json& obj, const std::string& where, const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(join(where, key), "missing required key");
  return *it;
}

double number(const json& obj, const std::string& where, const std::string& key) {
  const json& v = member(obj, where, key);
  if (!v.is_number()) fail(join(where, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(join(where, key), "expected a finite number");
  return x;
}

double number_or(const json& obj, const std::string& where, const std::string& key, double fallback) {
  return obj.contains(key) ? number(obj, where, key) : fallback;
}

std::string text(const json& obj, const std::string& where, const std::string& key) {
  const json& v = member(obj, where, key);
  if (!v.is_string()) fail(join(where, key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& obj, const std::string& where, const std::string& key) {
  const json& v = member(obj, where, key);
  if (!v.is_array()) fail(join(where, key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(join(where, key), "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Vec3<double> vec3(const json& obj, const std::string& where, const std::string& key) {
  const auto v = numbers(obj, where, key);
  if (v.size() != 3) fail(join(where, key), "expected 3 numbers");
  return {v[0], v[1], v[2]};
}

Rect<double> parse_rect(const json& obj, const std::string& where) {
  check_keys(obj, where, {"x_min", "x_max", "y_min", "y_max"});
  return {number(obj, where, "x_min"), number(obj, where, "x_max"), number(obj, where, "y_min"),
          number(obj, where, "y_max")};
}

json rect_json(const Rect<double>& r) {
  return {{"x_min", r.x_min}, {"x_max", r.x_max}, {"y_min", r.y_min}, {"y_max", r.y_max}};
}

std::string mode_name(sim::LeaderMode m) {
  return m == sim::LeaderMode::kPrescribed ? "prescribed" : "dynamic";
}
std::string mode_name(sim::ForceMode m) {
  return m == sim::ForceMode::kIdeal ? "ideal" : "actuated";
}

sim::LeaderMode parse_leader_mode(const std::string& s, const std::string& key) {
  if (s == "prescribed") return sim::LeaderMode::kPrescribed;
  if (s == "dynamic") return sim::LeaderMode::kDynamic;
  fail(key, "expected \"prescribed\" or \"dynamic\", got \"" + s + "\"");
}

sim::ForceMode parse_force_mode(const std::string& s, const std::string& key) {
  if (s == "ideal") return sim::ForceMode::kIdeal;
  if (s == "actuated") return sim::ForceMode::kActuated;
  fail(key, "expected \"ideal\" or \"actuated\", got \"" + s + "\"");
}

bool parse_switch(const std::string& s, const std::string& key) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  fail(key, "expected on|off, got \"" + s + "\"");
}

void parse_topology(const json& doc, sim::ScenarioConfig& c) {
  const std::string where = "topology";
  check_keys(doc, where, {"adjacency", "leader_links"});
  const auto links = numbers(doc, where, "leader_links");
  const auto adj = numbers(doc, where, "adjacency");
  const auto n = static_cast<Eigen::Index>(links.size());
  if (n == 0) fail("topology.leader_links", "at least one follower is required");
  if (static_cast<Eigen::Index>(adj.size()) != n * n) {
    fail("topology.adjacency", "expected n^2 = " + std::to_string(n * n) + " numbers (row-major)");
  }
  c.adjacency = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(adj.data(), n, n);
  c.leader_links = Eigen::Map<const sim::Vec>(links.data(), n);
}

void parse_robots(const json& doc, sim::ScenarioConfig& c) {
  const std::string where = "robots";
  check_keys(doc, where, {"params", "initial_states"});
  const Eigen::Index robots = c.leader_links.size() + 1;
  auto parse_params = [](const json& p, const std::string& w) {
    check_keys(p, w, {"m", "J", "l", "d"});
    return RobotParams<double>{number(p, w, "m"), number(p, w, "J"), number(p, w, "l"),
                               number(p, w, "d")};
  };
  const json& params = member(doc, where, "params");
  c.robots.clear();
  if (params.is_object()) {
    c.robots.assign(static_cast<std::size_t>(robots), parse_params(params, "robots.params"));
  } else if (params.is_array()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      c.robots.push_back(parse_params(params[i], "robots.params[" + std::to_string(i) + "]"));
    }
  } else {
    fail("robots.params", "expected an object or an array of objects");
  }
  const json& states = member(doc, where, "initial_states");
  if (!states.is_array()) fail("robots.initial_states", "expected an array");
  c.initial_states.clear();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string w = "robots.initial_states[" + std::to_string(i) + "]";
    check_keys(states[i], w, {"q", "qdot"});
    c.initial_states.push_back({vec3(states[i], w, "q"), vec3(states[i], w, "qdot")});
  }
}

RadiusSchedule<double> parse_radius(const json& doc) {
  const std::string where = "formation.radius";
  require_object(doc, where);
  const std::string type = text(doc, where, "type");
  if (type == "constant") {
    check_keys(doc, where, {"type", "value"});
    return ConstantRadius<double>{number(doc, where, "value")};
  }
  if (type == "piecewise") {
    check_keys(doc, where,
               {"type", "base", "amp1", "period1", "t_break", "amp2", "half_period2"});
    return PiecewiseRadius<double>{number(doc, where, "base"),    number(doc, where, "amp1"),
                                   number(doc, where, "period1"), number(doc, where, "t_break"),
                                   number(doc, where, "amp2"),    number(doc, where, "half_period2")};
  }
  fail("formation.radius.type", "expected \"constant\" or \"piecewise\", got \"" + type + "\"");
}

void parse_formation(const json& doc, sim::ScenarioConfig& c, const std::filesystem::path& base) {
  const std::string where = "formation";
  require_object(doc, where);
  const std::string type = text(doc, where, "type");
  const Eigen::Index n = c.leader_links.size();
  if (type == "circle") {
    check_keys(doc, where, {"type", "angular_rate", "phases", "radius"});
    CircleFormation<double> circle;
    circle.angular_rate = number(doc, where, "angular_rate");
    circle.phases = doc.contains("phases") ? numbers(doc, where, "phases")
                                           : evenly_spaced_phases<double>(n);
    circle.radius = parse_radius(member(doc, where, "radius"));
    c.formation = circle;
    c.formation_table_path.clear();
  } else if (type == "table") {
    check_keys(doc, where, {"type", "path"});
    c.formation_table_path = text(doc, where, "path");
    std::filesystem::path p(c.formation_table_path);
    if (p.is_relative() && !base.empty()) p = base / p;
    c.formation = read_formation_table(p, n);
  } else {
    fail("formation.type", "expected \"circle\" or \"table\", got \"" + type + "\"");
  }
}

void parse_leader(const json& doc, sim::ScenarioConfig& c) {
  const std::string where = "leader";
  check_keys(doc, where, {"type", "vx", "y_amplitude", "y_period", "heading", "x0", "y0"});
  const std::string type = text(doc, where, "type");
  if (type != "linear-sine") fail("leader.type", "expected \"linear-sine\", got \"" + type + "\"");
  c.leader.vx = number(doc, where, "vx");
  c.leader.y_amplitude = number(doc, where, "y_amplitude");
  c.leader.y_period = number(doc, where, "y_period");
  c.leader.heading = number_or(doc, where, "heading", 0.0);
  c.leader.x0 = number_or(doc, where, "x0", 0.0);
  c.leader.y0 = number_or(doc, where, "y0", 0.0);
}

void parse_region(const json& doc, sim::ScenarioConfig& c) {
  const std::string where = "region";
  check_keys(doc, where, {"enabled", "outer", "inner", "gamma1", "gamma2", "hysteresis"});
  const json& enabled = member(doc, where, "enabled");
  if (!enabled.is_boolean()) fail("region.enabled", "expected true or false");
  c.region_enabled = enabled.get<bool>();
  c.region.outer = parse_rect(member(doc, where, "outer"), "region.outer");
  c.region.inner = parse_rect(member(doc, where, "inner"), "region.inner");
  c.region.gamma1 = number_or(doc, where, "gamma1", 2.0);
  c.region.gamma2 = number_or(doc, where, "gamma2", 1.0);
  c.region.hysteresis = number_or(doc, where, "hysteresis", 0.0);
}

void parse_simulation(const json& doc, sim::ScenarioConfig& c) {
  const std::string where = "simulation";
  check_keys(doc, where, {"dt", "horizon", "leader_mode", "force_mode", "seed"});
  c.dt = number(doc, where, "dt");
  c.horizon = number(doc, where, "horizon");
  c.leader_mode = doc.contains("leader_mode")
                      ? parse_leader_mode(text(doc, where, "leader_mode"), "simulation.leader_mode")
                      : sim::LeaderMode::kPrescribed;
  c.force_mode = doc.contains("force_mode")
                     ? parse_force_mode(text(doc, where, "force_mode"), "simulation.force_mode")
                     : sim::ForceMode::kIdeal;
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      fail("simulation.seed", "expected a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
}

}  // namespace

sim::ScenarioConfig paper_preset() {
  sim::ScenarioConfig c;
  c.name = kPaperPreset;
  c.adjacency.resize(4, 4);
  c.adjacency << 0.0, 0.0, 0.0, 0.5,
                 0.6, 0.0, 0.3, 0.0,
                 0.0, 0.3, 0.0, 0.0,
                 0.5, 0.0, 0.3, 0.0;
  c.leader_links.resize(4);
  c.leader_links << 0.8, 0.0, 0.0, 0.0;
  c.robots.assign(5, RobotParams<double>{1.0, 1.0, 0.1, 0.05});
  // Rows are (x, y, θ) and (ẋ, ẏ, θ̇).
  c.initial_states = {
      {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}},
      {{-4.0, 4.0, 0.0}, {2.0, 0.0, 0.2}},
      {{-4.0, 2.0, kPi / 2}, {0.0, 2.0, 0.8}},
      {{-4.0, -2.0, kPi}, {-3.0, 0.0, 1.8}},
      {{-4.0, -4.0, 3 * kPi / 2}, {0.0, -4.0, 2.0}},
  };
  c.gains = {4.0, 0.5};
  CircleFormation<double> circle;
  circle.angular_rate = 0.6;
  circle.phases = {0.0, kPi / 2, kPi, 3 * kPi / 2};
  circle.radius = PiecewiseRadius<double>{4.0, 2.0, 500.0, 300.0, 2.0, 300.0};
  c.formation = circle;
  c.leader = {0.1, 3.0, 300.0, 0.0, 0.0, 0.0};
  c.region.outer = {-10.0, 50.0, -15.0, 15.0};
  c.region.inner = {-9.5, 49.5, -14.5, 14.5};
  c.region.gamma1 = 2.0;
  c.region.gamma2 = 1.0;
  c.region.hysteresis = 0.0;
  c.region_enabled = false;
  c.horizon = 470.0;
  c.dt = 0.01;
  return c;
}

bool is_preset(const std::string& name) { return name == kPaperPreset; }

sim::ScenarioConfig preset(const std::string& name) {
  if (name == kPaperPreset) return paper_preset();
  fail("preset", "unknown preset \"" + name + "\"");
}

json to_json(const sim::ScenarioConfig& c) {
  json doc;
  doc["name"] = c.name;
  std::vector<double> adj;
  for (Eigen::Index i = 0; i < c.adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.adjacency.cols(); ++j) adj.push_back(c.adjacency(i, j));
  }
  doc["topology"] = {{"adjacency", adj},
                     {"leader_links", std::vector<double>(c.leader_links.data(),
                                                          c.leader_links.data() + c.leader_links.size())}};
  json params = json::array();
  for (const auto& p : c.robots) {
    params.push_back({{"m", p.mass}, {"J", p.inertia}, {"l", p.half_track}, {"d", p.wheel_radius}});
  }
  json states = json::array();
  for (const auto& s : c.initial_states) {
    states.push_back({{"q", {s.q(0), s.q(1), s.q(2)}}, {"qdot", {s.qdot(0), s.qdot(1), s.qdot(2)}}});
  }
  doc["robots"] = {{"params", params}, {"initial_states", states}};
  doc["gains"] = {{"alpha", c.gains.alpha}, {"beta", c.gains.beta}};
  if (const auto* circle = std::get_if<CircleFormation<double>>(&c.formation)) {
    json radius;
    if (const auto* pr = std::get_if<PiecewiseRadius<double>>(&circle->radius)) {
      radius = {{"type", "piecewise"}, {"base", pr->base},       {"amp1", pr->amp1},
                {"period1", pr->period1}, {"t_break", pr->t_break}, {"amp2", pr->amp2},
                {"half_period2", pr->half_period2}};
    } else {
      radius = {{"type", "constant"}, {"value", std::get<ConstantRadius<double>>(circle->radius).value}};
    }
    doc["formation"] = {{"type", "circle"},
                        {"angular_rate", circle->angular_rate},
                        {"phases", circle->phases},
                        {"radius", radius}};
  } else {
    doc["formation"] = {{"type", "table"}, {"path", c.formation_table_path}};
  }
  doc["leader"] = {{"type", "linear-sine"},          {"vx", c.leader.vx},
                   {"y_amplitude", c.leader.y_amplitude}, {"y_period", c.leader.y_period},
                   {"heading", c.leader.heading},    {"x0", c.leader.x0},
                   {"y0", c.leader.y0}};
  doc["region"] = {{"enabled", c.region_enabled},   {"outer", rect_json(c.region.outer)},
                   {"inner", rect_json(c.region.inner)}, {"gamma1", c.region.gamma1},
                   {"gamma2", c.region.gamma2},     {"hysteresis", c.region.hysteresis}};
  doc["simulation"] = {{"dt", c.dt},
                       {"horizon", c.horizon},
                       {"leader_mode", mode_name(c.leader_mode)},
                       {"force_mode", mode_name(c.force_mode)},
                       {"seed", c.seed}};
  return doc;
}

sim::ScenarioConfig from_json(const json& input, const std::filesystem::path& base_dir) {
  check_keys(input, "", {"name", "preset", "topology", "robots", "gains", "formation", "leader",
                         "region", "simulation"});
  json doc = input;
  if (input.contains("preset")) {
    if (!input["preset"].is_string()) fail("preset", "expected a string");
    json merged = to_json(preset(input["preset"].get<std::string>()));
    json patch = input;
    patch.erase("preset");
    merged.merge_patch(patch);
    doc = merged;
  }
  for (const char* section : {"topology", "robots", "gains", "formation", "leader", "region",
                              "simulation"}) {
    if (!doc.contains(section)) fail(section, "missing required section");
  }

  sim::ScenarioConfig c;
  c.name = doc.contains("name") ? text(doc, "", "name") : std::string("custom");
  parse_topology(doc["topology"], c);
  parse_robots(doc["robots"], c);
  check_keys(doc["gains"], "gains", {"alpha", "beta"});
  c.gains = {number(doc["gains"], "gains", "alpha"), number(doc["gains"], "gains", "beta")};
  parse_formation(doc["formation"], c, base_dir);
  parse_leader(doc["leader"], c);
  parse_region(doc["region"], c);
  parse_simulation(doc["simulation"], c);
  try {
    sim::validate(c);
  } catch (const ScenarioError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ScenarioError(e.what());
  }
  return c;
}

sim::ScenarioConfig load_scenario(const std::string& path_or_preset) {
  if (is_preset(path_or_preset)) return preset(path_or_preset);
  const std::filesystem::path path(path_or_preset);
  std::ifstream in(path);
  if (!in) throw std::filesystem::filesystem_error("cannot open scenario file", path,
                                                   std::make_error_code(std::errc::no_such_file_or_directory));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("parse error: ") + e.what());
  }
  return from_json(doc, path.parent_path());
}

void apply_override(sim::ScenarioConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail("override", "expected key=value, got \"" + assignment + "\"");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  auto as_number = [&]() {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty() || !std::isfinite(x)) {
      fail("override." + key, "expected a number, got \"" + value + "\"");
    }
    return x;
  };
  if (key == "alpha") {
    c.gains.alpha = as_number();
  } else if (key == "beta") {
    c.gains.beta = as_number();
  } else if (key == "gamma1") {
    c.region.gamma1 = as_number();
  } else if (key == "gamma2") {
    c.region.gamma2 = as_number();
  } else if (key == "hysteresis") {
    c.region.hysteresis = as_number();
  } else if (key == "dt") {
    c.dt = as_number();
  } else if (key == "horizon") {
    c.horizon = as_number();
  } else if (key == "angular_rate") {
    auto* circle = std::get_if<CircleFormation<double>>(&c.formation);
    if (circle == nullptr) fail("override.angular_rate", "formation is not a circle");
    circle->angular_rate = as_number();
  } else if (key == "seed") {
    const double x = as_number();
    if (x < 0 || x != std::floor(x)) fail("override.seed", "expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(x);
  } else if (key == "region") {
    c.region_enabled = parse_switch(value, "override.region");
  } else if (key == "leader_mode") {
    c.leader_mode = parse_leader_mode(value, "override.leader_mode");
  } else if (key == "force_mode") {
    c.force_mode = parse_force_mode(value, "override.force_mode");
  } else {
    fail("override." + key, "unknown key");
  }
}

SampledFormation<double> read_formation_table(const std::filesystem::path& path,
                                              Eigen::Index followers) {
  std::ifstream in(path);
  if (!in) throw std::filesystem::filesystem_error("cannot open formation table", path,
                                                   std::make_error_code(std::errc::no_such_file_or_directory));
  const Eigen::Index dim = 3 * (followers + 1);
  const auto expected_cols = static_cast<std::size_t>(1 + 3 * dim);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail("formation.table", "line " + std::to_string(line_no) + ": not a number");
      }
    }
    if (row.size() != expected_cols) {
      fail("formation.table", "line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(expected_cols) + " columns (t, h, hdot, hddot)");
    }
    rows.push_back(std::move(row));
  }
  SampledFormation<double> table;
  const auto samples = static_cast<Eigen::Index>(rows.size());
  table.h.resize(dim, samples);
  table.hdot.resize(dim, samples);
  table.hddot.resize(dim, samples);
  for (Eigen::Index s = 0; s < samples; ++s) {
    const auto& row = rows[static_cast<std::size_t>(s)];
    table.times.push_back(row[0]);
    for (Eigen::Index r = 0; r < dim; ++r) {
      table.h(r, s) = row[static_cast<std::size_t>(1 + r)];
      table.hdot(r, s) = row[static_cast<std::size_t>(1 + dim + r)];
      table.hddot(r, s) = row[static_cast<std::size_t>(1 + 2 * dim + r)];
    }
  }
  return table;
}

}  // namespace guk::scenario
