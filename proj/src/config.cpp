#include "riss/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace riss::harness {

Level Level::from_db(double db) { return {db, std::pow(10.0, db / 10.0)}; }

Level Level::from_dbm(double dbm) { return {dbm, std::pow(10.0, (dbm - 30.0) / 10.0)}; }

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("bad number for '" + std::string(key) + "': '" + std::string(v) + "'");
  return out;
}

long long to_int(std::string_view key, std::string_view v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("bad integer for '" + std::string(key) + "': '" + std::string(v) + "'");
  return out;
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

std::vector<Level> to_levels(std::string_view key, std::string_view v) {
  std::vector<Level> out;
  for (double db : to_doubles(key, v)) out.push_back(Level::from_db(db));
  return out;
}

std::vector<double> to_radians(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (double d : to_doubles(key, v)) out.push_back(deg_to_rad(d));
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for '" + std::string(key) + "': '" + std::string(v) + "'");
}

using Setter = std::function<void(ScenarioConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto integer = [](auto field) {
      return [field](ScenarioConfig& c, std::string_view k, std::string_view v) {
        field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(to_int(k, v));
      };
    };
    auto number = [](auto field) {
      return [field](ScenarioConfig& c, std::string_view k, std::string_view v) {
        field(c) = to_double(k, v);
      };
    };
    auto degrees = [](auto field) {
      return [field](ScenarioConfig& c, std::string_view k, std::string_view v) {
        field(c) = deg_to_rad(to_double(k, v));
      };
    };

    t["seed"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
      if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("bad seed for '" + std::string(k) + "'");
      c.seed = s;
    };
    t["geometry.n_x"] = integer([](ScenarioConfig& c) -> int& { return c.geometry.n_x; });
    t["geometry.n_y"] = integer([](ScenarioConfig& c) -> int& { return c.geometry.n_y; });
    t["geometry.hap_antennas"] = integer([](ScenarioConfig& c) -> int& { return c.hap_antennas; });
    t["distance.r2h_m"] = number([](ScenarioConfig& c) -> double& { return c.d_r2h; });
    t["distance.r2t_m"] = number([](ScenarioConfig& c) -> double& { return c.d_r2t; });
    t["distance.r2i_m"] = number([](ScenarioConfig& c) -> double& { return c.d_r2i; });
    t["power.uplink_mw"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.uplink_power = to_double(k, v) * 1e-3;
    };
    t["power.downlink_w"] = number([](ScenarioConfig& c) -> double& { return c.downlink_power; });
    t["power.receive"] = number([](ScenarioConfig& c) -> double& { return c.receive_power; });
    t["noise.dbm"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.noise = Level::from_dbm(to_double(k, v));
    };
    t["angle.azimuth_deg"] = degrees([](ScenarioConfig& c) -> double& { return c.azimuth; });
    t["angle.target_deg"] = degrees([](ScenarioConfig& c) -> double& { return c.target_elevation; });
    t["angle.interferers_deg"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.interferer_elevations = to_radians(k, v);
    };
    t["angle.hap_elevation_deg"] =
        degrees([](ScenarioConfig& c) -> double& { return c.hap_angles.elevation; });
    t["angle.hap_azimuth_deg"] =
        degrees([](ScenarioConfig& c) -> double& { return c.hap_angles.azimuth; });
    t["angle.hap_departure_deg"] =
        degrees([](ScenarioConfig& c) -> double& { return c.hap_angles.departure; });
    t["pathloss.ref_db"] =
        number([](ScenarioConfig& c) -> double& { return c.pathloss.ref_loss_db_at_1m; });
    t["pathloss.exponent"] = number([](ScenarioConfig& c) -> double& { return c.pathloss.exponent; });
    t["solver.tol"] = number([](ScenarioConfig& c) -> double& { return c.solver_tol; });
    t["solver.rank_one"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      if (v == "penalty") c.rank_one = uplink::RankOneMethod::penalty;
      else if (v == "irm") c.rank_one = uplink::RankOneMethod::irm;
      else if (v == "none") c.rank_one = uplink::RankOneMethod::none;
      else throw ConfigError("'" + std::string(k) + "' must be penalty, irm or none");
    };

    t["rician.kappa"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.rician.kappa = to_doubles(k, v);
    };
    t["rician.tau_db"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.rician.tau = to_levels(k, v);
    };
    t["rician.trials"] = integer([](ScenarioConfig& c) -> int& { return c.rician.trials; });

    t["error.xi_deg"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.error.xi_deg = to_doubles(k, v);
    };
    t["error.tau_db"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.error.tau = Level::from_db(to_double(k, v));
    };
    t["error.delta_deg"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.error.delta_deg = to_doubles(k, v);
    };
    t["error.grid_l"] = integer([](ScenarioConfig& c) -> int& { return c.error.grid_l; });
    t["error.applies_to"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      if (v == "target") c.error.applies_to = uplink::ErrorTarget::target;
      else if (v == "interferers") c.error.applies_to = uplink::ErrorTarget::interferers;
      else if (v == "both") c.error.applies_to = uplink::ErrorTarget::both;
      else throw ConfigError("'" + std::string(k) + "' must be target, interferers or both");
    };
    t["error.ali"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.error.ali = to_bool(k, v);
    };
    t["error.eli"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.error.eli = to_bool(k, v);
    };
    t["error.robust"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.error.robust = to_bool(k, v);
    };
    t["error.trials"] = integer([](ScenarioConfig& c) -> int& { return c.error.trials; });

    t["distance_tau.d_r2i_m"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.distance_tau.d_r2i = to_doubles(k, v);
    };
    t["distance_tau.tau_db"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.distance_tau.tau = to_levels(k, v);
    };

    t["wet.n_x"] = integer([](ScenarioConfig& c) -> int& { return c.wet.n_x; });
    t["wet.n_total"] = integer([](ScenarioConfig& c) -> int& { return c.wet.n_total; });
    t["wet.q_mj"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.wet.q = to_double(k, v) * 1e-3;
    };
    t["wet.rings_m"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.wet.rings = to_doubles(k, v);
    };
    t["wet.search.start"] = number([](ScenarioConfig& c) -> double& { return c.wet.search.interval_start; });
    t["wet.search.end"] = number([](ScenarioConfig& c) -> double& { return c.wet.search.interval_end; });
    t["wet.search.coarse"] = integer([](ScenarioConfig& c) -> int& { return c.wet.search.coarse_len; });
    t["wet.search.fine"] = integer([](ScenarioConfig& c) -> int& { return c.wet.search.fine_len; });
    t["wet.search.max_iters"] =
        integer([](ScenarioConfig& c) -> int& { return c.wet.search.max_fine_iters; });
    t["wet.search.guard_rad"] = number([](ScenarioConfig& c) -> double& { return c.wet.search.guard_delta; });
    t["wet.charging"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      if (v == "own_beam") c.wet.reading = wet::ChargingReading::own_beam;
      else if (v == "total_rotation") c.wet.reading = wet::ChargingReading::total_rotation;
      else throw ConfigError("'" + std::string(k) + "' must be own_beam or total_rotation");
    };
    t["wet_beams.devices"] = integer([](ScenarioConfig& c) -> int& { return c.wet.beams_devices; });
    t["wet_beams.max_beams"] = integer([](ScenarioConfig& c) -> int& { return c.wet.beams_max_n; });
    t["wet_beams.trials"] = integer([](ScenarioConfig& c) -> int& { return c.wet.beams_trials; });
    t["wet_sensing.max_per_beam"] = [](ScenarioConfig& c, std::string_view k, std::string_view v) {
      c.wet.sensing_max_per_beam.clear();
      for (auto item : split(v, ',')) c.wet.sensing_max_per_beam.push_back(static_cast<int>(to_int(k, item)));
    };
    t["wet_sensing.n_beams"] = integer([](ScenarioConfig& c) -> int& { return c.wet.sensing_n_beams; });
    t["wet_sensing.trials"] = integer([](ScenarioConfig& c) -> int& { return c.wet.sensing_trials; });
    return t;
  }();
  return table;
}

template <class T>
void require(bool ok, const T& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(geometry.n_x >= 1 && geometry.n_y >= 1, "geometry.n_x and geometry.n_y must be >= 1");
  require(hap_antennas >= 1, "geometry.hap_antennas must be >= 1");
  require(d_r2h >= 1.0 && d_r2t >= 1.0 && d_r2i >= 1.0, "distances must be >= 1 m");
  require(uplink_power > 0.0 && downlink_power > 0.0 && receive_power > 0.0,
          "powers must be positive");
  require(noise.linear > 0.0, "noise must be positive");
  require(!interferer_elevations.empty(), "angle.interferers_deg needs at least one angle");
  require(solver_tol > 0.0, "solver.tol must be positive");
  require(!rician.kappa.empty() && !rician.tau.empty(), "rician sweeps must be nonempty");
  for (double k : rician.kappa) require(k >= 0.0, "rician.kappa must be >= 0");
  require(rician.trials >= 1, "rician.trials must be >= 1");
  require(!error.xi_deg.empty(), "error.xi_deg must be nonempty");
  for (double x : error.xi_deg) require(x >= 0.0, "error.xi_deg must be >= 0");
  for (double d : error.delta_deg) require(d >= 0.0, "error.delta_deg must be >= 0");
  require(error.grid_l >= 1, "error.grid_l must be >= 1");
  require(error.trials >= 1, "error.trials must be >= 1");
  require(!distance_tau.d_r2i.empty() && !distance_tau.tau.empty(),
          "distance_tau sweeps must be nonempty");
  for (double d : distance_tau.d_r2i) require(d >= 1.0, "distance_tau.d_r2i_m must be >= 1");
  require(wet.n_x >= 2 && wet.n_total >= 1, "wet.n_x must be >= 2 and wet.n_total >= 1");
  require(wet.q > 0.0, "wet.q_mj must be positive");
  require(!wet.rings.empty(), "wet.rings_m must be nonempty");
  for (double r : wet.rings) require(r >= 1.0, "wet.rings_m must be >= 1");
  try {
    wet.search.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("wet.search: ") + e.what());
  }
  require(wet.beams_devices >= 1 && wet.beams_trials >= 1 && wet.beams_max_n >= 1,
          "wet_beams settings must be >= 1");
  require(!wet.sensing_max_per_beam.empty(), "wet_sensing.max_per_beam must be nonempty");
  for (int m : wet.sensing_max_per_beam) require(m >= 1, "wet_sensing.max_per_beam must be >= 1");
  require(wet.sensing_n_beams >= 1 && wet.sensing_trials >= 1, "wet_sensing settings must be >= 1");
  try {
    validate_angles(hap_angles);
    validate_angles({azimuth, target_elevation, 0.0});
    for (double e : interferer_elevations) validate_angles({azimuth, e, 0.0});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ScenarioConfig default_config() { return ScenarioConfig{}; }

ScenarioConfig parse_config(std::string_view text, ScenarioConfig base) {
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    if (value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + std::string(key) + "'");
    it->second(base, key, value);
  }
  base.validate();
  return base;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_full_scale(ScenarioConfig& c) {
  c.geometry = {16, 16};
  c.rician.trials = 20;
  c.rician.kappa = {0.0, 10.0, 1e12};
  c.error.trials = 20;
  c.error.xi_deg = {0.0, 1.0, 2.0, 4.0, 8.0};
  c.error.delta_deg = {1.0};
  c.distance_tau.tau = {Level::from_db(-10), Level::from_db(5), Level::from_db(20),
                        Level::from_db(35)};
}

void set_trials(ScenarioConfig& c, std::string_view experiment, int trials) {
  if (trials < 1) throw ConfigError("--trials must be >= 1");
  if (experiment == "uplink-rician") c.rician.trials = trials;
  else if (experiment == "uplink-error") c.error.trials = trials;
  else if (experiment == "wet-beams") c.wet.beams_trials = trials;
  else if (experiment == "wet-sensing") c.wet.sensing_trials = trials;
  // uplink-distance-tau is deterministic and has no trials
}

std::string canonical_dump(const ScenarioConfig& c) {
  std::ostringstream o;
  auto list = [&](const char* key, const auto& v, auto get) {
    o << key << '=';
    for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << format_double(get(v[i]));
    o << '\n';
  };
  auto same = [](double x) { return x; };
  auto db = [](const Level& l) { return l.db; };
  auto kv = [&](const char* key, double v) { o << key << '=' << format_double(v) << '\n'; };
  o << "seed=" << c.seed << '\n';
  kv("geometry.n_x", c.geometry.n_x);
  kv("geometry.n_y", c.geometry.n_y);
  kv("geometry.hap_antennas", c.hap_antennas);
  kv("distance.r2h_m", c.d_r2h);
  kv("distance.r2t_m", c.d_r2t);
  kv("distance.r2i_m", c.d_r2i);
  kv("power.uplink_w", c.uplink_power);
  kv("power.downlink_w", c.downlink_power);
  kv("power.receive", c.receive_power);
  kv("noise.dbm", c.noise.db);
  kv("angle.azimuth", c.azimuth);
  kv("angle.target", c.target_elevation);
  list("angle.interferers", c.interferer_elevations, same);
  kv("angle.hap_azimuth", c.hap_angles.azimuth);
  kv("angle.hap_elevation", c.hap_angles.elevation);
  kv("angle.hap_departure", c.hap_angles.departure);
  kv("pathloss.ref_db", c.pathloss.ref_loss_db_at_1m);
  kv("pathloss.exponent", c.pathloss.exponent);
  kv("solver.tol", c.solver_tol);
  kv("solver.rank_one", static_cast<int>(c.rank_one));
  list("rician.kappa", c.rician.kappa, same);
  list("rician.tau_db", c.rician.tau, db);
  kv("rician.trials", c.rician.trials);
  list("error.xi_deg", c.error.xi_deg, same);
  kv("error.tau_db", c.error.tau.db);
  list("error.delta_deg", c.error.delta_deg, same);
  kv("error.grid_l", c.error.grid_l);
  kv("error.applies_to", static_cast<int>(c.error.applies_to));
  kv("error.ali", c.error.ali);
  kv("error.eli", c.error.eli);
  kv("error.robust", c.error.robust);
  kv("error.trials", c.error.trials);
  list("distance_tau.d_r2i_m", c.distance_tau.d_r2i, same);
  list("distance_tau.tau_db", c.distance_tau.tau, db);
  kv("wet.n_x", c.wet.n_x);
  kv("wet.n_total", c.wet.n_total);
  kv("wet.q", c.wet.q);
  list("wet.rings_m", c.wet.rings, same);
  kv("wet.search.start", c.wet.search.interval_start);
  kv("wet.search.end", c.wet.search.interval_end);
  kv("wet.search.coarse", c.wet.search.coarse_len);
  kv("wet.search.fine", c.wet.search.fine_len);
  kv("wet.search.max_iters", c.wet.search.max_fine_iters);
  kv("wet.search.guard_rad", c.wet.search.guard_delta);
  kv("wet.charging", static_cast<int>(c.wet.reading));
  kv("wet_beams.devices", c.wet.beams_devices);
  kv("wet_beams.max_beams", c.wet.beams_max_n);
  kv("wet_beams.trials", c.wet.beams_trials);
  list("wet_sensing.max_per_beam", c.wet.sensing_max_per_beam, [](int v) { return double(v); });
  kv("wet_sensing.n_beams", c.wet.sensing_n_beams);
  kv("wet_sensing.trials", c.wet.sensing_trials);
  return o.str();
}

}  // namespace riss::harness
