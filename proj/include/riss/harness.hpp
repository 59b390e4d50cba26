// Experiment configuration, seeded Monte Carlo runners and CSV output.
#pragma once

#include "riss/uplink.hpp"
#include "riss/wet.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace riss::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A level given in dB in the config. The linear value is computed once at parse.
struct Level {
  double db = 0.0;
  double linear = 1.0;

  static Level from_db(double db);
  /// db holds dBm, linear holds watts.
  static Level from_dbm(double dbm);
};

struct RicianSweep {
  std::vector<double> kappa{0.0, 1.0, 10.0, 100.0, 1e12};
  std::vector<Level> tau{Level::from_db(-20), Level::from_db(0), Level::from_db(20),
                         Level::from_db(40)};
  int trials = 100;
};

struct ErrorSweep {
  std::vector<double> xi_deg{0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
  Level tau = Level::from_db(10);
  std::vector<double> delta_deg{1.0, 2.0};
  int grid_l = 11;
  uplink::ErrorTarget applies_to = uplink::ErrorTarget::both;
  bool ali = true;
  bool eli = true;
  bool robust = true;
  int trials = 100;
};

struct DistanceTauSweep {
  std::vector<double> d_r2i{10.0, 30.0, 100.0};
  std::vector<Level> tau{Level::from_db(-10), Level::from_db(-2.5), Level::from_db(5),
                         Level::from_db(12.5), Level::from_db(20), Level::from_db(27.5),
                         Level::from_db(35)};
};

struct WetConfig {
  int n_x = 16;            ///< elements along the steering axis
  int n_total = 256;       ///< N in P*N^2*M
  double q = 1.35e-3;      ///< J
  std::vector<double> rings{3.0, 5.0, 7.0};
  wet::ThresholdSearchParams search;
  wet::ChargingReading reading = wet::ChargingReading::own_beam;

  int beams_devices = 50;
  int beams_max_n = 30;    ///< plans with more beams are skipped
  int beams_trials = 100;

  std::vector<int> sensing_max_per_beam{10, 20, 30, 40, 50};
  int sensing_n_beams = 16;
  int sensing_trials = 500;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  UpaGeometry geometry{8, 8};
  int hap_antennas = 4;
  double d_r2h = 20.0;
  double d_r2t = 10.0;
  double d_r2i = 10.0;
  double uplink_power = 15.5e-3;  ///< W
  double downlink_power = 4.0;    ///< W
  double receive_power = 1.0;     ///< ||v||^2
  Level noise = Level::from_dbm(-80);
  AngleTriple hap_angles{kPi / 2, deg_to_rad(-30.0), 0.0};
  double azimuth = kPi / 2;
  double target_elevation = deg_to_rad(12.1);
  std::vector<double> interferer_elevations{deg_to_rad(21.3), deg_to_rad(-12.5)};
  PathLossModel pathloss;
  double solver_tol = 1e-7;
  uplink::RankOneMethod rank_one = uplink::RankOneMethod::penalty;

  RicianSweep rician;
  ErrorSweep error;
  DistanceTauSweep distance_tau;
  WetConfig wet;

  void validate() const;
};

ScenarioConfig default_config();

/// `key = value` lines, `#` comments, comma-separated lists. Keys are listed
/// in the README. Unknown keys and malformed values raise ConfigError.
ScenarioConfig parse_config(std::string_view text, ScenarioConfig base = default_config());
ScenarioConfig load_config(const std::filesystem::path& path);

/// Switches the uplink sweeps to N = 256 with coarser grids and fewer trials.
void apply_full_scale(ScenarioConfig& config);

/// Sets the trial count of one experiment.
void set_trials(ScenarioConfig& config, std::string_view experiment, int trials);

/// Stable text form of every setting, used for the manifest hash.
std::string canonical_dump(const ScenarioConfig& config);

std::uint64_t fnv1a(std::string_view text);

/// Independent stream per (seed, experiment, trial).
std::mt19937_64 trial_rng(std::uint64_t seed, std::string_view experiment, int trial);

/// The scenario the uplink runners start from.
uplink::UplinkScenario make_uplink_scenario(const ScenarioConfig& config);

struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string param;        ///< swept parameter names joined by ';'
  std::string param_value;  ///< matching values joined by ';'
  std::string metric;
  double value = 0.0;
  std::string trial;        ///< trial index or "aggregate"
};

bool operator==(const ResultRow& a, const ResultRow& b);

inline constexpr std::string_view kCsvHeader = "experiment,seed,param,param_value,metric,value,trial";

/// 17 significant digits, so a parse recovers the exact double.
std::string format_double(double v);

/// Header plus rows in sorted order.
std::string to_csv(std::vector<ResultRow> rows);
std::vector<ResultRow> parse_csv(std::string_view text);
void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

struct ExperimentResult {
  std::vector<ResultRow> rows;
  int cells = 0;
  int failed_cells = 0;

  double failure_rate() const { return cells > 0 ? static_cast<double>(failed_cells) / cells : 0.0; }
};

ExperimentResult run_capacity_vs_rician(const ScenarioConfig& config);
ExperimentResult run_capacity_vs_error(const ScenarioConfig& config);
ExperimentResult run_capacity_vs_distance_tau(const ScenarioConfig& config);
ExperimentResult run_wet_beams(const ScenarioConfig& config);
ExperimentResult run_wet_sensing_gain(const ScenarioConfig& config);

/// Subcommand names: uplink-rician, uplink-error, uplink-distance-tau,
/// wet-beams, wet-sensing.
const std::vector<std::string>& experiment_ids();
ExperimentResult run_experiment(std::string_view id, const ScenarioConfig& config);

/// Writes or updates `dir/manifest` with this experiment's hash and seed.
void write_manifest(const std::filesystem::path& dir, std::string_view experiment,
                    const ScenarioConfig& config);

std::string_view version();

}  // namespace riss::harness
