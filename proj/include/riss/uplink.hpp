// Uplink WIT: aligned and interference-eliminating RISS phase designs and
// SINR evaluation at the HAP.
#pragma once

#include "riss/array_channel.hpp"
#include "riss/sdp.hpp"

#include <random>
#include <vector>

namespace riss::uplink {

struct Source {
  AngleTriple angles;
  double distance = 10.0;   ///< meters to the RISS
  double tx_power = 15.5e-3;
};

struct UplinkScenario {
  UpaGeometry geometry;
  int hap_antennas = 4;
  AngleTriple angles_g;     ///< HAP seen from the RISS
  double distance_r2h = 20.0;
  Source target;
  std::vector<Source> interferers;
  double noise_power = 1e-11;
  std::vector<double> suppression_caps;  ///< tau_k, linear; one entry is broadcast
  double receive_power = 1.0;            ///< ||v||^2
  PathLossModel pathloss;

  void validate() const;
  double cap_for(std::size_t k) const;
};

/// Directions the designer believes in. Interferer order matches the scenario.
struct EstimatedAngles {
  AngleTriple g;
  AngleTriple target;
  std::vector<AngleTriple> interferers;
};

struct PhaseConfig {
  CVector theta;  ///< diagonal of Theta, unit modulus
  CVector v;      ///< HAP combiner, ||v||^2 = P
};

enum class ErrorTarget { target, interferers, both };

struct SensingError {
  double xi = 0.0;  ///< half-width of the uniform elevation error, radians
  ErrorTarget applies_to = ErrorTarget::both;
};

struct SinrReport {
  double signal_power = 0.0;
  std::vector<double> interference_powers;
  double sinr = 0.0;
  double capacity = 0.0;
};

enum class RankOneMethod {
  irm,          ///< literal IRM with the r*I - V^H C V LMI
  penalty,      ///< principal-direction trace penalty, one relaxation per step
  none,         ///< round the relaxation directly
};

struct DesignOptions {
  sdp::SolverOptions solver{1e-7};
  sdp::IrmParams irm;
  RankOneMethod rank_one = RankOneMethod::penalty;
  /// Minimum-norm phase correction that pulls violated caps back below tau
  /// after the unit-modulus projection.
  bool polish = true;
};

struct DesignResult {
  PhaseConfig config;
  sdp::SolveStatus status = sdp::SolveStatus::max_iters;
  double relaxation_bound = 0.0;  ///< tr(C A_d) of the SDR, an upper bound
  double rank_ratio = 0.0;        ///< lambda_max / trace of the C that was rounded
  double rank_one_defect = 0.0;   ///< max_n | |c_n|/sqrt(MP) - 1 | before projection
  int refine_iterations = 0;
  bool polished = false;
  double worst_cap_ratio = 0.0;   ///< max_k achieved / tau_k under estimated LoS channels
};

EstimatedAngles true_angles(const UplinkScenario& scenario);

/// Adds independent U[-xi, xi] errors to the estimated elevations.
EstimatedAngles perturb(const EstimatedAngles& angles, const SensingError& error,
                        std::mt19937_64& rng);

/// LoS channels from the scenario's true angles with path losses filled in.
ChannelSet scenario_channels(const UplinkScenario& scenario);

/// Theta_ALI and the matched combiner.
PhaseConfig aligned_design(const UplinkScenario& scenario, const EstimatedAngles& est);

/// True when the aligned pattern has an exact null toward `interferer`.
bool orthogonality_check(const AngleTriple& target, const AngleTriple& interferer,
                         const UpaGeometry& geom);

/// P*M*|D_x(dphi)|^2*|D_y(dvartheta)|^2 with D the unnormalized Dirichlet kernel.
double interference_power_closed(const AngleTriple& target, const AngleTriple& interferer,
                                 const UpaGeometry& geom, int m, double p);

/// |v^T G^T Theta h|^2 without path loss.
double reflected_gain(const PhaseConfig& config, const CMatrix& g, const CVector& h);

DesignResult build_eli(const UplinkScenario& scenario, const EstimatedAngles& est,
                       const DesignOptions& options = {});

/// Each interferer becomes grid_l caps spread over elevation +-delta.
DesignResult build_robust(const UplinkScenario& scenario, const EstimatedAngles& est,
                          double delta, int grid_l, const DesignOptions& options = {});

SinrReport evaluate_sinr(const UplinkScenario& scenario, const PhaseConfig& config,
                         const ChannelSet& channels);

/// Suppression threshold in dB that roughly maximizes capacity.
double tau_heuristic(double noise_power, double interferer_tx, double cascaded_pathloss);

}  // namespace riss::uplink
