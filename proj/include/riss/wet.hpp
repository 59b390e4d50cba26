// Downlink energy transfer: 1-D beam patterns, beam stitching by threshold
// search, the nonlinear harvester and per-beam charging times.
#pragma once

#include "riss/array_channel.hpp"

#include <random>
#include <utility>
#include <vector>

namespace riss::wet {

/// Normalized array factor sin(N*x)/(N*sin(x)), x = pi/2*(sin(omega) - sin(direction)).
/// Signed; the peak and every grating point evaluate to +-1.
double beam_gain(double direction, double omega, int n_elements);

/// Half-width w in sin-space where |F|^2 falls to gamma on the main lobe:
/// |F(sin(direction) +- w)|^2 = gamma, 0 < w < 2/N.
double mainlobe_half_width(double gamma, int n_elements);

struct Beam {
  double direction = 0.0;
  double gamma = 0.5;
  double width_left = 0.0;   ///< toward smaller angles
  double width_right = 0.0;  ///< toward larger angles
};

/// Angle widths on each side of `direction` where |F|^2 >= gamma, clipped to
/// [-pi/2, pi/2]. Bisection from the peak outward until the bracket is below
/// scan_resolution.
std::pair<double, double> beam_widths(double direction, double gamma, int n_elements,
                                      double scan_resolution = 1e-9);

enum class StitchStart {
  edge_at_endfire,  ///< first beam's right gamma-edge at pi/2
  beam_at_endfire,  ///< first beam points at pi/2 (aliases onto -pi/2)
};

struct StitchResult {
  std::vector<double> directions;  ///< positive half, descending from pi/2
  double residual = 0.0;           ///< min(|B_obs|, |B_obs - B_R(0)|)
  double terminal_edge = 0.0;      ///< B_obs when the loop stopped
  bool center_beam = false;        ///< the gap near 0 is closed by a beam at 0
};

/// Places beams from endfire toward broadside so adjacent gamma-edges meet.
/// guard_delta is the slack under which the remaining strip counts as closed.
StitchResult stitch_beams(double gamma, int n_elements, double guard_delta = 1e-3,
                          StitchStart start = StitchStart::edge_at_endfire);

struct BeamPlan {
  std::vector<Beam> beams;         ///< sorted by direction
  int n_beams = 0;
  double coverage_residual = 0.0;  ///< widest angular gap between gamma-intervals
  int n_elements = 16;             ///< elements along the steering axis
};

/// Mirrors a half plan across broadside. A beam at +-pi/2 is kept once.
BeamPlan make_plan(const StitchResult& half, double gamma, int n_elements);

struct ThresholdSearchParams {
  double interval_start = 0.2;
  double interval_end = 0.8;
  int coarse_len = 200;
  int fine_len = 50;
  int max_fine_iters = 10;
  double guard_delta = 1e-3;
  StitchStart start = StitchStart::edge_at_endfire;

  void validate() const;
};

struct ThresholdPeak {
  double gamma = 0.0;
  double residual = 0.0;
  BeamPlan plan;
};

/// Coarse residual scan over gamma, peaks of 1/residual, then nested fine
/// scans. Peaks come back in increasing gamma.
std::vector<ThresholdPeak> threshold_search(const ThresholdSearchParams& params, int n_elements);

/// sum_j |F_j(omega)|^2 over every beam of the plan.
double total_gain(const BeamPlan& plan, double omega);

struct EhModel {
  double a = 132.8;
  double b = 0.01181;
  double m_s = 0.02337;

  double x() const;
  double y() const;
};

/// M_s/(X*(1+exp(-a(P-b)))) - Y.
double harvest(const EhModel& model, double input_power);

/// M_s - harvest(P), evaluated without cancellation. Strictly decreasing and
/// positive for every finite P; harvest() itself saturates to M_s in double.
double harvest_deficit(const EhModel& model, double input_power);

struct Device {
  double omega = 0.0;     ///< angle seen from the RISS
  double distance = 3.0;  ///< meters
};

struct DeviceCluster {
  std::vector<std::vector<Device>> per_beam;  ///< index matches plan.beams
  double q = 1.35e-3;                         ///< energy demand per device, J

  std::vector<int> counts() const;
};

struct WetLink {
  double tx_power = 4.0;
  int n_total = 256;      ///< passive elements, enters as N^2
  int hap_antennas = 4;
  double pathloss_h2r = 1.0;
  PathLossModel pathloss;
};

/// RF power a device receives while beam j is active.
double received_power(const BeamPlan& plan, std::size_t beam, const Device& device,
                      const WetLink& link);

/// Which beams count toward a device's received power.
enum class ChargingReading {
  total_rotation,  ///< sum over every beam of the plan (F_total)
  own_beam,        ///< only the beam the device is assigned to
};

/// T_j = max_i Q / (P N^2 M rho_H2R rho_R2U,ij * G_ij) with G_ij = F_total(omega_ij)
/// or |F_j(omega_ij)|^2 depending on the reading. Empty beams get 0.
std::vector<double> charging_times(const BeamPlan& plan, const DeviceCluster& clusters,
                                   const WetLink& link,
                                   ChargingReading reading = ChargingReading::total_rotation);

/// Harvested energy of each device, flattened beam by beam: sum_j f(P_in,ij) * T_j
/// over the rotation, or f(P_in,ij) * T_j for its own beam only.
std::vector<double> device_energies(const BeamPlan& plan, const DeviceCluster& clusters,
                                    const WetLink& link, const std::vector<double>& times,
                                    const EhModel& model = {},
                                    ChargingReading reading = ChargingReading::total_rotation);

/// Gamma-interval of beam j in angle, clipped to [-pi/2, pi/2].
std::pair<double, double> beam_interval(const BeamPlan& plan, std::size_t beam);

/// `total` devices spread over the plan: angle U[-pi/2, pi/2], radius from
/// `rings`, each assigned to the beam with the largest |F_j|^2 at its angle.
DeviceCluster deploy_uniform(const BeamPlan& plan, int total, const std::vector<double>& rings,
                             double q, std::mt19937_64& rng);

/// I_j ~ U{1..max_per_beam} per beam, angles uniform inside the beam's interval.
DeviceCluster deploy_per_beam(const BeamPlan& plan, int max_per_beam,
                              const std::vector<double>& rings, double q, std::mt19937_64& rng);

}  // namespace riss::wet
