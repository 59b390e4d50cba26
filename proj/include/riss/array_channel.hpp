// Array geometry, steering vectors and channel construction for a RISS with a
// uniform planar array of passive elements and a ULA at the hybrid access point.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace riss {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Physical incidence angles of a source, in radians.
struct AngleTriple {
  double azimuth = kPi / 2;  ///< [0, pi]
  double elevation = 0.0;    ///< [-pi/2, pi/2]
  double departure = 0.0;    ///< [-pi/2, pi/2]
};

/// Array-domain phase increments for half-wavelength spacing.
struct SpatialFrequencies {
  double phi = 0.0;      ///< x-axis increment, pi*cos(azimuth)
  double vartheta = 0.0; ///< y-axis increment, pi*sin(azimuth)*sin(elevation)
  double varpi = 0.0;    ///< ULA increment, pi*sin(departure)
};

/// Passive-element layout: N = n_x * n_y elements at half-wavelength spacing.
struct UpaGeometry {
  int n_x = 16;
  int n_y = 16;

  int size() const { return n_x * n_y; }
  void validate() const;
};

/// Log-distance path loss anchored at 1 m.
struct PathLossModel {
  double ref_loss_db_at_1m = 30.0;
  double exponent = 2.2;
};

/// HAP<->RISS matrix and RISS<->source vectors. h[0] is the target.
struct ChannelSet {
  CMatrix g;                        ///< N x M
  std::vector<CVector> h;           ///< each length N
  double pathloss_h2r = 1.0;        ///< linear gain
  std::vector<double> pathloss_r2u; ///< linear gain per entry of h
};

SpatialFrequencies spatial_frequencies(const AngleTriple& angles);

/// Validates the angle ranges; throws std::invalid_argument.
void validate_angles(const AngleTriple& angles);

/// alpha_x(phi) (x) alpha_y(vartheta): element (p, q) sits at index p*n_y + q,
/// so the y index runs fastest.
CVector steer_upa(const UpaGeometry& geom, double vartheta, double phi);

/// beta(varpi): entry p equals exp(i*p*varpi).
CVector steer_ula(int m, double varpi);

/// UPA response toward a physical direction.
CVector steer_upa(const UpaGeometry& geom, const AngleTriple& angles);

ChannelSet los_channels(const UpaGeometry& geom, int hap_antennas, const AngleTriple& angles_g,
                        const std::vector<AngleTriple>& angles_h);

/// Rician mixture sqrt(k/(1+k))*channel + sqrt(1/(1+k))*CN(0,1) noise.
/// kappa >= 1e12 is treated as the pure line-of-sight limit and returns the input.
CMatrix rician_mix(const CMatrix& channel, double kappa, std::mt19937_64& rng);
CVector rician_mix(const CVector& channel, double kappa, std::mt19937_64& rng);

/// Applies the Rician mixture to G and every h_k with independent draws.
ChannelSet rician_channels(const ChannelSet& los, double kappa_g, double kappa_h,
                           std::mt19937_64& rng);

double path_loss(const PathLossModel& model, double distance_m);

}  // namespace riss
