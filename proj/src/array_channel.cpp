#include "riss/array_channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace riss {

namespace {

constexpr double kLosKappa = 1e12;

CVector phase_ramp(int length, double increment) {
  CVector out(length);
  for (int p = 0; p < length; ++p) {
    out(p) = std::polar(1.0, p * increment);
  }
  return out;
}

cdouble complex_normal(std::mt19937_64& rng) {
  // CN(0,1): each quadrature has variance 1/2.
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  const double re = gauss(rng);
  const double im = gauss(rng);
  return {re, im};
}

void check_kappa(double kappa) {
  if (!(kappa >= 0.0)) {
    throw std::invalid_argument("rician_mix: kappa must be >= 0, got " + std::to_string(kappa));
  }
}

}  // namespace

void UpaGeometry::validate() const {
  if (n_x < 1 || n_y < 1) {
    throw std::invalid_argument("UpaGeometry: n_x and n_y must be positive");
  }
}

void validate_angles(const AngleTriple& angles) {
  constexpr double slack = 1e-12;
  if (angles.azimuth < -slack || angles.azimuth > kPi + slack) {
    throw std::invalid_argument("azimuth outside [0, pi]");
  }
  if (std::abs(angles.elevation) > kPi / 2 + slack) {
    throw std::invalid_argument("elevation outside [-pi/2, pi/2]");
  }
  if (std::abs(angles.departure) > kPi / 2 + slack) {
    throw std::invalid_argument("departure outside [-pi/2, pi/2]");
  }
}

SpatialFrequencies spatial_frequencies(const AngleTriple& angles) {
  return {kPi * std::cos(angles.azimuth),
          kPi * std::sin(angles.azimuth) * std::sin(angles.elevation),
          kPi * std::sin(angles.departure)};
}

CVector steer_upa(const UpaGeometry& geom, double vartheta, double phi) {
  geom.validate();
  const CVector ax = phase_ramp(geom.n_x, phi);
  const CVector ay = phase_ramp(geom.n_y, vartheta);
  CVector out(geom.size());
  for (int p = 0; p < geom.n_x; ++p) {
    out.segment(p * geom.n_y, geom.n_y) = ax(p) * ay;
  }
  return out;
}

CVector steer_upa(const UpaGeometry& geom, const AngleTriple& angles) {
  const auto f = spatial_frequencies(angles);
  return steer_upa(geom, f.vartheta, f.phi);
}

CVector steer_ula(int m, double varpi) {
  if (m < 1) {
    throw std::invalid_argument("steer_ula: m must be >= 1");
  }
  return phase_ramp(m, varpi);
}

ChannelSet los_channels(const UpaGeometry& geom, int hap_antennas, const AngleTriple& angles_g,
                        const std::vector<AngleTriple>& angles_h) {
  if (angles_h.empty()) {
    throw std::invalid_argument("los_channels: need at least one source direction");
  }
  const auto fg = spatial_frequencies(angles_g);
  ChannelSet out;
  out.g = steer_upa(geom, fg.vartheta, fg.phi) * steer_ula(hap_antennas, fg.varpi).transpose();
  out.h.reserve(angles_h.size());
  for (const auto& a : angles_h) {
    out.h.push_back(steer_upa(geom, a));
  }
  out.pathloss_r2u.assign(angles_h.size(), 1.0);
  return out;
}

CMatrix rician_mix(const CMatrix& channel, double kappa, std::mt19937_64& rng) {
  check_kappa(kappa);
  if (kappa >= kLosKappa) {
    return channel;
  }
  const double los = std::sqrt(kappa / (1.0 + kappa));
  const double nlos = std::sqrt(1.0 / (1.0 + kappa));
  CMatrix out(channel.rows(), channel.cols());
  // Column-major fill keeps the draw order fixed for a given seed.
  for (Eigen::Index j = 0; j < channel.cols(); ++j) {
    for (Eigen::Index i = 0; i < channel.rows(); ++i) {
      out(i, j) = los * channel(i, j) + nlos * complex_normal(rng);
    }
  }
  return out;
}

CVector rician_mix(const CVector& channel, double kappa, std::mt19937_64& rng) {
  const CMatrix as_matrix = channel;
  return rician_mix(as_matrix, kappa, rng).col(0);
}

ChannelSet rician_channels(const ChannelSet& los, double kappa_g, double kappa_h,
                           std::mt19937_64& rng) {
  ChannelSet out = los;
  out.g = rician_mix(los.g, kappa_g, rng);
  for (auto& h : out.h) {
    h = rician_mix(h, kappa_h, rng);
  }
  return out;
}

double path_loss(const PathLossModel& model, double distance_m) {
  if (!(distance_m >= 1.0)) {
    throw std::invalid_argument("path_loss: distance below the 1 m reference");
  }
  return std::pow(10.0, -model.ref_loss_db_at_1m / 10.0) * std::pow(distance_m, -model.exponent);
}

}  // namespace riss
