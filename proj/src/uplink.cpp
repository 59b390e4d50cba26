#include "riss/uplink.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riss::uplink {

namespace {

double dirichlet_sq(int n, double delta) {
  const double den = std::sin(0.5 * delta);
  if (std::abs(den) < 1e-12) return static_cast<double>(n) * n;
  const double r = std::sin(0.5 * n * delta) / den;
  return r * r;
}

// n*spacing for a positive integer n that is not an alias of zero phase.
bool on_null_lattice(double diff, int n_elems) {
  const double x = std::abs(diff) * n_elems / 2.0;
  const double n = std::round(x);
  if (n < 1.0) return false;
  if (std::fmod(n, static_cast<double>(n_elems)) == 0.0) return false;
  return std::abs(std::abs(diff) - 2.0 * n / n_elems) <= 1e-9;
}

CVector combiner(const UplinkScenario& sc, const AngleTriple& g_angles) {
  const CVector beta = steer_ula(sc.hap_antennas, spatial_frequencies(g_angles).varpi);
  return std::sqrt(sc.receive_power) * beta.conjugate() / beta.norm();
}

AngleTriple with_elevation(AngleTriple a, double ele) {
  a.elevation = std::clamp(ele, -kPi / 2, kPi / 2);
  return a;
}

struct CapSpec {
  CVector h;
  double tau;
};

// Minimum-norm Gauss-Newton steps on the phases until every |theta^T h_k|^2
// scaled by diag_value sits below its cap. Returns false if it gave up.
bool polish_phases(CVector& theta, const std::vector<CapSpec>& caps, double diag_value) {
  constexpr double margin = 1.0 - 1e-4;
  auto worst = [&](const CVector& t) {
    double w = 0.0;
    for (const auto& c : caps) {
      const double g = diag_value * std::norm(t.cwiseProduct(c.h).sum());
      w = std::max(w, c.tau > 0.0 ? g / c.tau : (g > 0.0 ? 1e300 : 0.0));
    }
    return w;
  };
  double current = worst(theta);
  for (int iter = 0; iter < 100 && current > margin; ++iter) {
    std::vector<Eigen::Index> rows;
    for (std::size_t k = 0; k < caps.size(); ++k) {
      const double g = diag_value * std::norm(theta.cwiseProduct(caps[k].h).sum());
      if (g > 0.5 * caps[k].tau) rows.push_back(static_cast<Eigen::Index>(k));
    }
    const auto n = theta.size();
    const auto r = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd jac(2 * r, n);
    Eigen::VectorXd res(2 * r);
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto& c = caps[static_cast<std::size_t>(rows[i])];
      const CVector d = cdouble(0.0, 1.0) * theta.cwiseProduct(c.h);
      const cdouble s = theta.cwiseProduct(c.h).sum();
      const double g = diag_value * std::norm(s);
      const double t = g > 0.0 ? std::min(1.0, std::sqrt(margin * margin * c.tau / g)) : 1.0;
      const cdouble want = s * t - s;
      jac.row(2 * i) = d.real().transpose();
      jac.row(2 * i + 1) = d.imag().transpose();
      res(2 * i) = want.real();
      res(2 * i + 1) = want.imag();
    }
    Eigen::MatrixXd gram = jac * jac.transpose();
    gram.diagonal().array() += 1e-12 * std::max(1.0, gram.diagonal().maxCoeff());
    const Eigen::VectorXd step = jac.transpose() * gram.ldlt().solve(res);

    bool improved = false;
    for (double scale = 1.0; scale > 1e-4; scale *= 0.5) {
      CVector trial(n);
      for (Eigen::Index j = 0; j < n; ++j) trial(j) = theta(j) * std::polar(1.0, scale * step(j));
      const double w = worst(trial);
      if (w < current) {
        theta = trial;
        current = w;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return current <= 1.0;
}

DesignResult design_with_caps(const UplinkScenario& sc, const EstimatedAngles& est,
                              const std::vector<CapSpec>& caps, const DesignOptions& opt) {
  const auto& geom = sc.geometry;
  const int n = geom.size();
  const double dv = sc.receive_power * sc.hap_antennas;
  const CVector hd = steer_upa(geom, est.target);
  const CVector alpha_g = steer_upa(geom, est.g);

  DesignResult out;
  out.config.v = combiner(sc, est.g);

  // A source sitting exactly on the target direction cannot be suppressed
  // without killing the target, so the design is rejected outright.
  const double full = dv * static_cast<double>(n) * n;
  for (const auto& c : caps) {
    const double overlap = std::norm(hd.dot(c.h));
    if (overlap >= (1.0 - 1e-12) * hd.squaredNorm() * c.h.squaredNorm() && c.tau < full) {
      out.config.theta = (alpha_g.cwiseProduct(hd)).conjugate();
      out.status = sdp::SolveStatus::infeasible;
      return out;
    }
  }

  sdp::StructuredSdp pr;
  // theta^T h = h^T theta; with C = conj(c) c^T this is tr(C h h^H).
  pr.objective = hd * hd.adjoint();
  pr.diag_value = dv;
  for (const auto& c : caps) pr.trace_caps.push_back({c.h, c.tau});

  sdp::PsdSolution sol = sdp::solve_sdr(pr, opt.solver);
  out.relaxation_bound = sol.objective_value;
  out.status = sol.status;
  if (sol.status == sdp::SolveStatus::infeasible) {
    out.config.theta = (alpha_g.cwiseProduct(hd)).conjugate();
    return out;
  }
  out.rank_ratio = sdp::rank_one_ratio(sol.c_matrix);
  if (out.rank_ratio < sdp::kRankOneThreshold && opt.rank_one != RankOneMethod::none) {
    const auto irm = opt.rank_one == RankOneMethod::irm
                         ? sdp::irm_refine(pr, sol, opt.irm, opt.solver)
                         : sdp::penalty_refine(pr, sol, opt.irm, opt.solver);
    out.refine_iterations = irm.iterations;
    if (irm.solution.status != sdp::SolveStatus::infeasible) sol = irm.solution;
    out.status = irm.solution.status;
    out.rank_ratio = sdp::rank_one_ratio(sol.c_matrix);
  } else if (out.rank_ratio < sdp::kRankOneThreshold) {
    out.status = sdp::SolveStatus::max_iters;
  }

  const auto [lambda, u] = sdp::principal_component(sol.c_matrix);
  // Top eigenvector is proportional to conj(c), so theta_h = conj(u)/|u|.
  CVector theta_h(n);
  double defect = 0.0;
  for (int i = 0; i < n; ++i) {
    const double mag = std::abs(u(i));
    defect = std::max(defect, std::abs(std::sqrt(std::max(lambda, 0.0)) * mag / std::sqrt(dv) - 1.0));
    theta_h(i) = mag > 0.0 ? std::conj(u(i)) / mag : cdouble(1.0, 0.0);
  }
  out.rank_one_defect = defect;

  if (opt.polish && !caps.empty()) {
    double worst = 0.0;
    for (const auto& c : caps) {
      const double g = dv * std::norm(theta_h.cwiseProduct(c.h).sum());
      worst = std::max(worst, c.tau > 0.0 ? g / c.tau : g);
    }
    if (worst > 1.0) {
      polish_phases(theta_h, caps, dv);
      out.polished = true;
    }
  }

  out.config.theta = alpha_g.conjugate().cwiseProduct(theta_h);
  const CMatrix g_est = alpha_g * steer_ula(sc.hap_antennas, spatial_frequencies(est.g).varpi).transpose();
  for (const auto& c : caps) {
    const double gain = reflected_gain(out.config, g_est, c.h);
    out.worst_cap_ratio =
        std::max(out.worst_cap_ratio, c.tau > 0.0 ? gain / c.tau : (gain > 0.0 ? 1e300 : 0.0));
  }
  return out;
}

}  // namespace

void UplinkScenario::validate() const {
  geometry.validate();
  if (hap_antennas < 1) throw std::invalid_argument("UplinkScenario: hap_antennas must be >= 1");
  if (!(noise_power > 0.0)) throw std::invalid_argument("UplinkScenario: noise_power must be > 0");
  if (!(receive_power > 0.0)) throw std::invalid_argument("UplinkScenario: receive_power must be > 0");
  for (double t : suppression_caps) {
    if (!(t >= 0.0)) throw std::invalid_argument("UplinkScenario: caps must be >= 0");
  }
  if (!interferers.empty() && suppression_caps.size() != 1 &&
      suppression_caps.size() != interferers.size()) {
    throw std::invalid_argument("UplinkScenario: need one cap or one per interferer");
  }
  validate_angles(angles_g);
  validate_angles(target.angles);
  for (const auto& s : interferers) validate_angles(s.angles);
}

double UplinkScenario::cap_for(std::size_t k) const {
  if (suppression_caps.empty()) throw std::invalid_argument("UplinkScenario: no caps given");
  return suppression_caps.size() == 1 ? suppression_caps[0] : suppression_caps.at(k);
}

EstimatedAngles true_angles(const UplinkScenario& sc) {
  EstimatedAngles e;
  e.g = sc.angles_g;
  e.target = sc.target.angles;
  for (const auto& s : sc.interferers) e.interferers.push_back(s.angles);
  return e;
}

EstimatedAngles perturb(const EstimatedAngles& angles, const SensingError& error,
                        std::mt19937_64& rng) {
  if (!(error.xi >= 0.0)) throw std::invalid_argument("perturb: xi must be >= 0");
  EstimatedAngles out = angles;
  std::uniform_real_distribution<double> u(-error.xi, error.xi);
  // Draw for every source regardless of applies_to so the stream layout is fixed.
  const double dt = u(rng);
  if (error.applies_to != ErrorTarget::interferers) {
    out.target = with_elevation(out.target, out.target.elevation + dt);
  }
  for (auto& a : out.interferers) {
    const double di = u(rng);
    if (error.applies_to != ErrorTarget::target) a = with_elevation(a, a.elevation + di);
  }
  return out;
}

ChannelSet scenario_channels(const UplinkScenario& sc) {
  std::vector<AngleTriple> dirs{sc.target.angles};
  for (const auto& s : sc.interferers) dirs.push_back(s.angles);
  ChannelSet ch = los_channels(sc.geometry, sc.hap_antennas, sc.angles_g, dirs);
  ch.pathloss_h2r = path_loss(sc.pathloss, sc.distance_r2h);
  ch.pathloss_r2u.clear();
  ch.pathloss_r2u.push_back(path_loss(sc.pathloss, sc.target.distance));
  for (const auto& s : sc.interferers) ch.pathloss_r2u.push_back(path_loss(sc.pathloss, s.distance));
  return ch;
}

PhaseConfig aligned_design(const UplinkScenario& sc, const EstimatedAngles& est) {
  PhaseConfig pc;
  pc.v = combiner(sc, est.g);
  pc.theta = steer_upa(sc.geometry, est.g).cwiseProduct(steer_upa(sc.geometry, est.target)).conjugate();
  return pc;
}

bool orthogonality_check(const AngleTriple& target, const AngleTriple& interferer,
                         const UpaGeometry& geom) {
  const double dx = std::cos(target.azimuth) - std::cos(interferer.azimuth);
  const double dy = std::sin(target.azimuth) * std::sin(target.elevation) -
                    std::sin(interferer.azimuth) * std::sin(interferer.elevation);
  return on_null_lattice(dx, geom.n_x) || on_null_lattice(dy, geom.n_y);
}

double interference_power_closed(const AngleTriple& target, const AngleTriple& interferer,
                                 const UpaGeometry& geom, int m, double p) {
  const auto fd = spatial_frequencies(target);
  const auto fk = spatial_frequencies(interferer);
  return p * m * dirichlet_sq(geom.n_x, fd.phi - fk.phi) *
         dirichlet_sq(geom.n_y, fd.vartheta - fk.vartheta);
}

double reflected_gain(const PhaseConfig& config, const CMatrix& g, const CVector& h) {
  const CVector reflected = config.theta.cwiseProduct(h);
  const cdouble y = config.v.transpose() * (g.transpose() * reflected);
  return std::norm(y);
}

DesignResult build_eli(const UplinkScenario& sc, const EstimatedAngles& est,
                       const DesignOptions& options) {
  sc.validate();
  if (est.interferers.empty()) throw std::invalid_argument("build_eli: no interferers");
  std::vector<CapSpec> caps;
  for (std::size_t k = 0; k < est.interferers.size(); ++k) {
    caps.push_back({steer_upa(sc.geometry, est.interferers[k]), sc.cap_for(k)});
  }
  return design_with_caps(sc, est, caps, options);
}

DesignResult build_robust(const UplinkScenario& sc, const EstimatedAngles& est, double delta,
                          int grid_l, const DesignOptions& options) {
  sc.validate();
  if (est.interferers.empty()) throw std::invalid_argument("build_robust: no interferers");
  if (grid_l < 1) throw std::invalid_argument("build_robust: grid_l must be >= 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("build_robust: delta must be >= 0");
  std::vector<CapSpec> caps;
  for (std::size_t k = 0; k < est.interferers.size(); ++k) {
    const auto& a = est.interferers[k];
    for (int l = 0; l < grid_l; ++l) {
      const double off = grid_l == 1 ? 0.0 : -delta + 2.0 * delta * l / (grid_l - 1);
      caps.push_back({steer_upa(sc.geometry, with_elevation(a, a.elevation + off)), sc.cap_for(k)});
    }
  }
  return design_with_caps(sc, est, caps, options);
}

SinrReport evaluate_sinr(const UplinkScenario& sc, const PhaseConfig& config,
                         const ChannelSet& ch) {
  if (ch.h.size() != sc.interferers.size() + 1 || ch.pathloss_r2u.size() != ch.h.size()) {
    throw std::invalid_argument("evaluate_sinr: channel set does not match the scenario");
  }
  SinrReport rep;
  rep.signal_power = sc.target.tx_power * ch.pathloss_h2r * ch.pathloss_r2u[0] *
                     reflected_gain(config, ch.g, ch.h[0]);
  double total = 0.0;
  for (std::size_t k = 0; k < sc.interferers.size(); ++k) {
    const double p = sc.interferers[k].tx_power * ch.pathloss_h2r * ch.pathloss_r2u[k + 1] *
                     reflected_gain(config, ch.g, ch.h[k + 1]);
    rep.interference_powers.push_back(p);
    total += p;
  }
  rep.sinr = rep.signal_power / (total + sc.noise_power);
  rep.capacity = std::log2(1.0 + rep.sinr);
  return rep;
}

double tau_heuristic(double noise_power, double interferer_tx, double cascaded_pathloss) {
  if (!(noise_power > 0.0) || !(interferer_tx > 0.0) || !(cascaded_pathloss > 0.0)) {
    throw std::invalid_argument("tau_heuristic: inputs must be positive");
  }
  return 9.5 * std::log10(noise_power / (interferer_tx * cascaded_pathloss)) - 7.5;
}

}  // namespace riss::uplink
