#include "riss/wet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riss::wet {

namespace {

constexpr double kHalfPi = kPi / 2;

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
}

void check_n(int n) {
  if (n < 1) throw std::invalid_argument("n_elements must be positive");
}

double clamped_asin(double s) { return std::asin(std::clamp(s, -1.0, 1.0)); }

// Array factor as a function of the sin-space offset u = sin(omega) - sin(direction).
double factor(double u, int n) {
  const double x = kHalfPi * u;
  const double den = n * std::sin(x);
  if (std::abs(den) < 1e-12) {
    // Near a grating point sin(Nx)/(N sin x) -> cos(Nx)/cos(x).
    return std::cos(n * x) / std::cos(x);
  }
  return std::sin(n * x) / den;
}

}  // namespace

double beam_gain(double direction, double omega, int n_elements) {
  check_n(n_elements);
  return factor(std::sin(omega) - std::sin(direction), n_elements);
}

double mainlobe_half_width(double gamma, int n_elements) {
  check_gamma(gamma);
  check_n(n_elements);
  if (n_elements == 1) return 2.0;  // flat pattern, the whole axis is covered
  double lo = 0.0;
  double hi = 2.0 / n_elements;  // first null
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = factor(mid, n_elements);
    if (f * f >= gamma) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> beam_widths(double direction, double gamma, int n_elements,
                                      double scan_resolution) {
  check_gamma(gamma);
  check_n(n_elements);
  if (!(scan_resolution > 0.0)) throw std::invalid_argument("scan_resolution must be positive");
  if (direction < -kHalfPi || direction > kHalfPi)
    throw std::invalid_argument("direction outside [-pi/2, pi/2]");

  const double s0 = std::sin(direction);
  const double null = n_elements > 1 ? 2.0 / n_elements : 2.0;
  auto above = [&](double omega) {
    const double f = beam_gain(direction, omega, n_elements);
    return f * f >= gamma;
  };
  // Walk out to the first null (or the end of the axis), then bisect in angle.
  auto edge = [&](int sign) {
    const double limit = clamped_asin(s0 + sign * null);
    if (above(limit)) return std::abs(limit - direction);
    double in = direction;
    double out = limit;
    while (std::abs(out - in) > scan_resolution) {
      const double mid = 0.5 * (in + out);
      if (above(mid)) in = mid; else out = mid;
    }
    return std::abs(0.5 * (in + out) - direction);
  };
  return {edge(-1), edge(+1)};
}

StitchResult stitch_beams(double gamma, int n_elements, double guard_delta, StitchStart start) {
  check_gamma(gamma);
  check_n(n_elements);
  if (guard_delta < 0.0) throw std::invalid_argument("guard_delta must be non-negative");

  // All edges are exact in sin-space: a beam at s covers [s - w, s + w].
  const double w = mainlobe_half_width(gamma, n_elements);
  const double right_of_zero = clamped_asin(w);  // B_R(0)

  StitchResult out;
  double s_edge;  // sin of B_obs
  if (start == StitchStart::edge_at_endfire) {
    s_edge = 1.0;
  } else {
    out.directions.push_back(kHalfPi);
    s_edge = 1.0 - w;
  }
  double b_obs = clamped_asin(s_edge);
  const int cap = 4 * n_elements + 8;
  while (b_obs > right_of_zero && b_obs > 0.0 && static_cast<int>(out.directions.size()) < cap) {
    const double s = s_edge - w;
    out.directions.push_back(clamped_asin(s));
    s_edge = s - w;
    b_obs = s_edge < -1.0 ? -kHalfPi : std::asin(s_edge);
  }
  out.terminal_edge = b_obs;
  out.residual = std::min(std::abs(b_obs), std::abs(b_obs - right_of_zero));
  out.center_beam = b_obs > guard_delta;
  return out;
}

BeamPlan make_plan(const StitchResult& half, double gamma, int n_elements) {
  check_gamma(gamma);
  check_n(n_elements);
  std::vector<double> dirs;
  for (double d : half.directions) {
    dirs.push_back(d);
    if (d > 0.0 && d < kHalfPi) dirs.push_back(-d);
    // a beam at pi/2 also serves -pi/2 through the grating lobe
  }
  if (half.center_beam) dirs.push_back(0.0);
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             dirs.end());

  BeamPlan plan;
  plan.n_elements = n_elements;
  const double w = mainlobe_half_width(gamma, n_elements);
  std::vector<std::pair<double, double>> spans;  // sin-space, wrapped onto [-1, 1]
  for (double d : dirs) {
    Beam b;
    b.direction = d;
    b.gamma = gamma;
    const double s = std::sin(d);
    b.width_left = d - clamped_asin(s - w);
    b.width_right = clamped_asin(s + w) - d;
    plan.beams.push_back(b);
    spans.emplace_back(std::max(s - w, -1.0), std::min(s + w, 1.0));
    if (s + w > 1.0) spans.emplace_back(-1.0, s + w - 2.0);
    if (s - w < -1.0) spans.emplace_back(s - w + 2.0, 1.0);
  }
  plan.n_beams = static_cast<int>(plan.beams.size());

  std::sort(spans.begin(), spans.end());
  double gap = 0.0;
  double reach = -1.0;
  for (const auto& [lo, hi] : spans) {
    if (lo > reach) gap = std::max(gap, std::asin(lo) - std::asin(reach));
    reach = std::max(reach, hi);
  }
  if (reach < 1.0) gap = std::max(gap, kHalfPi - std::asin(reach));
  plan.coverage_residual = gap;
  return plan;
}

void ThresholdSearchParams::validate() const {
  if (!(interval_start > 0.0 && interval_start < interval_end && interval_end < 1.0))
    throw std::invalid_argument("threshold interval must satisfy 0 < start < end < 1");
  if (coarse_len < 2 || fine_len < 2) throw std::invalid_argument("scan lengths must be >= 2");
  if (max_fine_iters < 0) throw std::invalid_argument("max_fine_iters must be >= 0");
  if (guard_delta < 0.0) throw std::invalid_argument("guard_delta must be non-negative");
}

std::vector<ThresholdPeak> threshold_search(const ThresholdSearchParams& params, int n_elements) {
  params.validate();
  check_n(n_elements);
  auto residual = [&](double g) {
    return stitch_beams(g, n_elements, params.guard_delta, params.start).residual;
  };

  const double step = (params.interval_end - params.interval_start) / params.coarse_len;
  std::vector<double> gammas(params.coarse_len + 1);
  std::vector<double> score(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    gammas[i] = params.interval_start + step * static_cast<double>(i);
    score[i] = 1.0 / std::max(residual(gammas[i]), 1e-300);
  }
  std::vector<double> sorted = score;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];

  std::vector<ThresholdPeak> peaks;
  for (std::size_t i = 1; i + 1 < gammas.size(); ++i) {
    if (!(score[i] > score[i - 1] && score[i] > score[i + 1])) continue;
    if (score[i] < 2.0 * median) continue;

    double best = gammas[i];
    double best_res = residual(best);
    double delta = step;
    for (int it = 0; it < params.max_fine_iters && best_res > 0.0; ++it) {
      const double prev = best_res;
      const double center = best;
      // A zero between grid points leaves the best sample in place; keep
      // shrinking around it instead of declaring convergence.
      const double fine = 2.0 * delta / params.fine_len;
      for (int k = 0; k <= params.fine_len; ++k) {
        const double g = center - delta + fine * k;
        if (!(g > 0.0 && g < 1.0)) continue;
        const double r = residual(g);
        if (r < best_res) { best_res = r; best = g; }
      }
      delta = fine;
      if (best_res < prev && prev - best_res < 1e-3 * prev) break;
    }

    ThresholdPeak peak;
    peak.gamma = best;
    peak.residual = best_res;
    peak.plan = make_plan(stitch_beams(best, n_elements, params.guard_delta, params.start),
                          best, n_elements);
    const bool dup = std::any_of(peaks.begin(), peaks.end(), [&](const ThresholdPeak& p) {
      return p.plan.n_beams == peak.plan.n_beams && std::abs(p.gamma - peak.gamma) < 1e-9;
    });
    if (!dup) peaks.push_back(std::move(peak));
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const ThresholdPeak& a, const ThresholdPeak& b) { return a.gamma < b.gamma; });
  return peaks;
}

double total_gain(const BeamPlan& plan, double omega) {
  if (plan.beams.empty()) throw std::invalid_argument("empty beam plan");
  double sum = 0.0;
  for (const Beam& b : plan.beams) {
    const double f = beam_gain(b.direction, omega, plan.n_elements);
    sum += f * f;
  }
  return sum;
}

double EhModel::x() const {
  const double e = std::exp(a * b);
  return e / (1.0 + e);
}

double EhModel::y() const { return m_s / std::exp(a * b); }

double harvest_deficit(const EhModel& model, double input_power) {
  if (!(input_power >= 0.0)) throw std::invalid_argument("input power must be non-negative");
  // M_s - f(P) = M_s (1 + e^{-ab}) / (1 + e^{a(P-b)}); at P = 0 both exponents
  // are bitwise equal, so f(0) is exactly zero.
  const double ab = model.a * model.b;
  return model.m_s * (1.0 + std::exp(-ab)) / (1.0 + std::exp(model.a * (input_power - model.b)));
}

double harvest(const EhModel& model, double input_power) {
  return model.m_s - harvest_deficit(model, input_power);
}

std::vector<int> DeviceCluster::counts() const {
  std::vector<int> c;
  c.reserve(per_beam.size());
  for (const auto& beam : per_beam) c.push_back(static_cast<int>(beam.size()));
  return c;
}

namespace {

double link_scale(const WetLink& link, const Device& device) {
  const double n = link.n_total;
  return link.tx_power * n * n * link.hap_antennas * link.pathloss_h2r *
         path_loss(link.pathloss, device.distance);
}

}  // namespace

double received_power(const BeamPlan& plan, std::size_t beam, const Device& device,
                      const WetLink& link) {
  const double f = beam_gain(plan.beams.at(beam).direction, device.omega, plan.n_elements);
  return link_scale(link, device) * f * f;
}

std::vector<double> charging_times(const BeamPlan& plan, const DeviceCluster& clusters,
                                   const WetLink& link, ChargingReading reading) {
  if (clusters.per_beam.size() != plan.beams.size())
    throw std::invalid_argument("device clusters must match the beam count");
  if (!(clusters.q >= 0.0)) throw std::invalid_argument("energy demand must be non-negative");
  std::vector<double> times(plan.beams.size(), 0.0);
  for (std::size_t j = 0; j < plan.beams.size(); ++j) {
    for (const Device& d : clusters.per_beam[j]) {
      const double denom = reading == ChargingReading::total_rotation
                               ? link_scale(link, d) * total_gain(plan, d.omega)
                               : received_power(plan, j, d, link);
      if (!(denom > 0.0)) throw std::domain_error("device sits at a null of every beam");
      times[j] = std::max(times[j], clusters.q / denom);
    }
  }
  return times;
}

std::vector<double> device_energies(const BeamPlan& plan, const DeviceCluster& clusters,
                                    const WetLink& link, const std::vector<double>& times,
                                    const EhModel& model, ChargingReading reading) {
  if (times.size() != plan.beams.size())
    throw std::invalid_argument("one charging time per beam is required");
  std::vector<double> energies;
  if (clusters.per_beam.size() != plan.beams.size())
    throw std::invalid_argument("device clusters must match the beam count");
  for (std::size_t own = 0; own < clusters.per_beam.size(); ++own) {
    for (const Device& d : clusters.per_beam[own]) {
      double e = 0.0;
      if (reading == ChargingReading::own_beam) {
        e = harvest(model, received_power(plan, own, d, link)) * times[own];
      } else {
        for (std::size_t j = 0; j < plan.beams.size(); ++j)
          e += harvest(model, received_power(plan, j, d, link)) * times[j];
      }
      energies.push_back(e);
    }
  }
  return energies;
}

std::pair<double, double> beam_interval(const BeamPlan& plan, std::size_t beam) {
  const Beam& b = plan.beams.at(beam);
  return {b.direction - b.width_left, b.direction + b.width_right};
}

namespace {

Device draw_device(double lo, double hi, const std::vector<double>& rings, std::mt19937_64& rng) {
  if (rings.empty()) throw std::invalid_argument("at least one deployment radius is required");
  std::uniform_real_distribution<double> angle(lo, hi);
  std::uniform_int_distribution<std::size_t> ring(0, rings.size() - 1);
  Device d;
  d.omega = angle(rng);
  d.distance = rings[ring(rng)];
  return d;
}

}  // namespace

DeviceCluster deploy_uniform(const BeamPlan& plan, int total, const std::vector<double>& rings,
                             double q, std::mt19937_64& rng) {
  if (plan.beams.empty()) throw std::invalid_argument("empty beam plan");
  if (total < 0) throw std::invalid_argument("device count must be non-negative");
  DeviceCluster out;
  out.q = q;
  out.per_beam.resize(plan.beams.size());
  for (int i = 0; i < total; ++i) {
    const Device d = draw_device(-kHalfPi, kHalfPi, rings, rng);
    std::size_t best = 0;
    double best_gain = -1.0;
    for (std::size_t j = 0; j < plan.beams.size(); ++j) {
      const double f = beam_gain(plan.beams[j].direction, d.omega, plan.n_elements);
      if (f * f > best_gain) { best_gain = f * f; best = j; }
    }
    out.per_beam[best].push_back(d);
  }
  return out;
}

DeviceCluster deploy_per_beam(const BeamPlan& plan, int max_per_beam,
                              const std::vector<double>& rings, double q, std::mt19937_64& rng) {
  if (max_per_beam < 1) throw std::invalid_argument("max_per_beam must be >= 1");
  DeviceCluster out;
  out.q = q;
  out.per_beam.resize(plan.beams.size());
  std::uniform_int_distribution<int> count(1, max_per_beam);
  for (std::size_t j = 0; j < plan.beams.size(); ++j) {
    const auto [lo, hi] = beam_interval(plan, j);
    const int c = count(rng);
    for (int i = 0; i < c; ++i) out.per_beam[j].push_back(draw_device(lo, hi, rings, rng));
  }
  return out;
}

}  // namespace riss::wet
