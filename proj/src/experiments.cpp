#include "riss/harness.hpp"
#include "riss/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

namespace riss::harness {

namespace {

constexpr const char* kRician = "uplink-rician";
constexpr const char* kError = "uplink-error";
constexpr const char* kDistanceTau = "uplink-distance-tau";
constexpr const char* kWetBeams = "wet-beams";
constexpr const char* kWetSensing = "wet-sensing";

// Runs f(0..n-1) on a small pool. Each index writes only its own output slot,
// so results do not depend on scheduling.
template <class F>
void parallel_for(int n, F&& f) {
  const int workers =
      std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string join(std::initializer_list<std::string> parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ";") + p;
  return out;
}

// Per-trial rows plus mean / standard-error aggregates per (cell, metric).
class Rows {
 public:
  Rows(std::string experiment, std::uint64_t seed, int trials)
      : experiment_(std::move(experiment)), seed_(seed), per_trial_(std::max(trials, 1)) {}

  void add(int trial, const std::string& param, const std::string& value,
           const std::string& metric, double v) {
    per_trial_.at(trial).push_back(
        {experiment_, seed_, param, value, metric, v, std::to_string(trial)});
  }

  void add_fixed(const std::string& param, const std::string& value, const std::string& metric,
                 double v) {
    fixed_.push_back({experiment_, seed_, param, value, metric, v, "aggregate"});
  }

  std::vector<ResultRow> finish(bool aggregate = true) && {
    std::vector<ResultRow> out;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
    for (auto& rows : per_trial_) {
      for (auto& r : rows) {
        if (r.metric != "status") groups[{r.param, r.param_value, r.metric}].push_back(r.value);
        out.push_back(std::move(r));
      }
    }
    if (aggregate) {
      for (const auto& [key, values] : groups) {
        const auto& [param, value, metric] = key;
        const double n = static_cast<double>(values.size());
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        out.push_back({experiment_, seed_, param, value, metric, mean, "aggregate"});
        out.push_back({experiment_, seed_, param, value, metric + "_stderr", se, "aggregate"});
      }
    }
    for (auto& r : fixed_) out.push_back(std::move(r));
    return out;
  }

 private:
  std::string experiment_;
  std::uint64_t seed_;
  std::vector<std::vector<ResultRow>> per_trial_;
  std::vector<ResultRow> fixed_;
};

uplink::DesignOptions design_options(const ScenarioConfig& c) {
  uplink::DesignOptions o;
  o.solver.tol = c.solver_tol;
  o.rank_one = c.rank_one;
  return o;
}

// A cell fails when the design is infeasible or still violates a cap after polish.
bool design_failed(const uplink::DesignResult& d) {
  return d.status == sdp::SolveStatus::infeasible || !(d.worst_cap_ratio <= 1.0 + 1e-3) ||
         !d.config.theta.allFinite();
}

std::string f(double v) { return format_double(v); }

wet::WetLink make_link(const ScenarioConfig& c) {
  wet::WetLink link;
  link.tx_power = c.downlink_power;
  link.n_total = c.wet.n_total;
  link.hap_antennas = c.hap_antennas;
  link.pathloss = c.pathloss;
  link.pathloss_h2r = path_loss(c.pathloss, c.d_r2h);
  return link;
}

}  // namespace

uplink::UplinkScenario make_uplink_scenario(const ScenarioConfig& c) {
  uplink::UplinkScenario sc;
  sc.geometry = c.geometry;
  sc.hap_antennas = c.hap_antennas;
  sc.angles_g = c.hap_angles;
  sc.distance_r2h = c.d_r2h;
  sc.target.angles = {c.azimuth, c.target_elevation, 0.0};
  sc.target.distance = c.d_r2t;
  sc.target.tx_power = c.uplink_power;
  for (double e : c.interferer_elevations) {
    uplink::Source s;
    s.angles = {c.azimuth, e, 0.0};
    s.distance = c.d_r2i;
    s.tx_power = c.uplink_power;
    sc.interferers.push_back(s);
  }
  sc.noise_power = c.noise.linear;
  sc.suppression_caps = {c.error.tau.linear};
  sc.receive_power = c.receive_power;
  sc.pathloss = c.pathloss;
  return sc;
}

ExperimentResult run_capacity_vs_rician(const ScenarioConfig& c) {
  c.validate();
  const auto& sw = c.rician;
  uplink::UplinkScenario sc = make_uplink_scenario(c);
  const auto est = uplink::true_angles(sc);
  const ChannelSet los = uplink::scenario_channels(sc);
  const uplink::PhaseConfig ali = uplink::aligned_design(sc, est);

  // Designs use LoS angles only, so one ELI per tau serves every trial.
  std::vector<uplink::DesignResult> eli(sw.tau.size());
  parallel_for(static_cast<int>(sw.tau.size()), [&](int i) {
    uplink::UplinkScenario s = sc;
    s.suppression_caps = {sw.tau[i].linear};
    eli[i] = uplink::build_eli(s, est, design_options(c));
  });

  Rows rows(kRician, c.seed, sw.trials);
  const std::string param = "kappa;tau_db";
  parallel_for(sw.trials, [&](int t) {
    for (double kappa : sw.kappa) {
      // Same underlying draws for every kappa: common random numbers.
      auto rng = trial_rng(c.seed, kRician, t);
      const ChannelSet ch = rician_channels(los, kappa, kappa, rng);
      const double cap_ali = uplink::evaluate_sinr(sc, ali, ch).capacity;
      for (std::size_t i = 0; i < sw.tau.size(); ++i) {
        const std::string value = join({f(kappa), f(sw.tau[i].db)});
        rows.add(t, param, value, "capacity_ali", cap_ali);
        if (design_failed(eli[i])) {
          rows.add(t, param, value, "status", 1.0);
          continue;
        }
        rows.add(t, param, value, "capacity_eli",
                 uplink::evaluate_sinr(sc, eli[i].config, ch).capacity);
      }
    }
  });

  ExperimentResult out;
  out.cells = static_cast<int>(sw.kappa.size() * sw.tau.size()) * sw.trials;
  for (const auto& d : eli)
    if (design_failed(d)) out.failed_cells += static_cast<int>(sw.kappa.size()) * sw.trials;
  out.rows = std::move(rows).finish();
  return out;
}

ExperimentResult run_capacity_vs_error(const ScenarioConfig& c) {
  c.validate();
  const auto& sw = c.error;
  uplink::UplinkScenario sc = make_uplink_scenario(c);
  sc.suppression_caps = {sw.tau.linear};
  const ChannelSet truth = uplink::scenario_channels(sc);
  const auto exact = uplink::true_angles(sc);
  const auto opt = design_options(c);

  struct Variant {
    std::string metric;
    int kind;  // 0 ALI, 1 ELI, 2 robust
    double delta;
  };
  std::vector<Variant> variants;
  if (sw.ali) variants.push_back({"capacity_ali", 0, 0.0});
  if (sw.eli) variants.push_back({"capacity_eli", 1, 0.0});
  if (sw.robust)
    for (double d : sw.delta_deg) variants.push_back({"capacity_robust_delta_" + f(d), 2, d});

  auto design = [&](const Variant& v, const uplink::EstimatedAngles& est) {
    uplink::DesignResult r;
    if (v.kind == 0) {
      r.config = uplink::aligned_design(sc, est);
      r.status = sdp::SolveStatus::optimal;
    } else if (v.kind == 1) {
      r = uplink::build_eli(sc, est, opt);
    } else {
      r = uplink::build_robust(sc, est, deg_to_rad(v.delta), sw.grid_l, opt);
    }
    return r;
  };

  // Error-free designs are identical across trials.
  std::vector<uplink::DesignResult> exact_designs(variants.size());
  const bool has_zero = std::any_of(sw.xi_deg.begin(), sw.xi_deg.end(), [](double x) { return x == 0.0; });
  if (has_zero) {
    parallel_for(static_cast<int>(variants.size()),
                 [&](int i) { exact_designs[i] = design(variants[i], exact); });
  }

  Rows rows(kError, c.seed, sw.trials);
  std::vector<int> failed(sw.trials, 0);
  parallel_for(sw.trials, [&](int t) {
    for (double xi : sw.xi_deg) {
      // Resetting the stream per xi reuses the same unit draws at every error size.
      auto rng = trial_rng(c.seed, kError, t);
      const auto est = xi == 0.0 ? exact
                                 : uplink::perturb(exact, {deg_to_rad(xi), sw.applies_to}, rng);
      for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto d = xi == 0.0 ? exact_designs[i] : design(variants[i], est);
        if (design_failed(d)) {
          rows.add(t, "xi_deg", f(xi), "status", 1.0);
          ++failed[t];
          continue;
        }
        rows.add(t, "xi_deg", f(xi), variants[i].metric,
                 uplink::evaluate_sinr(sc, d.config, truth).capacity);
      }
    }
  });

  ExperimentResult out;
  out.cells = static_cast<int>(sw.xi_deg.size() * variants.size()) * sw.trials;
  out.failed_cells = std::accumulate(failed.begin(), failed.end(), 0);
  out.rows = std::move(rows).finish();
  return out;
}

ExperimentResult run_capacity_vs_distance_tau(const ScenarioConfig& c) {
  c.validate();
  const auto& sw = c.distance_tau;
  const int nd = static_cast<int>(sw.d_r2i.size());
  const int nt = static_cast<int>(sw.tau.size());

  Rows rows(kDistanceTau, c.seed, nd * nt);
  std::vector<int> failed(nd * nt, 0);
  parallel_for(nd * nt, [&](int cell) {
    const int di = cell / nt;
    const int ti = cell % nt;
    ScenarioConfig cc = c;
    cc.d_r2i = sw.d_r2i[di];
    uplink::UplinkScenario sc = make_uplink_scenario(cc);
    sc.suppression_caps = {sw.tau[ti].linear};
    const ChannelSet ch = uplink::scenario_channels(sc);
    const auto d = uplink::build_eli(sc, uplink::true_angles(sc), design_options(c));
    const std::string value = join({f(sw.d_r2i[di]), f(sw.tau[ti].db)});
    if (design_failed(d)) {
      rows.add(cell, "d_r2i_m;tau_db", value, "status", 1.0);
      failed[cell] = 1;
      return;
    }
    rows.add(cell, "d_r2i_m;tau_db", value, "capacity_eli",
             uplink::evaluate_sinr(sc, d.config, ch).capacity);
  });
  // The sweep is deterministic: cells are not trials, so no aggregates.
  std::vector<ResultRow> cell_rows = std::move(rows).finish(false);
  for (auto& r : cell_rows) r.trial = "0";

  for (double d : sw.d_r2i) {
    ScenarioConfig cc = c;
    cc.d_r2i = d;
    const uplink::UplinkScenario sc = make_uplink_scenario(cc);
    const ChannelSet ch = uplink::scenario_channels(sc);
    const double cascaded = ch.pathloss_h2r * ch.pathloss_r2u[1];
    const double predicted = uplink::tau_heuristic(sc.noise_power, sc.interferers[0].tx_power, cascaded);
    const double cap_ali =
        uplink::evaluate_sinr(sc, uplink::aligned_design(sc, uplink::true_angles(sc)), ch).capacity;
    cell_rows.push_back({kDistanceTau, c.seed, "d_r2i_m", f(d), "tau_heuristic_db", predicted, "0"});
    cell_rows.push_back({kDistanceTau, c.seed, "d_r2i_m", f(d), "capacity_ali", cap_ali, "0"});
  }

  ExperimentResult out;
  out.cells = nd * nt;
  out.failed_cells = std::accumulate(failed.begin(), failed.end(), 0);
  out.rows = std::move(cell_rows);
  return out;
}

ExperimentResult run_wet_beams(const ScenarioConfig& c) {
  c.validate();
  const wet::WetLink link = make_link(c);
  const wet::EhModel model;

  struct Scenario {
    std::string name;
    wet::ThresholdPeak peak;
  };
  std::vector<Scenario> plans;
  for (auto [name, start] : {std::pair{"edge", wet::StitchStart::edge_at_endfire},
                             std::pair{"endfire", wet::StitchStart::beam_at_endfire}}) {
    wet::ThresholdSearchParams p = c.wet.search;
    p.start = start;
    for (auto& peak : wet::threshold_search(p, c.wet.n_x))
      if (peak.plan.n_beams <= c.wet.beams_max_n) plans.push_back({name, std::move(peak)});
  }

  Rows rows(kWetBeams, c.seed, c.wet.beams_trials);
  const std::string param = "scenario;n_beams";
  for (const auto& s : plans) {
    const std::string value = join({s.name, std::to_string(s.peak.plan.n_beams)});
    rows.add_fixed(param, value, "gamma", s.peak.gamma);
    rows.add_fixed(param, value, "residual", s.peak.residual);
  }
  parallel_for(c.wet.beams_trials, [&](int t) {
    for (const auto& s : plans) {
      // Same device drop for every plan within a trial.
      auto rng = trial_rng(c.seed, kWetBeams, t);
      const auto& plan = s.peak.plan;
      const auto cluster = wet::deploy_uniform(plan, c.wet.beams_devices, c.wet.rings, c.wet.q, rng);
      // Equal dwell per beam, one rotation of unit length.
      const std::vector<double> times(plan.beams.size(), 1.0 / plan.n_beams);
      const auto e = wet::device_energies(plan, cluster, link, times, model,
                                          wet::ChargingReading::total_rotation);
      const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
      const std::string value = join({s.name, std::to_string(plan.n_beams)});
      rows.add(t, param, value, "mean_energy", mean);
      rows.add(t, param, value, "min_energy", *std::min_element(e.begin(), e.end()));
    }
  });

  ExperimentResult out;
  out.cells = static_cast<int>(plans.size()) * c.wet.beams_trials;
  out.rows = std::move(rows).finish();
  return out;
}

ExperimentResult run_wet_sensing_gain(const ScenarioConfig& c) {
  c.validate();
  const wet::WetLink link = make_link(c);
  const wet::EhModel model;
  wet::ThresholdSearchParams p = c.wet.search;
  p.start = wet::StitchStart::edge_at_endfire;
  std::optional<wet::BeamPlan> plan;
  for (auto& peak : wet::threshold_search(p, c.wet.n_x)) {
    if (peak.plan.n_beams == c.wet.sensing_n_beams) {
      plan = std::move(peak.plan);
      break;
    }
  }
  if (!plan)
    throw ConfigError("threshold search found no plan with " +
                      std::to_string(c.wet.sensing_n_beams) + " beams");
  const int nb = plan->n_beams;
  const auto reading = c.wet.reading;

  Rows rows(kWetSensing, c.seed, c.wet.sensing_trials);
  parallel_for(c.wet.sensing_trials, [&](int t) {
    for (int cap : c.wet.sensing_max_per_beam) {
      auto rng = trial_rng(c.seed, kWetSensing, t);
      const auto cluster = wet::deploy_per_beam(*plan, cap, c.wet.rings, c.wet.q, rng);
      const auto counts = cluster.counts();
      const auto times = wet::charging_times(*plan, cluster, link, reading);
      const auto flat = scheduler::uniform_times(times);

      const auto es = wet::device_energies(*plan, cluster, link, times, model, reading);
      const auto eb = wet::device_energies(*plan, cluster, link, flat, model, reading);
      const double ws = *std::min_element(es.begin(), es.end());
      const double wb = *std::min_element(eb.begin(), eb.end());

      const double cost_opt =
          scheduler::waiting_cost(scheduler::optimal_order(counts, times), counts, times).average;
      const double cost_base =
          scheduler::waiting_cost(scheduler::sequential_order(nb), counts, flat).average;
      const double cost_count =
          scheduler::waiting_cost(scheduler::count_order(counts), counts, times).average;

      const std::string value = std::to_string(cap);
      rows.add(t, "max_per_beam", value, "worst_energy_sensing", ws);
      rows.add(t, "max_per_beam", value, "worst_energy_baseline", wb);
      rows.add(t, "max_per_beam", value, "energy_gain", (ws - wb) / wb);
      rows.add(t, "max_per_beam", value, "waiting_sensing", cost_opt);
      rows.add(t, "max_per_beam", value, "waiting_baseline", cost_base);
      rows.add(t, "max_per_beam", value, "waiting_count_only", cost_count);
      rows.add(t, "max_per_beam", value, "waiting_reduction", (cost_base - cost_opt) / cost_base);
      rows.add(t, "max_per_beam", value, "waiting_reduction_count_only",
               (cost_base - cost_count) / cost_base);
    }
  });

  ExperimentResult out;
  out.cells = static_cast<int>(c.wet.sensing_max_per_beam.size()) * c.wet.sensing_trials;
  out.rows = std::move(rows).finish();
  return out;
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{kRician, kError, kDistanceTau, kWetBeams, kWetSensing};
  return ids;
}

ExperimentResult run_experiment(std::string_view id, const ScenarioConfig& config) {
  if (id == kRician) return run_capacity_vs_rician(config);
  if (id == kError) return run_capacity_vs_error(config);
  if (id == kDistanceTau) return run_capacity_vs_distance_tau(config);
  if (id == kWetBeams) return run_wet_beams(config);
  if (id == kWetSensing) return run_wet_sensing_gain(config);
  throw ConfigError("unknown experiment '" + std::string(id) + "'");
}

}  // namespace riss::harness
