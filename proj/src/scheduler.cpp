#include "riss/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace riss::scheduler {

namespace {

void check_inputs(const std::vector<int>& counts, const std::vector<double>& times) {
  if (counts.size() != times.size())
    throw std::invalid_argument("counts and times must have the same length");
  for (int c : counts)
    if (c < 0) throw std::invalid_argument("counts must be non-negative");
  for (double t : times)
    if (!(t >= 0.0)) throw std::invalid_argument("times must be non-negative");
}

void check_order(const RotationOrder& order, std::size_t n) {
  if (order.size() != n) throw std::invalid_argument("order length does not match beam count");
  std::vector<bool> seen(n, false);
  for (int b : order) {
    if (b < 0 || static_cast<std::size_t>(b) >= n || seen[b])
      throw std::invalid_argument("order is not a permutation");
    seen[b] = true;
  }
}

}  // namespace

double order_cost(const RotationOrder& order, const std::vector<int>& counts,
                  const std::vector<double>& times) {
  check_inputs(counts, times);
  check_order(order, counts.size());
  double elapsed = 0.0;
  double cost = 0.0;
  for (int b : order) {
    cost += counts[b] * elapsed;
    elapsed += times[b];
  }
  return cost;
}

WaitingCostReport waiting_cost(const RotationOrder& order, const std::vector<int>& counts,
                               const std::vector<double>& times,
                               const std::vector<double>& initial_delays) {
  check_inputs(counts, times);
  check_order(order, counts.size());
  if (!initial_delays.empty() && initial_delays.size() != counts.size())
    throw std::invalid_argument("initial delays must be empty or one per beam");
  const long devices = std::accumulate(counts.begin(), counts.end(), 0L);
  if (devices == 0) throw std::invalid_argument("no devices to schedule");

  WaitingCostReport r;
  double elapsed = 0.0;
  for (int b : order) {
    r.per_beam_start.push_back(elapsed);
    r.total += counts[b] * elapsed;
    elapsed += times[b];
  }
  for (double tau : initial_delays) r.total += tau;
  r.average = r.total / static_cast<double>(devices);
  return r;
}

RotationOrder optimal_order(const std::vector<int>& counts, const std::vector<double>& times) {
  check_inputs(counts, times);
  RotationOrder order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  // I_a/T_a > I_b/T_b  <=>  I_a*T_b > I_b*T_a for T >= 0; zero-time beams with
  // devices compare as +inf, and beams with I = T = 0 as 0.
  auto key_inf = [&](int j) { return times[j] == 0.0 && counts[j] > 0; };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool ia = key_inf(a), ib = key_inf(b);
    if (ia != ib) return ia;
    if (ia) return false;
    const double ta = times[a] == 0.0 ? 1.0 : times[a];
    const double tb = times[b] == 0.0 ? 1.0 : times[b];
    return counts[a] * tb > counts[b] * ta;
  });
  return order;
}

RotationOrder count_order(const std::vector<int>& counts) {
  RotationOrder order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] > counts[b]; });
  return order;
}

RotationOrder sequential_order(int n_beams) {
  RotationOrder order(std::max(n_beams, 0));
  std::iota(order.begin(), order.end(), 0);
  return order;
}

BruteForceResult brute_force_order(const std::vector<int>& counts,
                                   const std::vector<double>& times) {
  check_inputs(counts, times);
  if (counts.size() > 10) throw std::invalid_argument("brute force is limited to 10 beams");
  RotationOrder perm = sequential_order(static_cast<int>(counts.size()));
  BruteForceResult best{perm, order_cost(perm, counts, times)};
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = order_cost(perm, counts, times);
    if (c < best.cost) best = {perm, c};
  }
  return best;
}

std::vector<double> uniform_times(const std::vector<double>& times) {
  if (times.empty()) return {};
  const double mean =
      std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
  return std::vector<double>(times.size(), mean);
}

}  // namespace riss::scheduler
