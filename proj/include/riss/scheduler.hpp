// Beam rotation order and the waiting cost it induces.
#pragma once

#include <vector>

namespace riss::scheduler {

using RotationOrder = std::vector<int>;

struct WaitingCostReport {
  double total = 0.0;
  double average = 0.0;                ///< total / sum(I)
  std::vector<double> per_beam_start;  ///< start time of each beam, in rotation order
};

/// sum(tau) + sum_{m>=2} I_{b_m} * sum_{k<m} T_{b_k}.
WaitingCostReport waiting_cost(const RotationOrder& order, const std::vector<int>& counts,
                               const std::vector<double>& times,
                               const std::vector<double>& initial_delays = {});

/// Only the order-dependent term, sum_{m>=2} I_{b_m} * sum_{k<m} T_{b_k}.
double order_cost(const RotationOrder& order, const std::vector<int>& counts,
                  const std::vector<double>& times);

/// Descending I_j / T_j with ties by beam index. T_j = 0 with I_j > 0 sorts first.
RotationOrder optimal_order(const std::vector<int>& counts, const std::vector<double>& times);

/// Descending I_j, ties by beam index. The order available without charging times.
RotationOrder count_order(const std::vector<int>& counts);

RotationOrder sequential_order(int n_beams);

struct BruteForceResult {
  RotationOrder order;
  double cost = 0.0;
};

/// Exhaustive search, N_B <= 10.
BruteForceResult brute_force_order(const std::vector<int>& counts,
                                   const std::vector<double>& times);

/// Every beam gets the mean charging time.
std::vector<double> uniform_times(const std::vector<double>& times);

}  // namespace riss::scheduler
