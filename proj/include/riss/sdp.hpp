// Structured SDP relaxation of the unit-modulus phase design and the
// iterative rank minimization loop built on top of it.
#pragma once

#include "riss/array_channel.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace riss::sdp {

/// tr(C * a a^H) <= tau. Caps are always outer products, so only `a` is kept.
struct TraceCap {
  CVector a;
  double tau = 0.0;

  CMatrix matrix() const { return a * a.adjoint(); }
};

/// r*I - V^H C V >= 0 with weight epsilon on r in the objective.
/// Columns of V are assumed orthonormal; earlier columns are tried first by
/// the cutting-plane loop, so order them by expected importance.
struct IrmBlock {
  CMatrix v;
  double epsilon = 4.0;
};

/// maximize tr(C A_d) [- epsilon r]  s.t. diag(C) = diag_value, caps, C >= 0.
struct StructuredSdp {
  CMatrix objective;  ///< A_d, Hermitian PSD
  double diag_value = 1.0;
  std::vector<TraceCap> trace_caps;
  std::optional<IrmBlock> irm_block;

  int size() const { return static_cast<int>(objective.rows()); }
  void validate() const;
};

enum class SolveStatus { optimal, max_iters, infeasible };

const char* to_string(SolveStatus s);

struct Residuals {
  double primal = 0.0;  ///< relative, ||b - A(x)|| / (1 + ||b||)
  double dual = 0.0;    ///< relative, ||C - A^T y - Z|| / (1 + ||C||)
  double gap = 0.0;     ///< relative duality gap
};

struct PsdSolution {
  CMatrix c_matrix;
  double objective_value = 0.0;  ///< tr(C A_d), without the epsilon*r term
  double r_value = 0.0;          ///< 0 when no IRM block is present
  Residuals residuals;
  SolveStatus status = SolveStatus::max_iters;
  int iterations = 0;            ///< interior-point iterations, summed over cuts
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iters = 120;
  int initial_subspace = 8;   ///< IRM block columns used before any cut
  int cut_batch = 4;          ///< violated directions added per cutting round
  int max_cut_rounds = 40;
};

/// Primal-dual interior point (HKM direction, Mehrotra corrector). With an
/// IRM block the LMI is enforced exactly by cutting planes over span(V).
PsdSolution solve_sdr(const StructuredSdp& problem, double tol = 1e-8);
PsdSolution solve_sdr(const StructuredSdp& problem, const SolverOptions& options);

struct IrmParams {
  double epsilon_0 = 4.0;
  double growth = 1.5;
  int max_iters = 20;
  std::optional<double> r_tol;  ///< defaults to 1e-6 * N * diag_value

  void validate() const;
};

struct IrmResult {
  PsdSolution solution;
  std::vector<double> epsilons;  ///< weight used at each iteration
  std::vector<double> r_values;  ///< slack reached at each iteration
  int iterations = 0;
};

/// Algorithm-1 style refinement. Returns `initial` untouched when it is
/// already rank one; otherwise status is optimal only when the final C passes
/// the rank test.
IrmResult irm_refine(const StructuredSdp& problem, const PsdSolution& initial,
                     const IrmParams& params = {}, const SolverOptions& options = {});

/// Cheaper rank-one refinement: re-solve the relaxation with the objective
/// A_d + eps_l * (tr(A_d)/N) * u u^H, u the previous principal eigenvector.
/// Since tr(C) is pinned by the diagonal, this penalizes tr(C) - u^H C u, the
/// mass outside the principal direction. r_values records that mass.
IrmResult penalty_refine(const StructuredSdp& problem, const PsdSolution& initial,
                         const IrmParams& params = {}, const SolverOptions& options = {});

/// eps_0, eps_0^g, (eps_0^g)^g, ...
std::vector<double> epsilon_schedule(double epsilon_0, double growth, int count);

/// Largest eigenpair. Within a degenerate top eigenspace the vector closest to
/// the lowest-index basis vector is returned; the global phase makes the first
/// largest-modulus entry real and positive.
std::pair<double, CVector> principal_component(const CMatrix& c_matrix);

/// lambda_max / trace, the rank-one test statistic.
double rank_one_ratio(const CMatrix& c_matrix);

inline constexpr double kRankOneThreshold = 1.0 - 1e-4;

}  // namespace riss::sdp
