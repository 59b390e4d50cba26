#include "riss/sdp.hpp"

#include "hermitian_ipm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riss::sdp {

namespace {

// Weights beyond this only cost conditioning; the schedule saturates here.
constexpr double kMaxWeight = 1e8;

// The solver works on X = C / diag_value with the objective divided by
// tr(A_d) and every cap direction normalized, so epsilon trades one unit of
// normalized target gain against one unit of residual eigenvalue.
struct Normalized {
  detail::ConicProblem conic;
  double obj_scale = 1.0;
};

Normalized normalize(const StructuredSdp& pr) {
  Normalized out;
  const double tr = pr.objective.trace().real();
  out.obj_scale = tr > 0.0 ? tr : 1.0;
  out.conic.cobj = -0.5 * (pr.objective + pr.objective.adjoint()) / out.obj_scale;
  for (const auto& cap : pr.trace_caps) {
    const double a2 = cap.a.squaredNorm();
    if (a2 == 0.0) continue;  // tr(C * 0) <= tau always holds
    const double rhs = cap.tau / (pr.diag_value * a2);
    // With unit a, a^H X a <= tr(X) = N, so such a cap can never bind. Keeping
    // it leaves a slack of order rhs that wrecks the interior-point scaling.
    if (rhs >= static_cast<double>(pr.size())) continue;
    out.conic.caps.push_back(cap.a / std::sqrt(a2));
    out.conic.cap_rhs.push_back(rhs);
  }
  return out;
}

CMatrix orthonormal_append(const CMatrix& basis, const CMatrix& extra) {
  CMatrix out(basis.rows(), basis.cols() + extra.cols());
  out.leftCols(basis.cols()) = basis;
  Eigen::Index used = basis.cols();
  for (Eigen::Index j = 0; j < extra.cols(); ++j) {
    CVector v = extra.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      v -= out.leftCols(used) * (out.leftCols(used).adjoint() * v);
    }
    const double nv = v.norm();
    if (nv < 1e-8) continue;
    out.col(used++) = v / nv;
  }
  return out.leftCols(used);
}

PsdSolution finish(const StructuredSdp& pr, const detail::ConicResult& cr, int total_iters) {
  PsdSolution sol;
  sol.c_matrix = pr.diag_value * 0.5 * (cr.x + cr.x.adjoint());
  sol.objective_value = (sol.c_matrix * pr.objective).trace().real();
  sol.residuals = cr.residuals;
  sol.status = cr.status;
  sol.iterations = total_iters;
  return sol;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::max_iters:
      return "max_iters";
    case SolveStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

void StructuredSdp::validate() const {
  const auto n = objective.rows();
  if (n < 1 || objective.cols() != n) {
    throw std::invalid_argument("StructuredSdp: objective must be square and nonempty");
  }
  if ((objective - objective.adjoint()).norm() > 1e-9 * std::max(1.0, objective.norm())) {
    throw std::invalid_argument("StructuredSdp: objective must be Hermitian");
  }
  if (!(diag_value > 0.0)) {
    throw std::invalid_argument("StructuredSdp: diag_value must be positive");
  }
  for (const auto& cap : trace_caps) {
    if (cap.a.size() != n) throw std::invalid_argument("StructuredSdp: cap dimension mismatch");
    if (!(cap.tau >= 0.0)) throw std::invalid_argument("StructuredSdp: cap threshold must be >= 0");
  }
  if (irm_block) {
    if (irm_block->v.rows() != n || irm_block->v.cols() < 1) {
      throw std::invalid_argument("StructuredSdp: IRM block V has wrong shape");
    }
    if (!(irm_block->epsilon > 0.0)) {
      throw std::invalid_argument("StructuredSdp: IRM weight must be positive");
    }
  }
}

PsdSolution solve_sdr(const StructuredSdp& problem, double tol) {
  SolverOptions opt;
  opt.tol = tol;
  return solve_sdr(problem, opt);
}

PsdSolution solve_sdr(const StructuredSdp& problem, const SolverOptions& options) {
  problem.validate();
  Normalized nz = normalize(problem);

  if (!problem.irm_block) {
    const auto cr = detail::solve_conic(nz.conic, options.tol, options.max_iters);
    return finish(problem, cr, cr.iterations);
  }

  // Cutting planes: r I - V_p^H X V_p >= 0 over a growing subspace of span(V).
  // Each restricted problem relaxes the full LMI, so once the full constraint
  // holds at the restricted optimum that point is optimal for the full one.
  const CMatrix& v = problem.irm_block->v;
  const int q = static_cast<int>(v.cols());
  nz.conic.r_cost = problem.irm_block->epsilon;
  nz.conic.vp = orthonormal_append(CMatrix(v.rows(), 0),
                                   v.leftCols(std::min(q, options.initial_subspace)));
  const int k = static_cast<int>(nz.conic.caps.size());

  int total_iters = 0;
  detail::ConicResult cr;
  for (int round = 0;; ++round) {
    cr = detail::solve_conic(nz.conic, options.tol, options.max_iters);
    total_iters += cr.iterations;
    if (cr.status == SolveStatus::infeasible) break;

    const double r_n = cr.lp(k);
    const CMatrix b = v.adjoint() * cr.x * v;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (b + b.adjoint()));
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double limit = r_n * (1.0 + 1e-7) + 1e-9;
    std::vector<int> violated;
    for (int i = q - 1; i >= 0 && lam(i) > limit; --i) {
      violated.push_back(i);
      if (static_cast<int>(violated.size()) >= options.cut_batch) break;
    }
    if (violated.empty()) break;
    if (round + 1 >= options.max_cut_rounds || nz.conic.vp.cols() >= q) {
      if (cr.status == SolveStatus::optimal) cr.status = SolveStatus::max_iters;
      break;
    }
    CMatrix extra(v.rows(), static_cast<Eigen::Index>(violated.size()));
    for (std::size_t j = 0; j < violated.size(); ++j) {
      extra.col(static_cast<Eigen::Index>(j)) = v * es.eigenvectors().col(violated[j]);
    }
    nz.conic.vp = orthonormal_append(nz.conic.vp, extra);
  }

  PsdSolution sol = finish(problem, cr, total_iters);
  sol.r_value = cr.lp.size() > k ? problem.diag_value * cr.lp(k) : 0.0;
  return sol;
}

void IrmParams::validate() const {
  if (!(epsilon_0 > 0.0)) throw std::invalid_argument("IrmParams: epsilon_0 must be > 0");
  if (!(growth > 1.0)) throw std::invalid_argument("IrmParams: growth must be > 1");
  if (max_iters < 1) throw std::invalid_argument("IrmParams: max_iters must be >= 1");
  if (r_tol && !(*r_tol > 0.0)) throw std::invalid_argument("IrmParams: r_tol must be > 0");
}

std::vector<double> epsilon_schedule(double epsilon_0, double growth, int count) {
  std::vector<double> out;
  double e = epsilon_0;
  for (int i = 0; i < count; ++i) {
    out.push_back(e);
    e = std::pow(e, growth);
  }
  return out;
}

IrmResult irm_refine(const StructuredSdp& problem, const PsdSolution& initial,
                     const IrmParams& params, const SolverOptions& options) {
  params.validate();
  if (problem.irm_block) {
    throw std::invalid_argument("irm_refine: pass the problem without an IRM block");
  }
  IrmResult out;
  out.solution = initial;
  if (initial.status == SolveStatus::infeasible ||
      rank_one_ratio(initial.c_matrix) >= kRankOneThreshold) {
    return out;
  }

  const int n = problem.size();
  const double r_tol = params.r_tol.value_or(1e-6 * n * problem.diag_value);
  const auto eps = epsilon_schedule(params.epsilon_0, params.growth, params.max_iters);
  StructuredSdp sub = problem;
  CMatrix current = initial.c_matrix;
  bool done = false;

  for (int l = 0; l < params.max_iters && !done; ++l) {
    // Columns: eigenvectors of the N-1 smallest eigenvalues, largest first.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (current + current.adjoint()));
    CMatrix v(n, n - 1);
    for (int j = 0; j < n - 1; ++j) v.col(j) = es.eigenvectors().col(n - 2 - j);
    sub.irm_block = IrmBlock{v, std::min(eps[l], kMaxWeight)};

    PsdSolution sol = solve_sdr(sub, options);
    out.epsilons.push_back(eps[l]);
    out.r_values.push_back(sol.r_value);
    out.iterations = l + 1;
    out.solution = sol;
    if (sol.status == SolveStatus::infeasible) return out;
    current = sol.c_matrix;
    done = sol.r_value <= r_tol && rank_one_ratio(current) >= kRankOneThreshold;
  }
  out.solution.status = done ? SolveStatus::optimal : SolveStatus::max_iters;
  return out;
}

IrmResult penalty_refine(const StructuredSdp& problem, const PsdSolution& initial,
                         const IrmParams& params, const SolverOptions& options) {
  params.validate();
  if (problem.irm_block) {
    throw std::invalid_argument("penalty_refine: pass the problem without an IRM block");
  }
  IrmResult out;
  out.solution = initial;
  if (initial.status == SolveStatus::infeasible ||
      rank_one_ratio(initial.c_matrix) >= kRankOneThreshold) {
    return out;
  }
  const int n = problem.size();
  const double unit = std::max(problem.objective.trace().real(), 1e-300) / n;
  const auto eps = epsilon_schedule(params.epsilon_0, params.growth, params.max_iters);
  StructuredSdp sub = problem;
  CMatrix current = initial.c_matrix;
  bool done = false;
  for (int l = 0; l < params.max_iters && !done; ++l) {
    const CVector u = principal_component(current).second;
    sub.objective = problem.objective + (std::min(eps[l], kMaxWeight) * unit) * (u * u.adjoint());
    PsdSolution sol = solve_sdr(sub, options);
    sol.objective_value = (sol.c_matrix * problem.objective).trace().real();
    out.epsilons.push_back(eps[l]);
    out.iterations = l + 1;
    if (sol.status == SolveStatus::infeasible) {
      out.solution = sol;
      return out;
    }
    current = sol.c_matrix;
    const double ratio = rank_one_ratio(current);
    sol.r_value = (1.0 - ratio) * current.trace().real();
    out.r_values.push_back(sol.r_value);
    out.solution = sol;
    done = ratio >= kRankOneThreshold;
  }
  out.solution.status = done ? SolveStatus::optimal : SolveStatus::max_iters;
  return out;
}

std::pair<double, CVector> principal_component(const CMatrix& c_matrix) {
  const auto n = c_matrix.rows();
  if (n < 1 || c_matrix.cols() != n) {
    throw std::invalid_argument("principal_component: need a square nonempty matrix");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (c_matrix + c_matrix.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double top = lam(n - 1);
  const double tie = 1e-12 * std::max(1.0, std::abs(top));
  Eigen::Index first = n - 1;
  while (first > 0 && lam(first - 1) >= top - tie) --first;
  const CMatrix space = es.eigenvectors().rightCols(n - first);

  CVector u;
  if (space.cols() == 1) {
    u = space.col(0);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const CVector proj = space * space.row(i).adjoint();
      if (proj.norm() > 1e-8) {
        u = proj.normalized();
        break;
      }
    }
  }

  Eigen::Index anchor = 0;
  const double peak = u.cwiseAbs().maxCoeff();
  while (std::abs(u(anchor)) < peak * (1.0 - 1e-9)) ++anchor;
  u *= std::conj(u(anchor)) / std::abs(u(anchor));
  return {top, u};
}

double rank_one_ratio(const CMatrix& c_matrix) {
  const double tr = c_matrix.trace().real();
  if (!(tr > 0.0)) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (c_matrix + c_matrix.adjoint()),
                                            Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / tr;
}

}  // namespace riss::sdp
