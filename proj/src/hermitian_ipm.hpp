// Internal conic solver used by sdp.cpp. Not installed.
//
// Variables: X (N x N Hermitian PSD), S (p x p Hermitian PSD, p may be 0),
// and a nonnegative vector [s_1..s_K, r] where r exists only when p > 0.
//
//   min  Re tr(C X) + r_cost * r
//   s.t. diag(X) = 1
//        Re(a_k^H X a_k) + s_k = rhs_k
//        V^H X V + S - r I = 0        (p^2 real equations)
#pragma once

#include "riss/array_channel.hpp"
#include "riss/sdp.hpp"

#include <vector>

namespace riss::sdp::detail {

struct ConicProblem {
  CMatrix cobj;
  std::vector<CVector> caps;
  std::vector<double> cap_rhs;
  CMatrix vp;  ///< N x p, orthonormal columns
  double r_cost = 0.0;
};

struct ConicResult {
  CMatrix x;
  CMatrix s;
  Eigen::VectorXd lp;
  Eigen::VectorXd y;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  Residuals residuals;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iters;
};

ConicResult solve_conic(const ConicProblem& problem, double tol, int max_iters);

/// Orthonormal real coordinates of p x p Hermitian matrices under Re tr(A B).
/// Order: p diagonal entries, then (re, im) for each pair a < b, row major.
class HermBasis {
 public:
  explicit HermBasis(int p);

  int dim() const { return p_ * p_; }
  int order() const { return p_; }

  /// Re tr(E_q T) for every basis element; T need not be Hermitian.
  Eigen::VectorXd coords(const CMatrix& t) const;
  /// Sum_q y_q E_q.
  CMatrix herm(const Eigen::VectorXd& y) const;

  struct Pair {
    int a;
    int b;
  };
  const std::vector<Pair>& pairs() const { return pairs_; }

 private:
  int p_;
  std::vector<Pair> pairs_;
};

}  // namespace riss::sdp::detail
