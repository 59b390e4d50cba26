#include "hermitian_ipm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace riss::sdp::detail {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Re tr(A B) for Hermitian B.
double inner(const CMatrix& a, const CMatrix& b) {
  if (a.size() == 0) return 0.0;
  return (a.array() * b.conjugate().array()).real().sum();
}

CMatrix herm_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

// Eigendecomposition-derived factors of a positive definite block.
struct PdFactors {
  CMatrix inv;
  CMatrix inv_sqrt;
};

PdFactors pd_factors(const CMatrix& m) {
  PdFactors f;
  if (m.size() == 0) return f;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm_part(m));
  VectorXd lam = es.eigenvalues();
  const double floor = std::max(lam.cwiseAbs().maxCoeff(), 1.0) * 1e-300;
  lam = lam.cwiseMax(floor);
  const CMatrix& q = es.eigenvectors();
  const VectorXd inv = lam.cwiseInverse();
  const VectorXd inv_sqrt = lam.cwiseSqrt().cwiseInverse();
  f.inv = q * inv.cast<cdouble>().asDiagonal() * q.adjoint();
  f.inv_sqrt = q * inv_sqrt.cast<cdouble>().asDiagonal() * q.adjoint();
  return f;
}

// Largest alpha with M + alpha*D still PSD, given M^{-1/2}.
double psd_step(const CMatrix& inv_sqrt, const CMatrix& d) {
  if (d.size() == 0) return kInf;
  const CMatrix b = herm_part(inv_sqrt * d * inv_sqrt);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(b, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : kInf;
}

double lp_step(const VectorXd& x, const VectorXd& dx) {
  double a = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

class Ops {
 public:
  explicit Ops(const ConicProblem& pr)
      : pr_(pr),
        n(static_cast<int>(pr.cobj.rows())),
        k(static_cast<int>(pr.caps.size())),
        p(static_cast<int>(pr.vp.cols())),
        nlp(k + (p > 0 ? 1 : 0)),
        m(n + k + p * p),
        basis(p) {
    acols.resize(n, k);
    for (int j = 0; j < k; ++j) acols.col(j) = pr.caps[j];
    b = VectorXd::Zero(m);
    b.head(n).setOnes();
    for (int j = 0; j < k; ++j) b(n + j) = pr.cap_rhs[j];
    clp = VectorXd::Zero(nlp);
    if (p > 0) clp(k) = pr.r_cost;
  }

  VectorXd apply(const CMatrix& x, const CMatrix& s, const VectorXd& xl) const {
    VectorXd out(m);
    out.head(n) = x.diagonal().real();
    if (k > 0) {
      const CMatrix axa = acols.adjoint() * x * acols;
      for (int j = 0; j < k; ++j) out(n + j) = axa(j, j).real() + xl(j);
    }
    if (p > 0) {
      VectorXd c = basis.coords(pr_.vp.adjoint() * x * pr_.vp) + basis.coords(s);
      c.head(p).array() -= xl(k);
      out.tail(p * p) = c;
    }
    return out;
  }

  void adjoint(const VectorXd& y, CMatrix& ax, CMatrix& as, VectorXd& al) const {
    ax = acols * y.segment(n, k).cast<cdouble>().asDiagonal() * acols.adjoint();
    ax.diagonal() += y.head(n).cast<cdouble>();
    al.resize(nlp);
    al.head(k) = y.segment(n, k);
    if (p > 0) {
      const CMatrix h = basis.herm(y.tail(p * p));
      ax += pr_.vp * h * pr_.vp.adjoint();
      as = h;
      al(k) = -y.segment(n + k, p).sum();
    } else {
      as.resize(0, 0);
    }
  }

  // HKM Schur complement M_ij = Re tr(A_i X A_j Z^{-1}) summed over blocks.
  MatrixXd schur(const CMatrix& x, const CMatrix& zi, const CMatrix& s, const CMatrix& zsi,
                 const VectorXd& ratio) const {
    MatrixXd mm(m, m);
    mm.topLeftCorner(n, n) = (x.array() * zi.conjugate().array()).real().matrix();
    CMatrix xa, za;
    if (k > 0) {
      xa = x * acols;
      za = zi * acols;
      for (int j = 0; j < k; ++j) {
        mm.block(0, n + j, n, 1) = (xa.col(j).array() * za.col(j).conjugate().array()).real();
      }
      const CMatrix axa = acols.adjoint() * xa;
      const CMatrix aza = acols.adjoint() * za;
      for (int j = 0; j < k; ++j) {
        for (int l = 0; l < k; ++l) mm(n + j, n + l) = (axa(j, l) * aza(l, j)).real();
        mm(n + j, n + j) += ratio(j);
      }
    }
    if (p > 0) {
      const int off = n + k;
      const int q = p * p;
      const CMatrix u = x * pr_.vp;
      const CMatrix w = zi * pr_.vp;
      for (int i = 0; i < n; ++i) {
        const CVector l = u.row(i).adjoint();
        const CVector r = w.row(i).transpose();
        mm.block(i, off, 1, q) = outer_coords(l, r).transpose();
      }
      for (int j = 0; j < k; ++j) {
        const CVector l = pr_.vp.adjoint() * xa.col(j);
        const CVector r = (pr_.vp.adjoint() * za.col(j)).conjugate();
        mm.block(n + j, off, 1, q) = outer_coords(l, r).transpose();
      }
      const CMatrix xt = pr_.vp.adjoint() * x * pr_.vp;
      const CMatrix zt = pr_.vp.adjoint() * zi * pr_.vp;
      for (int c = 0; c < q; ++c) {
        mm.block(off, off + c, q, 1) =
            basis.coords(sandwich(xt, c, zt) + sandwich(s, c, zsi));
      }
      mm.block(off, off, p, p).array() += ratio(k);
      mm.block(off, 0, q, off) = mm.block(0, off, off, q).transpose();
    }
    if (k > 0) mm.block(n, 0, k, n) = mm.block(0, n, n, k).transpose();
    return 0.5 * (mm + mm.transpose());
  }

  const ConicProblem& pr_;
  int n, k, p, nlp, m;
  HermBasis basis;
  CMatrix acols;
  VectorXd b;
  VectorXd clp;

 private:
  // Coordinates of T = l r^T.
  VectorXd outer_coords(const CVector& l, const CVector& r) const {
    VectorXd out(p * p);
    for (int a = 0; a < p; ++a) out(a) = (l(a) * r(a)).real();
    int idx = p;
    for (const auto& pr : basis.pairs()) {
      const cdouble ab = l(pr.a) * r(pr.b);
      const cdouble ba = l(pr.b) * r(pr.a);
      out(idx++) = (ab + ba).real() * kInvSqrt2;
      out(idx++) = (ab.imag() - ba.imag()) * kInvSqrt2;
    }
    return out;
  }

  // P E_c Q for basis element c.
  CMatrix sandwich(const CMatrix& pm, int c, const CMatrix& qm) const {
    if (c < p) return pm.col(c) * qm.row(c);
    const int rel = c - p;
    const auto& pr = basis.pairs()[rel / 2];
    const CMatrix ab = pm.col(pr.a) * qm.row(pr.b);
    const CMatrix ba = pm.col(pr.b) * qm.row(pr.a);
    if (rel % 2 == 0) return (ab + ba) * kInvSqrt2;
    return (ab - ba) * cdouble(0.0, kInvSqrt2);
  }
};

struct Direction {
  CMatrix dx, dz, ds, dzs;
  VectorXd dxl, dzl;
};

// Equilibrated Cholesky with escalating diagonal regularization.
class SchurFactor {
 public:
  explicit SchurFactor(const MatrixXd& mm) {
    scale_ = mm.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    MatrixXd sm = scale_.asDiagonal() * mm * scale_.asDiagonal();
    double reg = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      llt_.compute(sm);
      if (llt_.info() == Eigen::Success) return;
      reg = reg == 0.0 ? 1e-14 : reg * 100.0;
      sm.diagonal().array() += reg;
    }
    ok_ = false;
  }
  bool ok() const { return ok_; }
  VectorXd solve(const VectorXd& rhs) const {
    return scale_.asDiagonal() * llt_.solve(scale_.asDiagonal() * rhs);
  }

 private:
  VectorXd scale_;
  Eigen::LLT<MatrixXd> llt_;
  bool ok_ = true;
};

bool farkas_certificate(const Ops& op, const VectorXd& y) {
  const double t = op.b.dot(y);
  if (!(t > 0.0)) return false;
  CMatrix ax, as;
  VectorXd al;
  op.adjoint(y / t, ax, as, al);
  constexpr double slack = 1e-6;
  if (al.size() > 0 && al.maxCoeff() > slack) return false;
  Eigen::SelfAdjointEigenSolver<CMatrix> ex(herm_part(ax), Eigen::EigenvaluesOnly);
  if (ex.eigenvalues().maxCoeff() > slack) return false;
  if (as.size() > 0) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm_part(as), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() > slack) return false;
  }
  return true;
}

}  // namespace

HermBasis::HermBasis(int p) : p_(p) {
  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) pairs_.push_back({a, b});
  }
}

Eigen::VectorXd HermBasis::coords(const CMatrix& t) const {
  VectorXd out(dim());
  for (int a = 0; a < p_; ++a) out(a) = t(a, a).real();
  int idx = p_;
  for (const auto& pr : pairs_) {
    const cdouble ab = t(pr.a, pr.b);
    const cdouble ba = t(pr.b, pr.a);
    out(idx++) = (ab + ba).real() * kInvSqrt2;
    out(idx++) = (ab.imag() - ba.imag()) * kInvSqrt2;
  }
  return out;
}

CMatrix HermBasis::herm(const Eigen::VectorXd& y) const {
  CMatrix h = CMatrix::Zero(p_, p_);
  for (int a = 0; a < p_; ++a) h(a, a) = y(a);
  int idx = p_;
  for (const auto& pr : pairs_) {
    const cdouble v = cdouble(y(idx), y(idx + 1)) * kInvSqrt2;
    h(pr.a, pr.b) = v;
    h(pr.b, pr.a) = std::conj(v);
    idx += 2;
  }
  return h;
}

ConicResult solve_conic(const ConicProblem& pr, double tol, int max_iters) {
  const Ops op(pr);
  const int n = op.n;
  const int p = op.p;
  const double nu = static_cast<double>(n + p + op.nlp);
  const double cnorm = pr.cobj.norm() + std::abs(pr.r_cost);
  const double bnorm = op.b.norm();

  CMatrix x = CMatrix::Identity(n, n);
  CMatrix s = CMatrix::Identity(p, p);
  VectorXd xl = VectorXd::Ones(op.nlp);
  const double z0 = std::max({10.0, std::sqrt(static_cast<double>(n)), cnorm});
  CMatrix z = z0 * CMatrix::Identity(n, n);
  CMatrix zs = z0 * CMatrix::Identity(p, p);
  VectorXd zl = VectorXd::Constant(op.nlp, z0);
  VectorXd y = VectorXd::Zero(op.m);

  ConicResult res;
  int stalls = 0;
  int flat = 0;
  double best_merit = kInf;
  for (int iter = 0;; ++iter) {
    CMatrix ax, as;
    VectorXd al;
    op.adjoint(y, ax, as, al);
    const CMatrix rdx = pr.cobj - ax - z;
    const CMatrix rds = p > 0 ? CMatrix(-as - zs) : CMatrix();
    const VectorXd rdl = op.clp - al - zl;
    const VectorXd rp = op.b - op.apply(x, s, xl);

    const double compl_sum = inner(x, z) + inner(s, zs) + xl.dot(zl);
    const double mu = compl_sum / nu;
    const double pobj = inner(pr.cobj, x) + op.clp.dot(xl);
    const double dobj = op.b.dot(y);
    const double dnorm = std::sqrt(rdx.squaredNorm() + rds.squaredNorm() + rdl.squaredNorm());

    res.residuals.primal = rp.norm() / (1.0 + bnorm);
    res.residuals.dual = dnorm / (1.0 + cnorm);
    res.residuals.gap =
        std::max(std::abs(pobj - dobj), compl_sum) / (1.0 + std::abs(pobj) + std::abs(dobj));
    res.iterations = iter;
    res.primal_obj = pobj;
    res.dual_obj = dobj;

    if (res.residuals.primal <= tol && res.residuals.dual <= tol && res.residuals.gap <= tol) {
      res.status = SolveStatus::optimal;
      break;
    }
    if (dobj > 1e6 * (1.0 + cnorm) && farkas_certificate(op, y)) {
      res.status = SolveStatus::infeasible;
      break;
    }
    // Degenerate problems can stop making progress a little above tol;
    // give up after a run of iterations without a 10% merit improvement.
    const double merit =
        std::max({res.residuals.primal, res.residuals.dual, res.residuals.gap});
    if (merit < 0.9 * best_merit) {
      best_merit = merit;
      flat = 0;
    } else {
      ++flat;
    }
    if (iter >= max_iters || stalls >= 3 || flat >= 8) {
      res.status = farkas_certificate(op, y) ? SolveStatus::infeasible : SolveStatus::max_iters;
      break;
    }

    const PdFactors fx = pd_factors(x);
    const PdFactors fz = pd_factors(z);
    const PdFactors fs = pd_factors(s);
    const PdFactors fzs = pd_factors(zs);
    const VectorXd ratio = xl.cwiseQuotient(zl);

    const SchurFactor factor(op.schur(x, fz.inv, s, fzs.inv, ratio));
    if (!factor.ok()) {
      res.status = SolveStatus::max_iters;
      break;
    }

    auto direction = [&](double sigmu, const Direction* corr) {
      Direction d;
      CMatrix gx = sigmu * fz.inv - x;
      if (corr) gx -= corr->dx * corr->dz * fz.inv;
      CMatrix gs;
      if (p > 0) {
        gs = sigmu * fzs.inv - s;
        if (corr) gs -= corr->ds * corr->dzs * fzs.inv;
      }
      VectorXd gl = (VectorXd::Constant(op.nlp, sigmu) - xl.cwiseProduct(zl)).cwiseQuotient(zl);
      if (corr) gl -= corr->dxl.cwiseProduct(corr->dzl).cwiseQuotient(zl);

      const CMatrix hx = gx - x * rdx * fz.inv;
      const CMatrix hs = p > 0 ? CMatrix(gs - s * rds * fzs.inv) : CMatrix();
      const VectorXd hl = gl - xl.cwiseProduct(rdl).cwiseQuotient(zl);
      const VectorXd dy = factor.solve(rp - op.apply(hx, hs, hl));

      CMatrix dax, das;
      VectorXd dal;
      op.adjoint(dy, dax, das, dal);
      d.dz = rdx - dax;
      d.dx = herm_part(gx - x * d.dz * fz.inv);
      if (p > 0) {
        d.dzs = rds - das;
        d.ds = herm_part(gs - s * d.dzs * fzs.inv);
      }
      d.dzl = rdl - dal;
      d.dxl = gl - xl.cwiseProduct(d.dzl).cwiseQuotient(zl);
      return std::make_pair(d, dy);
    };

    auto steps = [&](const Direction& d) {
      const double ap = std::min({psd_step(fx.inv_sqrt, d.dx), psd_step(fs.inv_sqrt, d.ds),
                                  lp_step(xl, d.dxl)});
      const double ad = std::min({psd_step(fz.inv_sqrt, d.dz), psd_step(fzs.inv_sqrt, d.dzs),
                                  lp_step(zl, d.dzl)});
      return std::make_pair(ap, ad);
    };

    const auto [pred, dy_pred] = direction(0.0, nullptr);
    (void)dy_pred;
    const auto [ap_a, ad_a] = steps(pred);
    const double ap1 = std::min(1.0, ap_a);
    const double ad1 = std::min(1.0, ad_a);
    double mu_aff = inner(x + ap1 * pred.dx, z + ad1 * pred.dz) +
                    (xl + ap1 * pred.dxl).dot(zl + ad1 * pred.dzl);
    if (p > 0) mu_aff += inner(s + ap1 * pred.ds, zs + ad1 * pred.dzs);
    mu_aff /= nu;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    const auto [dir, dy] = direction(sigma * mu, &pred);
    const auto [ap_max, ad_max] = steps(dir);
    if (!dir.dx.allFinite() || !dir.dz.allFinite() || !dy.allFinite() ||
        std::isnan(ap_max) || std::isnan(ad_max)) {
      res.status = SolveStatus::max_iters;
      break;
    }
    const double gamma = 0.9 + 0.09 * std::min(ap1, ad1);
    const double ap = std::min(1.0, gamma * ap_max);
    const double ad = std::min(1.0, gamma * ad_max);

    x = herm_part(x + ap * dir.dx);
    xl += ap * dir.dxl;
    z = herm_part(z + ad * dir.dz);
    zl += ad * dir.dzl;
    y += ad * dy;
    if (p > 0) {
      s = herm_part(s + ap * dir.ds);
      zs = herm_part(zs + ad * dir.dzs);
    }
    stalls = (ap < 1e-9 && ad < 1e-9) ? stalls + 1 : 0;
  }

  res.x = std::move(x);
  res.s = std::move(s);
  res.lp = std::move(xl);
  res.y = std::move(y);
  return res;
}

}  // namespace riss::sdp::detail
