#include "ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace eqr::detail {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double inf_norm(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// trace(A B) for symmetric A, B.
double frob(const MatrixXd& a, const MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

struct BlockWork {
  int dim = 0;
  double f0norm = 1.0;
  MatrixXd S, Z;
  MatrixXd Rn, Rinv;         // NT scaling factor W = Rn Rn^T and its inverse
  VectorXd sig;              // common scaled spectrum of S and Z
  std::vector<MatrixXd> Ftil;
  MatrixXd Fx, Rp, Rptil;
  MatrixXd Dhat;             // corrector complementarity target
  MatrixXd dStilA, dZtilA;   // affine scaled directions
  MatrixXd dStil, dZtil;     // final scaled directions
};

// Tightens `amin` to keep diag(sig) + alpha * Dtil PSD.  The Frobenius
// bound skips the eigensolve whenever this block cannot lower the running
// minimum, which is the common case when many blocks are active.
void shrink_step(const VectorXd& sig, const MatrixXd& Dtil, double& amin) {
  const int d = static_cast<int>(sig.size());
  MatrixXd p(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      p(i, j) = Dtil(i, j) / std::sqrt(sig(i) * sig(j));
  const double fn = p.norm();
  if (fn <= 0.0 || 1.0 / fn >= amin) return;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(p, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin < 0.0) amin = std::min(amin, -1.0 / lmin);
}

// Cholesky with an escalating diagonal ridge as a fallback for nearly
// singular Schur complements.
class RidgedLlt {
 public:
  bool factor(const MatrixXd& m) {
    if (m.rows() == 0) return true;
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    double ridge = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      if (ridge == 0.0) {
        llt_.compute(m);
      } else {
        llt_.compute(MatrixXd(m + ridge * MatrixXd::Identity(m.rows(), m.cols())));
      }
      if (llt_.info() == Eigen::Success) return true;
      ridge = ridge == 0.0 ? 1e-14 * scale : ridge * 100.0;
      if (ridge > 1e-5 * scale) break;
    }
    return false;
  }
  VectorXd solve(const VectorXd& q) const {
    return q.size() == 0 ? q : VectorXd(llt_.solve(q));
  }
  MatrixXd solve(const MatrixXd& q) const {
    return q.rows() == 0 ? q : MatrixXd(llt_.solve(q));
  }

 private:
  Eigen::LLT<MatrixXd> llt_;
};

void validate(const ConeProblem& prob) {
  const int n = prob.num_vars();
  if (n < 1) throw std::invalid_argument("ipm: no variables");
  if (prob.blocks.empty()) throw std::invalid_argument("ipm: no blocks");
  std::vector<char> covered(static_cast<std::size_t>(n), 0);
  const bool structured = prob.num_shared >= 0;
  const int ngroups =
      structured ? static_cast<int>(prob.group_begin.size()) - 1 : 0;
  if (structured) {
    if (prob.group_begin.empty() || prob.group_begin.front() != prob.num_shared ||
        prob.group_begin.back() != n)
      throw std::invalid_argument("ipm: bad group partition");
    for (int g = 0; g < ngroups; ++g)
      if (prob.group_begin[g + 1] < prob.group_begin[g])
        throw std::invalid_argument("ipm: bad group partition");
  }
  for (const auto& blk : prob.blocks) {
    const int d = static_cast<int>(blk.constant.rows());
    if (d < 1 || blk.constant.cols() != d)
      throw std::invalid_argument("ipm: non-square block");
    if (blk.vars.size() != blk.coeff.size())
      throw std::invalid_argument("ipm: vars/coeff mismatch");
    int prev = -1;
    for (std::size_t k = 0; k < blk.vars.size(); ++k) {
      const int v = blk.vars[k];
      if (v <= prev || v >= n)
        throw std::invalid_argument("ipm: bad variable index");
      prev = v;
      if (blk.coeff[k].rows() != d || blk.coeff[k].cols() != d)
        throw std::invalid_argument("ipm: coeff dimension mismatch");
      covered[static_cast<std::size_t>(v)] = 1;
      if (structured && v >= prob.num_shared) {
        if (blk.group < 0 || blk.group >= ngroups ||
            v < prob.group_begin[blk.group] ||
            v >= prob.group_begin[blk.group + 1])
          throw std::invalid_argument("ipm: variable outside its block group");
      }
    }
    if (structured && blk.group >= ngroups)
      throw std::invalid_argument("ipm: bad block group");
  }
  for (int i = 0; i < n; ++i)
    if (!covered[static_cast<std::size_t>(i)])
      throw std::invalid_argument("ipm: variable appears in no block");
}

}  // namespace

IpmResult run_ipm(const ConeProblem& prob, const IpmOptions& opts) {
  validate(prob);

  const int n = prob.num_vars();
  const int nblocks = static_cast<int>(prob.blocks.size());
  const bool structured = prob.num_shared >= 0;
  const int ns = structured ? prob.num_shared : n;
  const int ngroups =
      structured ? static_cast<int>(prob.group_begin.size()) - 1 : 0;

  std::vector<BlockWork> work(static_cast<std::size_t>(nblocks));
  int sumdim = 0;
  for (int j = 0; j < nblocks; ++j) {
    auto& w = work[static_cast<std::size_t>(j)];
    const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
    w.dim = static_cast<int>(blk.constant.rows());
    sumdim += w.dim;
    w.f0norm = std::max(1.0, inf_norm(blk.constant));
    const double s0 = w.f0norm;
    w.S = s0 * MatrixXd::Identity(w.dim, w.dim);
    w.Z = w.S;
    w.Ftil.resize(blk.vars.size());
  }

  VectorXd x = VectorXd::Zero(n);
  const double cnorm = 1.0 + prob.c.cwiseAbs().maxCoeff();

  // Schur storage: one dense matrix, or the block-angular pieces.
  MatrixXd denseM;
  RidgedLlt denseLlt;
  MatrixXd U(ns, ns);
  MatrixXd U0;  // shared-shared Schur block before group elimination
  std::vector<MatrixXd> Dg, Bg, CgT;
  std::vector<RidgedLlt> gllt;
  std::vector<VectorXd> tg;
  if (structured) {
    Dg.resize(static_cast<std::size_t>(ngroups));
    Bg.resize(static_cast<std::size_t>(ngroups));
    CgT.resize(static_cast<std::size_t>(ngroups));
    gllt.resize(static_cast<std::size_t>(ngroups));
    tg.resize(static_cast<std::size_t>(ngroups));
    for (int g = 0; g < ngroups; ++g) {
      const int ng = prob.group_begin[g + 1] - prob.group_begin[g];
      Dg[static_cast<std::size_t>(g)].resize(ng, ng);
      Bg[static_cast<std::size_t>(g)].resize(ns, ng);
    }
  } else {
    denseM.resize(n, n);
  }
  RidgedLlt uLlt;

  IpmResult res;
  res.x = x;

  VectorXd rd(n), q(n), dx(n);

  auto snapshot = [&](IpmStatus st, double pobj, double dobj, double mu,
                      double relgap, double pres, double dres, int iter) {
    res.status = st;
    res.x = x;
    res.Z.clear();
    res.Z.reserve(static_cast<std::size_t>(nblocks));
    for (const auto& w : work) res.Z.push_back(w.Z);
    res.pobj = pobj;
    res.dobj = dobj;
    res.mu = mu;
    res.rel_gap = relgap;
    res.primal_res = pres;
    res.dual_res = dres;
    res.iterations = iter;
  };

  // Best iterate seen so far, by worst-case merit.  Degenerate optima can
  // stall the iteration after it has already produced an essentially optimal
  // point; failure exits then return this iterate instead of the wreckage.
  double best_merit = std::numeric_limits<double>::infinity();
  VectorXd best_x;
  std::vector<MatrixXd> best_Z;
  double best_pobj = 0.0, best_dobj = 0.0, best_mu = 0.0, best_relgap = 1.0;
  double best_pres = 0.0, best_dres = 0.0;

  auto finish_failure = [&](IpmStatus hard, int iter) {
    if (std::isfinite(best_merit)) {
      res.status = hard == IpmStatus::MaxIterations
                       ? IpmStatus::MaxIterations
                       : (best_merit <= 1e-2 ? IpmStatus::Stalled : hard);
      res.x = best_x;
      res.Z = best_Z;
      res.pobj = best_pobj;
      res.dobj = best_dobj;
      res.mu = best_mu;
      res.rel_gap = best_relgap;
      res.primal_res = best_pres;
      res.dual_res = best_dres;
      res.iterations = iter;
    } else {
      res.status = hard;
      res.iterations = iter;
    }
  };

  constexpr double kTau = 0.98;
  const bool trace = std::getenv("EQR_IPM_TRACE") != nullptr;

  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    // Residuals and merit quantities at the current iterate.
    double pres = 0.0, gapsum = 0.0, dobj = 0.0;
    for (int j = 0; j < nblocks; ++j) {
      auto& w = work[static_cast<std::size_t>(j)];
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      w.Fx = blk.constant;
      for (std::size_t k = 0; k < blk.vars.size(); ++k)
        w.Fx += x(blk.vars[k]) * blk.coeff[k];
      w.Rp = w.Fx - w.S;
      pres = std::max(pres, inf_norm(w.Rp) / w.f0norm);
      gapsum += frob(w.S, w.Z);
      dobj -= frob(blk.constant, w.Z);
    }
    rd = prob.c;
    for (int j = 0; j < nblocks; ++j) {
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      const auto& w = work[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < blk.vars.size(); ++k)
        rd(blk.vars[k]) -= frob(blk.coeff[k], w.Z);
    }
    const double dres = rd.cwiseAbs().maxCoeff() / cnorm;
    const double pobj = prob.c.dot(x);
    const double mu = gapsum / sumdim;
    const double relgap = gapsum / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (trace) {
      int xmax_i = 0;
      x.cwiseAbs().maxCoeff(&xmax_i);
      std::fprintf(stderr,
                   "[ipm] it=%3d mu=%9.3e gap=%9.3e pres=%9.3e dres=%9.3e "
                   "pobj=%+.9e dobj=%+.9e |x|=%9.3e@%d\n",
                   iter, mu, relgap, pres, dres, pobj, dobj,
                   x.cwiseAbs().maxCoeff(), xmax_i);
    }

    const double merit = std::max({pres, dres, relgap});
    if (std::isfinite(merit) && merit < best_merit) {
      best_merit = merit;
      best_x = x;
      best_Z.clear();
      best_Z.reserve(static_cast<std::size_t>(nblocks));
      for (const auto& w : work) best_Z.push_back(w.Z);
      best_pobj = pobj;
      best_dobj = dobj;
      best_mu = mu;
      best_relgap = relgap;
      best_pres = pres;
      best_dres = dres;
    }

    if (pres <= opts.feas_tol && dres <= opts.feas_tol && relgap <= opts.gap_tol) {
      snapshot(IpmStatus::Converged, pobj, dobj, mu, relgap, pres, dres, iter);
      return res;
    }
    // On a genuine improving ray |x| explodes and the absolute primal
    // residual grows with it, so judge feasibility relative to the iterate
    // scale (the normalized ray is what certifies unboundedness).
    const double xscale = 1.0 + x.cwiseAbs().maxCoeff();
    if (pobj < -opts.divergence_bound && pres / xscale <= 1e-6) {
      snapshot(IpmStatus::PrimalDiverging, pobj, dobj, mu, relgap, pres, dres, iter);
      return res;
    }
    if (dobj > opts.divergence_bound && dres <= 1e-6) {
      snapshot(IpmStatus::DualDiverging, pobj, dobj, mu, relgap, pres, dres, iter);
      return res;
    }
    if (!std::isfinite(mu) || mu > 1e16 || x.cwiseAbs().maxCoeff() > 1e13) {
      finish_failure(IpmStatus::Breakdown, iter);
      return res;
    }
    if (iter == opts.max_iterations) {
      finish_failure(IpmStatus::MaxIterations, iter);
      return res;
    }

    // Nesterov-Todd scaling per block: with L_S L_S^T = S, L_Z L_Z^T = Z and
    // the SVD L_Z^T L_S = U diag(sig) V^T, the factor Rn = L_S V sig^{-1/2}
    // maps both iterates to diag(sig) (S = Rn sig Rn^T, Z = Rn^{-T} sig Rn^{-1}).
    bool scale_ok = true;
    for (int j = 0; j < nblocks && scale_ok; ++j) {
      auto& w = work[static_cast<std::size_t>(j)];
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      Eigen::LLT<MatrixXd> ls(w.S), lz(w.Z);
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) {
        scale_ok = false;
        break;
      }
      const MatrixXd Ls = ls.matrixL();
      const MatrixXd Lz = lz.matrixL();
      Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
      w.sig = svd.singularValues();
      if (w.sig(w.dim - 1) < 1e-154) {
        scale_ok = false;
        break;
      }
      const VectorXd shalf = w.sig.array().sqrt().matrix();
      w.Rn = Ls * svd.matrixV() * shalf.cwiseInverse().asDiagonal();
      w.Rinv = shalf.cwiseInverse().asDiagonal() * svd.matrixU().transpose() *
               Lz.transpose();
      for (std::size_t k = 0; k < blk.vars.size(); ++k) {
        w.Ftil[k] = w.Rinv * blk.coeff[k] * w.Rinv.transpose();
        w.Ftil[k] = 0.5 * (w.Ftil[k] + w.Ftil[k].transpose()).eval();
      }
      w.Rptil = w.Rinv * w.Rp * w.Rinv.transpose();
      w.Rptil = 0.5 * (w.Rptil + w.Rptil.transpose()).eval();
    }
    if (!scale_ok) {
      if (trace) std::fprintf(stderr, "[ipm] scale breakdown at it=%d\n", iter);
      finish_failure(IpmStatus::Breakdown, iter);
      return res;
    }

    // Schur complement assembly (shared across predictor and corrector).
    if (structured) {
      U.setZero();
      for (int g = 0; g < ngroups; ++g) {
        Dg[static_cast<std::size_t>(g)].setZero();
        Bg[static_cast<std::size_t>(g)].setZero();
      }
    } else {
      denseM.setZero();
    }
    for (int j = 0; j < nblocks; ++j) {
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      const auto& w = work[static_cast<std::size_t>(j)];
      const int gb = blk.group >= 0 ? prob.group_begin[blk.group] : 0;
      for (std::size_t a = 0; a < blk.vars.size(); ++a) {
        for (std::size_t b = a; b < blk.vars.size(); ++b) {
          const double v = frob(w.Ftil[a], w.Ftil[b]);
          const int va = blk.vars[a], vb = blk.vars[b];
          if (!structured) {
            denseM(va, vb) += v;
            if (va != vb) denseM(vb, va) += v;
          } else if (vb < ns) {
            U(va, vb) += v;
            if (va != vb) U(vb, va) += v;
          } else if (va < ns) {
            Bg[static_cast<std::size_t>(blk.group)](va, vb - gb) += v;
          } else {
            auto& D = Dg[static_cast<std::size_t>(blk.group)];
            D(va - gb, vb - gb) += v;
            if (va != vb) D(vb - gb, va - gb) += v;
          }
        }
      }
    }
    bool factor_ok = true;
    if (structured) {
      U0 = U;
      for (int g = 0; g < ngroups && factor_ok; ++g) {
        auto& D = Dg[static_cast<std::size_t>(g)];
        auto& lg = gllt[static_cast<std::size_t>(g)];
        if (!lg.factor(D)) {
          factor_ok = false;
          break;
        }
        CgT[static_cast<std::size_t>(g)] =
            lg.solve(MatrixXd(Bg[static_cast<std::size_t>(g)].transpose()));
        U -= Bg[static_cast<std::size_t>(g)] * CgT[static_cast<std::size_t>(g)];
      }
      factor_ok = factor_ok && uLlt.factor(U);
    } else {
      factor_ok = denseLlt.factor(denseM);
    }
    if (!factor_ok) {
      finish_failure(IpmStatus::Breakdown, iter);
      return res;
    }

    auto solve_schur_raw = [&](const VectorXd& rhs) -> VectorXd {
      if (!structured) return denseLlt.solve(rhs);
      VectorXd qs = rhs.head(ns);
      for (int g = 0; g < ngroups; ++g) {
        const int gb = prob.group_begin[g];
        const int ng = prob.group_begin[g + 1] - gb;
        tg[static_cast<std::size_t>(g)] =
            gllt[static_cast<std::size_t>(g)].solve(VectorXd(rhs.segment(gb, ng)));
        if (ng > 0)
          qs -= Bg[static_cast<std::size_t>(g)] * tg[static_cast<std::size_t>(g)];
      }
      VectorXd out(n);
      out.head(ns) = uLlt.solve(qs);
      for (int g = 0; g < ngroups; ++g) {
        const int gb = prob.group_begin[g];
        const int ng = prob.group_begin[g + 1] - gb;
        if (ng > 0)
          out.segment(gb, ng) = tg[static_cast<std::size_t>(g)] -
                                CgT[static_cast<std::size_t>(g)] * out.head(ns);
      }
      return out;
    };

    auto schur_matvec = [&](const VectorXd& v) -> VectorXd {
      if (!structured) return denseM * v;
      VectorXd out(n);
      out.head(ns) = U0 * v.head(ns);
      for (int g = 0; g < ngroups; ++g) {
        const int gb = prob.group_begin[g];
        const int ng = prob.group_begin[g + 1] - gb;
        if (ng == 0) continue;
        out.head(ns) += Bg[static_cast<std::size_t>(g)] * v.segment(gb, ng);
        out.segment(gb, ng) =
            Bg[static_cast<std::size_t>(g)].transpose() * v.head(ns) +
            Dg[static_cast<std::size_t>(g)] * v.segment(gb, ng);
      }
      return out;
    };

    // Ridged or ill-conditioned factors leave a direction error that floors
    // the attainable residuals; a couple of refinement passes remove it.
    auto solve_schur = [&](const VectorXd& rhs) -> VectorXd {
      VectorXd sol = solve_schur_raw(rhs);
      const double rhs_scale = 1.0 + rhs.cwiseAbs().maxCoeff();
      for (int pass = 0; pass < 2; ++pass) {
        const VectorXd resid = rhs - schur_matvec(sol);
        if (resid.cwiseAbs().maxCoeff() <= 1e-13 * rhs_scale) break;
        sol += solve_schur_raw(resid);
      }
      return sol;
    };

    // Predictor (affine scaling) direction: target Dhat = -diag(sig).
    q = -rd;
    for (int j = 0; j < nblocks; ++j) {
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      const auto& w = work[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < blk.vars.size(); ++k)
        q(blk.vars[k]) += -w.Ftil[k].diagonal().dot(w.sig) - frob(w.Ftil[k], w.Rptil);
    }
    dx = solve_schur(q);
    double apA = 1e100, adA = 1e100;
    for (int j = 0; j < nblocks; ++j) {
      auto& w = work[static_cast<std::size_t>(j)];
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      w.dStilA = w.Rptil;
      for (std::size_t k = 0; k < blk.vars.size(); ++k)
        w.dStilA += dx(blk.vars[k]) * w.Ftil[k];
      w.dZtilA = -w.dStilA;
      w.dZtilA.diagonal() -= w.sig;
      shrink_step(w.sig, w.dStilA, apA);
      shrink_step(w.sig, w.dZtilA, adA);
    }
    apA = std::min(1.0, apA);
    adA = std::min(1.0, adA);
    double muaff = 0.0;
    for (const auto& w : work) {
      const MatrixXd es = MatrixXd(w.sig.asDiagonal()) + apA * w.dStilA;
      const MatrixXd ez = MatrixXd(w.sig.asDiagonal()) + adA * w.dZtilA;
      muaff += frob(es, ez);
    }
    muaff = std::max(0.0, muaff / sumdim);
    const double sigc =
        std::clamp((muaff / mu) * (muaff / mu) * (muaff / mu), 1e-12, 1.0);

    // Corrector target: Dhat = Lyap^{-1}(sigc*mu*I - H(dS dZ)) - diag(sig),
    // where Lyap^{-1} divides entrywise by (sig_i + sig_j) / 2.
    q = -rd;
    for (int j = 0; j < nblocks; ++j) {
      auto& w = work[static_cast<std::size_t>(j)];
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      MatrixXd corr = 0.5 * (w.dStilA * w.dZtilA + w.dZtilA * w.dStilA);
      w.Dhat.resize(w.dim, w.dim);
      for (int r = 0; r < w.dim; ++r)
        for (int c2 = 0; c2 < w.dim; ++c2) {
          const double target = (r == c2 ? sigc * mu : 0.0) - corr(r, c2);
          w.Dhat(r, c2) = 2.0 * target / (w.sig(r) + w.sig(c2)) -
                          (r == c2 ? w.sig(r) : 0.0);
        }
      for (std::size_t k = 0; k < blk.vars.size(); ++k)
        q(blk.vars[k]) += frob(w.Ftil[k], w.Dhat) - frob(w.Ftil[k], w.Rptil);
    }
    dx = solve_schur(q);
    double ap = 1e100, ad = 1e100;
    for (int j = 0; j < nblocks; ++j) {
      auto& w = work[static_cast<std::size_t>(j)];
      const auto& blk = prob.blocks[static_cast<std::size_t>(j)];
      w.dStil = w.Rptil;
      for (std::size_t k = 0; k < blk.vars.size(); ++k)
        w.dStil += dx(blk.vars[k]) * w.Ftil[k];
      w.dZtil = w.Dhat - w.dStil;
      shrink_step(w.sig, w.dStil, ap);
      shrink_step(w.sig, w.dZtil, ad);
    }
    ap = std::min(1.0, kTau * ap);
    ad = std::min(1.0, kTau * ad);
    if (trace)
      std::fprintf(stderr, "[ipm]        sigc=%9.3e ap=%9.3e ad=%9.3e\n",
                   sigc, ap, ad);

    x += ap * dx;
    for (auto& w : work) {
      MatrixXd dS = w.Rn * w.dStil * w.Rn.transpose();
      MatrixXd dZ = w.Rinv.transpose() * w.dZtil * w.Rinv;
      w.S += ap * 0.5 * (dS + dS.transpose());
      w.Z += ad * 0.5 * (dZ + dZ.transpose());
    }
  }

  return res;  // unreachable
}

}  // namespace eqr::detail
