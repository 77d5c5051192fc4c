#include "catchsim/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace catchsim::optim {
namespace {

struct EvalValues {
  double f = 0.0;
  Eigen::VectorXd ce;
  Eigen::VectorXd ci;
};

EvalValues eval_values(const NlpProblem& nlp, const Eigen::VectorXd& x) {
  EvalValues v;
  if (nlp.eval_all) {
    nlp.eval_all(x, v.f, v.ce, v.ci);
    if (v.ce.size() != static_cast<Eigen::Index>(nlp.eq_constraints.size()) &&
        !nlp.eq_constraints.empty()) {
      throw ConfigError("sqp: eval_all returned wrong equality count");
    }
  } else {
    v.f = nlp.objective(x);
    v.ce.resize(static_cast<Eigen::Index>(nlp.eq_constraints.size()));
    for (size_t i = 0; i < nlp.eq_constraints.size(); ++i) {
      v.ce[static_cast<Eigen::Index>(i)] = nlp.eq_constraints[i](x);
    }
    v.ci.resize(static_cast<Eigen::Index>(nlp.ineq_constraints.size()));
    for (size_t i = 0; i < nlp.ineq_constraints.size(); ++i) {
      v.ci[static_cast<Eigen::Index>(i)] = nlp.ineq_constraints[i](x);
    }
  }
  return v;
}

Eigen::VectorXd stack_values(const EvalValues& v) {
  Eigen::VectorXd s(1 + v.ce.size() + v.ci.size());
  s[0] = v.f;
  if (v.ce.size() > 0) s.segment(1, v.ce.size()) = v.ce;
  if (v.ci.size() > 0) s.tail(v.ci.size()) = v.ci;
  return s;
}

double bound_at(const Eigen::VectorXd& b, int j, double fallback) {
  return b.size() > j ? b[j] : fallback;
}

/// Jacobian of [f; ce; ci] by finite differences, never stepping outside
/// the box. Interior coordinates use a central stencil; coordinates too
/// close to a bound use a second-order one-sided stencil on the interior
/// side (falling back to first order if the box is very tight).
Eigen::MatrixXd fd_stacked_jacobian(const NlpProblem& nlp,
                                    const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& f_base,
                                    double rel_step) {
  const int n = static_cast<int>(x.size());
  const int rows = static_cast<int>(f_base.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows, n);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    const double lo = bound_at(nlp.lb, j, -kInf);
    const double hi = bound_at(nlp.ub, j, kInf);
    Eigen::VectorXd xp = x;
    if (x[j] + h <= hi && x[j] - h >= lo) {
      xp[j] = x[j] + h;
      const Eigen::VectorXd fp = stack_values(eval_values(nlp, xp));
      xp[j] = x[j] - h;
      const Eigen::VectorXd fm = stack_values(eval_values(nlp, xp));
      jac.col(j) = (fp - fm) / (2.0 * h);
    } else if (x[j] + h > hi) {
      if (x[j] - 2.0 * h >= lo) {
        xp[j] = x[j] - h;
        const Eigen::VectorXd f1 = stack_values(eval_values(nlp, xp));
        xp[j] = x[j] - 2.0 * h;
        const Eigen::VectorXd f2 = stack_values(eval_values(nlp, xp));
        jac.col(j) = (3.0 * f_base - 4.0 * f1 + f2) / (2.0 * h);
      } else {
        const double hb = std::min(h, x[j] - lo);
        if (hb > 0.0) {
          xp[j] = x[j] - hb;
          jac.col(j) =
              (f_base - stack_values(eval_values(nlp, xp))) / hb;
        }
      }
    } else {
      if (x[j] + 2.0 * h <= hi) {
        xp[j] = x[j] + h;
        const Eigen::VectorXd f1 = stack_values(eval_values(nlp, xp));
        xp[j] = x[j] + 2.0 * h;
        const Eigen::VectorXd f2 = stack_values(eval_values(nlp, xp));
        jac.col(j) = (-3.0 * f_base + 4.0 * f1 - f2) / (2.0 * h);
      } else {
        const double hb = std::min(h, hi - x[j]);
        if (hb > 0.0) {
          xp[j] = x[j] + hb;
          jac.col(j) =
              (stack_values(eval_values(nlp, xp)) - f_base) / hb;
        }
      }
    }
  }
  return jac;
}

double l1_violation(const EvalValues& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.ce.size(); ++i) s += std::abs(v.ce[i]);
  for (Eigen::Index i = 0; i < v.ci.size(); ++i) s += std::max(0.0, v.ci[i]);
  return s;
}

Eigen::VectorXd clamp_to_box(const NlpProblem& nlp, Eigen::VectorXd x) {
  for (int j = 0; j < x.size(); ++j) {
    if (nlp.lb.size() > j) x[j] = std::max(x[j], nlp.lb[j]);
    if (nlp.ub.size() > j) x[j] = std::min(x[j], nlp.ub[j]);
  }
  return x;
}

double nlp_kkt_residual(const NlpProblem& nlp, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& g, const Eigen::MatrixXd& je,
                        const Eigen::MatrixXd& ji, const EvalValues& v,
                        const Eigen::VectorXd& nu,
                        const Eigen::VectorXd& lam) {
  Eigen::VectorXd gl = g;
  if (nu.size() > 0) gl += je.transpose() * nu;
  if (lam.size() > 0) gl += ji.transpose() * lam;
  const double bound_eps = 1e-8;
  for (int j = 0; j < x.size(); ++j) {
    const bool at_lo = nlp.lb.size() > j && x[j] <= nlp.lb[j] + bound_eps;
    const bool at_hi = nlp.ub.size() > j && x[j] >= nlp.ub[j] - bound_eps;
    if ((at_lo && gl[j] > 0.0) || (at_hi && gl[j] < 0.0)) gl[j] = 0.0;
  }
  const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
  double r = gl.lpNorm<Eigen::Infinity>();
  if (v.ce.size() > 0) r = std::max(r, v.ce.cwiseAbs().maxCoeff() * scale);
  for (Eigen::Index i = 0; i < v.ci.size(); ++i) {
    r = std::max(r, v.ci[i] * scale);
    if (lam.size() > i) r = std::max(r, std::abs(lam[i] * v.ci[i]) * scale);
  }
  return r / scale;
}

/// Relaxes an infeasible QP subproblem with L1 elastic slacks on the
/// linearized constraints: variables (d, s_eq+, s_eq-, s_in).
SolveReport solve_elastic(const Eigen::MatrixXd& b_mat,
                          const Eigen::VectorXd& g,
                          const Eigen::MatrixXd& je,
                          const Eigen::VectorXd& ce,
                          const Eigen::MatrixXd& ji,
                          const Eigen::VectorXd& ci,
                          const Eigen::VectorXd& dlb,
                          const Eigen::VectorXd& dub) {
  const int n = static_cast<int>(g.size());
  const int me = static_cast<int>(ce.size());
  const int mi = static_cast<int>(ci.size());
  const int nz = n + 2 * me + mi;
  const double rho = 1e4 * std::max(1.0, g.lpNorm<Eigen::Infinity>());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  QpProblem qp;
  qp.H = Eigen::MatrixXd::Zero(nz, nz);
  qp.H.topLeftCorner(n, n) = b_mat;
  qp.H.bottomRightCorner(2 * me + mi, 2 * me + mi) =
      1e-8 * Eigen::MatrixXd::Identity(2 * me + mi, 2 * me + mi);
  qp.f = Eigen::VectorXd::Constant(nz, rho);
  qp.f.head(n) = g;
  if (me > 0) {
    qp.A_eq = Eigen::MatrixXd::Zero(me, nz);
    qp.A_eq.leftCols(n) = je;
    qp.A_eq.block(0, n, me, me) = -Eigen::MatrixXd::Identity(me, me);
    qp.A_eq.block(0, n + me, me, me) = Eigen::MatrixXd::Identity(me, me);
    qp.b_eq = -ce;
  }
  if (mi > 0) {
    qp.A_in = Eigen::MatrixXd::Zero(mi, nz);
    qp.A_in.leftCols(n) = ji;
    qp.A_in.rightCols(mi) = -Eigen::MatrixXd::Identity(mi, mi);
    qp.b_in = -ci;
  }
  qp.lb = Eigen::VectorXd::Zero(nz);
  qp.lb.head(n) = dlb;
  qp.ub = Eigen::VectorXd::Constant(nz, kInf);
  qp.ub.head(n) = dub;

  SolveReport rep = solve_qp(qp);
  if (rep.status == SolveStatus::optimal || rep.x.size() == nz) {
    rep.x = rep.x.head(n).eval();
  }
  return rep;
}

}  // namespace

Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x, const Eigen::VectorXd& lb,
    const Eigen::VectorXd& ub, double rel_step) {
  NlpProblem tmp;
  tmp.objective = fn;
  tmp.lb = lb;
  tmp.ub = ub;
  Eigen::VectorXd base(1);
  base[0] = fn(x);
  return fd_stacked_jacobian(tmp, x, base, rel_step).row(0).transpose();
}

SolveReport solve_nlp(const NlpProblem& nlp, const SqpOptions& opts) {
  const auto tic = std::chrono::steady_clock::now();
  const int n = static_cast<int>(nlp.x0.size());
  if (n == 0) throw ConfigError("sqp: empty starting point");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  SolveReport rep;
  rep.status = SolveStatus::max_iter;

  Eigen::VectorXd x = clamp_to_box(nlp, nlp.x0);
  EvalValues v = eval_values(nlp, x);
  const int ce_n = static_cast<int>(v.ce.size());
  const int ci_n = static_cast<int>(v.ci.size());

  Eigen::MatrixXd jac = fd_stacked_jacobian(nlp, x, stack_values(v),
                                            opts.fd_step);
  Eigen::VectorXd g = jac.row(0).transpose();
  Eigen::MatrixXd je = jac.middleRows(1, ce_n);
  Eigen::MatrixXd ji = jac.bottomRows(ci_n);

  Eigen::MatrixXd b_mat = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(ce_n);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(ci_n);
  double sigma = 1.0;
  std::vector<int> warm_active;
  int consecutive_failures = 0;
  double kkt = kInf;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    rep.iterations = iter + 1;

    QpProblem qp;
    qp.H = b_mat;
    qp.f = g;
    if (ce_n > 0) {
      qp.A_eq = je;
      qp.b_eq = -v.ce;
    }
    if (ci_n > 0) {
      qp.A_in = ji;
      qp.b_in = -v.ci;
    }
    qp.lb = Eigen::VectorXd::Constant(n, -kInf);
    qp.ub = Eigen::VectorXd::Constant(n, kInf);
    for (int j = 0; j < n; ++j) {
      if (nlp.lb.size() > j) qp.lb[j] = nlp.lb[j] - x[j];
      if (nlp.ub.size() > j) qp.ub[j] = nlp.ub[j] - x[j];
    }

    QpOptions qp_opts;
    qp_opts.active_set = warm_active;
    SolveReport sub = solve_qp(qp, qp_opts);
    if (sub.status != SolveStatus::optimal) {
      sub = solve_elastic(b_mat, g, je, v.ce, ji, v.ci, qp.lb, qp.ub);
      if (sub.status != SolveStatus::optimal) {
        rep.status = SolveStatus::infeasible;
        break;
      }
      warm_active.clear();
    } else {
      warm_active = sub.active_set;
    }
    const Eigen::VectorXd d = sub.x.head(n);
    if (sub.eq_multipliers.size() == ce_n) nu = sub.eq_multipliers;
    if (sub.ineq_multipliers.size() >= ci_n) {
      lam = sub.ineq_multipliers.head(ci_n);
    }

    kkt = nlp_kkt_residual(nlp, x, g, je, ji, v, nu, lam);
    if (kkt < opts.tol) {
      rep.status = SolveStatus::optimal;
      break;
    }

    const double mult_norm =
        std::max(nu.size() > 0 ? nu.cwiseAbs().maxCoeff() : 0.0,
                 lam.size() > 0 ? lam.cwiseAbs().maxCoeff() : 0.0);
    sigma = std::max(sigma, 1.2 * mult_norm + 1e-4);
    const double viol0 = l1_violation(v);
    const double phi0 = v.f + sigma * viol0;
    double descent = g.dot(d) - sigma * viol0;
    if (descent > -1e-16) descent = -1e-16;

    double alpha = 1.0;
    bool accepted = false;
    EvalValues vt;
    Eigen::VectorXd xt;
    for (int ls = 0; ls < 30; ++ls) {
      xt = clamp_to_box(nlp, x + alpha * d);
      vt = eval_values(nlp, xt);
      const double phit = vt.f + sigma * l1_violation(vt);
      if (phit <= phi0 + 1e-4 * alpha * descent) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      ++consecutive_failures;
      if (consecutive_failures == 1) {
        b_mat = Eigen::MatrixXd::Identity(n, n);  // retry with fresh model
        continue;
      }
      rep.status = kkt < 1e2 * opts.tol ? SolveStatus::optimal
                                        : SolveStatus::numerical;
      break;
    }
    consecutive_failures = 0;

    const Eigen::VectorXd x_old = x;
    const Eigen::VectorXd g_old = g;
    const Eigen::MatrixXd je_old = je;
    const Eigen::MatrixXd ji_old = ji;
    x = xt;
    v = vt;
    jac = fd_stacked_jacobian(nlp, x, stack_values(v), opts.fd_step);
    g = jac.row(0).transpose();
    je = jac.middleRows(1, ce_n);
    ji = jac.bottomRows(ci_n);
    if (opts.record_merit) {
      rep.merit_history.push_back(v.f + sigma * l1_violation(v));
    }

    // Damped BFGS on the Lagrangian gradient difference.
    Eigen::VectorXd yvec = g - g_old;
    if (ce_n > 0) yvec += (je - je_old).transpose() * nu;
    if (ci_n > 0) yvec += (ji - ji_old).transpose() * lam;
    const Eigen::VectorXd s = x - x_old;
    const Eigen::VectorXd bs = b_mat * s;
    const double sbs = s.dot(bs);
    double sy = s.dot(yvec);
    if (sbs > 1e-14) {
      if (sy < 0.2 * sbs) {
        const double theta = 0.8 * sbs / (sbs - sy);
        yvec = theta * yvec + (1.0 - theta) * bs;
        sy = s.dot(yvec);
      }
      if (sy > 1e-12 * s.squaredNorm()) {
        b_mat += yvec * yvec.transpose() / sy - bs * bs.transpose() / sbs;
        b_mat = 0.5 * (b_mat + b_mat.transpose()).eval();
      }
    }

    if (alpha * d.lpNorm<Eigen::Infinity>() <
        opts.step_tol * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      kkt = nlp_kkt_residual(nlp, x, g, je, ji, v, nu, lam);
      rep.status = kkt < 1e2 * opts.tol ? SolveStatus::optimal
                                        : SolveStatus::max_iter;
      break;
    }
  }

  rep.x = x;
  rep.kkt_residual = kkt;
  rep.eq_multipliers = nu;
  rep.ineq_multipliers = lam;
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
          .count();
  return rep;
}

}  // namespace catchsim::optim
