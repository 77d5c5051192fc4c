#include "catchsim/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>

namespace catchsim::optim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Canonical form used internally: all inequalities as C x <= d, rows
/// ordered A_in, then finite upper bounds, then finite lower bounds.
struct Canonical {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
  double scale = 1.0;  // max(1, |H|, |f|) for relative tolerances
};

Canonical canonicalize(const QpProblem& p) {
  const int n = p.num_vars();
  if (p.H.rows() != n || p.H.cols() != n || p.f.size() != n) {
    throw ConfigError("qp: H must be square and match f");
  }
  if (!p.H.isApprox(p.H.transpose(), 1e-10)) {
    throw ConfigError("qp: H must be symmetric");
  }
  const int m_eq = static_cast<int>(p.A_eq.rows());
  const int m_in = static_cast<int>(p.A_in.rows());
  if (m_eq > 0 && (p.A_eq.cols() != n || p.b_eq.size() != m_eq)) {
    throw ConfigError("qp: equality block dimensions inconsistent");
  }
  if (m_in > 0 && (p.A_in.cols() != n || p.b_in.size() != m_in)) {
    throw ConfigError("qp: inequality block dimensions inconsistent");
  }
  if (p.lb.size() != 0 && p.lb.size() != n) {
    throw ConfigError("qp: lb size mismatch");
  }
  if (p.ub.size() != 0 && p.ub.size() != n) {
    throw ConfigError("qp: ub size mismatch");
  }

  Canonical c;
  c.H = 0.5 * (p.H + p.H.transpose());
  c.f = p.f;
  if (m_eq > 0) {
    c.A_eq = p.A_eq;
    c.b_eq = p.b_eq;
  } else {
    c.A_eq.resize(0, n);
    c.b_eq.resize(0);
  }

  int rows = m_in;
  for (int j = 0; j < n; ++j) {
    if (p.ub.size() > 0 && std::isfinite(p.ub[j])) ++rows;
  }
  for (int j = 0; j < n; ++j) {
    if (p.lb.size() > 0 && std::isfinite(p.lb[j])) ++rows;
  }
  c.C = Eigen::MatrixXd::Zero(rows, n);
  c.d.resize(rows);
  int r = 0;
  if (m_in > 0) {
    c.C.topRows(m_in) = p.A_in;
    c.d.head(m_in) = p.b_in;
    r = m_in;
  }
  for (int j = 0; j < n; ++j) {
    if (p.ub.size() > 0 && std::isfinite(p.ub[j])) {
      c.C(r, j) = 1.0;
      c.d[r] = p.ub[j];
      ++r;
    }
  }
  for (int j = 0; j < n; ++j) {
    if (p.lb.size() > 0 && std::isfinite(p.lb[j])) {
      c.C(r, j) = -1.0;
      c.d[r] = -p.lb[j];
      ++r;
    }
  }
  c.scale = std::max({1.0, c.H.cwiseAbs().maxCoeff(),
                      c.f.size() > 0 ? c.f.cwiseAbs().maxCoeff() : 0.0});
  return c;
}

/// Verifies H is positive semidefinite via a pivoted LDL^T factorization.
void check_psd(const Eigen::MatrixXd& h, double scale) {
  if (h.rows() == 0) return;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  const double floor = -1e-7 * scale;
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < floor) {
    throw ConfigError("qp: H is not positive semidefinite");
  }
}

struct PhaseResult {
  Eigen::VectorXd x;
  std::vector<int> working_set;
  SolveStatus status = SolveStatus::numerical;
  int iterations = 0;
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd lambda_full;  // over all canonical rows
};

/// Primal active-set iteration from a feasible point. The working set W
/// holds canonical inequality indices treated as equalities; each step
/// solves the equality-constrained QP on the current W via a nullspace
/// basis, then either adds the first blocking constraint or removes the
/// most negative multiplier (smallest index on ties).
PhaseResult active_set_iterate(const Canonical& c, Eigen::VectorXd x,
                               std::vector<int> working, double tol,
                               int max_iter) {
  const int n = static_cast<int>(c.H.cols());
  const int m_eq = static_cast<int>(c.A_eq.rows());
  const int m_c = static_cast<int>(c.C.rows());
  const double feas_tol = tol * c.scale;

  PhaseResult res;
  res.status = SolveStatus::max_iter;

  // Drop warm-start rows that are not actually tight at x, and rows beyond
  // what independence can support.
  std::sort(working.begin(), working.end());
  working.erase(std::unique(working.begin(), working.end()), working.end());
  {
    std::vector<int> keep;
    for (int i : working) {
      if (i < 0 || i >= m_c) continue;
      if (std::abs(c.C.row(i) * x - c.d[i]) <= 1e3 * feas_tol) keep.push_back(i);
      if (static_cast<int>(keep.size()) + m_eq >= n) break;
    }
    working = std::move(keep);
  }

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    const int mw = static_cast<int>(working.size());
    Eigen::MatrixXd m(m_eq + mw, n);
    if (m_eq > 0) m.topRows(m_eq) = c.A_eq;
    for (int i = 0; i < mw; ++i) m.row(m_eq + i) = c.C.row(working[i]);

    // Nullspace basis of the working constraints.
    Eigen::MatrixXd z;
    if (m.rows() == 0) {
      z = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
      z = lu.kernel();
      if (lu.dimensionOfKernel() == 0) z.resize(n, 0);
    }

    const Eigen::VectorXd g = c.H * x + c.f;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    bool ray = false;  // descent ray with zero curvature
    if (z.cols() > 0) {
      const Eigen::MatrixXd hr = z.transpose() * c.H * z;
      const Eigen::VectorXd gr = z.transpose() * g;
      Eigen::LLT<Eigen::MatrixXd> llt(hr);
      if (llt.info() == Eigen::Success) {
        p = z * llt.solve(-gr);
      } else {
        // Singular reduced Hessian: least-squares step, or a flat descent
        // ray if the gradient has a component outside range(Hr).
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(hr);
        const Eigen::VectorXd y = cod.solve(-gr);
        const Eigen::VectorXd resid = hr * y + gr;
        const double rnorm = resid.lpNorm<Eigen::Infinity>();
        if (rnorm <= 1e-9 * c.scale) {
          p = z * y;
        } else {
          p = z * (-resid / rnorm);
          ray = true;
        }
      }
    }

    const double pnorm = p.lpNorm<Eigen::Infinity>();
    if (!ray && pnorm <= tol * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set: check multipliers.
      Eigen::VectorXd mult;
      if (m.rows() > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
            m.transpose());
        mult = cod.solve(-g);
      } else {
        mult.resize(0);
      }
      int worst = -1;
      double worst_val = -tol * c.scale;
      for (int i = 0; i < mw; ++i) {
        const double lam = mult[m_eq + i];
        if (lam < worst_val) {
          worst_val = lam;
          worst = i;
        }
      }
      if (worst < 0) {
        res.x = x;
        res.working_set = working;
        res.status = SolveStatus::optimal;
        res.eq_multipliers = mult.head(m_eq);
        res.lambda_full = Eigen::VectorXd::Zero(m_c);
        for (int i = 0; i < mw; ++i) {
          res.lambda_full[working[i]] = std::max(0.0, mult[m_eq + i]);
        }
        return res;
      }
      working.erase(working.begin() + worst);
      continue;
    }

    // Ratio test: largest step along p before violating an inactive row.
    double alpha = ray ? kInf : 1.0;
    int blocker = -1;
    for (int i = 0; i < m_c; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) {
        continue;
      }
      const double ci_p = c.C.row(i) * p;
      if (ci_p <= 1e-12 * c.scale) continue;
      const double slack = c.d[i] - c.C.row(i) * x;
      const double a = std::max(0.0, slack) / ci_p;
      if (a < alpha - 1e-15) {
        alpha = a;
        blocker = i;
      }
    }
    if (ray && blocker < 0) {
      res.status = SolveStatus::numerical;  // unbounded below
      res.x = x;
      res.working_set = working;
      return res;
    }
    x += alpha * p;
    if (blocker >= 0 && alpha < (ray ? kInf : 1.0 - 1e-15)) {
      working.push_back(blocker);
      std::sort(working.begin(), working.end());
    }
  }
  res.x = x;
  res.working_set = working;
  return res;
}

/// Minimum-norm correction moving x onto the equality constraints.
void project_equalities(const Canonical& c, Eigen::VectorXd& x) {
  if (c.A_eq.rows() == 0) return;
  const Eigen::VectorXd r = c.b_eq - c.A_eq * x;
  if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * c.scale) return;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(c.A_eq);
  x += cod.solve(r);
}

double max_violation(const Canonical& c, const Eigen::VectorXd& x) {
  double v = 0.0;
  if (c.A_eq.rows() > 0) {
    v = (c.A_eq * x - c.b_eq).cwiseAbs().maxCoeff();
  }
  if (c.C.rows() > 0) {
    v = std::max(v, (c.C * x - c.d).maxCoeff());
  }
  return v;
}

/// Phase 1: minimize a single elastic slack t >= violation of every
/// inequality, with equalities projected exactly. A tiny quadratic term
/// keeps the subproblem strictly convex in t.
bool find_feasible_point(const Canonical& c, double tol, int max_iter,
                         Eigen::VectorXd& x_out,
                         std::vector<int>& working_out) {
  const int n = static_cast<int>(c.H.cols());
  const int m_c = static_cast<int>(c.C.rows());
  project_equalities(c, x_out);
  const double feas_tol = tol * c.scale;
  if (m_c == 0 || (c.C * x_out - c.d).maxCoeff() <= feas_tol) {
    working_out.clear();
    return true;
  }

  Canonical e;  // variables (x, t)
  e.H = Eigen::MatrixXd::Zero(n + 1, n + 1);
  e.H.topLeftCorner(n, n) =
      1e-6 * Eigen::MatrixXd::Identity(n, n);  // regularize drift in x
  e.H(n, n) = 1e-6;
  e.f = Eigen::VectorXd::Zero(n + 1);
  e.f[n] = 1.0;
  e.A_eq.resize(c.A_eq.rows(), n + 1);
  if (c.A_eq.rows() > 0) {
    e.A_eq << c.A_eq, Eigen::VectorXd::Zero(c.A_eq.rows());
  }
  e.b_eq = c.b_eq;
  e.C.resize(m_c + 1, n + 1);
  e.C << c.C, -Eigen::VectorXd::Ones(m_c),
      Eigen::RowVectorXd::Zero(n), -1.0;
  e.d.resize(m_c + 1);
  e.d << c.d, 0.0;
  e.scale = c.scale;

  const double t0 = (c.C * x_out - c.d).maxCoeff() * 1.001 + feas_tol;
  Eigen::VectorXd z(n + 1);
  z << x_out, t0;
  PhaseResult pr = active_set_iterate(e, z, {}, tol, max_iter);
  if (pr.status != SolveStatus::optimal &&
      pr.status != SolveStatus::max_iter) {
    return false;
  }
  x_out = pr.x.head(n);
  const double t_star = pr.x[n];
  if (t_star > 1e3 * feas_tol) return false;
  // Nudge fully feasible if t* left microscopic violations.
  working_out.clear();
  for (int i : pr.working_set) {
    if (i < m_c) working_out.push_back(i);
  }
  return (c.C * x_out - c.d).maxCoeff() <= 1e4 * feas_tol;
}

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::infeasible:
      return "infeasible";
    case SolveStatus::max_iter:
      return "max_iter";
    case SolveStatus::numerical:
      return "numerical";
  }
  return "unknown";
}

double qp_kkt_residual(const QpProblem& p, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& eq_multipliers,
                       const Eigen::VectorXd& ineq_multipliers) {
  const Canonical c = canonicalize(p);
  const int m_c = static_cast<int>(c.C.rows());
  Eigen::VectorXd lam = ineq_multipliers;
  if (lam.size() == 0) lam = Eigen::VectorXd::Zero(m_c);
  if (lam.size() != m_c) {
    throw ConfigError("qp_kkt_residual: multiplier size mismatch");
  }
  Eigen::VectorXd grad = c.H * x + c.f;
  if (c.A_eq.rows() > 0) grad += c.A_eq.transpose() * eq_multipliers;
  if (m_c > 0) grad += c.C.transpose() * lam;
  double r = grad.lpNorm<Eigen::Infinity>();
  if (c.A_eq.rows() > 0) {
    r = std::max(r, (c.A_eq * x - c.b_eq).cwiseAbs().maxCoeff());
  }
  for (int i = 0; i < m_c; ++i) {
    const double viol = c.C.row(i) * x - c.d[i];
    r = std::max(r, viol);                       // primal feasibility
    r = std::max(r, -lam[i]);                    // dual feasibility
    r = std::max(r, std::abs(lam[i] * viol));    // complementarity
  }
  return r / c.scale;
}

SolveReport solve_qp(const QpProblem& p, const QpOptions& opts) {
  const auto tic = std::chrono::steady_clock::now();
  const Canonical c = canonicalize(p);
  check_psd(c.H, c.scale);
  const int n = p.num_vars();
  const int m_c = static_cast<int>(c.C.rows());
  const int max_iter =
      opts.max_iter > 0 ? opts.max_iter : 50 + 10 * (n + m_c);
  const double feas_tol = opts.tol * c.scale;

  SolveReport rep;
  rep.eq_multipliers = Eigen::VectorXd::Zero(c.A_eq.rows());
  rep.ineq_multipliers = Eigen::VectorXd::Zero(m_c);

  // Starting point: warm start if provided and feasible, else a clamped
  // origin pushed through phase 1.
  Eigen::VectorXd x;
  std::vector<int> working;
  bool have_start = false;
  if (opts.x0.size() == n) {
    x = opts.x0;
    project_equalities(c, x);
    if (max_violation(c, x) <= 10 * feas_tol) {
      working = opts.active_set;
      have_start = true;
    }
  }
  if (!have_start) {
    x = Eigen::VectorXd::Zero(n);
    if (p.lb.size() == n && p.ub.size() == n) {
      for (int j = 0; j < n; ++j) {
        const double lo = p.lb[j];
        const double hi = p.ub[j];
        if (std::isfinite(lo) && std::isfinite(hi)) {
          x[j] = 0.5 * (lo + hi);
        } else if (std::isfinite(lo)) {
          x[j] = std::max(0.0, lo);
        } else if (std::isfinite(hi)) {
          x[j] = std::min(0.0, hi);
        }
      }
    }
    if (!find_feasible_point(c, opts.tol, max_iter, x, working)) {
      rep.status = SolveStatus::infeasible;
      rep.x = x;
      rep.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
              .count();
      return rep;
    }
  }

  PhaseResult pr = active_set_iterate(c, x, working, opts.tol, max_iter);
  rep.x = pr.x;
  rep.status = pr.status;
  rep.iterations = pr.iterations;
  rep.active_set = pr.working_set;
  if (pr.status == SolveStatus::optimal) {
    rep.eq_multipliers = pr.eq_multipliers;
    rep.ineq_multipliers = pr.lambda_full;
    rep.kkt_residual =
        qp_kkt_residual(p, rep.x, rep.eq_multipliers, rep.ineq_multipliers);
  }
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
          .count();
  return rep;
}

}  // namespace catchsim::optim
