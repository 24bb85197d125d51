#include "gpsmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gpsmpc {

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iter: return "max_iter";
  }
  return "?";
}

namespace {

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double comp_slack = 0.0;

  double max() const { return std::max({stationarity, primal, comp_slack}); }
};

KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lambda) {
  KktResiduals r;
  Eigen::VectorXd stat = qp.H * x + qp.g;
  if (qp.num_rows() > 0) {
    stat += qp.A_ineq.transpose() * lambda;
    const Eigen::VectorXd slack = qp.b_ineq - qp.A_ineq * x;
    r.primal = std::max(0.0, -slack.minCoeff());
    r.comp_slack = inf_norm(lambda.cwiseProduct(slack));
  }
  r.stationarity = inf_norm(stat);
  return r;
}

// Equality-constrained solve on a trial active set; used by the polish step.
bool try_active_set(const QpProblem& qp, const std::vector<int>& active,
                    Eigen::VectorXd& x_out, Eigen::VectorXd& lambda_out) {
  const Eigen::Index n = qp.num_vars();
  const Eigen::Index na = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
  kkt.topLeftCorner(n, n) = qp.H;
  Eigen::VectorXd rhs(n + na);
  rhs.head(n) = -qp.g;
  for (Eigen::Index i = 0; i < na; ++i) {
    kkt.block(n + i, 0, 1, n) = qp.A_ineq.row(active[static_cast<std::size_t>(i)]);
    kkt.block(0, n + i, n, 1) =
        qp.A_ineq.row(active[static_cast<std::size_t>(i)]).transpose();
    rhs(n + i) = qp.b_ineq(active[static_cast<std::size_t>(i)]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    return false;
  }
  const Eigen::VectorXd sol = lu.solve(rhs);
  x_out = sol.head(n);
  lambda_out = Eigen::VectorXd::Zero(qp.num_rows());
  for (Eigen::Index i = 0; i < na; ++i) {
    lambda_out(active[static_cast<std::size_t>(i)]) = sol(n + i);
  }
  return true;
}

// Refine the ADMM iterate by solving the KKT system of the detected active
// set. Accepts the result only when it passes the full KKT checks.
void polish(const QpProblem& qp, const QpSettings& st, QpSolution& sol) {
  const Eigen::Index m = qp.num_rows();
  if (m == 0) {
    return;
  }
  const Eigen::VectorXd slack = qp.b_ineq - qp.A_ineq * sol.x;
  std::vector<int> active;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (sol.lambda(i) > 1e-10 || slack(i) < 10.0 * st.tol_feas) {
      active.push_back(static_cast<int>(i));
    }
  }
  if (active.size() > static_cast<std::size_t>(qp.num_vars() + m)) {
    return;
  }

  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd x_p, lam_p;
    if (!try_active_set(qp, active, x_p, lam_p)) {
      return;
    }
    // Drop rows with negative multipliers and retry.
    std::vector<int> keep;
    for (int i : active) {
      if (lam_p(i) >= -st.tol_kkt) {
        keep.push_back(i);
      }
    }
    if (keep.size() == active.size()) {
      for (int i : active) {
        lam_p(i) = std::max(lam_p(i), 0.0);
      }
      const KktResiduals res = kkt_residuals(qp, x_p, lam_p);
      if (res.primal <= st.tol_feas && res.max() <= sol.kkt_residual) {
        sol.x = x_p;
        sol.lambda = lam_p;
        sol.kkt_residual = res.max();
      }
      return;
    }
    active.swap(keep);
  }
}

}  // namespace

QpSolution solve_qp(const QpProblem& qp, const QpSettings& st) {
  const Eigen::Index n = qp.num_vars();
  const Eigen::Index m_all = qp.num_rows();
  if (qp.g.size() != n || qp.b_ineq.size() != m_all ||
      (m_all > 0 && qp.A_ineq.cols() != n)) {
    throw std::invalid_argument("solve_qp: dimension mismatch");
  }

  QpSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(m_all);

  // Strip all-zero rows: they are either vacuous or decide infeasibility
  // outright.
  std::vector<Eigen::Index> row_map;
  row_map.reserve(static_cast<std::size_t>(m_all));
  for (Eigen::Index i = 0; i < m_all; ++i) {
    if (inf_norm(qp.A_ineq.row(i).transpose()) == 0.0) {
      if (qp.b_ineq(i) < -st.tol_feas) {
        sol.status = QpStatus::infeasible;
        sol.x = Eigen::VectorXd::Zero(n);
        return sol;
      }
    } else {
      row_map.push_back(i);
    }
  }

  QpProblem red;
  red.H = qp.H;
  red.g = qp.g;
  red.const_term = qp.const_term;
  const Eigen::Index m = static_cast<Eigen::Index>(row_map.size());
  red.A_ineq.resize(m, n);
  red.b_ineq.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    red.A_ineq.row(i) = qp.A_ineq.row(row_map[static_cast<std::size_t>(i)]);
    red.b_ineq(i) = qp.b_ineq(row_map[static_cast<std::size_t>(i)]);
  }

  auto finish = [&](QpSolution& s) {
    if (s.status == QpStatus::optimal && m > 0) {
      polish(red, st, s);
    }
    Eigen::VectorXd full_lambda = Eigen::VectorXd::Zero(m_all);
    for (Eigen::Index i = 0; i < m; ++i) {
      full_lambda(row_map[static_cast<std::size_t>(i)]) = s.lambda(i);
    }
    s.lambda = full_lambda;
    s.objective = 0.5 * s.x.dot(qp.H * s.x) + qp.g.dot(s.x) + qp.const_term;
    return s;
  };

  if (m == 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("solve_qp: H not positive definite");
    }
    sol.x = llt.solve(-qp.g);
    sol.lambda.resize(0);
    sol.status = QpStatus::optimal;
    sol.kkt_residual = kkt_residuals(red, sol.x, sol.lambda).max();
    return finish(sol);
  }

  double rho = st.rho;
  Eigen::LLT<Eigen::MatrixXd> kkt_llt(
      red.H + st.sigma * Eigen::MatrixXd::Identity(n, n) +
      rho * red.A_ineq.transpose() * red.A_ineq);
  if (kkt_llt.info() != Eigen::Success) {
    throw std::invalid_argument("solve_qp: H not positive semidefinite");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = (red.A_ineq * x).cwiseMin(red.b_ineq);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd y_prev_check = y;
  int certificate_hits = 0;

  for (int iter = 1; iter <= st.max_iter; ++iter) {
    const Eigen::VectorXd rhs =
        st.sigma * x - red.g + red.A_ineq.transpose() * (rho * z - y);
    const Eigen::VectorXd x_tilde = kkt_llt.solve(rhs);
    const Eigen::VectorXd ax_tilde = red.A_ineq * x_tilde;

    const Eigen::VectorXd v =
        st.relax * ax_tilde + (1.0 - st.relax) * z + y / rho;
    const Eigen::VectorXd z_next = v.cwiseMin(red.b_ineq);
    y += rho * (st.relax * ax_tilde + (1.0 - st.relax) * z - z_next);
    z = z_next;
    x = st.relax * x_tilde + (1.0 - st.relax) * x;

    if (iter % st.check_interval != 0 && iter != st.max_iter) {
      continue;
    }

    const Eigen::VectorXd ax = red.A_ineq * x;
    const Eigen::VectorXd hx = red.H * x;
    const Eigen::VectorXd aty = red.A_ineq.transpose() * y;
    const double r_prim = inf_norm(ax - z);
    const double r_dual = inf_norm(hx + red.g + aty);
    const double prim_scale =
        std::max({inf_norm(ax), inf_norm(z), 1.0});
    const double dual_scale =
        std::max({inf_norm(hx), inf_norm(aty), inf_norm(red.g), 1.0});

    const double viol = std::max(0.0, (ax - red.b_ineq).maxCoeff());
    if (viol <= st.tol_feas && r_prim <= st.tol_feas * prim_scale &&
        r_dual <= st.tol_kkt * dual_scale) {
      sol.x = x;
      sol.lambda = y.cwiseMax(0.0);
      sol.status = QpStatus::optimal;
      sol.iterations = iter;
      sol.kkt_residual = kkt_residuals(red, sol.x, sol.lambda).max();
      return finish(sol);
    }

    // Primal infeasibility certificate on the dual direction.
    const Eigen::VectorXd dy = y - y_prev_check;
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 0.0) {
      const double support = red.b_ineq.dot(dy);
      const double range = inf_norm(red.A_ineq.transpose() * dy);
      if (range <= st.eps_infeasible * dy_norm &&
          support < -st.eps_infeasible * dy_norm) {
        if (++certificate_hits >= st.infeasible_window) {
          sol.x = x;
          sol.lambda = y.cwiseMax(0.0);
          sol.status = QpStatus::infeasible;
          sol.iterations = iter;
          return finish(sol);
        }
      } else {
        certificate_hits = 0;
      }
    }
    y_prev_check = y;

    // Penalty adaptation keeps the primal and dual residuals balanced.
    const double ratio = std::sqrt((r_prim / prim_scale + 1e-16) /
                                   (r_dual / dual_scale + 1e-16));
    const double rho_new = std::clamp(rho * ratio, 1e-6, 1e6);
    if (rho_new > 5.0 * rho || rho_new < rho / 5.0) {
      rho = rho_new;
      kkt_llt.compute(red.H + st.sigma * Eigen::MatrixXd::Identity(n, n) +
                      rho * red.A_ineq.transpose() * red.A_ineq);
    }
  }

  sol.x = x;
  sol.lambda = y.cwiseMax(0.0);
  sol.status = QpStatus::max_iter;
  sol.iterations = st.max_iter;
  sol.kkt_residual = kkt_residuals(red, sol.x, sol.lambda).max();
  return finish(sol);
}

}  // namespace gpsmpc
