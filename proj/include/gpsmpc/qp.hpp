#pragma once

#include <Eigen/Dense>

namespace gpsmpc {

// Dense convex QP:  min 0.5 x^T H x + g^T x + const_term
//                   s.t. A_ineq x <= b_ineq   (row-wise)
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd b_ineq;
  double const_term = 0.0;

  Eigen::Index num_vars() const { return H.rows(); }
  Eigen::Index num_rows() const { return A_ineq.rows(); }
};

enum class QpStatus { optimal, infeasible, max_iter };

const char* to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  // one multiplier per inequality row
  double objective = 0.0;
  QpStatus status = QpStatus::max_iter;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct QpSettings {
  double tol_feas = 1e-6;
  double tol_kkt = 1e-6;
  int max_iter = 20000;
  double rho = 0.1;         // ADMM penalty, adapted while iterating
  double sigma = 1e-6;      // proximal regularization
  double relax = 1.6;       // over-relaxation
  int check_interval = 25;
  double eps_infeasible = 1e-6;
  int infeasible_window = 2;
};

// Operator-splitting (ADMM) solver with an active-set polish step. Declares
// infeasibility when the dual-direction certificate holds on
// infeasible_window consecutive checks.
QpSolution solve_qp(const QpProblem& qp, const QpSettings& settings = {});

}  // namespace gpsmpc
