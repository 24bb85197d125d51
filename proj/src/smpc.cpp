#include "gpsmpc/smpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpsmpc {

QpProblem build_qp(const DiscreteEvModel& model, const EvState& ev0,
                   const EvInput& u_prev, const std::vector<Vec4>& refs,
                   const MpcWeights& weights, const InputBounds& bounds,
                   const RoadBounds& road,
                   const std::vector<HalfPlaneConstraint>& collision,
                   double hessian_reg) {
  const int N = static_cast<int>(refs.size());
  if (N < 1) {
    throw std::invalid_argument("build_qp: horizon must be >= 1");
  }
  if (!collision.empty() && static_cast<int>(collision.size()) != N + 1) {
    throw std::invalid_argument("build_qp: need N+1 collision entries");
  }
  const Eigen::Index nu = 2 * N;

  // Condense the affine dynamics: xi_k = alpha_k + Gamma_k U.
  std::vector<Vec4> alpha(static_cast<std::size_t>(N) + 1);
  std::vector<Eigen::MatrixXd> gamma(static_cast<std::size_t>(N) + 1);
  alpha[0] = ev0.vec();
  gamma[0] = Eigen::MatrixXd::Zero(4, nu);
  for (int k = 0; k < N; ++k) {
    alpha[k + 1] = model.affine + model.A_d * alpha[k];
    gamma[k + 1] = model.A_d * gamma[k];
    gamma[k + 1].block(0, 2 * k, 4, 2) += model.B_d;
  }

  const Mat4 Q = weights.q_diag.asDiagonal();
  const Eigen::Matrix2d R = weights.r_diag.asDiagonal();
  const Eigen::Matrix2d S = weights.s_diag.asDiagonal();

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nu);
  double const_term = 0.0;

  for (int k = 1; k <= N; ++k) {
    const Vec4 err0 = alpha[k] - refs[static_cast<std::size_t>(k - 1)];
    H += 2.0 * gamma[k].transpose() * Q * gamma[k];
    g += 2.0 * gamma[k].transpose() * Q * err0;
    const_term += err0.dot(Q * err0);
  }
  for (int k = 0; k < N; ++k) {
    H.block(2 * k, 2 * k, 2, 2) += 2.0 * R;
  }

  // Input-rate differencing: du = D U - P u_prev.
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nu, nu);
  for (int k = 0; k < N; ++k) {
    D.block(2 * k, 2 * k, 2, 2) = Eigen::Matrix2d::Identity();
    if (k > 0) {
      D.block(2 * k, 2 * (k - 1), 2, 2) = -Eigen::Matrix2d::Identity();
    }
  }
  Eigen::MatrixXd S_bar = Eigen::MatrixXd::Zero(nu, nu);
  for (int k = 0; k < N; ++k) {
    S_bar.block(2 * k, 2 * k, 2, 2) = S;
  }
  H += 2.0 * D.transpose() * S_bar * D;
  Eigen::VectorXd p_uprev = Eigen::VectorXd::Zero(nu);
  p_uprev.head(2) = u_prev.vec();
  g -= 2.0 * D.transpose() * S_bar * p_uprev;
  const_term += u_prev.vec().dot(S * u_prev.vec());

  H += hessian_reg * Eigen::MatrixXd::Identity(nu, nu);
  H = 0.5 * (H + H.transpose()).eval();

  int n_collision = 0;
  for (const auto& c : collision) {
    if (c.active) {
      ++n_collision;
    }
  }
  const Eigen::Index m = 4 * N + 4 * N + 2 * N + N + n_collision;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, nu);
  Eigen::VectorXd b(m);
  Eigen::Index row = 0;

  for (int k = 0; k < N; ++k) {
    A(row, 2 * k) = 1.0;
    b(row++) = bounds.u_max(0);
    A(row, 2 * k + 1) = 1.0;
    b(row++) = bounds.u_max(1);
    A(row, 2 * k) = -1.0;
    b(row++) = -bounds.u_min(0);
    A(row, 2 * k + 1) = -1.0;
    b(row++) = -bounds.u_min(1);
  }
  for (int k = 0; k < N; ++k) {
    const Eigen::Vector2d shift =
        k == 0 ? Eigen::Vector2d(u_prev.vec()) : Eigen::Vector2d::Zero();
    A.block(row, 0, 2, nu) = D.block(2 * k, 0, 2, nu);
    b.segment(row, 2) = bounds.du_max + shift;
    row += 2;
    A.block(row, 0, 2, nu) = -D.block(2 * k, 0, 2, nu);
    b.segment(row, 2) = -(bounds.du_min + shift);
    row += 2;
  }
  for (int k = 1; k <= N; ++k) {
    A.row(row) = gamma[k].row(1);
    b(row++) = road.d_max - alpha[k](1);
    A.row(row) = -gamma[k].row(1);
    b(row++) = alpha[k](1) - road.d_min;
  }
  for (int k = 1; k <= N; ++k) {
    A.row(row) = -gamma[k].row(3);
    b(row++) = alpha[k](3);
  }
  for (int k = 0; k <= N && k < static_cast<int>(collision.size()); ++k) {
    const HalfPlaneConstraint& c = collision[static_cast<std::size_t>(k)];
    if (!c.active) {
      continue;
    }
    const Eigen::RowVector4d coef(c.q_x, c.q_y, 0.0, 0.0);
    A.row(row) = coef * gamma[k];
    b(row++) = -c.q_t - coef.dot(alpha[k]);
  }

  QpProblem qp;
  qp.H = std::move(H);
  qp.g = std::move(g);
  qp.A_ineq = std::move(A);
  qp.b_ineq = std::move(b);
  qp.const_term = const_term;
  return qp;
}

SmpcController::SmpcController(const SmpcConfig& config,
                               const VehicleGeometry& geom)
    : config_(config), geom_(geom), risk_(RiskParams::from_beta(config.beta)) {}

EvInput SmpcController::step(const EvState& ev0, const TvState& tv0,
                             const TvPredictionStats& stats,
                             SmpcDiagnostics* diag) {
  const int N = config_.N;
  if (stats.horizon() < N) {
    throw std::invalid_argument("SmpcController: prediction shorter than horizon");
  }

  const DiscreteEvModel model = ev_linearize_discretize(ev0, geom_, config_.T);

  // References: tracked lateral/heading/speed targets; the longitudinal
  // position carries zero weight and follows the nominal rollout.
  std::vector<Vec4> refs(static_cast<std::size_t>(N));
  Vec4 nominal = ev0.vec();
  for (int k = 1; k <= N; ++k) {
    nominal = model.affine + model.A_d * nominal;
    refs[static_cast<std::size_t>(k - 1)] =
        Vec4(nominal(0), config_.d_ref, config_.phi_ref, config_.v_ref);
  }

  const SafetyRectangle rect0 =
      base_rectangle(ev0, tv0, geom_, config_.eps_safe, config_.t_headway);
  const CaseThresholds thresholds =
      default_thresholds(rect0, geom_, config_.eps_safe);
  const ConstraintCase ccase =
      classify_case(ev0, tv0, config_.road, rect0, thresholds);

  std::vector<HalfPlaneConstraint> collision(static_cast<std::size_t>(N) + 1);
  collision[0] = build_constraint(ccase, ev0, tv0, rect0, config_.road,
                                  config_.eps_anchor);
  for (int k = 1; k <= N; ++k) {
    const TvState tv_k =
        TvState::from_vec(stats.means[static_cast<std::size_t>(k - 1)]);
    const SafetyRectangle rect_k = tighten_rectangle(
        base_rectangle(ev0, tv_k, geom_, config_.eps_safe, config_.t_headway),
        stats.variances[static_cast<std::size_t>(k - 1)], risk_,
        config_.literal_tightening_pairing);
    collision[static_cast<std::size_t>(k)] = build_constraint(
        ccase, ev0, tv_k, rect_k, config_.road, config_.eps_anchor);
  }

  const QpProblem qp =
      build_qp(model, ev0, u_prev_, refs, config_.weights, config_.bounds,
               config_.road, collision, config_.hessian_reg);
  const QpSolution sol = solve_qp(qp, config_.qp);

  EvInput applied;
  bool fallback = false;
  if (sol.status == QpStatus::optimal) {
    applied = EvInput::from_vec(sol.x.head<2>());
    stored_inputs_.clear();
    for (int k = 1; k < N; ++k) {
      stored_inputs_.push_back(EvInput::from_vec(sol.x.segment<2>(2 * k)));
    }
    planned_.resize(static_cast<std::size_t>(N) + 1);
    Vec4 xi = ev0.vec();
    planned_[0] = ev0;
    for (int k = 0; k < N; ++k) {
      xi = model.step(xi, sol.x.segment<2>(2 * k));
      planned_[static_cast<std::size_t>(k + 1)] = EvState::from_vec(xi);
    }
  } else {
    fallback = true;
    if (!stored_inputs_.empty()) {
      applied = stored_inputs_.front();
      stored_inputs_.pop_front();
    } else {
      applied = EvInput{0.0, 0.0};
    }
    if (!planned_.empty()) {
      planned_.erase(planned_.begin());
      planned_.push_back(planned_.back());
    }
  }

  applied.a = std::clamp(applied.a, config_.bounds.u_min(0), config_.bounds.u_max(0));
  applied.delta =
      std::clamp(applied.delta, config_.bounds.u_min(1), config_.bounds.u_max(1));
  u_prev_ = applied;
  fallback_depth_ = fallback ? fallback_depth_ + 1 : 0;

  if (planned_.empty()) {
    planned_.assign(static_cast<std::size_t>(N) + 1, ev0);
  }

  if (diag != nullptr) {
    diag->status = sol.status;
    diag->ccase = ccase;
    diag->objective = sol.objective;
    diag->kkt_residual = sol.kkt_residual;
    diag->qp_iterations = sol.iterations;
    diag->used_fallback = fallback;
    diag->fallback_depth = fallback_depth_;
  }
  return applied;
}

}  // namespace gpsmpc
