#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gpsmpc/vehicle_model.hpp"

namespace gpsmpc {

using Vec8 = Eigen::Matrix<double, 8, 1>;

// Concatenated GP input (EV state, TV state).
Vec8 gp_input(const EvState& ev, const TvState& tv);

struct KernelParams {
  double sigma2 = 1.0;                         // signal variance
  Vec8 lengthscales = Vec8::Constant(10.0);    // diag(L)
  double noise2 = 1e-6;                        // observation noise / jitter

  bool valid() const {
    return sigma2 > 0.0 && noise2 >= 0.0 && (lengthscales.array() > 0.0).all();
  }
};

// Squared-exponential kernel sigma^2 exp(-0.5 (x-x')^T L^-2 (x-x')).
double kernel_eval(const Vec8& x, const Vec8& xp, const KernelParams& params);

struct GpDataset {
  std::vector<Vec8> inputs;    // x_n = (ev state, tv state)
  std::vector<Vec4> outputs;   // y_n = tv_{n+1} - tv_n
  std::size_t capacity = 300;  // oldest-first eviction beyond this

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
};

// One independent GP per TV-state dimension over the shared 8-d input space.
// Holds the Cholesky factor of K + noise2 I and the solves needed for O(N)
// posterior means and O(N^2) variances.
struct GpModel {
  std::array<KernelParams, 4> params;
  GpDataset dataset;
  std::array<Eigen::MatrixXd, 4> chol;        // lower-triangular L
  std::array<Eigen::VectorXd, 4> alpha;       // (K + noise2 I)^-1 gamma_d
  std::array<Eigen::VectorXd, 4> whitened;    // L^-1 gamma_d
  std::array<double, 4> effective_noise2{};   // noise after jitter escalation
  bool fitted = false;
};

// Fits all four output dimensions. On a Cholesky failure the noise term is
// escalated by factors of 10 up to 1e-2; beyond that a GpFitError is thrown.
GpModel gp_fit(const GpDataset& dataset,
               const std::array<KernelParams, 4>& params);

struct GpFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Posterior mean and variance per output dimension at query x. Variance is
// clamped at 0 against round-off.
void gp_posterior(const GpModel& model, const Vec8& x, Vec4& mean, Vec4& var);

// Appends one observed transition and refits via a rank-1 extension of the
// Cholesky factor (full refit on eviction or numerical trouble).
GpModel gp_observe(const GpModel& model, const EvState& ev, const TvState& tv,
                   const TvState& tv_next);

// Per-step statistics of the M sampled TV trajectories. Entry k corresponds
// to prediction step k+1 (the current TV state is not stored).
struct TvPredictionStats {
  std::vector<Vec4> means;
  std::vector<Vec4> variances;
  std::vector<std::vector<TvState>> samples;  // [m][k], kept on request

  int horizon() const { return static_cast<int>(means.size()); }
};

// Draws M sample trajectories by sequentially sampling the posterior and
// conditioning a per-trajectory copy of the GP on each drawn point.
// ev_plan[k] is the EV state assumed at prediction step k (k = 0 is now).
// Deterministic in rng_seed; trajectory m uses the stream seeded with
// rng_seed + m, so the result does not depend on evaluation order.
TvPredictionStats sample_tv_trajectories(const GpModel& model,
                                         const std::vector<EvState>& ev_plan,
                                         const TvState& tv0, int M,
                                         int N_horizon, std::uint64_t rng_seed,
                                         bool keep_samples = false);

}  // namespace gpsmpc
