#include "gpsmpc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gpsmpc {

namespace {

constexpr double kNoiseFloor = 1e-6;
constexpr double kNoiseCeil = 1e-2;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard normal via Box-Muller on raw 53-bit uniforms. Avoids
// std::normal_distribution, whose output is implementation-defined.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(mix64(seed)) {}

  double operator()() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  double uniform01() {
    // (0, 1], so the log above is finite.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
};

Eigen::MatrixXd gram_matrix(const std::vector<Vec8>& inputs,
                            const KernelParams& params, double noise2) {
  const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(inputs[i], inputs[j], params);
      K(i, j) = v;
      K(j, i) = v;
    }
    K(i, i) += noise2;
  }
  return K;
}

// Cholesky with jitter escalation. Returns the noise level that succeeded.
double robust_cholesky(const std::vector<Vec8>& inputs,
                       const KernelParams& params, double noise2,
                       Eigen::MatrixXd& L_out) {
  double noise = std::max(noise2, kNoiseFloor);
  while (true) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram_matrix(inputs, params, noise));
    if (llt.info() == Eigen::Success) {
      L_out = llt.matrixL();
      return noise;
    }
    if (noise >= kNoiseCeil) {
      throw GpFitError("gp_fit: kernel matrix not positive definite after jitter escalation");
    }
    noise = std::min(noise * 10.0, kNoiseCeil);
  }
}

void solve_weights(const Eigen::MatrixXd& L, const Eigen::VectorXd& gamma,
                   Eigen::VectorXd& whitened, Eigen::VectorXd& alpha) {
  whitened = L.triangularView<Eigen::Lower>().solve(gamma);
  alpha = L.transpose().triangularView<Eigen::Upper>().solve(whitened);
}

Eigen::VectorXd output_column(const GpDataset& dataset, int d) {
  Eigen::VectorXd gamma(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    gamma(static_cast<Eigen::Index>(i)) = dataset.outputs[i](d);
  }
  return gamma;
}

}  // namespace

Vec8 gp_input(const EvState& ev, const TvState& tv) {
  Vec8 x;
  x << ev.s, ev.d, ev.phi, ev.v, tv.x, tv.vx, tv.y, tv.vy;
  return x;
}

double kernel_eval(const Vec8& x, const Vec8& xp, const KernelParams& params) {
  const Vec8 diff = (x - xp).cwiseQuotient(params.lengthscales);
  return params.sigma2 * std::exp(-0.5 * diff.squaredNorm());
}

GpModel gp_fit(const GpDataset& dataset,
               const std::array<KernelParams, 4>& params) {
  if (dataset.empty()) {
    throw GpFitError("gp_fit: empty dataset");
  }
  if (dataset.inputs.size() != dataset.outputs.size()) {
    throw GpFitError("gp_fit: inputs/outputs length mismatch");
  }
  GpModel model;
  model.params = params;
  model.dataset = dataset;
  for (int d = 0; d < 4; ++d) {
    if (!params[d].valid()) {
      throw GpFitError("gp_fit: invalid kernel parameters");
    }
    model.effective_noise2[d] = robust_cholesky(
        dataset.inputs, params[d], params[d].noise2, model.chol[d]);
    solve_weights(model.chol[d], output_column(dataset, d), model.whitened[d],
                  model.alpha[d]);
  }
  model.fitted = true;
  return model;
}

void gp_posterior(const GpModel& model, const Vec8& x, Vec4& mean, Vec4& var) {
  if (!model.fitted) {
    throw std::logic_error("gp_posterior: model not fitted");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(model.dataset.size());
  Eigen::VectorXd k(n);
  for (int d = 0; d < 4; ++d) {
    const KernelParams& p = model.params[d];
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i) = kernel_eval(model.dataset.inputs[static_cast<std::size_t>(i)], x, p);
    }
    mean(d) = k.dot(model.alpha[d]);
    const Eigen::VectorXd v = model.chol[d].triangularView<Eigen::Lower>().solve(k);
    var(d) = std::max(p.sigma2 - v.squaredNorm(), 0.0);
  }
}

GpModel gp_observe(const GpModel& model, const EvState& ev, const TvState& tv,
                   const TvState& tv_next) {
  const Vec8 x = gp_input(ev, tv);
  const Vec4 y = tv_next.vec() - tv.vec();

  if (!model.fitted || model.dataset.empty()) {
    GpDataset dataset = model.dataset;
    dataset.inputs.push_back(x);
    dataset.outputs.push_back(y);
    return gp_fit(dataset, model.params);
  }

  GpDataset dataset = model.dataset;
  dataset.inputs.push_back(x);
  dataset.outputs.push_back(y);
  if (dataset.size() > dataset.capacity) {
    dataset.inputs.erase(dataset.inputs.begin());
    dataset.outputs.erase(dataset.outputs.begin());
    return gp_fit(dataset, model.params);
  }

  GpModel next;
  next.params = model.params;
  next.dataset = std::move(dataset);
  next.effective_noise2 = model.effective_noise2;

  const Eigen::Index n = static_cast<Eigen::Index>(model.dataset.size());
  for (int d = 0; d < 4; ++d) {
    const KernelParams& p = model.params[d];
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i) = kernel_eval(model.dataset.inputs[static_cast<std::size_t>(i)], x, p);
    }
    const Eigen::VectorXd v = model.chol[d].triangularView<Eigen::Lower>().solve(k);
    const double diag2 = p.sigma2 + next.effective_noise2[d] - v.squaredNorm();
    if (!(diag2 > 1e-12)) {
      // Extension lost positive definiteness; rebuild with escalation.
      return gp_fit(next.dataset, model.params);
    }
    const double e = std::sqrt(diag2);

    next.chol[d] = Eigen::MatrixXd::Zero(n + 1, n + 1);
    next.chol[d].topLeftCorner(n, n) = model.chol[d];
    next.chol[d].block(n, 0, 1, n) = v.transpose();
    next.chol[d](n, n) = e;

    next.whitened[d].resize(n + 1);
    next.whitened[d].head(n) = model.whitened[d];
    next.whitened[d](n) = (y(d) - v.dot(model.whitened[d])) / e;
    next.alpha[d] = next.chol[d].transpose().triangularView<Eigen::Upper>().solve(
        next.whitened[d]);
  }
  next.fitted = true;
  return next;
}

namespace {

// Copy-on-write extension of one per-dimension factor: the base L and
// whitened targets stay shared, sampled points append rows R (against the
// base) and a small lower-triangular tail E.
struct FactorExtension {
  Eigen::MatrixXd R;        // ext x n0
  Eigen::MatrixXd E;        // ext x ext, lower triangular
  Eigen::VectorXd z_tail;   // whitened targets of sampled points
  std::vector<Vec8> points;

  int size() const { return static_cast<int>(points.size()); }
};

}  // namespace

TvPredictionStats sample_tv_trajectories(const GpModel& model,
                                         const std::vector<EvState>& ev_plan,
                                         const TvState& tv0, int M,
                                         int N_horizon, std::uint64_t rng_seed,
                                         bool keep_samples) {
  if (!model.fitted) {
    throw std::logic_error("sample_tv_trajectories: model not fitted");
  }
  if (M < 2 || N_horizon < 1) {
    throw std::invalid_argument("sample_tv_trajectories: need M >= 2 and N_horizon >= 1");
  }
  if (static_cast<int>(ev_plan.size()) < N_horizon) {
    throw std::invalid_argument("sample_tv_trajectories: ev_plan shorter than horizon");
  }

  const Eigen::Index n0 = static_cast<Eigen::Index>(model.dataset.size());
  Eigen::MatrixXd states(4, static_cast<Eigen::Index>(M) * N_horizon);

  for (int m = 0; m < M; ++m) {
    NormalSampler normal(rng_seed + static_cast<std::uint64_t>(m));
    std::array<FactorExtension, 4> ext;
    for (int d = 0; d < 4; ++d) {
      ext[d].R.resize(N_horizon, n0);
      ext[d].E = Eigen::MatrixXd::Zero(N_horizon, N_horizon);
      ext[d].z_tail.resize(N_horizon);
      ext[d].points.reserve(static_cast<std::size_t>(N_horizon));
    }

    TvState tv = tv0;
    for (int k = 0; k < N_horizon; ++k) {
      const Vec8 x = gp_input(ev_plan[static_cast<std::size_t>(k)], tv);
      Vec4 delta;
      for (int d = 0; d < 4; ++d) {
        const KernelParams& p = model.params[d];
        FactorExtension& fe = ext[d];
        const int ne = fe.size();

        Eigen::VectorXd k_base(n0);
        for (Eigen::Index i = 0; i < n0; ++i) {
          k_base(i) = kernel_eval(model.dataset.inputs[static_cast<std::size_t>(i)], x, p);
        }
        Eigen::VectorXd k_tail(ne);
        for (int i = 0; i < ne; ++i) {
          k_tail(i) = kernel_eval(fe.points[static_cast<std::size_t>(i)], x, p);
        }

        const Eigen::VectorXd v1 =
            model.chol[d].triangularView<Eigen::Lower>().solve(k_base);
        Eigen::VectorXd v2;
        if (ne > 0) {
          v2 = fe.E.topLeftCorner(ne, ne)
                   .triangularView<Eigen::Lower>()
                   .solve(k_tail - fe.R.topRows(ne) * v1);
        } else {
          v2.resize(0);
        }

        const double mean = v1.dot(model.whitened[d]) +
                            (ne > 0 ? v2.dot(fe.z_tail.head(ne)) : 0.0);
        const double var =
            std::max(p.sigma2 - v1.squaredNorm() - v2.squaredNorm(), 0.0);

        const double sample = mean + std::sqrt(var) * normal();
        delta(d) = sample;

        // Condition on the sampled point; the posterior solve already gives
        // the new factor row.
        const double diag2 =
            std::max(var + model.effective_noise2[d], 1e-12);
        const double e = std::sqrt(diag2);
        fe.R.row(ne) = v1.transpose();
        if (ne > 0) {
          fe.E.block(ne, 0, 1, ne) = v2.transpose();
        }
        fe.E(ne, ne) = e;
        fe.z_tail(ne) = (sample - mean) / e;
        fe.points.push_back(x);
      }
      tv = TvState::from_vec(tv.vec() + delta);
      states.col(static_cast<Eigen::Index>(m) * N_horizon + k) = tv.vec();
    }
  }

  TvPredictionStats stats;
  stats.means.resize(static_cast<std::size_t>(N_horizon));
  stats.variances.resize(static_cast<std::size_t>(N_horizon));
  for (int k = 0; k < N_horizon; ++k) {
    Vec4 mean = Vec4::Zero();
    for (int m = 0; m < M; ++m) {
      mean += states.col(static_cast<Eigen::Index>(m) * N_horizon + k);
    }
    mean /= static_cast<double>(M);
    Vec4 var = Vec4::Zero();
    for (int m = 0; m < M; ++m) {
      const Vec4 diff =
          states.col(static_cast<Eigen::Index>(m) * N_horizon + k) - mean;
      var += diff.cwiseProduct(diff);
    }
    var /= static_cast<double>(M - 1);
    stats.means[static_cast<std::size_t>(k)] = mean;
    stats.variances[static_cast<std::size_t>(k)] = var;
  }
  if (keep_samples) {
    stats.samples.resize(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      auto& traj = stats.samples[static_cast<std::size_t>(m)];
      traj.resize(static_cast<std::size_t>(N_horizon));
      for (int k = 0; k < N_horizon; ++k) {
        traj[static_cast<std::size_t>(k)] = TvState::from_vec(
            states.col(static_cast<Eigen::Index>(m) * N_horizon + k));
      }
    }
  }
  return stats;
}

}  // namespace gpsmpc
