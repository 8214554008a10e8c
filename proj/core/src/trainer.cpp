#include "ringrc/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ringrc {

TrainingSet harvest(const ReservoirConfig& config, HardwareContext* hw,
                    const Eigen::VectorXd& teacher, int washout) {
  if (washout < 0) throw std::invalid_argument("harvest: washout must be >= 0");
  if (teacher.size() < washout + 2)
    throw std::invalid_argument(
        "harvest: teacher too short, need at least washout + 2 samples");

  ReservoirState state = ReservoirState::zero(config.n_neurons);
  StateTrajectory traj = drive(config, hw, state, teacher);

  const Eigen::Index rows = teacher.size() - 1;
  TrainingSet set;
  set.design = traj.states.topRows(rows);
  set.targets = teacher.tail(rows);
  set.washout = washout;
  return set;
}

double nmse(const Eigen::VectorXd& y, const Eigen::VectorXd& d) {
  if (y.size() != d.size())
    throw std::invalid_argument("nmse: length mismatch");
  if (y.size() < 2) throw std::invalid_argument("nmse: need at least 2 samples");
  const double mean = d.mean();
  const double var = (d.array() - mean).square().mean();
  if (var <= 0.0 || !std::isfinite(var))
    throw std::invalid_argument("nmse: target variance is zero");
  return (y - d).array().square().mean() / var;
}

RidgeSolution ridge_solve(const TrainingSet& set, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("ridge_solve: lambda must be >= 0");
  if (set.design.rows() != set.targets.size())
    throw std::invalid_argument("ridge_solve: design/target row mismatch");
  const Eigen::Index usable = set.design.rows() - set.washout;
  if (set.washout < 0 || usable < 1)
    throw std::invalid_argument("ridge_solve: no usable rows after washout");

  const Eigen::MatrixXd x = set.design.bottomRows(usable);
  const Eigen::VectorXd d = set.targets.tail(usable);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double tol = std::max(x.rows(), x.cols()) *
                     std::numeric_limits<double>::epsilon() * smax;

  Eigen::VectorXd utd = svd.matrixU().transpose() * d;
  RidgeSolution sol;
  sol.lambda = lambda;
  Eigen::VectorXd f(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double s = sv(i);
    if (lambda > 0.0) {
      f(i) = s / (s * s + lambda);
    } else if (s > tol) {
      f(i) = 1.0 / s;
    } else {
      // minimum-norm fallback along the null directions
      f(i) = 0.0;
      sol.rank_deficient = true;
    }
  }
  sol.weights.w = svd.matrixV() * f.cwiseProduct(utd);
  sol.train_nmse = nmse(x * sol.weights.w, d);
  return sol;
}

RidgeSolution train(const ReservoirConfig& config, HardwareContext* hw,
                    const Eigen::VectorXd& teacher, double lambda,
                    int washout) {
  TrainingSet set = harvest(config, hw, teacher, washout);
  return ridge_solve(set, lambda);
}

namespace {

Eigen::VectorXd tile_pattern(const Eigen::VectorXd& pattern, int length) {
  Eigen::VectorXd u(length);
  const Eigen::Index l = pattern.size();
  for (int n = 0; n < length; ++n) u(n) = pattern(n % l);
  return u;
}

double input_through_dac(double value, const HardwareModel* hw) {
  if (hw && hw->dac_enabled) return quantize(value, hw->dac_bits, -1.0, 1.0);
  return value;
}

}  // namespace

RidgeSolution train_periodic_stabilized(const ReservoirConfig& config,
                                        const HardwareModel* hw,
                                        std::uint64_t noise_seed,
                                        const Eigen::VectorXd& pattern,
                                        int teacher_length, int warmup_length,
                                        double lambda, int washout,
                                        const FeedbackRefit& refit) {
  const int l = static_cast<int>(pattern.size());
  if (l < 1)
    throw std::invalid_argument("train_periodic_stabilized: empty pattern");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("train_periodic_stabilized: bad lambda");

  const Eigen::VectorXd teacher = tile_pattern(pattern, teacher_length);
  HardwareContext base_ctx(hw, mix64(noise_seed ^ 1));
  TrainingSet base = harvest(config, &base_ctx, teacher, washout);

  const Eigen::Index n = config.n_neurons;
  const Eigen::Index usable = base.design.rows() - washout;
  const Eigen::MatrixXd xb = base.design.bottomRows(usable);
  const Eigen::VectorXd db = base.targets.tail(usable);

  Eigen::MatrixXd gram = xb.transpose() * xb;
  Eigen::VectorXd rhs = xb.transpose() * db;

  auto solve = [&]() -> Eigen::VectorXd {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += lambda;
    return a.ldlt().solve(rhs);
  };

  Eigen::VectorXd w = solve();

  if (refit.enabled) {
    for (int round = 1; round <= refit.rounds; ++round) {
      Eigen::VectorXd w_run = w;
      if (hw && hw->weight_quant_enabled)
        w_run = quantize_weights(w_run, hw->weight_bits).to_real();

      HardwareContext ctx(
          hw, mix64(noise_seed ^ (0xC0DEULL + static_cast<std::uint64_t>(round))));
      Rng explore(derive_seed(noise_seed, "refit.explore",
                              {static_cast<std::uint64_t>(round)}));
      ReservoirState state = ReservoirState::zero(config.n_neurons);
      Eigen::VectorXd acq;
      for (int k = 0; k < warmup_length; ++k) {
        const double in = input_through_dac(pattern(k % l), hw);
        step(state, in, config, &ctx);
        acq = acquire_state(state.x, &ctx);
      }
      int phase = warmup_length;
      const int relock = refit.relock_factor * l;
      const int free_steps = (1 + round) * l;
      for (int seg = 0; seg < refit.segments; ++seg) {
        for (int k = 0; k < relock; ++k) {
          const double in = input_through_dac(pattern(phase % l), hw);
          step(state, in, config, &ctx);
          acq = acquire_state(state.x, &ctx);
          ++phase;
        }
        for (int k = 0; k < free_steps; ++k) {
          const double target = pattern(phase % l);
          const double y = w_run.dot(acq);
          if (std::abs(y - target) > refit.gate) break;
          gram.selfadjointView<Eigen::Lower>().rankUpdate(acq);
          rhs += target * acq;
          const double fed = y + refit.exploration_sigma * explore.gaussian();
          step(state, input_through_dac(fed, hw), config, &ctx);
          acq = acquire_state(state.x, &ctx);
          ++phase;
        }
      }
      gram = gram.selfadjointView<Eigen::Lower>();
      w = solve();
    }
  }

  RidgeSolution sol;
  sol.lambda = lambda;
  sol.weights.w = w;
  sol.train_nmse = nmse(xb * w, db);
  return sol;
}

}  // namespace ringrc
