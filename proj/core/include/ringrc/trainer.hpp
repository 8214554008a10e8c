#pragma once

#include <Eigen/Dense>

#include "ringrc/reservoir.hpp"

namespace ringrc {

struct TrainingSet {
  Eigen::MatrixXd design;   // harvested states, one row per teacher step
  Eigen::VectorXd targets;  // d(n) = u(n+1)
  int washout = 0;          // leading rows excluded from the fit
};

struct RidgeSolution {
  ReadoutWeights weights;
  double lambda = 0.0;
  double train_nmse = 0.0;
  bool rank_deficient = false;  // lambda = 0 hit a singular design
};

// Drives the reservoir with u(0..T-1) and pairs the state recorded after
// u(n) with the target u(n+1); the last state row has no target and is
// dropped. The first `washout` pairs are kept but flagged excluded.
TrainingSet harvest(const ReservoirConfig& config, HardwareContext* hw,
                    const Eigen::VectorXd& teacher, int washout);

// w = argmin ||Xw - d||^2 + lambda ||w||^2 over the non-washout rows,
// solved through the SVD. lambda = 0 on a rank-deficient design falls back
// to the minimum-norm solution and sets the flag.
RidgeSolution ridge_solve(const TrainingSet& set, double lambda);

// Eq.-(4)-style normalised mean square error:
// mean((y - d)^2) / mean((d - mean(d))^2). Rejects constant targets.
double nmse(const Eigen::VectorXd& y, const Eigen::VectorXd& d);

// harvest followed by ridge_solve.
RidgeSolution train(const ReservoirConfig& config, HardwareContext* hw,
                    const Eigen::VectorXd& teacher, double lambda,
                    int washout);

// Closed-loop refit schedule for periodic generation. A plain one-step fit
// leaves the generated cycle with near-unity Floquet multipliers, so the
// autonomous output walks off the pattern after a few hundred steps. Each
// refit round runs the loop on its own fed-back output in short stretches
// between teacher-forced relocks, pairing the visited states with the
// phase-aligned teacher continuation, and refits the stacked system. The
// collected rows are exactly the loop's incipient drift directions, which
// the refit pins back onto the cycle.
struct FeedbackRefit {
  bool enabled = true;
  int rounds = 10;      // refit rounds after the base fit
  int segments = 96;    // relock/free segment pairs per round
  int relock_factor = 3;  // teacher-forced steps per segment, in periods
  double gate = 0.05;   // stop collecting a segment once |y - target| exceeds
  double exploration_sigma = 1e-3;  // dither on the fed-back output while
                                    // collecting (quantizers hide smaller
                                    // perturbations from the regression)
};

// Ridge training hardened for autonomous generation of an L-periodic
// pattern. Deterministic given (config, hw, noise_seed). The refit stack is
// solved through accumulated normal equations; ridge_solve remains the
// reference for the plain path.
RidgeSolution train_periodic_stabilized(const ReservoirConfig& config,
                                        const HardwareModel* hw,
                                        std::uint64_t noise_seed,
                                        const Eigen::VectorXd& pattern,
                                        int teacher_length, int warmup_length,
                                        double lambda, int washout,
                                        const FeedbackRefit& refit);

}  // namespace ringrc
