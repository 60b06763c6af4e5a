#pragma once

#include "supradiff/diffusion.hpp"
#include "supradiff/network.hpp"
#include "supradiff/state.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace supradiff {

/// Column-stacking vec(X).
Eigen::VectorXd vectorize(const Eigen::MatrixXd& x);
Eigen::MatrixXd devectorize(const Eigen::VectorXd& v, Index rows, Index cols);

/// I_T (x) A
Eigen::MatrixXd kron_identity(Index t, const Eigen::MatrixXd& a);

/// Snapshots with strictly increasing times. The first `train_end` snapshots
/// form the learning range; the rest are held out for testing.
struct SnapshotSeries {
  std::vector<StateMatrix> snapshots;
  std::size_t train_end = 0;

  void validate() const;
  std::size_t size() const { return snapshots.size(); }
  Index nodes() const { return snapshots.empty() ? 0 : snapshots.front().nodes(); }
  Index topics() const { return snapshots.empty() ? 0 : snapshots.front().topics(); }
};

/// Copy of the series keeping only rows [first, first + count).
SnapshotSeries restrict_rows(const SnapshotSeries& series, Index first, Index count);

struct FitOptions {
  double max_constant = 10.0;
  int min_sweeps = 2;
  int max_sweeps = 200;
  double relative_tolerance = 1e-12;
  std::optional<DiffusionConstants> initial;  // default: every constant 1
  bool symmetric = true;
};

struct FitResult {
  DiffusionConstants constants;
  NoiseModel noise;
  std::vector<double> objective_trace;  // objective after initialization, then after each sweep
  int sweeps = 0;
  bool converged = false;
  bool identifiable = true;
};

/// Sum over consecutive training pairs of ||X(t_{i+1}) - e^{-L dt_i} X(t_i)||_F^2.
double calibration_objective(const SnapshotSeries& series, const InterconnectedNetwork& network,
                             const DiffusionConstants& constants);

/// Coordinate descent with golden-section line searches on [0, max_constant],
/// then sigma from the per-entry spread of the scaled residuals.
FitResult fit_diffusion_constants(const SnapshotSeries& series,
                                  const InterconnectedNetwork& network,
                                  const FitOptions& options = {});

/// sigma(p, j) = sample std over training pairs of residual(p, j) / sqrt(dt).
Eigen::MatrixXd estimate_sigma(const SnapshotSeries& series, const SupraLaplacian& supra);

struct LearnOptions {
  std::optional<double> gain;       // default 1e-3 / mean ||x||^2
  std::optional<double> threshold;  // default 1e-3 * mean ||x||
  int max_iters = 500;
  // Early stopping. When > 0 the last `holdout_pairs` training pairs take no
  // part in the updates; the iterate with the lowest RMS error on them is kept,
  // and learning stops after `patience` iterations without improvement.
  std::size_t holdout_pairs = 0;
  int patience = 50;
};

struct LearnedOperator {
  Eigen::MatrixXd lambda_hat;  // PT x PT
  Index nodes = 0;
  Index topics = 0;
  double gain = 0.0;
  double threshold = 0.0;
  // RMS training error before the first update and after every iteration.
  std::vector<double> iteration_log;
  // Per-pair residuals under the final operator.
  std::vector<Eigen::VectorXd> residuals;
  int iterations = 0;
  bool converged = false;
  std::vector<double> holdout_log;  // empty without early stopping
  int best_iteration = -1;          // iterate kept by early stopping
};

/// Learns a general PT x PT operator from consecutive training pairs, starting
/// at I_T (x) (-L). Each iteration checks the stop rule on every pair, then
/// cycles over the pairs applying  Lambda += gain * (x_next - e^Lambda x) x^T.
LearnedOperator learn_supra_operator(const SnapshotSeries& series, const SupraLaplacian& init,
                                     const LearnOptions& options = {});

StateMatrix one_step_predict_learned(const LearnedOperator& op, const StateMatrix& x);

/// Per-coordinate variance of the final residuals (second moment for a single pair).
Eigen::VectorXd residual_variance(const LearnedOperator& op);

inline constexpr Index kMaxLearnedDimension = 4000;

}  // namespace supradiff
