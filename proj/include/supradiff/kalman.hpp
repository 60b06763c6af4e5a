#pragma once

#include "supradiff/calibration.hpp"
#include "supradiff/state.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace supradiff {

/// Partial observation of node states: H is the P x P diagonal indicator of
/// `observed`, and the filter sees I_T (x) H applied to vec(X).
struct ObservationModel {
  Index nodes = 0;
  Index topics = 0;
  std::vector<Index> observed;  // sorted node indices
  Eigen::VectorXd r_diag;       // PT observation-noise variances
  Eigen::VectorXd q_diag;       // PT process-noise variances

  void validate() const;
  Eigen::VectorXd mask() const;                  // diagonal of I_T (x) H
  std::vector<Index> observed_coordinates() const;  // indices into vec(X)
};

inline constexpr double kDefaultObservationNoise = 1e-6;

ObservationModel make_observation_model(Index nodes, Index topics, std::vector<Index> observed,
                                        Eigen::VectorXd q_diag,
                                        double observation_noise = kDefaultObservationNoise);

/// round(fraction * nodes) nodes: a prefix of one seeded random permutation,
/// so larger fractions observe a superset of smaller ones.
std::vector<Index> sample_observed_nodes(Index nodes, double fraction, std::uint64_t seed);

enum class KalmanPhase { predicted, updated };

struct KalmanState {
  Eigen::VectorXd x_hat;
  Eigen::MatrixXd pi;
  KalmanPhase phase = KalmanPhase::predicted;
};

/// Measurement update with y = (I_T (x) H) vec(X). R_e is pseudo-inverted,
/// which drops the unobserved coordinates.
KalmanState kalman_update(const KalmanState& state, const Eigen::VectorXd& y,
                          const ObservationModel& model);

/// Time update with F = I + Lambda (unit discretization step).
KalmanState kalman_predict(const KalmanState& state, const Eigen::MatrixXd& lambda_hat,
                           const ObservationModel& model);
KalmanState kalman_predict(const KalmanState& state, const LearnedOperator& op,
                           const ObservationModel& model);

struct FilterStep {
  int step = 0;
  double error_all = 0.0;       // predicted estimate vs truth, all rows
  double error_observed = 0.0;  // NaN when nothing is observed
  double error_hidden = 0.0;    // NaN when everything is observed
  double trace_pi = 0.0;
  double error_filtered = 0.0;  // after the measurement update at the same step
  StateMatrix predicted;
};

struct FilterTrace {
  std::vector<FilterStep> steps;
  double mean_error() const;
};

/// `prior` is the predicted-phase belief at the time of `truth.front()`, which
/// supplies the first measurement. Each later snapshot is predicted from the
/// previous filtered estimate, scored, then used as the next measurement.
FilterTrace run_filter(const std::vector<StateMatrix>& truth, const LearnedOperator& op,
                       const ObservationModel& model, const KalmanState& prior);

/// Identity scaled by the variance of all training-snapshot entries.
Eigen::MatrixXd default_initial_covariance(const SnapshotSeries& series);

/// Every coordinate at the mean training entry, covariance as above.
KalmanState default_prior(const SnapshotSeries& series);

std::string format_filter_trace_csv(const FilterTrace& trace);

}  // namespace supradiff
