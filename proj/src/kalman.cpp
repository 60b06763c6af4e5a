#include "supradiff/kalman.hpp"

#include "supradiff/csv.hpp"
#include "supradiff/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace supradiff {

void ObservationModel::validate() const {
  const Index n = nodes * topics;
  if (nodes <= 0 || topics <= 0) throw ValidationError("observation model: empty shape");
  if (r_diag.size() != n || q_diag.size() != n) {
    throw ValidationError("observation model: R and Q must have PT entries");
  }
  if (!r_diag.allFinite() || !q_diag.allFinite() || (r_diag.array() < 0.0).any() ||
      (q_diag.array() < 0.0).any()) {
    throw ValidationError("observation model: R and Q must be finite and >= 0");
  }
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] < 0 || observed[i] >= nodes) {
      throw ValidationError("observation model: node index out of range");
    }
    if (i > 0 && observed[i] <= observed[i - 1]) {
      throw ValidationError("observation model: observed nodes must be sorted and unique");
    }
  }
}

Eigen::VectorXd ObservationModel::mask() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(nodes * topics);
  for (Index idx : observed_coordinates()) m(idx) = 1.0;
  return m;
}

std::vector<Index> ObservationModel::observed_coordinates() const {
  std::vector<Index> coords;
  coords.reserve(observed.size() * static_cast<std::size_t>(topics));
  for (Index t = 0; t < topics; ++t) {
    for (Index node : observed) coords.push_back(t * nodes + node);
  }
  std::sort(coords.begin(), coords.end());
  return coords;
}

ObservationModel make_observation_model(Index nodes, Index topics, std::vector<Index> observed,
                                        Eigen::VectorXd q_diag, double observation_noise) {
  std::sort(observed.begin(), observed.end());
  ObservationModel model{nodes, topics, std::move(observed),
                         Eigen::VectorXd::Zero(nodes * topics), std::move(q_diag)};
  for (Index idx : model.observed_coordinates()) model.r_diag(idx) = observation_noise;
  model.validate();
  return model;
}

std::vector<Index> sample_observed_nodes(Index nodes, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ValidationError("observation fraction must lie in [0, 1]");
  }
  std::vector<Index> perm(static_cast<std::size_t>(nodes));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates so the permutation does not depend on the library's shuffle.
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(nodes)));
  perm.resize(count);
  std::sort(perm.begin(), perm.end());
  return perm;
}

namespace {

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError("kalman_update: eigensolver failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cutoff =
      std::max(1.0, static_cast<double>(a.rows())) * 1e-14 * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv(ev.size());
  for (Index i = 0; i < ev.size(); ++i) inv(i) = ev(i) > cutoff ? 1.0 / ev(i) : 0.0;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

void check_state(const KalmanState& s, const ObservationModel& m, const char* what) {
  const Index n = m.nodes * m.topics;
  if (s.x_hat.size() != n || s.pi.rows() != n || s.pi.cols() != n) {
    throw ValidationError(std::string(what) + ": dimension mismatch");
  }
}

double relative_error(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  const double denom = truth.norm();
  if (denom == 0.0) return std::nan("");
  return (est - truth).norm() / denom;
}

}  // namespace

KalmanState kalman_update(const KalmanState& state, const Eigen::VectorXd& y,
                          const ObservationModel& model) {
  check_state(state, model, "kalman_update");
  if (state.phase != KalmanPhase::predicted) {
    throw ValidationError("kalman_update: state must be in the predicted phase");
  }
  if (y.size() != state.x_hat.size()) throw ValidationError("kalman_update: observation size mismatch");
  if (!y.allFinite()) throw ValidationError("kalman_update: non-finite observation");

  KalmanState next = state;
  next.phase = KalmanPhase::updated;
  const auto idx = model.observed_coordinates();
  if (idx.empty()) return next;

  // R_e = R + H Pi H^T is zero outside the observed block, so its pseudo-inverse
  // is the inverse of that block embedded back.
  const Eigen::MatrixXd pi_cols = state.pi(Eigen::all, idx);
  Eigen::MatrixXd r_e = state.pi(idx, idx);
  r_e.diagonal() += model.r_diag(idx);
  const Eigen::MatrixXd gain = pi_cols * symmetric_pinv(r_e);
  const Eigen::VectorXd innovation = y(idx) - state.x_hat(idx);

  next.x_hat = state.x_hat + gain * innovation;
  next.pi = state.pi - gain * pi_cols.transpose();
  next.pi = 0.5 * (next.pi + next.pi.transpose()).eval();
  if (!next.x_hat.allFinite() || !next.pi.allFinite()) {
    throw NumericalError("kalman_update: non-finite result");
  }
  return next;
}

KalmanState kalman_predict(const KalmanState& state, const Eigen::MatrixXd& lambda_hat,
                           const ObservationModel& model) {
  check_state(state, model, "kalman_predict");
  if (state.phase != KalmanPhase::updated) {
    throw ValidationError("kalman_predict: state must be in the updated phase");
  }
  const Index n = state.x_hat.size();
  if (lambda_hat.rows() != n || lambda_hat.cols() != n) {
    throw ValidationError("kalman_predict: operator dimension mismatch");
  }
  Eigen::MatrixXd f = lambda_hat;
  f.diagonal().array() += 1.0;
  if (!f.allFinite()) throw NumericalError("kalman_predict: non-finite transition matrix");

  KalmanState next;
  next.phase = KalmanPhase::predicted;
  next.x_hat = f * state.x_hat;
  next.pi = f * state.pi * f.transpose();
  next.pi.diagonal() += model.q_diag;
  next.pi = 0.5 * (next.pi + next.pi.transpose()).eval();
  if (!next.x_hat.allFinite() || !next.pi.allFinite()) {
    throw NumericalError("kalman_predict: non-finite result");
  }
  return next;
}

KalmanState kalman_predict(const KalmanState& state, const LearnedOperator& op,
                           const ObservationModel& model) {
  return kalman_predict(state, op.lambda_hat, model);
}

double FilterTrace::mean_error() const {
  if (steps.empty()) return std::nan("");
  double total = 0.0;
  for (const auto& s : steps) total += s.error_all;
  return total / static_cast<double>(steps.size());
}

FilterTrace run_filter(const std::vector<StateMatrix>& truth, const LearnedOperator& op,
                       const ObservationModel& model, const KalmanState& prior) {
  model.validate();
  if (truth.size() < 2) throw ValidationError("run_filter: need an initial state and one step");
  if (op.nodes != model.nodes || op.topics != model.topics) {
    throw ValidationError("run_filter: operator and observation model disagree on shape");
  }
  for (const auto& s : truth) {
    if (s.nodes() != model.nodes || s.topics() != model.topics) {
      throw ValidationError("run_filter: truth shape mismatch");
    }
  }

  std::vector<bool> is_observed(static_cast<std::size_t>(model.nodes), false);
  for (Index i : model.observed) is_observed[static_cast<std::size_t>(i)] = true;
  std::vector<Index> hidden;
  for (Index i = 0; i < model.nodes; ++i) {
    if (!is_observed[static_cast<std::size_t>(i)]) hidden.push_back(i);
  }

  const Eigen::VectorXd mask = model.mask();
  if (prior.phase != KalmanPhase::predicted) {
    throw ValidationError("run_filter: prior must be in the predicted phase");
  }
  KalmanState state = kalman_update(prior, mask.cwiseProduct(vectorize(truth.front().values)), model);

  FilterTrace trace;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    state = kalman_predict(state, op, model);
    const Eigen::MatrixXd predicted = devectorize(state.x_hat, model.nodes, model.topics);
    const Eigen::MatrixXd& actual = truth[k].values;

    FilterStep step;
    step.step = static_cast<int>(k);
    step.error_all = relative_error(predicted, actual);
    step.error_observed = model.observed.empty()
                              ? std::nan("")
                              : relative_error(predicted(model.observed, Eigen::all),
                                               actual(model.observed, Eigen::all));
    step.error_hidden = hidden.empty() ? std::nan("")
                                       : relative_error(predicted(hidden, Eigen::all),
                                                        actual(hidden, Eigen::all));
    step.trace_pi = state.pi.trace();
    step.predicted = {predicted, truth[k].time};

    state = kalman_update(state, mask.cwiseProduct(vectorize(actual)), model);
    step.error_filtered =
        relative_error(devectorize(state.x_hat, model.nodes, model.topics), actual);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

namespace {

std::pair<double, double> training_moments(const SnapshotSeries& series) {
  series.validate();
  const std::size_t end = std::max<std::size_t>(series.train_end, 1);
  double sum = 0.0;
  double sum_sq = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < end; ++i) {
    sum += series.snapshots[i].values.sum();
    sum_sq += series.snapshots[i].values.squaredNorm();
    count += static_cast<double>(series.snapshots[i].values.size());
  }
  const double mean = sum / count;
  const double var = std::max(sum_sq / count - mean * mean, 0.0);
  return {mean, var > 0.0 ? var : 1.0};
}

}  // namespace

Eigen::MatrixXd default_initial_covariance(const SnapshotSeries& series) {
  const Index n = series.nodes() * series.topics();
  return Eigen::MatrixXd::Identity(n, n) * training_moments(series).second;
}

KalmanState default_prior(const SnapshotSeries& series) {
  const auto [mean, var] = training_moments(series);
  const Index n = series.nodes() * series.topics();
  return {Eigen::VectorXd::Constant(n, mean), Eigen::MatrixXd::Identity(n, n) * var,
          KalmanPhase::predicted};
}

std::string format_filter_trace_csv(const FilterTrace& trace) {
  CsvTable table;
  table.header = {"step", "error_all", "error_observed", "error_hidden", "trace_Pi"};
  for (const auto& s : trace.steps) {
    table.rows.push_back({std::to_string(s.step), format_number(s.error_all),
                          format_number(s.error_observed), format_number(s.error_hidden),
                          format_number(s.trace_pi)});
  }
  return format_csv(table);
}

}  // namespace supradiff
