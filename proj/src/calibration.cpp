#include "supradiff/calibration.hpp"

#include "supradiff/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace supradiff {

Eigen::VectorXd vectorize(const Eigen::MatrixXd& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
}

Eigen::MatrixXd devectorize(const Eigen::VectorXd& v, Index rows, Index cols) {
  if (rows * cols != v.size()) throw ValidationError("devectorize: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::MatrixXd kron_identity(Index t, const Eigen::MatrixXd& a) {
  const Index n = a.rows();
  const Index m = a.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t * n, t * m);
  for (Index k = 0; k < t; ++k) out.block(k * n, k * m, n, m) = a;
  return out;
}

void SnapshotSeries::validate() const {
  if (snapshots.empty()) throw ValidationError("snapshot series is empty");
  const Index p = snapshots.front().nodes();
  const Index t = snapshots.front().topics();
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& s = snapshots[i];
    if (s.nodes() != p || s.topics() != t) throw ValidationError("snapshot shapes differ");
    if (!s.values.allFinite()) throw ValidationError("snapshot has non-finite entries");
    if (i > 0 && !(s.time > snapshots[i - 1].time)) {
      throw ValidationError("snapshot times must be strictly increasing");
    }
  }
  if (train_end > snapshots.size()) throw ValidationError("train_end beyond series");
}

SnapshotSeries restrict_rows(const SnapshotSeries& series, Index first, Index count) {
  SnapshotSeries out;
  out.train_end = series.train_end;
  for (const auto& s : series.snapshots) {
    if (first < 0 || first + count > s.nodes()) throw ValidationError("restrict_rows: out of range");
    out.snapshots.push_back({s.values.middleRows(first, count), s.time});
  }
  return out;
}

namespace {

struct Pair {
  const StateMatrix* from;
  const StateMatrix* to;
  double dt;
};

std::vector<Pair> training_pairs(const SnapshotSeries& series) {
  series.validate();
  if (series.train_end < 2) throw ValidationError("need at least 2 training snapshots");
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i + 1 < series.train_end; ++i) {
    pairs.push_back({&series.snapshots[i], &series.snapshots[i + 1],
                     series.snapshots[i + 1].time - series.snapshots[i].time});
  }
  return pairs;
}

// e^{-L dt} applied to every pair's source state, grouped by dt.
std::vector<Eigen::MatrixXd> propagate_pairs(const std::vector<Pair>& pairs,
                                             const Eigen::MatrixXd& lap) {
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) groups[pairs[i].dt].push_back(i);

  const Index p = lap.rows();
  const Index t = pairs.front().from->topics();
  const bool symmetric = is_symmetric(lap);
  std::optional<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> eig;

  std::vector<Eigen::MatrixXd> out(pairs.size());
  for (const auto& [dt, members] : groups) {
    const auto cols = static_cast<Index>(members.size()) * t;
    Eigen::MatrixXd stacked(p, cols);
    for (std::size_t k = 0; k < members.size(); ++k) {
      stacked.middleCols(static_cast<Index>(k) * t, t) = pairs[members[k]].from->values;
    }
    // Rough flop counts: Taylor action vs. dense exponential.
    const double steps = std::max(1.0, std::ceil(dt * lap.cwiseAbs().colwise().sum().maxCoeff()));
    const double action_cost = steps * 14.0 * static_cast<double>(p * p * cols);
    const double dense_cost = 12.0 * static_cast<double>(p * p * p);
    Eigen::MatrixXd moved;
    if (action_cost <= dense_cost) {
      moved = exponential_action(-lap, stacked, dt);
    } else if (symmetric) {
      if (!eig) eig.emplace(lap);
      const Eigen::VectorXd e = (-dt * eig->eigenvalues()).array().exp();
      moved = eig->eigenvectors() * (e.asDiagonal() * (eig->eigenvectors().transpose() * stacked));
    } else {
      moved = matrix_exponential(-dt * lap) * stacked;
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      out[members[k]] = moved.middleCols(static_cast<Index>(k) * t, t);
    }
  }
  return out;
}

double objective_for(const std::vector<Pair>& pairs, const Eigen::MatrixXd& lap) {
  const auto predicted = propagate_pairs(pairs, lap);
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    total += (pairs[i].to->values - predicted[i]).squaredNorm();
  }
  return total;
}

// One scalar per free constant; in symmetric mode each unordered pair is one parameter.
struct Parameter {
  bool intra;
  int a;
  int b;
};

std::vector<Parameter> parameters_of(const InterconnectedNetwork& network, bool symmetric) {
  std::vector<Parameter> params;
  for (const auto& l : network.layers()) params.push_back({true, l.id, l.id});
  for (const auto& c : effective_couplings(network, symmetric)) {
    if (symmetric) {
      bool seen = false;
      for (const auto& q : params) {
        seen |= !q.intra && q.a == c.to_layer && q.b == c.from_layer;
      }
      if (seen) continue;
    }
    params.push_back({false, c.from_layer, c.to_layer});
  }
  return params;
}

double get(const DiffusionConstants& c, const Parameter& p) {
  if (p.intra) return c.intra.at(p.a);
  return c.inter_for(p.a, p.b).value_or(0.0);
}

void set(DiffusionConstants& c, const Parameter& p, double v) {
  if (p.intra) {
    c.intra[p.a] = v;
    return;
  }
  c.inter.erase({p.b, p.a});
  c.inter[{p.a, p.b}] = v;
}

std::string describe(const DiffusionConstants& c) {
  std::ostringstream os;
  for (const auto& [id, d] : c.intra) os << " D" << id << "=" << d;
  for (const auto& [pr, d] : c.inter) os << " D" << pr.first << "," << pr.second << "=" << d;
  return os.str();
}

}  // namespace

double calibration_objective(const SnapshotSeries& series, const InterconnectedNetwork& network,
                             const DiffusionConstants& constants) {
  const auto pairs = training_pairs(series);
  if (series.nodes() != network.node_count()) throw ValidationError("series/network size mismatch");
  return objective_for(pairs, assemble_supra_laplacian(network, constants).matrix);
}

Eigen::MatrixXd estimate_sigma(const SnapshotSeries& series, const SupraLaplacian& supra) {
  const auto pairs = training_pairs(series);
  const auto predicted = propagate_pairs(pairs, supra.matrix);
  const Index p = series.nodes();
  const Index t = series.topics();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, t);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(p, t);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::MatrixXd r = (pairs[i].to->values - predicted[i]) / std::sqrt(pairs[i].dt);
    sum += r;
    sum_sq += r.cwiseAbs2();
  }
  const auto n = static_cast<double>(pairs.size());
  if (pairs.size() == 1) return sum.cwiseAbs();
  const Eigen::MatrixXd mean = sum / n;
  Eigen::MatrixXd var = (sum_sq - n * mean.cwiseAbs2()) / (n - 1.0);
  return var.cwiseMax(0.0).cwiseSqrt();
}

FitResult fit_diffusion_constants(const SnapshotSeries& series,
                                  const InterconnectedNetwork& network,
                                  const FitOptions& options) {
  const auto pairs = training_pairs(series);
  if (series.nodes() != network.node_count()) throw ValidationError("series/network size mismatch");
  if (!(options.max_constant > 0.0)) throw ValidationError("max_constant must be > 0");

  const auto params = parameters_of(network, options.symmetric);
  DiffusionConstants current;
  current.symmetric = options.symmetric;
  for (const auto& p : params) {
    const double init = options.initial ? get(*options.initial, p) : 1.0;
    set(current, p, std::clamp(init, 0.0, options.max_constant));
  }

  auto objective = [&](const DiffusionConstants& c) {
    const double f = objective_for(pairs, assemble_supra_laplacian(network, c).matrix);
    if (!std::isfinite(f)) {
      throw NumericalError("fit_diffusion_constants: non-finite objective at" + describe(c));
    }
    return f;
  };

  FitResult result;
  double best = objective(current);
  result.objective_trace.push_back(best);

  // Non-identifiable when no single coordinate moves the objective at all.
  {
    bool any_effect = false;
    for (const auto& p : params) {
      for (double probe : {0.0, options.max_constant}) {
        DiffusionConstants trial = current;
        set(trial, p, probe);
        any_effect |= std::abs(objective(trial) - best) > 1e-12 * (1.0 + best);
      }
    }
    if (!any_effect) {
      result.constants = current;
      result.identifiable = false;
      result.converged = true;
      result.noise = {estimate_sigma(series, assemble_supra_laplacian(network, current)), 0};
      return result;
    }
  }

  constexpr double inv_phi = 0.6180339887498949;
  const double x_tol = 1e-11 * options.max_constant;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    const double before = best;
    for (const auto& p : params) {
      auto f_at = [&](double v) {
        DiffusionConstants trial = current;
        set(trial, p, v);
        return objective(trial);
      };
      double lo = 0.0;
      double hi = options.max_constant;
      double x1 = hi - inv_phi * (hi - lo);
      double x2 = lo + inv_phi * (hi - lo);
      double f1 = f_at(x1);
      double f2 = f_at(x2);
      while (hi - lo > x_tol) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - inv_phi * (hi - lo);
          f1 = f_at(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + inv_phi * (hi - lo);
          f2 = f_at(x2);
        }
      }
      // Golden section only finds a local minimum: keep the best of the
      // candidates, never worse than the current value.
      double cand_x = f1 <= f2 ? x1 : x2;
      double cand_f = std::min(f1, f2);
      for (double edge : {0.0, options.max_constant}) {
        const double fe = f_at(edge);
        if (fe < cand_f) {
          cand_f = fe;
          cand_x = edge;
        }
      }
      if (cand_f < best) {
        set(current, p, cand_x);
        best = cand_f;
      }
    }
    result.objective_trace.push_back(best);
    result.sweeps = sweep;
    if (sweep >= options.min_sweeps &&
        (before - best <= options.relative_tolerance * before || best <= 1e-300)) {
      result.converged = true;
      break;
    }
  }

  result.constants = current;
  result.noise = {estimate_sigma(series, assemble_supra_laplacian(network, current)), 0};
  return result;
}

LearnedOperator learn_supra_operator(const SnapshotSeries& series, const SupraLaplacian& init,
                                     const LearnOptions& options) {
  const auto pairs = training_pairs(series);
  const Index p = series.nodes();
  const Index t = series.topics();
  if (init.size() != p) throw ValidationError("learn_supra_operator: operator/series size mismatch");
  if (p * t > kMaxLearnedDimension) {
    throw ValidationError("learn_supra_operator: PT = " + std::to_string(p * t) + " exceeds " +
                          std::to_string(kMaxLearnedDimension));
  }
  if (options.max_iters < 0) throw ValidationError("learn_supra_operator: max_iters must be >= 0");

  if (options.holdout_pairs >= pairs.size()) {
    throw ValidationError("learn_supra_operator: holdout_pairs must leave at least one training pair");
  }
  const std::size_t fit_pairs = pairs.size() - options.holdout_pairs;

  std::vector<Eigen::VectorXd> xs;
  xs.reserve(pairs.size() + 1);
  for (std::size_t i = 0; i < series.train_end; ++i) xs.push_back(vectorize(series.snapshots[i].values));

  double mean_sq = 0.0;
  double mean_norm = 0.0;
  for (std::size_t i = 0; i < fit_pairs; ++i) {
    mean_sq += xs[i].squaredNorm();
    mean_norm += xs[i].norm();
  }
  mean_sq /= static_cast<double>(fit_pairs);
  mean_norm /= static_cast<double>(fit_pairs);

  LearnedOperator op;
  op.nodes = p;
  op.topics = t;
  op.gain = options.gain.value_or(mean_sq > 0.0 ? 1e-3 / mean_sq : 1e-3);
  op.threshold = options.threshold.value_or(1e-3 * mean_norm);
  if (!(op.gain >= 0.0) || !std::isfinite(op.gain)) throw ValidationError("gain must be >= 0");
  if (!(op.threshold > 0.0) || !std::isfinite(op.threshold)) {
    throw ValidationError("threshold must be > 0");
  }
  if (options.patience < 1) throw ValidationError("learn_supra_operator: patience must be >= 1");
  op.lambda_hat = kron_identity(t, -init.matrix);

  auto residuals_of = [&](std::size_t first, std::size_t last) {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t i = first; i < last; ++i) {
      out.push_back(xs[i + 1] - exponential_action(op.lambda_hat, xs[i]));
    }
    return out;
  };
  auto rms = [](const std::vector<Eigen::VectorXd>& r) {
    double total = 0.0;
    for (const auto& e : r) total += e.squaredNorm();
    return std::sqrt(total / static_cast<double>(r.size()));
  };

  const bool early_stop = options.holdout_pairs > 0;
  Eigen::MatrixXd best = op.lambda_hat;
  double best_holdout = std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    op.residuals = residuals_of(0, fit_pairs);
    op.iteration_log.push_back(rms(op.residuals));
    bool below = true;
    for (const auto& e : op.residuals) below &= e.norm() < op.threshold;
    op.iterations = iter;

    bool stalled = false;
    if (early_stop) {
      const double h = rms(residuals_of(fit_pairs, pairs.size()));
      op.holdout_log.push_back(h);
      if (h < best_holdout) {
        best_holdout = h;
        best = op.lambda_hat;
        op.best_iteration = iter;
      }
      stalled = iter - op.best_iteration >= options.patience;
    }
    if (below) {
      op.converged = true;
      break;
    }
    if (iter == options.max_iters || stalled) break;

    for (std::size_t i = 0; i < fit_pairs; ++i) {
      const Eigen::VectorXd predicted = exponential_action(op.lambda_hat, xs[i]);
      op.lambda_hat.noalias() += op.gain * (xs[i + 1] - predicted) * xs[i].transpose();
      if (!op.lambda_hat.allFinite()) {
        throw NumericalError("learn_supra_operator: non-finite update at iteration " +
                             std::to_string(iter + 1) + " (gain too large?)");
      }
    }
  }
  if (early_stop) {
    op.lambda_hat = best;
    op.residuals = residuals_of(0, pairs.size());
  }
  return op;
}

StateMatrix one_step_predict_learned(const LearnedOperator& op, const StateMatrix& x) {
  if (x.nodes() != op.nodes || x.topics() != op.topics) {
    throw ValidationError("one_step_predict_learned: shape mismatch");
  }
  const Eigen::VectorXd next = exponential_action(op.lambda_hat, vectorize(x.values));
  return {devectorize(next, op.nodes, op.topics), x.time + 1.0};
}

Eigen::VectorXd residual_variance(const LearnedOperator& op) {
  const Index n = op.nodes * op.topics;
  if (op.residuals.empty()) return Eigen::VectorXd::Zero(n);
  if (op.residuals.size() == 1) return op.residuals.front().cwiseAbs2();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& r : op.residuals) mean += r;
  mean /= static_cast<double>(op.residuals.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(n);
  for (const auto& r : op.residuals) var += (r - mean).cwiseAbs2();
  return var / static_cast<double>(op.residuals.size() - 1);
}

}  // namespace supradiff
