#pragma once

#include "supradiff/network.hpp"
#include "supradiff/state.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace supradiff {

/// e^A. Symmetric inputs (||A - A^T||_inf < 1e-12) go through a symmetric
/// eigendecomposition; everything else through Pade(13) scaling and squaring.
/// Throws NumericalError when the result would overflow.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

/// e^{tA} B without forming the exponential (scaled truncated Taylor series).
/// Cheaper than matrix_exponential when B has few columns.
Eigen::MatrixXd exponential_action(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   double t = 1.0);

double infinity_norm(const Eigen::MatrixXd& a);
bool is_symmetric(const Eigen::MatrixXd& a, double tol = 1e-12);

/// Closed-system flow dX/dt = -L X over `dt`.
StateMatrix propagate_closed(const StateMatrix& x0, const SupraLaplacian& supra, double dt);

/// Point predictor for the open system: the expectation of the stochastic
/// integral is zero, so this coincides with propagate_closed.
StateMatrix predict_mean(const StateMatrix& x0, const SupraLaplacian& supra, double dt);

struct NoiseModel {
  Eigen::MatrixXd sigma;  // P x T, entrywise Brownian scale
  std::uint64_t seed = 0;
};

/// Uniform sigma whose Frobenius norm equals ratio * ||x0||_F.
NoiseModel noise_with_ratio(const Eigen::MatrixXd& x0, double ratio, std::uint64_t seed);

struct SimulationConfig {
  double dt = 0.01;
  double horizon = 1.0;
  int ensemble_size = 1;
};

/// min(0.01, 0.1 / ||L||_inf)
double default_time_step(const SupraLaplacian& supra);

struct Path {
  std::vector<StateMatrix> states;  // states.front() is the initial condition
  bool stiff = false;               // ||L||_inf * dt >= 1 somewhere along the path
};

/// One Euler-Maruyama path of dX = -L X dt + Sigma dB. The last step is
/// shortened so the path ends exactly at the horizon.
Path simulate_open(const StateMatrix& x0, const SupraLaplacian& supra, const NoiseModel& noise,
                   const SimulationConfig& config);

/// Seed of path `index` derived from a master seed; independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

std::vector<Path> simulate_ensemble(const StateMatrix& x0, const SupraLaplacian& supra,
                                    const NoiseModel& noise, const SimulationConfig& config);

struct EnsembleStats {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;  // unbiased
};

EnsembleStats ensemble_statistics(const std::vector<Eigen::MatrixXd>& samples);
/// Per-step statistics across paths of equal length.
std::vector<EnsembleStats> ensemble_statistics(const std::vector<Path>& paths);

}  // namespace supradiff
