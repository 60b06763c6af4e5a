#include "supradiff/diffusion.hpp"

#include "supradiff/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace supradiff {

namespace {

constexpr double kMaxExponent = 709.0;  // log(DBL_MAX) ~ 709.78

void require_square(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) throw ValidationError(std::string(what) + ": matrix must be square");
}

double one_norm(const Eigen::MatrixXd& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().colwise().sum().maxCoeff();
}

Eigen::MatrixXd symmetric_exponential(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError("matrix_exponential: eigensolver failed");
  if (eig.eigenvalues().maxCoeff() > kMaxExponent) {
    throw NumericalError("matrix_exponential: overflow (largest eigenvalue " +
                         std::to_string(eig.eigenvalues().maxCoeff()) + ")");
  }
  const Eigen::VectorXd e = eig.eigenvalues().array().exp();
  return eig.eigenvectors() * e.asDiagonal() * eig.eigenvectors().transpose();
}

// Higham (2005) degree-13 Pade approximant with scaling and squaring.
Eigen::MatrixXd pade_exponential(const Eigen::MatrixXd& a) {
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const Index n = a.rows();
  const double norm = one_norm(a);
  int squarings = 0;
  if (norm > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  if (squarings > 1000) throw NumericalError("matrix_exponential: norm too large");
  const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd x2 = x * x;
  const Eigen::MatrixXd x4 = x2 * x2;
  const Eigen::MatrixXd x6 = x4 * x2;
  const Eigen::MatrixXd u_inner = b[13] * x6 + b[11] * x4 + b[9] * x2;
  const Eigen::MatrixXd u =
      x * (x6 * u_inner + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
  const Eigen::MatrixXd v_inner = b[12] * x6 + b[10] * x4 + b[8] * x2;
  const Eigen::MatrixXd v = x6 * v_inner + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) {
    r = r * r;
    if (!r.allFinite()) throw NumericalError("matrix_exponential: overflow while squaring");
  }
  return r;
}

}  // namespace

double infinity_norm(const Eigen::MatrixXd& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

bool is_symmetric(const Eigen::MatrixXd& a, double tol) {
  return a.rows() == a.cols() && infinity_norm(a - a.transpose()) < tol;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  require_square(a, "matrix_exponential");
  if (!a.allFinite()) throw ValidationError("matrix_exponential: non-finite entries");
  if (a.size() == 0) return a;
  Eigen::MatrixXd r = is_symmetric(a) ? symmetric_exponential(a) : pade_exponential(a);
  if (!r.allFinite()) throw NumericalError("matrix_exponential: overflow");
  return r;
}

Eigen::MatrixXd exponential_action(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t) {
  require_square(a, "exponential_action");
  if (a.cols() != b.rows()) throw ValidationError("exponential_action: dimension mismatch");
  if (!a.allFinite() || !b.allFinite() || !std::isfinite(t)) {
    throw ValidationError("exponential_action: non-finite input");
  }
  const double norm = std::abs(t) * one_norm(a);
  if (norm > 1e7) throw NumericalError("exponential_action: norm too large");
  const int steps = std::max(1, static_cast<int>(std::ceil(norm)));
  const double h = t / steps;
  constexpr double eps = std::numeric_limits<double>::epsilon() / 2;

  Eigen::MatrixXd f = b;
  for (int s = 0; s < steps; ++s) {
    Eigen::MatrixXd term = f;
    Eigen::MatrixXd acc = f;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 60; ++k) {
      term = (h / k) * (a * term);
      acc += term;
      const double cur = term.cwiseAbs().maxCoeff();
      const double scale = acc.cwiseAbs().maxCoeff();
      if (cur + prev <= eps * scale) break;
      prev = cur;
    }
    f = std::move(acc);
    if (!f.allFinite()) throw NumericalError("exponential_action: overflow");
  }
  return f;
}

StateMatrix propagate_closed(const StateMatrix& x0, const SupraLaplacian& supra, double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw ValidationError("propagate_closed: dt must be >= 0");
  if (x0.nodes() != supra.size()) throw ValidationError("propagate_closed: dimension mismatch");
  if (dt == 0.0) return x0;
  return {matrix_exponential(-dt * supra.matrix) * x0.values, x0.time + dt};
}

StateMatrix predict_mean(const StateMatrix& x0, const SupraLaplacian& supra, double dt) {
  return propagate_closed(x0, supra, dt);
}

NoiseModel noise_with_ratio(const Eigen::MatrixXd& x0, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw ValidationError("noise ratio must be >= 0");
  const double count = static_cast<double>(x0.size());
  const double entry = count > 0 ? ratio * x0.norm() / std::sqrt(count) : 0.0;
  return {Eigen::MatrixXd::Constant(x0.rows(), x0.cols(), entry), seed};
}

double default_time_step(const SupraLaplacian& supra) {
  const double norm = infinity_norm(supra.matrix);
  return norm > 0.0 ? std::min(0.01, 0.1 / norm) : 0.01;
}

Path simulate_open(const StateMatrix& x0, const SupraLaplacian& supra, const NoiseModel& noise,
                   const SimulationConfig& config) {
  if (!(config.dt > 0.0) || !std::isfinite(config.dt)) {
    throw ValidationError("simulate_open: dt must be > 0");
  }
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
    throw ValidationError("simulate_open: horizon must be > 0");
  }
  if (x0.nodes() != supra.size()) throw ValidationError("simulate_open: dimension mismatch");
  if (noise.sigma.rows() != x0.nodes() || noise.sigma.cols() != x0.topics()) {
    throw ValidationError("simulate_open: sigma must be P x T");
  }
  if (!noise.sigma.allFinite() || (noise.sigma.array() < 0.0).any()) {
    throw ValidationError("simulate_open: sigma entries must be finite and >= 0");
  }

  const auto steps = static_cast<long>(std::ceil(config.horizon / config.dt - 1e-9));
  const double norm = infinity_norm(supra.matrix);

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(x0.nodes(), x0.topics());

  Path path;
  path.states.reserve(static_cast<std::size_t>(steps) + 1);
  path.states.push_back(x0);
  Eigen::MatrixXd x = x0.values;
  double t = x0.time;
  for (long n = 0; n < steps; ++n) {
    const double h = (n + 1 == steps) ? config.horizon - n * config.dt : config.dt;
    if (norm * h >= 1.0) path.stiff = true;
    for (Index j = 0; j < g.cols(); ++j) {
      for (Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    }
    x = x - h * (supra.matrix * x) + std::sqrt(h) * noise.sigma.cwiseProduct(g);
    t = x0.time + (n + 1 == steps ? config.horizon : (n + 1) * config.dt);
    if (!x.allFinite()) throw NumericalError("simulate_open: state diverged at step " + std::to_string(n + 1));
    path.states.push_back({x, t});
  }
  return path;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over (master, index)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<Path> simulate_ensemble(const StateMatrix& x0, const SupraLaplacian& supra,
                                    const NoiseModel& noise, const SimulationConfig& config) {
  if (config.ensemble_size < 1) throw ValidationError("ensemble_size must be >= 1");
  std::vector<Path> paths;
  paths.reserve(static_cast<std::size_t>(config.ensemble_size));
  for (int k = 0; k < config.ensemble_size; ++k) {
    NoiseModel sub{noise.sigma, derive_seed(noise.seed, static_cast<std::uint64_t>(k))};
    paths.push_back(simulate_open(x0, supra, sub, config));
  }
  return paths;
}

EnsembleStats ensemble_statistics(const std::vector<Eigen::MatrixXd>& samples) {
  if (samples.size() < 2) throw ValidationError("ensemble_statistics: need at least 2 samples");
  const Index r = samples.front().rows();
  const Index c = samples.front().cols();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(r, c);
  for (const auto& s : samples) {
    if (s.rows() != r || s.cols() != c) throw ValidationError("ensemble_statistics: shape mismatch");
    mean += s;
  }
  const auto n = static_cast<double>(samples.size());
  mean /= n;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(r, c);
  for (const auto& s : samples) var += (s - mean).cwiseAbs2();
  var /= (n - 1.0);
  return {std::move(mean), std::move(var)};
}

std::vector<EnsembleStats> ensemble_statistics(const std::vector<Path>& paths) {
  if (paths.size() < 2) throw ValidationError("ensemble_statistics: need at least 2 paths");
  const std::size_t len = paths.front().states.size();
  for (const auto& p : paths) {
    if (p.states.size() != len) throw ValidationError("ensemble_statistics: path length mismatch");
  }
  std::vector<EnsembleStats> out;
  out.reserve(len);
  std::vector<Eigen::MatrixXd> column(paths.size());
  for (std::size_t step = 0; step < len; ++step) {
    for (std::size_t k = 0; k < paths.size(); ++k) column[k] = paths[k].states[step].values;
    out.push_back(ensemble_statistics(column));
  }
  return out;
}

}  // namespace supradiff
