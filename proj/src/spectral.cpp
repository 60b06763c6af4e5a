#include "supradiff/spectral.hpp"

#include "supradiff/csv.hpp"
#include "supradiff/diffusion.hpp"
#include "supradiff/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace supradiff {

namespace {

constexpr double kKernelTolerance = 1e-9;

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve(const Eigen::MatrixXd& a,
                                                      bool vectors = true) {
  if (!is_symmetric(a, 1e-10 * std::max(1.0, infinity_norm(a)))) {
    throw ValidationError("spectral analysis requires a symmetric operator");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (a + a.transpose()), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return eig;
}

Index count_below(const Eigen::VectorXd& ev) {
  const double norm = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  const double tol = kKernelTolerance * norm;
  Index k = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < tol || (norm == 0.0)) ++k;
  }
  return k;
}

Eigen::MatrixXd layer_indicators(const SupraLaplacian& supra) {
  const Index m = static_cast<Index>(supra.layer_sizes.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(supra.size(), m);
  for (Index a = 0; a < m; ++a) {
    const Index n = supra.layer_sizes[static_cast<std::size_t>(a)];
    u.block(supra.layer_offsets[static_cast<std::size_t>(a)], a, n, 1).setConstant(
        1.0 / std::sqrt(static_cast<double>(n)));
  }
  return u;
}

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("epsilon must be finite and >= 0");
  }
}

}  // namespace

Index kernel_dimension(const Eigen::MatrixXd& symmetric_matrix) {
  return count_below(solve(symmetric_matrix, false).eigenvalues());
}

SpectralSummary spectrum(const Eigen::MatrixXd& laplacian) {
  if (laplacian.rows() != laplacian.cols() || laplacian.rows() < 2) {
    throw ValidationError("spectrum: need a square operator with at least 2 nodes");
  }
  const auto eig = solve(laplacian);
  SpectralSummary s;
  s.eigenvalues = eig.eigenvalues();
  s.lambda2 = s.eigenvalues(1);
  s.kernel_dim = count_below(s.eigenvalues);
  s.null_basis = eig.eigenvectors().leftCols(s.kernel_dim);
  return s;
}

SpectralSummary spectrum(const SupraLaplacian& supra) {
  SpectralSummary s = spectrum(supra.matrix);
  const auto intra = solve(supra.intra_part);
  s.null_basis = intra.eigenvectors().leftCols(count_below(intra.eigenvalues()));
  return s;
}

Eigen::MatrixXd projected_inter_layer(const SupraLaplacian& supra) {
  const auto m = static_cast<Index>(supra.layer_sizes.size());
  const Index kdim = kernel_dimension(supra.intra_part);
  if (kdim > m) {
    throw ValidationError("perturbation estimate: a layer is internally disconnected (kernel dimension " +
                          std::to_string(kdim) + " > " + std::to_string(m) + " layers)");
  }
  const Eigen::MatrixXd u = layer_indicators(supra);
  return u.transpose() * supra.inter_part * u;
}

double lambda2_perturbation_estimate(const SupraLaplacian& supra, double epsilon) {
  check_epsilon(epsilon);
  if (supra.layer_sizes.size() < 2) {
    throw ValidationError("perturbation estimate: need at least 2 layers");
  }
  const auto eig = solve(projected_inter_layer(supra), false);
  return epsilon * eig.eigenvalues()(1);
}

Eigen::VectorXd per_vector_estimates(const SupraLaplacian& supra, double epsilon) {
  check_epsilon(epsilon);
  return epsilon * projected_inter_layer(supra).diagonal();
}

std::vector<SweepRow> connectivity_sweep(const InterconnectedNetwork& network,
                                         const DiffusionConstants& constants,
                                         const std::vector<double>& epsilon_grid) {
  if (epsilon_grid.empty()) throw ValidationError("connectivity_sweep: empty epsilon grid");
  for (double e : epsilon_grid) check_epsilon(e);
  const SupraLaplacian base = assemble_supra_laplacian(network, constants);

  std::vector<SweepRow> rows;
  rows.reserve(epsilon_grid.size());
  for (double e : epsilon_grid) {
    SweepRow row;
    row.epsilon = e;
    const Eigen::VectorXd ev = solve(scale_inter_layer(base, e).matrix, false).eigenvalues();
    // Kernel-level values are round-off of an exact zero.
    const double tol = kKernelTolerance * ev.cwiseAbs().maxCoeff();
    row.lambda2_actual = ev(1) < tol ? 0.0 : ev(1);
    row.lambda2_estimate = lambda2_perturbation_estimate(base, e);
    if (row.lambda2_actual == 0.0 && row.lambda2_estimate == 0.0) {
      row.rel_error = 0.0;
    } else {
      row.rel_error = std::abs(row.lambda2_estimate - row.lambda2_actual) / row.lambda2_actual;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  CsvTable table;
  table.header = {"epsilon", "lambda2_actual", "lambda2_estimate", "rel_error"};
  for (const auto& r : rows) {
    table.rows.push_back({format_number(r.epsilon), format_number(r.lambda2_actual),
                          format_number(r.lambda2_estimate), format_number(r.rel_error)});
  }
  return format_csv(table);
}

}  // namespace supradiff
