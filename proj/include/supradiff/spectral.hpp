#pragma once

#include "supradiff/network.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace supradiff {

struct SpectralSummary {
  Eigen::VectorXd eigenvalues;  // ascending
  double lambda2 = 0.0;
  Index kernel_dim = 0;         // eigenvalues below 1e-9 * ||L||_2
  Eigen::MatrixXd null_basis;   // orthonormal basis of ker(intra part)
};

/// Full symmetric eigendecomposition. Rejects non-symmetric operators.
SpectralSummary spectrum(const SupraLaplacian& supra);
SpectralSummary spectrum(const Eigen::MatrixXd& laplacian);

/// Number of eigenvalues of a symmetric matrix below 1e-9 * ||A||_2.
Index kernel_dimension(const Eigen::MatrixXd& symmetric_matrix);

/// U^T L_I U, with U the per-layer normalized indicator vectors.
Eigen::MatrixXd projected_inter_layer(const SupraLaplacian& supra);

/// First-order estimate of lambda2(L_L + epsilon L_I) from the degenerate
/// kernel of L_L: epsilon times the second-smallest eigenvalue of U^T L_I U.
double lambda2_perturbation_estimate(const SupraLaplacian& supra, double epsilon);

/// epsilon * u_n^T L_I u_n for each normalized layer indicator u_n.
Eigen::VectorXd per_vector_estimates(const SupraLaplacian& supra, double epsilon);

struct SweepRow {
  double epsilon = 0.0;
  double lambda2_actual = 0.0;
  double lambda2_estimate = 0.0;
  double rel_error = 0.0;  // 0 when both are 0
};

std::vector<SweepRow> connectivity_sweep(const InterconnectedNetwork& network,
                                         const DiffusionConstants& constants,
                                         const std::vector<double>& epsilon_grid);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace supradiff
