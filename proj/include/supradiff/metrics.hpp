#pragma once

#include "supradiff/state.hpp"

#include <Eigen/Dense>

#include <vector>

namespace supradiff {

/// ||X_hat - X||_F / ||X||_F
double error_measure(const Eigen::MatrixXd& x_hat, const Eigen::MatrixXd& x_true);

/// Error of the no-change predictor, ||X(t) - X(t-1)||_F / ||X(t)||_F, per consecutive pair.
std::vector<double> upper_bound_series(const std::vector<StateMatrix>& series);

double time_average(const std::vector<double>& values);

/// 100 * (baseline - value) / baseline
double improvement_percent(double baseline, double value);

}  // namespace supradiff
