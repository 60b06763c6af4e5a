#include "supradiff/metrics.hpp"

#include "supradiff/error.hpp"

#include <numeric>

namespace supradiff {

double error_measure(const Eigen::MatrixXd& x_hat, const Eigen::MatrixXd& x_true) {
  if (x_hat.rows() != x_true.rows() || x_hat.cols() != x_true.cols()) {
    throw ValidationError("error_measure: shape mismatch");
  }
  const double denom = x_true.norm();
  if (denom == 0.0) throw ValidationError("error_measure: ground truth has zero norm");
  return (x_hat - x_true).norm() / denom;
}

std::vector<double> upper_bound_series(const std::vector<StateMatrix>& series) {
  if (series.size() < 2) throw ValidationError("upper_bound_series: need at least 2 snapshots");
  std::vector<double> out;
  out.reserve(series.size() - 1);
  for (std::size_t i = 1; i < series.size(); ++i) {
    out.push_back(error_measure(series[i - 1].values, series[i].values));
  }
  return out;
}

double time_average(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("time_average: empty series");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double improvement_percent(double baseline, double value) {
  if (baseline == 0.0) throw ValidationError("improvement_percent: zero baseline");
  return 100.0 * (baseline - value) / baseline;
}

}  // namespace supradiff
