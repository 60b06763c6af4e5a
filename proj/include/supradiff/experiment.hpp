#pragma once

#include "supradiff/calibration.hpp"
#include "supradiff/kalman.hpp"
#include "supradiff/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace supradiff {

enum class ExperimentKind { prediction, external_influence, connectivity };

struct DataSource {
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path network_path;  // network JSON (constants optional)
  std::filesystem::path states_path;   // long-format state CSV
  std::size_t train_end = 0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::prediction;
  std::string name = "experiment";
  DataSource data;
  bool single_layer = false;
  bool multilayer = false;
  bool learned_operator = false;
  std::vector<double> kalman_fractions;
  std::optional<int> eval_layer;  // default: first agent layer
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  FitOptions fit;
  LearnOptions learn;
  std::vector<double> epsilon_grid;  // prediction: inter-layer scaling grid; connectivity: sweep grid
  std::vector<Index> sizes;          // external_influence: node count of layer 1 per run

  void validate() const;
};

/// Schema: docs/config.schema.json. Relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
SyntheticSpec parse_synthetic_spec(std::string_view json_text);

struct MethodCurve {
  std::string name;
  std::vector<double> errors;  // one per test step
  double mean = 0.0;
};

struct ExperimentResult {
  std::vector<double> times;        // target time of each test step
  std::vector<MethodCurve> curves;  // "upper_bound" first
  std::vector<std::pair<double, double>> epsilon_errors;  // (epsilon, mean error)
  std::map<std::string, std::string> files;              // output name -> content

  const MethodCurve& curve(std::string_view name) const;
  bool has_curve(std::string_view name) const;
};

/// Pure function of the config; nothing is written.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes every entry of `result.files` atomically under `dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

struct InfluenceRow {
  Index nodes = 0;
  double fitted_ratio = 0.0;   // ||Sigma_hat||_F / ||X0||_F
  double planted_ratio = 0.0;  // ||Sigma||_F / ||X0||_F
};

std::vector<InfluenceRow> external_influence_sweep(const std::vector<SyntheticSpec>& specs,
                                                   std::uint64_t seed,
                                                   const FitOptions& fit = {});

std::string format_influence_csv(const std::vector<InfluenceRow>& rows);

}  // namespace supradiff
