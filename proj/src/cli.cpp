#include "supradiff/cli.hpp"

#include "json_util.hpp"
#include "supradiff/calibration.hpp"
#include "supradiff/csv.hpp"
#include "supradiff/diffusion.hpp"
#include "supradiff/error.hpp"
#include "supradiff/experiment.hpp"
#include "supradiff/kalman.hpp"
#include "supradiff/network_io.hpp"
#include "supradiff/spectral.hpp"
#include "supradiff/synthetic.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace supradiff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
};

struct Inputs {
  std::string network;
  std::string states;
  std::size_t train_end = 0;
};

fs::path out_dir(const Globals& g, const fs::path& fallback = "out") {
  return g.out.empty() ? fallback : fs::path(g.out);
}

void emit(const fs::path& dir, const std::string& name, const std::string& content) {
  write_text_atomic(dir / name, content);
  std::cout << "wrote " << (dir / name).string() << "\n";
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  CsvTable t;
  t.header = header;
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (Index j = 0; j < m.cols(); ++j) row.push_back(format_number(m(i, j)));
    t.rows.push_back(std::move(row));
  }
  return format_csv(t);
}

std::vector<std::string> column_names(const char* prefix, Index n) {
  std::vector<std::string> out;
  for (Index j = 0; j < n; ++j) out.push_back(prefix + std::to_string(j + 1));
  return out;
}

const DiffusionConstants& require_constants(const NetworkFile& file) {
  if (!file.constants) throw ValidationError("the network file has no 'constants' section");
  return *file.constants;
}

SnapshotSeries load_series(const InterconnectedNetwork& net, const Inputs& in, bool need_split) {
  SnapshotSeries s;
  s.snapshots = read_states_csv(in.states, net);
  s.train_end = in.train_end == 0 && !need_split ? s.snapshots.size() : in.train_end;
  s.validate();
  return s;
}

double uniform_spacing(const SnapshotSeries& s) {
  if (s.size() < 2) throw ValidationError("need at least 2 snapshots");
  const double dt = s.snapshots[1].time - s.snapshots[0].time;
  for (std::size_t k = 2; k < s.size(); ++k) {
    if (std::abs(s.snapshots[k].time - s.snapshots[k - 1].time - dt) > 1e-9 * std::max(1.0, dt)) {
      throw ValidationError("operator learning needs evenly spaced snapshots");
    }
  }
  return dt;
}

LearnedOperator learn_from(const NetworkFile& file, const SnapshotSeries& series,
                           const LearnOptions& opts) {
  SupraLaplacian init = assemble_supra_laplacian(file.network, require_constants(file));
  init.matrix *= uniform_spacing(series);
  return learn_supra_operator(series, init, opts);
}

void cmd_build(const Globals& g, const Inputs& in) {
  const NetworkFile file = load_network(in.network);
  const SupraLaplacian supra = assemble_supra_laplacian(file.network, require_constants(file));
  const fs::path dir = out_dir(g);
  auto header = file.network.node_labels();
  emit(dir, "laplacian.csv", matrix_csv(supra.matrix, header));
  std::cout << "nodes " << supra.size() << ", layers " << file.network.layer_count()
            << ", row-sum defect " << row_sum_defect(supra.matrix) << "\n";
}

struct SimulateArgs {
  double horizon = 1.0;
  double dt = 0.0;
  double noise_ratio = 0.0;
  int ensemble = 1;
  int records = 10;
};

void cmd_simulate(const Globals& g, const Inputs& in, const SimulateArgs& a) {
  const NetworkFile file = load_network(in.network);
  const SupraLaplacian supra = assemble_supra_laplacian(file.network, require_constants(file));
  const auto states = read_states_csv(in.states, file.network);
  const StateMatrix& x0 = states.front();
  if (a.records < 1) throw ValidationError("--records must be >= 1");
  const SimulationConfig sc{a.dt > 0.0 ? a.dt : default_time_step(supra), a.horizon, a.ensemble};
  const NoiseModel noise = noise_with_ratio(x0.values, a.noise_ratio, g.seed);
  const auto paths = simulate_ensemble(x0, supra, noise, sc);

  const auto& steps = paths.front().states;
  std::vector<std::size_t> picks;
  const std::size_t last = steps.size() - 1;
  for (int r = 0; r <= a.records; ++r) {
    const std::size_t idx = last * static_cast<std::size_t>(r) / static_cast<std::size_t>(a.records);
    if (picks.empty() || picks.back() != idx) picks.push_back(idx);
  }
  CsvTable sim;
  sim.header = {"path_id", "step", "t", "node_id"};
  for (const auto& c : column_names("x_", x0.topics())) sim.header.push_back(c);
  const auto labels = file.network.node_labels();
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (auto idx : picks) {
      const StateMatrix& s = paths[p].states[idx];
      for (Index i = 0; i < s.nodes(); ++i) {
        std::vector<std::string> row{std::to_string(p), std::to_string(idx), format_number(s.time),
                                     labels[static_cast<std::size_t>(i)]};
        for (Index j = 0; j < s.topics(); ++j) row.push_back(format_number(s.values(i, j)));
        sim.rows.push_back(std::move(row));
      }
    }
  }
  const fs::path dir = out_dir(g);
  emit(dir, "simulation.csv", format_csv(sim));
  if (paths.front().stiff) std::cerr << "warning: dt * ||L||_inf >= 1, the integrator may be unstable\n";

  if (a.ensemble >= 2) {
    const auto stats = ensemble_statistics(paths);
    CsvTable t;
    t.header = {"t", "mean_norm", "spread"};
    for (auto idx : picks) {
      t.rows.push_back({format_number(steps[idx].time), format_number(stats[idx].mean.norm()),
                        format_number(std::sqrt(stats[idx].variance.sum()))});
    }
    emit(dir, "ensemble.csv", format_csv(t));
  }
}

void cmd_predict(const Globals& g, const Inputs& in, double dt) {
  const NetworkFile file = load_network(in.network);
  const SupraLaplacian supra = assemble_supra_laplacian(file.network, require_constants(file));
  const auto states = read_states_csv(in.states, file.network);
  const StateMatrix pred = predict_mean(states.back(), supra, dt);
  emit(out_dir(g), "prediction.csv", format_states_csv(file.network, {pred}));
}

void cmd_fit(const Globals& g, const Inputs& in, const FitOptions& opts) {
  const NetworkFile file = load_network(in.network);
  const SnapshotSeries series = load_series(file.network, in, false);
  const FitResult fit = fit_diffusion_constants(series, file.network, opts);
  const fs::path dir = out_dir(g);
  emit(dir, "constants.json", dump_constants(fit.constants) + "\n");

  CsvTable sigma;
  sigma.header = {"node_id"};
  for (const auto& c : column_names("x_", series.topics())) sigma.header.push_back(c);
  const auto labels = file.network.node_labels();
  for (Index i = 0; i < fit.noise.sigma.rows(); ++i) {
    std::vector<std::string> row{labels[static_cast<std::size_t>(i)]};
    for (Index j = 0; j < fit.noise.sigma.cols(); ++j) row.push_back(format_number(fit.noise.sigma(i, j)));
    sigma.rows.push_back(std::move(row));
  }
  emit(dir, "sigma.csv", format_csv(sigma));

  CsvTable obj;
  obj.header = {"sweep", "objective"};
  for (std::size_t k = 0; k < fit.objective_trace.size(); ++k) {
    obj.rows.push_back({std::to_string(k), format_number(fit.objective_trace[k])});
  }
  emit(dir, "objective.csv", format_csv(obj));

  const Eigen::MatrixXd& sg = fit.noise.sigma;
  json report{{"constants", detail::constants_to_json(fit.constants)},
              {"sigma_summary",
               {{"min", sg.minCoeff()}, {"max", sg.maxCoeff()}, {"mean", sg.mean()},
                {"rms", std::sqrt(sg.squaredNorm() / static_cast<double>(sg.size()))}}},
              {"objective_trace", fit.objective_trace},
              {"iterations", fit.sweeps},
              {"converged", fit.converged},
              {"identifiable", fit.identifiable}};
  emit(dir, "fit_report.json", report.dump(2) + "\n");
  if (!fit.identifiable) std::cerr << "warning: constants are not identifiable from these snapshots\n";
}

void cmd_learn(const Globals& g, const Inputs& in, const LearnOptions& opts) {
  const NetworkFile file = load_network(in.network);
  const SnapshotSeries series = load_series(file.network, in, false);
  const LearnedOperator op = learn_from(file, series, opts);
  const fs::path dir = out_dir(g);
  emit(dir, "operator.csv", matrix_csv(op.lambda_hat, column_names("c_", op.lambda_hat.cols())));
  CsvTable log;
  log.header = {"iteration", "rms_error"};
  for (std::size_t i = 0; i < op.iteration_log.size(); ++i) {
    log.rows.push_back({std::to_string(i), format_number(op.iteration_log[i])});
  }
  emit(dir, "learning.csv", format_csv(log));
}

void cmd_kalman(const Globals& g, const Inputs& in, const LearnOptions& opts, double fraction,
                const std::string& mask_path) {
  const NetworkFile file = load_network(in.network);
  const SnapshotSeries series = load_series(file.network, in, true);
  if (series.train_end >= series.size()) throw ValidationError("no snapshots after --train-end");
  const LearnedOperator op = learn_from(file, series, opts);

  std::vector<Index> observed;
  if (!mask_path.empty()) {
    const CsvTable mask = read_csv(mask_path);
    const std::size_t col = mask.column("node_id");
    for (const auto& row : mask.rows) {
      const auto idx = file.network.find_label(row[col]);
      if (!idx) throw ValidationError("mask: unknown node '" + row[col] + "'");
      observed.push_back(*idx);
    }
  } else {
    observed = sample_observed_nodes(series.nodes(), fraction, derive_seed(g.seed, 31));
  }
  const ObservationModel model =
      make_observation_model(series.nodes(), series.topics(), observed, residual_variance(op));
  const std::vector<StateMatrix> truth(
      series.snapshots.begin() + static_cast<long>(series.train_end) - 1, series.snapshots.end());
  const FilterTrace trace = run_filter(truth, op, model, default_prior(series));

  const fs::path dir = out_dir(g);
  emit(dir, "kalman_trace.csv", format_filter_trace_csv(trace));
  CsvTable mask;
  mask.header = {"node_id"};
  const auto labels = file.network.node_labels();
  for (Index i : model.observed) mask.rows.push_back({labels[static_cast<std::size_t>(i)]});
  emit(dir, "mask.csv", format_csv(mask));
}

void cmd_spectral(const Globals& g, const Inputs& in, const std::vector<double>& grid) {
  const NetworkFile file = load_network(in.network);
  const DiffusionConstants& constants = require_constants(file);
  const SpectralSummary s = spectrum(assemble_supra_laplacian(file.network, constants));
  const fs::path dir = out_dir(g);
  CsvTable t;
  t.header = {"index", "eigenvalue"};
  for (Index i = 0; i < s.eigenvalues.size(); ++i) {
    t.rows.push_back({std::to_string(i), format_number(s.eigenvalues(i))});
  }
  emit(dir, "spectrum.csv", format_csv(t));
  std::cout << "lambda2 " << format_number(s.lambda2) << ", kernel dimension " << s.kernel_dim << "\n";
  if (file.network.layer_count() >= 2) {
    emit(dir, "sweep.csv", format_sweep_csv(connectivity_sweep(file.network, constants, grid)));
  }
}

void cmd_experiment(const Globals& g) {
  if (g.config.empty()) throw ValidationError("experiment needs --config");
  const ExperimentConfig cfg =
      parse_experiment_config(read_text(g.config), fs::path(g.config).parent_path());
  ExperimentConfig run = cfg;
  if (!g.out.empty()) run.output_dir = g.out;
  const ExperimentResult result = run_experiment(run);
  write_outputs(result, run.output_dir);
  for (const auto& [name, content] : result.files) {
    std::cout << "wrote " << (run.output_dir / name).string() << "\n";
  }
  for (const auto& c : result.curves) {
    std::cout << c.name << " mean error " << format_number(c.mean) << "\n";
  }
}

void cmd_generate(const Globals& g) {
  if (g.config.empty()) throw ValidationError("generate needs --config");
  const std::string text = read_text(g.config);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  SyntheticSpec spec;
  if (j.contains("data")) {
    const ExperimentConfig cfg = parse_experiment_config(text, fs::path(g.config).parent_path());
    if (!cfg.data.synthetic) throw ValidationError("config has no synthetic data section");
    spec = *cfg.data.synthetic;
  } else {
    spec = parse_synthetic_spec(text);
  }
  const SyntheticData data = generate_synthetic(spec, g.seed);
  const fs::path dir = out_dir(g);
  emit(dir, "network.json", dump_network(data.network, &data.constants) + "\n");
  emit(dir, "states.csv", format_states_csv(data.network, data.series.snapshots));
  CsvTable assignment;
  assignment.header = {"agent_id", "document_id"};
  for (const auto& [agent, docs] : data.assignment.documents_of) {
    for (const auto& d : docs) assignment.rows.push_back({agent, d});
  }
  emit(dir, "assignment.csv", format_csv(assignment));
  const double x0 = data.series.snapshots.front().values.norm();
  json truth{{"constants", detail::constants_to_json(data.constants)},
             {"noise_ratio", x0 > 0.0 ? data.noise.sigma.norm() / x0 : 0.0},
             {"hidden_edges", spec.hidden_edges},
             {"train_end", data.series.train_end}};
  emit(dir, "truth.json", truth.dump(2) + "\n");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Topic diffusion on interconnected agent/information networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--config", g.config, "JSON config (experiment, generate)");

  Inputs in;
  auto add_inputs = [&in](CLI::App* sub, bool states, bool split) {
    sub->add_option("--network", in.network, "Network JSON")->required()->check(CLI::ExistingFile);
    if (states) sub->add_option("--states", in.states, "State CSV")->required()->check(CLI::ExistingFile);
    if (split) sub->add_option("--train-end", in.train_end, "Snapshots used for training");
  };

  auto* build = app.add_subcommand("build", "Assemble the supra-Laplacian");
  add_inputs(build, false, false);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate the open system from the first state");
  add_inputs(simulate, true, false);
  simulate->add_option("--horizon", sim.horizon, "Simulated time");
  simulate->add_option("--dt", sim.dt, "Integrator step (default: stability-based)");
  simulate->add_option("--noise-ratio", sim.noise_ratio, "||Sigma||_F / ||X0||_F");
  simulate->add_option("--ensemble", sim.ensemble, "Number of paths");
  simulate->add_option("--records", sim.records, "Recorded intervals");

  double predict_dt = 1.0;
  auto* predict = app.add_subcommand("predict", "Predict from the last state");
  add_inputs(predict, true, false);
  predict->add_option("--dt", predict_dt, "Prediction horizon");

  FitOptions fit_opts;
  bool directed_fit = false;
  auto* fit = app.add_subcommand("fit", "Fit diffusion constants and sigma");
  add_inputs(fit, true, true);
  fit->add_option("--max-constant", fit_opts.max_constant, "Upper bound of every constant");
  fit->add_option("--max-sweeps", fit_opts.max_sweeps, "Coordinate-descent sweeps");
  fit->add_flag("--directed", directed_fit, "Fit each coupling direction separately");

  LearnOptions learn_opts;
  auto add_learn = [&learn_opts](CLI::App* sub) {
    sub->add_option("--max-iters", learn_opts.max_iters, "Learning iterations");
    sub->add_option("--holdout-pairs", learn_opts.holdout_pairs, "Training pairs held out for early stopping");
    sub->add_option("--gain", learn_opts.gain, "Update gain");
    sub->add_option("--threshold", learn_opts.threshold, "Stop threshold");
  };
  auto* learn = app.add_subcommand("learn", "Learn the full supra operator");
  add_inputs(learn, true, true);
  add_learn(learn);

  double fraction = 0.25;
  std::string mask_path;
  auto* kalman = app.add_subcommand("kalman", "Filter the test range under partial observation");
  add_inputs(kalman, true, true);
  add_learn(kalman);
  kalman->add_option("--fraction", fraction, "Observed node fraction");
  kalman->add_option("--mask", mask_path, "CSV of observed node ids")->check(CLI::ExistingFile);

  std::vector<double> grid{0.0, 1e-4, 1e-3, 1e-2};
  auto* spectral = app.add_subcommand("spectral", "Spectrum and weak-coupling sweep");
  add_inputs(spectral, false, false);
  spectral->add_option("--epsilon", grid, "Inter-layer scaling grid");

  auto* experiment = app.add_subcommand("experiment", "Run an experiment config");
  auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) cmd_build(g, in);
    else if (simulate->parsed()) cmd_simulate(g, in, sim);
    else if (predict->parsed()) cmd_predict(g, in, predict_dt);
    else if (fit->parsed()) {
      fit_opts.symmetric = !directed_fit;
      cmd_fit(g, in, fit_opts);
    } else if (learn->parsed()) cmd_learn(g, in, learn_opts);
    else if (kalman->parsed()) cmd_kalman(g, in, learn_opts, fraction, mask_path);
    else if (spectral->parsed()) cmd_spectral(g, in, grid);
    else if (experiment->parsed()) cmd_experiment(g);
    else if (generate->parsed()) cmd_generate(g);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace supradiff
