#include "supradiff/experiment.hpp"

#include "json_util.hpp"
#include "supradiff/csv.hpp"
#include "supradiff/error.hpp"
#include "supradiff/metrics.hpp"
#include "supradiff/network_io.hpp"
#include "supradiff/spectral.hpp"
#include "supradiff/svg.hpp"

#include <cmath>
#include <set>

namespace supradiff {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

std::vector<double> number_list(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  const json& arr = obj.at(key);
  if (!arr.is_array()) throw ValidationError(where + "." + key + ": expected an array");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw ValidationError(where + "." + key + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

GraphModel parse_model(const std::string& s) {
  if (s == "erdos_renyi") return GraphModel::erdos_renyi;
  if (s == "knn") return GraphModel::knn;
  throw ValidationError("unknown graph model '" + s + "'");
}

SyntheticSpec synthetic_from_json(const json& j) {
  const std::string w = "synthetic";
  check_keys(j, {"layers", "topics", "inter_constant", "noise_ratio", "noise_nodes", "noise_sigma",
                 "snapshots", "spacing", "train_end", "sim_dt", "hidden_edges", "hidden_weight",
                 "agent_init", "require_connected", "max_retries"},
             w);
  SyntheticSpec s;
  if (!j.contains("layers") || !j.at("layers").is_array()) {
    throw ValidationError("synthetic.layers: required array");
  }
  for (const auto& l : j.at("layers")) {
    const std::string lw = "synthetic.layers[]";
    check_keys(l, {"kind", "nodes", "model", "p", "k", "intra"}, lw);
    LayerSpec ls;
    ls.kind = parse_layer_kind(get<std::string>(l, "kind", "agent", lw));
    ls.nodes = get<Index>(l, "nodes", ls.nodes, lw);
    ls.model = parse_model(get<std::string>(l, "model", "erdos_renyi", lw));
    ls.probability = get<double>(l, "p", ls.probability, lw);
    ls.k = get<int>(l, "k", ls.k, lw);
    ls.intra_constant = get<double>(l, "intra", ls.intra_constant, lw);
    s.layers.push_back(ls);
  }
  s.topics = get<Index>(j, "topics", s.topics, w);
  s.inter_constant = get<double>(j, "inter_constant", s.inter_constant, w);
  s.noise_ratio = get<double>(j, "noise_ratio", s.noise_ratio, w);
  s.noise_nodes = get<Index>(j, "noise_nodes", s.noise_nodes, w);
  s.noise_sigma = get<double>(j, "noise_sigma", s.noise_sigma, w);
  s.snapshots = get<std::size_t>(j, "snapshots", s.snapshots, w);
  s.spacing = get<double>(j, "spacing", s.spacing, w);
  s.train_end = get<std::size_t>(j, "train_end", s.train_end, w);
  s.sim_dt = get<double>(j, "sim_dt", s.sim_dt, w);
  s.hidden_edges = get<int>(j, "hidden_edges", s.hidden_edges, w);
  s.hidden_weight = get<double>(j, "hidden_weight", s.hidden_weight, w);
  const auto init = get<std::string>(j, "agent_init", "documents", w);
  if (init != "documents" && init != "random") {
    throw ValidationError("synthetic.agent_init: expected 'documents' or 'random'");
  }
  s.agent_init_from_documents = init == "documents";
  s.require_connected = get<bool>(j, "require_connected", s.require_connected, w);
  s.max_retries = get<int>(j, "max_retries", s.max_retries, w);
  s.validate();
  return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

struct LoadedData {
  std::optional<InterconnectedNetwork> network;
  std::optional<DiffusionConstants> constants;
  SnapshotSeries series;
};

LoadedData load_data(const DataSource& source, std::uint64_t seed) {
  LoadedData d;
  if (source.synthetic) {
    SyntheticData syn = generate_synthetic(*source.synthetic, seed);
    d.network.emplace(std::move(syn.network));
    d.constants = std::move(syn.constants);
    d.series = std::move(syn.series);
  } else {
    NetworkFile file = load_network(source.network_path);
    d.network.emplace(std::move(file.network));
    d.constants = std::move(file.constants);
    d.series.snapshots = read_states_csv(source.states_path, *d.network);
    d.series.train_end = source.train_end;
  }
  d.series.validate();
  return d;
}

int default_eval_layer(const InterconnectedNetwork& net) {
  for (const auto& l : net.layers()) {
    if (l.kind == LayerKind::agent) return l.id;
  }
  return net.layers().front().id;
}

std::string fraction_name(double f) { return "kalman_" + format_number(f); }

void finish_curve(MethodCurve& c) { c.mean = time_average(c.errors); }

std::string curves_csv(const ExperimentResult& r) {
  CsvTable t;
  t.header = {"step", "t"};
  for (const auto& c : r.curves) t.header.push_back(c.name);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    std::vector<std::string> row{std::to_string(k + 1), format_number(r.times[k])};
    for (const auto& c : r.curves) row.push_back(format_number(c.errors[k]));
    t.rows.push_back(std::move(row));
  }
  return format_csv(t);
}

std::string summary_csv(const ExperimentResult& r) {
  CsvTable t;
  t.header = {"method", "mean_error", "improvement_vs_upper_bound_pct",
              "improvement_vs_single_layer_pct"};
  const double ub = r.curve("upper_bound").mean;
  const double single = r.has_curve("single_layer") ? r.curve("single_layer").mean : std::nan("");
  for (const auto& c : r.curves) {
    const double vs_single =
        std::isnan(single) || single == 0.0 ? std::nan("") : improvement_percent(single, c.mean);
    t.rows.push_back({c.name, format_number(c.mean),
                      ub == 0.0 ? "nan" : format_number(improvement_percent(ub, c.mean)),
                      format_number(vs_single)});
  }
  return format_csv(t);
}

ExperimentResult run_prediction(const ExperimentConfig& cfg) {
  LoadedData data = load_data(cfg.data, cfg.seed);
  const InterconnectedNetwork& net = *data.network;
  const SnapshotSeries& series = data.series;
  if (series.train_end >= series.size()) {
    throw ValidationError("experiment: no test snapshots after train_end");
  }
  const int eval_id = cfg.eval_layer.value_or(default_eval_layer(net));
  if (!net.has_layer(eval_id)) throw ValidationError("experiment: unknown eval_layer");
  const Index off = net.offset(eval_id);
  const Index rows = net.layer(eval_id).size();
  auto eval_rows = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd { return m.middleRows(off, rows); };

  ExperimentResult r;
  MethodCurve upper{"upper_bound", {}, 0.0};
  for (std::size_t k = series.train_end; k < series.size(); ++k) {
    r.times.push_back(series.snapshots[k].time);
    upper.errors.push_back(
        error_measure(eval_rows(series.snapshots[k - 1].values), eval_rows(series.snapshots[k].values)));
  }
  finish_curve(upper);
  r.curves.push_back(std::move(upper));

  if (cfg.single_layer) {
    const InterconnectedNetwork single = extract_layer(net, eval_id);
    const SnapshotSeries sub = restrict_rows(series, off, rows);
    const FitResult fit = fit_diffusion_constants(sub, single, cfg.fit);
    const SupraLaplacian supra = assemble_supra_laplacian(single, fit.constants);
    MethodCurve c{"single_layer", {}, 0.0};
    for (std::size_t k = series.train_end; k < series.size(); ++k) {
      const auto& prev = sub.snapshots[k - 1];
      const StateMatrix pred = predict_mean(prev, supra, sub.snapshots[k].time - prev.time);
      c.errors.push_back(error_measure(pred.values, sub.snapshots[k].values));
    }
    finish_curve(c);
    r.curves.push_back(std::move(c));
  }

  const bool need_operator = cfg.learned_operator || !cfg.kalman_fractions.empty();
  std::optional<SupraLaplacian> multi;
  if (cfg.multilayer || need_operator || !cfg.epsilon_grid.empty()) {
    FitOptions opts = cfg.fit;
    if (!opts.initial && data.constants) opts.initial = data.constants;
    const FitResult fit = fit_diffusion_constants(series, net, opts);
    multi = assemble_supra_laplacian(net, fit.constants);
    r.files["constants.json"] = dump_constants(fit.constants) + "\n";
  }

  if (cfg.multilayer) {
    MethodCurve c{"multilayer", {}, 0.0};
    for (std::size_t k = series.train_end; k < series.size(); ++k) {
      const auto& prev = series.snapshots[k - 1];
      const StateMatrix pred = predict_mean(prev, *multi, series.snapshots[k].time - prev.time);
      c.errors.push_back(error_measure(eval_rows(pred.values), eval_rows(series.snapshots[k].values)));
    }
    finish_curve(c);
    r.curves.push_back(std::move(c));
  }

  if (!cfg.epsilon_grid.empty()) {
    CsvTable t;
    t.header = {"epsilon", "mean_error"};
    for (double eps : cfg.epsilon_grid) {
      const SupraLaplacian scaled = scale_inter_layer(*multi, eps);
      std::vector<double> errs;
      for (std::size_t k = series.train_end; k < series.size(); ++k) {
        const auto& prev = series.snapshots[k - 1];
        const StateMatrix pred = predict_mean(prev, scaled, series.snapshots[k].time - prev.time);
        errs.push_back(error_measure(eval_rows(pred.values), eval_rows(series.snapshots[k].values)));
      }
      r.epsilon_errors.emplace_back(eps, time_average(errs));
      t.rows.push_back({format_number(eps), format_number(r.epsilon_errors.back().second)});
    }
    const std::string text = format_csv(t);
    r.files["epsilon.csv"] = text;
    r.files["epsilon.svg"] = render_svg(chart_from_csv(
        parse_csv(text), "epsilon", {"mean_error"}, cfg.name + ": inter-layer scaling", "mean error"));
  }

  if (need_operator) {
    // The learned map advances one snapshot interval, so the operator is scaled by it.
    const double dt = series.snapshots[1].time - series.snapshots[0].time;
    for (std::size_t k = 2; k < series.size(); ++k) {
      const double d = series.snapshots[k].time - series.snapshots[k - 1].time;
      if (std::abs(d - dt) > 1e-9 * std::max(1.0, dt)) {
        throw ValidationError("experiment: operator learning needs evenly spaced snapshots");
      }
    }
    SupraLaplacian init = *multi;
    init.matrix *= dt;
    const LearnedOperator op = learn_supra_operator(series, init, cfg.learn);

    CsvTable log;
    log.header = {"iteration", "rms_error"};
    for (std::size_t i = 0; i < op.iteration_log.size(); ++i) {
      log.rows.push_back({std::to_string(i), format_number(op.iteration_log[i])});
    }
    r.files["learning.csv"] = format_csv(log);

    if (cfg.learned_operator) {
      MethodCurve c{"learned_operator", {}, 0.0};
      for (std::size_t k = series.train_end; k < series.size(); ++k) {
        const StateMatrix pred = one_step_predict_learned(op, series.snapshots[k - 1]);
        c.errors.push_back(error_measure(eval_rows(pred.values), eval_rows(series.snapshots[k].values)));
      }
      finish_curve(c);
      r.curves.push_back(std::move(c));
    }

    if (!cfg.kalman_fractions.empty()) {
      const Eigen::VectorXd q = residual_variance(op);
      const KalmanState prior = default_prior(series);
      const std::vector<StateMatrix> truth(series.snapshots.begin() + static_cast<long>(series.train_end) - 1,
                                           series.snapshots.end());
      for (double f : cfg.kalman_fractions) {
        // One seed for every fraction: masks are nested.
        auto observed = sample_observed_nodes(series.nodes(), f, derive_seed(cfg.seed, 31));
        const ObservationModel model =
            make_observation_model(series.nodes(), series.topics(), std::move(observed), q);
        const FilterTrace trace = run_filter(truth, op, model, prior);
        MethodCurve c{fraction_name(f), {}, 0.0};
        for (std::size_t k = 0; k < trace.steps.size(); ++k) {
          c.errors.push_back(error_measure(eval_rows(trace.steps[k].predicted.values),
                                           eval_rows(truth[k + 1].values)));
        }
        finish_curve(c);
        r.files[c.name + "_trace.csv"] = format_filter_trace_csv(trace);
        r.curves.push_back(std::move(c));
      }
    }
  }

  const std::string errors = curves_csv(r);
  r.files["errors.csv"] = errors;
  r.files["summary.csv"] = summary_csv(r);
  std::vector<std::string> names;
  for (const auto& c : r.curves) names.push_back(c.name);
  r.files["errors.svg"] =
      render_svg(chart_from_csv(parse_csv(errors), "t", names, cfg.name, "relative error"));
  return r;
}

ExperimentResult run_influence(const ExperimentConfig& cfg) {
  const SyntheticSpec& base = *cfg.data.synthetic;
  std::vector<SyntheticSpec> specs;
  for (Index n : cfg.sizes) {
    SyntheticSpec s = base;
    const double scale = static_cast<double>(n) / static_cast<double>(base.layers.front().nodes);
    for (auto& l : s.layers) {
      l.nodes = std::max<Index>(2, static_cast<Index>(std::llround(static_cast<double>(l.nodes) * scale)));
    }
    specs.push_back(std::move(s));
  }
  ExperimentResult r;
  const auto rows = external_influence_sweep(specs, cfg.seed, cfg.fit);
  const std::string text = format_influence_csv(rows);
  r.files["influence.csv"] = text;
  r.files["influence.svg"] = render_svg(chart_from_csv(parse_csv(text), "nodes",
                                                       {"fitted_ratio", "planted_ratio"},
                                                       cfg.name, "||Sigma||_F / ||X0||_F"));
  return r;
}

ExperimentResult run_connectivity(const ExperimentConfig& cfg) {
  LoadedData data;
  if (cfg.data.synthetic) {
    SyntheticData syn = generate_synthetic(*cfg.data.synthetic, cfg.seed);
    data.network.emplace(std::move(syn.network));
    data.constants = std::move(syn.constants);
  } else {
    NetworkFile file = load_network(cfg.data.network_path);
    data.network.emplace(std::move(file.network));
    data.constants = std::move(file.constants);
  }
  if (!data.constants) throw ValidationError("connectivity: the network file carries no constants");
  ExperimentResult r;
  const std::string text =
      format_sweep_csv(connectivity_sweep(*data.network, *data.constants, cfg.epsilon_grid));
  r.files["sweep.csv"] = text;
  r.files["sweep.svg"] = render_svg(chart_from_csv(parse_csv(text), "epsilon",
                                                   {"lambda2_actual", "lambda2_estimate"},
                                                   cfg.name, "lambda2"));
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!data.synthetic && (data.network_path.empty() || (kind == ExperimentKind::prediction &&
                                                        data.states_path.empty()))) {
    throw ValidationError("config: data needs 'synthetic' or 'network' (+ 'states')");
  }
  for (double f : kalman_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("config: kalman fractions must lie in (0, 1]");
  }
  for (double e : epsilon_grid) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw ValidationError("config: epsilon values must be >= 0");
  }
  switch (kind) {
    case ExperimentKind::prediction:
      if (!single_layer && !multilayer && !learned_operator && kalman_fractions.empty()) {
        throw ValidationError("config: at least one method is required");
      }
      break;
    case ExperimentKind::external_influence:
      if (!data.synthetic) throw ValidationError("config: external_influence needs synthetic data");
      if (sizes.size() < 2) throw ValidationError("config: external_influence needs >= 2 sizes");
      for (Index n : sizes) {
        if (n < 2) throw ValidationError("config: sizes must be >= 2");
      }
      break;
    case ExperimentKind::connectivity:
      if (epsilon_grid.empty()) throw ValidationError("config: connectivity needs epsilon_grid");
      break;
  }
}

ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  const std::string w = "config";
  check_keys(j, {"kind", "name", "seed", "output_dir", "data", "methods", "kalman_fractions",
                 "eval_layer", "fit", "learn", "epsilon_grid", "sizes"},
             w);
  ExperimentConfig c;
  const auto kind = get<std::string>(j, "kind", "prediction", w);
  if (kind == "prediction") c.kind = ExperimentKind::prediction;
  else if (kind == "external_influence") c.kind = ExperimentKind::external_influence;
  else if (kind == "connectivity") c.kind = ExperimentKind::connectivity;
  else throw ValidationError("config.kind: unknown value '" + kind + "'");
  c.name = get<std::string>(j, "name", c.name, w);
  c.seed = get<std::uint64_t>(j, "seed", c.seed, w);
  c.output_dir = resolve(base_dir, get<std::string>(j, "output_dir", "out", w));

  if (!j.contains("data")) throw ValidationError("config.data: required");
  const json& d = j.at("data");
  check_keys(d, {"synthetic", "network", "states", "train_end"}, "config.data");
  if (d.contains("synthetic")) {
    try {
      c.data.synthetic = synthetic_from_json(d.at("synthetic"));
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config.data.synthetic: ") + e.what());
    }
  }
  if (d.contains("network")) c.data.network_path = resolve(base_dir, get<std::string>(d, "network", "", w));
  if (d.contains("states")) c.data.states_path = resolve(base_dir, get<std::string>(d, "states", "", w));
  c.data.train_end = get<std::size_t>(d, "train_end", 0, "config.data");

  bool kalman = false;
  if (j.contains("methods")) {
    if (!j.at("methods").is_array()) throw ValidationError("config.methods: expected an array");
    for (const auto& m : j.at("methods")) {
      if (!m.is_string()) throw ValidationError("config.methods: expected strings");
      const auto s = m.get<std::string>();
      if (s == "single_layer") c.single_layer = true;
      else if (s == "multilayer") c.multilayer = true;
      else if (s == "learned_operator") c.learned_operator = true;
      else if (s == "kalman") kalman = true;
      else throw ValidationError("config.methods: unknown method '" + s + "'");
    }
  }
  c.kalman_fractions = number_list(j, "kalman_fractions", w);
  if (kalman && c.kalman_fractions.empty()) c.kalman_fractions = {0.10, 0.15, 0.20, 0.25};
  if (!kalman && !c.kalman_fractions.empty()) {
    throw ValidationError("config: kalman_fractions given but 'kalman' is not a method");
  }
  if (j.contains("eval_layer")) c.eval_layer = get<int>(j, "eval_layer", 0, w);

  if (j.contains("fit")) {
    const json& f = j.at("fit");
    const std::string fw = "config.fit";
    check_keys(f, {"max_constant", "min_sweeps", "max_sweeps", "relative_tolerance", "symmetric"}, fw);
    c.fit.max_constant = get<double>(f, "max_constant", c.fit.max_constant, fw);
    c.fit.min_sweeps = get<int>(f, "min_sweeps", c.fit.min_sweeps, fw);
    c.fit.max_sweeps = get<int>(f, "max_sweeps", c.fit.max_sweeps, fw);
    c.fit.relative_tolerance = get<double>(f, "relative_tolerance", c.fit.relative_tolerance, fw);
    c.fit.symmetric = get<bool>(f, "symmetric", c.fit.symmetric, fw);
  }
  if (j.contains("learn")) {
    const json& l = j.at("learn");
    const std::string lw = "config.learn";
    check_keys(l, {"gain", "threshold", "max_iters", "holdout_pairs", "patience"}, lw);
    if (l.contains("gain")) c.learn.gain = get<double>(l, "gain", 0.0, lw);
    if (l.contains("threshold")) c.learn.threshold = get<double>(l, "threshold", 0.0, lw);
    c.learn.max_iters = get<int>(l, "max_iters", c.learn.max_iters, lw);
    const int holdout = get<int>(l, "holdout_pairs", 0, lw);
    if (holdout < 0) throw ValidationError(lw + ".holdout_pairs: must be >= 0");
    c.learn.holdout_pairs = static_cast<std::size_t>(holdout);
    c.learn.patience = get<int>(l, "patience", c.learn.patience, lw);
  }
  c.epsilon_grid = number_list(j, "epsilon_grid", w);
  for (double n : number_list(j, "sizes", w)) c.sizes.push_back(static_cast<Index>(n));
  c.validate();
  return c;
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
  try {
    return synthetic_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synthetic spec: ") + e.what());
  }
}

const MethodCurve& ExperimentResult::curve(std::string_view name) const {
  for (const auto& c : curves) {
    if (c.name == name) return c;
  }
  throw ValidationError("no curve named '" + std::string(name) + "'");
}

bool ExperimentResult::has_curve(std::string_view name) const {
  for (const auto& c : curves) {
    if (c.name == name) return true;
  }
  return false;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  switch (config.kind) {
    case ExperimentKind::prediction: return run_prediction(config);
    case ExperimentKind::external_influence: return run_influence(config);
    case ExperimentKind::connectivity: return run_connectivity(config);
  }
  throw ValidationError("unknown experiment kind");
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  for (const auto& [name, content] : result.files) write_text_atomic(dir / name, content);
}

std::vector<InfluenceRow> external_influence_sweep(const std::vector<SyntheticSpec>& specs,
                                                   std::uint64_t seed, const FitOptions& fit) {
  if (specs.size() < 2) throw ValidationError("external_influence_sweep: need at least 2 sizes");
  std::vector<InfluenceRow> rows;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SyntheticData data = generate_synthetic(specs[i], derive_seed(seed, i));
    FitOptions opts = fit;
    if (!opts.initial) opts.initial = data.constants;
    const FitResult result = fit_diffusion_constants(data.series, data.network, opts);
    const double x0 = data.series.snapshots.front().values.norm();
    if (x0 == 0.0) throw ValidationError("external_influence_sweep: zero initial state");
    rows.push_back({data.network.node_count(), result.noise.sigma.norm() / x0,
                    data.noise.sigma.norm() / x0});
  }
  return rows;
}

std::string format_influence_csv(const std::vector<InfluenceRow>& rows) {
  CsvTable t;
  t.header = {"nodes", "fitted_ratio", "planted_ratio"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.nodes), format_number(r.fitted_ratio),
                      format_number(r.planted_ratio)});
  }
  return format_csv(t);
}

}  // namespace supradiff
