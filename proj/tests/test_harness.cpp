#include "doctest.h"
#include "test_util.hpp"

#include "supradiff/csv.hpp"
#include "supradiff/error.hpp"
#include "supradiff/experiment.hpp"
#include "supradiff/metrics.hpp"
#include "supradiff/svg.hpp"
#include "supradiff/synthetic.hpp"

#include <cmath>

using namespace supradiff;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.layers = {{LayerKind::agent, 8, GraphModel::erdos_renyi, 0.4, 3, 0.3},
              {LayerKind::information, 12, GraphModel::knn, 0.3, 3, 0.5}};
  s.snapshots = 5;
  s.train_end = 3;
  return s;
}

}  // namespace

TEST_CASE("error measure trivial cases") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  CHECK(error_measure(x, x) == 0.0);
  CHECK(error_measure(Eigen::MatrixXd::Zero(3, 2), x) == doctest::Approx(1.0));
  CHECK(error_measure(2.0 * x, x) == doctest::Approx(1.0));
  CHECK_THROWS_AS(error_measure(x, Eigen::MatrixXd::Zero(3, 2)), ValidationError);
  CHECK_THROWS_AS(error_measure(x, Eigen::MatrixXd::Ones(2, 2)), ValidationError);
}

TEST_CASE("upper bound and averages") {
  Eigen::MatrixXd a(1, 1), b(1, 1), c(1, 1);
  a << 1;
  b << 2;
  c << 4;
  const auto ub = upper_bound_series({{a, 0}, {b, 1}, {c, 2}});
  REQUIRE(ub.size() == 2);
  CHECK(ub[0] == doctest::Approx(0.5));
  CHECK(ub[1] == doctest::Approx(0.5));
  CHECK(time_average({1.0, 2.0, 6.0}) == doctest::Approx(3.0));
  CHECK(improvement_percent(0.2, 0.1) == doctest::Approx(50.0));
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const auto a = generate_synthetic(small_spec(), 17);
  const auto b = generate_synthetic(small_spec(), 17);
  const auto c = generate_synthetic(small_spec(), 18);
  CHECK(a.truth.matrix == b.truth.matrix);
  CHECK(a.series.snapshots.back().values == b.series.snapshots.back().values);
  CHECK(a.series.snapshots.front().values != c.series.snapshots.front().values);
  CHECK(a.series.size() == 5);
  CHECK(a.series.train_end == 3);
  for (const auto& layer : a.network.layers()) CHECK(layer_connected(layer.adjacency));
}

TEST_CASE("noise-free synthetic data obeys the semigroup") {
  const auto d = generate_synthetic(small_spec(), 3);
  CHECK(d.noise.sigma.isZero(0.0));
  const auto& s = d.series.snapshots;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const auto next = propagate_closed(s[k - 1], d.truth, s[k].time - s[k - 1].time);
    CHECK((next.values - s[k].values).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("hidden edges only change the generating operator") {
  auto spec = small_spec();
  spec.hidden_edges = 3;
  const auto d = generate_synthetic(spec, 5);
  const auto declared = assemble_supra_laplacian(d.network, d.constants);
  const Eigen::MatrixXd diff = d.truth.matrix - declared.matrix;
  CHECK(diff.cwiseAbs().maxCoeff() > 0.0);
  CHECK(diff.bottomRightCorner(12, 12).isZero(0.0));  // information layer untouched
}

TEST_CASE("professors-like spec has the academic dataset shape") {
  SyntheticSpec spec = professors_like_spec();
  CHECK(spec.topics == 10);
  spec.snapshots = 2;
  spec.train_end = 2;
  const auto d = generate_synthetic(spec, 1);
  CHECK(d.network.layer_count() == 3);
  CHECK(d.network.agent_layer_count() == 2);
  CHECK(d.network.layer(1).size() == 79);
  CHECK(d.network.layer(3).size() == 1000);
  CHECK(d.series.topics() == 10);
  CHECK(d.assignment.documents_of.size() == 79);
  for (const auto& [agent, docs] : d.assignment.documents_of) CHECK_FALSE(docs.empty());
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_experiment_config("{"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"kind": "prediction", "bogus": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"kind": "teleport"})"), ValidationError);
  CHECK_THROWS_AS(parse_synthetic_spec(R"({"layers": []})"), ValidationError);
  CHECK_THROWS_AS(parse_synthetic_spec(R"({"layers": [{"kind": "agent", "nodes": 5}], "train_end": 50})"),
                  ValidationError);

  const auto cfg = parse_experiment_config(R"({
    "kind": "prediction", "seed": 4,
    "data": {"synthetic": {"layers": [{"kind": "agent", "nodes": 6, "model": "erdos_renyi", "p": 0.5},
                                      {"kind": "information", "nodes": 8, "model": "knn", "k": 3}],
                           "snapshots": 4, "train_end": 3}},
    "methods": ["single_layer", "multilayer", "kalman"]
  })");
  CHECK(cfg.seed == 4);
  CHECK(cfg.single_layer);
  CHECK(cfg.multilayer);
  CHECK_FALSE(cfg.learned_operator);
  CHECK(cfg.kalman_fractions == std::vector<double>{0.1, 0.15, 0.2, 0.25});
}

TEST_CASE("SVG is reproducible from its CSV") {
  const std::string csv = "x,a,b\n0,1,2\n1,0.5,nan\n2,0.25,1\n";
  const CsvTable t = parse_csv(csv);
  const std::string svg1 = render_svg(chart_from_csv(t, "x", {"a", "b"}, "title", "err"));
  const std::string svg2 = render_svg(chart_from_csv(parse_csv(format_csv(t)), "x", {"a", "b"}, "title", "err"));
  CHECK(svg1 == svg2);
  CHECK(svg1.rfind("<svg", 0) == 0);
  CHECK(svg1.find("nan") == std::string::npos);
}

TEST_CASE("small prediction experiment produces every output") {
  ExperimentConfig cfg;
  cfg.data.synthetic = small_spec();
  cfg.data.synthetic->noise_ratio = 0.01;
  cfg.single_layer = cfg.multilayer = cfg.learned_operator = true;
  cfg.kalman_fractions = {0.25};
  cfg.epsilon_grid = {0.0, 1.0};
  const auto r = run_experiment(cfg);
  CHECK(r.curves.front().name == "upper_bound");
  for (const char* name : {"single_layer", "multilayer", "learned_operator", "kalman_0.25"}) {
    CHECK(r.has_curve(name));
  }
  for (const char* f : {"errors.csv", "errors.svg", "summary.csv", "constants.json", "epsilon.csv"}) {
    CHECK(r.files.count(f) == 1);
  }
  CHECK(r.times.size() == 2);
  const auto again = run_experiment(cfg);
  CHECK(again.files == r.files);
}
