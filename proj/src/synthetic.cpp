#include "supradiff/synthetic.hpp"

#include "supradiff/error.hpp"

#include <cmath>
#include <queue>
#include <random>

namespace supradiff {

void SyntheticSpec::validate() const {
  if (layers.empty()) throw ValidationError("synthetic spec: no layers");
  if (topics < 1) throw ValidationError("synthetic spec: topics must be >= 1");
  Index agents = -1;
  for (const auto& l : layers) {
    if (l.nodes < 2) throw ValidationError("synthetic spec: every layer needs >= 2 nodes");
    if (l.model == GraphModel::erdos_renyi && !(l.probability >= 0.0 && l.probability <= 1.0)) {
      throw ValidationError("synthetic spec: probability must lie in [0, 1]");
    }
    if (l.model == GraphModel::knn && (l.k < 1 || l.k >= l.nodes)) {
      throw ValidationError("synthetic spec: knn needs 1 <= k < nodes");
    }
    if (!(l.intra_constant >= 0.0) || !std::isfinite(l.intra_constant)) {
      throw ValidationError("synthetic spec: intra constants must be finite and >= 0");
    }
    if (l.kind == LayerKind::agent) {
      if (agents >= 0 && agents != l.nodes) {
        throw ValidationError("synthetic spec: agent layers must share one node count");
      }
      agents = l.nodes;
    }
  }
  if (!(inter_constant >= 0.0) || !std::isfinite(inter_constant)) {
    throw ValidationError("synthetic spec: inter constant must be finite and >= 0");
  }
  if (!(noise_ratio >= 0.0) || !(noise_sigma >= 0.0) || noise_nodes < 0 ||
      noise_nodes > layers.front().nodes) {
    throw ValidationError("synthetic spec: invalid noise settings");
  }
  if (snapshots < 2) throw ValidationError("synthetic spec: need at least 2 snapshots");
  if (train_end < 2 || train_end > snapshots) {
    throw ValidationError("synthetic spec: train_end must lie in [2, snapshots]");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ValidationError("synthetic spec: spacing must be > 0");
  }
  if (!(sim_dt >= 0.0)) throw ValidationError("synthetic spec: sim_dt must be >= 0");
  if (hidden_edges < 0 || !(hidden_weight >= 0.0)) {
    throw ValidationError("synthetic spec: invalid hidden edges");
  }
  if (max_retries < 1) throw ValidationError("synthetic spec: max_retries must be >= 1");
}

bool layer_connected(const Eigen::MatrixXd& adjacency) {
  const Index n = adjacency.rows();
  if (n == 0) return true;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Index> q;
  q.push(0);
  seen[0] = true;
  Index count = 1;
  while (!q.empty()) {
    const Index i = q.front();
    q.pop();
    for (Index j = 0; j < n; ++j) {
      if (!seen[static_cast<std::size_t>(j)] && (adjacency(i, j) > 0.0 || adjacency(j, i) > 0.0)) {
        seen[static_cast<std::size_t>(j)] = true;
        ++count;
        q.push(j);
      }
    }
  }
  return count == n;
}

namespace {

Eigen::MatrixXd dirichlet_rows(Index rows, Index cols, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = expo(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

Eigen::MatrixXd erdos_renyi(Index n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(p);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (edge(rng)) w(i, j) = w(j, i) = 1.0;
    }
  }
  return w;
}

Eigen::MatrixXd knn_graph(const Eigen::MatrixXd& points, int k) {
  Eigen::MatrixXd w = knn_similarity(points, k);
  const double top = w.maxCoeff();
  if (top > 0.0) w /= top;
  return w;
}

struct Draw {
  std::vector<LayerGraph> layers;
  std::vector<InterLayerCoupling> couplings;
  DocumentAssignment assignment;
  TopicTable documents;
  Eigen::MatrixXd agent_topics;
};

std::optional<Draw> draw_layers(const SyntheticSpec& spec, std::mt19937_64& rng) {
  Draw d;
  Index agents = 0;
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::agent) agents = l.nodes;
  }
  d.agent_topics = dirichlet_rows(agents, spec.topics, rng);

  std::vector<std::vector<std::string>> docs_of(static_cast<std::size_t>(agents));
  std::vector<Eigen::MatrixXd> doc_blocks;
  for (std::size_t pos = 0; pos < spec.layers.size(); ++pos) {
    const auto& ls = spec.layers[pos];
    LayerGraph g;
    g.id = static_cast<int>(pos) + 1;
    g.kind = ls.kind;
    Eigen::MatrixXd points;
    if (ls.kind == LayerKind::agent) {
      for (Index i = 0; i < ls.nodes; ++i) g.node_ids.push_back("a" + std::to_string(i));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      points = Eigen::MatrixXd::NullaryExpr(ls.nodes, spec.topics, [&] { return unit(rng); });
    } else {
      for (Index i = 0; i < ls.nodes; ++i) {
        g.node_ids.push_back("d" + std::to_string(g.id) + "_" + std::to_string(i));
      }
      points = dirichlet_rows(ls.nodes, spec.topics, rng);
      doc_blocks.push_back(points);
      d.documents.ids.insert(d.documents.ids.end(), g.node_ids.begin(), g.node_ids.end());

      // Authorship: a random permutation covers every agent first, the rest is uniform.
      if (agents > 0) {
        std::vector<Index> author(static_cast<std::size_t>(ls.nodes));
        std::uniform_int_distribution<Index> pick(0, agents - 1);
        std::vector<Index> perm(static_cast<std::size_t>(agents));
        for (Index a = 0; a < agents; ++a) perm[static_cast<std::size_t>(a)] = a;
        for (std::size_t i = perm.size(); i > 1; --i) {
          std::uniform_int_distribution<std::size_t> s(0, i - 1);
          std::swap(perm[i - 1], perm[s(rng)]);
        }
        for (Index i = 0; i < ls.nodes; ++i) {
          author[static_cast<std::size_t>(i)] =
              i < agents ? perm[static_cast<std::size_t>(i)] : pick(rng);
          docs_of[static_cast<std::size_t>(author[static_cast<std::size_t>(i)])].push_back(
              g.node_ids[static_cast<std::size_t>(i)]);
        }
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(agents, ls.nodes);
        for (Index i = 0; i < ls.nodes; ++i) a(author[static_cast<std::size_t>(i)], i) = 1.0;
        for (std::size_t q = 0; q < spec.layers.size(); ++q) {
          if (spec.layers[q].kind == LayerKind::agent) {
            d.couplings.push_back({static_cast<int>(q) + 1, g.id, a});
          }
        }
      }
    }
    g.adjacency = ls.model == GraphModel::erdos_renyi ? erdos_renyi(ls.nodes, ls.probability, rng)
                                                       : knn_graph(points, ls.k);
    if (spec.require_connected && !layer_connected(g.adjacency)) return std::nullopt;
    d.layers.push_back(std::move(g));
  }

  std::vector<int> agent_layers;
  for (const auto& g : d.layers) {
    if (g.kind == LayerKind::agent) agent_layers.push_back(g.id);
  }
  for (std::size_t a = 0; a < agent_layers.size(); ++a) {
    for (std::size_t b = a + 1; b < agent_layers.size(); ++b) {
      d.couplings.push_back({agent_layers[a], agent_layers[b], identity_coupling(agents)});
    }
  }

  d.documents.values.resize(static_cast<Index>(d.documents.ids.size()), spec.topics);
  Index row = 0;
  for (const auto& blk : doc_blocks) {
    d.documents.values.middleRows(row, blk.rows()) = blk;
    row += blk.rows();
  }
  for (Index a = 0; a < agents; ++a) {
    d.assignment.documents_of.emplace_back("a" + std::to_string(a),
                                           docs_of[static_cast<std::size_t>(a)]);
  }
  return d;
}

void add_hidden_edges(Eigen::MatrixXd& adjacency, int count, double weight, std::mt19937_64& rng) {
  const Index n = adjacency.rows();
  std::vector<std::pair<Index, Index>> free;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (adjacency(i, j) == 0.0) free.emplace_back(i, j);
    }
  }
  if (static_cast<std::size_t>(count) > free.size()) {
    throw ValidationError("synthetic spec: more hidden edges than free node pairs in layer 1");
  }
  for (int e = 0; e < count; ++e) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(e), free.size() - 1);
    std::swap(free[static_cast<std::size_t>(e)], free[pick(rng)]);
    const auto [i, j] = free[static_cast<std::size_t>(e)];
    adjacency(i, j) = adjacency(j, i) = weight;
  }
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::optional<Draw> draw;
  std::mt19937_64 rng;
  for (int attempt = 0; attempt < spec.max_retries && !draw; ++attempt) {
    rng.seed(derive_seed(seed, 1000 + static_cast<std::uint64_t>(attempt)));
    draw = draw_layers(spec, rng);
  }
  if (!draw) {
    throw ValidationError("generate_synthetic: no connected draw in " +
                          std::to_string(spec.max_retries) + " attempts");
  }

  DiffusionConstants constants;
  constants.symmetric = true;
  for (std::size_t pos = 0; pos < spec.layers.size(); ++pos) {
    constants.intra[static_cast<int>(pos) + 1] = spec.layers[pos].intra_constant;
  }
  for (const auto& c : draw->couplings) constants.inter[{c.from_layer, c.to_layer}] = spec.inter_constant;

  InterconnectedNetwork network(draw->layers, draw->couplings);
  std::vector<LayerGraph> truth_layers = draw->layers;
  add_hidden_edges(truth_layers.front().adjacency, spec.hidden_edges, spec.hidden_weight, rng);
  const InterconnectedNetwork truth_network(std::move(truth_layers), draw->couplings);
  SupraLaplacian truth = assemble_supra_laplacian(truth_network, constants);

  StateMatrix x0;
  if (spec.agent_init_from_documents) {
    x0 = initial_state(network, draw->assignment, draw->documents);
  } else {
    TopicTable agents{{}, draw->agent_topics};
    DocumentAssignment self;
    for (Index a = 0; a < draw->agent_topics.rows(); ++a) {
      agents.ids.push_back("a" + std::to_string(a));
      self.documents_of.push_back({agents.ids.back(), {agents.ids.back()}});
    }
    TopicTable all = draw->documents;
    all.ids.insert(all.ids.end(), agents.ids.begin(), agents.ids.end());
    all.values.conservativeResize(all.values.rows() + agents.values.rows(), spec.topics);
    all.values.bottomRows(agents.values.rows()) = agents.values;
    x0 = initial_state(network, self, all);
  }

  NoiseModel noise;
  const std::uint64_t noise_seed = derive_seed(seed, 7);
  if (spec.noise_nodes > 0) {
    noise = {Eigen::MatrixXd::Zero(x0.nodes(), x0.topics()), noise_seed};
    noise.sigma.topRows(spec.noise_nodes).setConstant(spec.noise_sigma);
  } else {
    noise = noise_with_ratio(x0.values, spec.noise_ratio, noise_seed);
  }

  SnapshotSeries series;
  series.train_end = spec.train_end;
  series.snapshots.push_back(x0);
  const bool closed = noise.sigma.isZero(0.0);
  Eigen::MatrixXd step_map;
  if (closed) step_map = matrix_exponential(-spec.spacing * truth.matrix);
  const double dt = spec.sim_dt > 0.0 ? spec.sim_dt : default_time_step(truth);
  for (std::size_t k = 1; k < spec.snapshots; ++k) {
    const StateMatrix& prev = series.snapshots.back();
    const double t = static_cast<double>(k) * spec.spacing;
    if (closed) {
      series.snapshots.push_back({step_map * prev.values, t});
    } else {
      const NoiseModel sub{noise.sigma, derive_seed(noise.seed, k)};
      Path p = simulate_open(prev, truth, sub, {std::min(dt, spec.spacing), spec.spacing, 1});
      series.snapshots.push_back({std::move(p.states.back().values), t});
    }
  }

  return {std::move(network), std::move(constants), std::move(truth), std::move(noise),
          std::move(series), std::move(draw->assignment), std::move(draw->documents)};
}

SyntheticSpec professors_like_spec() {
  SyntheticSpec s;
  s.layers = {
      {LayerKind::agent, 79, GraphModel::erdos_renyi, 0.08, 3, 0.05},
      {LayerKind::agent, 79, GraphModel::knn, 0.0, 4, 0.05},
      {LayerKind::information, 1000, GraphModel::knn, 0.0, 5, 0.05},
  };
  s.topics = 10;
  s.inter_constant = 0.05;
  s.snapshots = 10;
  s.train_end = 6;
  return s;
}

}  // namespace supradiff
