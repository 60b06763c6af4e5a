#pragma once

#include "supradiff/calibration.hpp"
#include "supradiff/diffusion.hpp"
#include "supradiff/network.hpp"
#include "supradiff/state.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace supradiff {

enum class GraphModel { erdos_renyi, knn };

struct LayerSpec {
  LayerKind kind = LayerKind::agent;
  Index nodes = 10;
  GraphModel model = GraphModel::erdos_renyi;
  double probability = 0.3;  // erdos_renyi
  int k = 3;                 // knn
  double intra_constant = 0.1;
};

/// Desk-scale dataset recipe. Layer ids are 1..M in order. Agent layers are
/// replicas of one agent set joined by identity couplings; every agent layer
/// is joined to every information layer by the authorship matrix.
struct SyntheticSpec {
  std::vector<LayerSpec> layers;
  Index topics = 3;
  double inter_constant = 0.1;

  // Sigma is either noise_ratio * ||X0||_F spread uniformly, or, when
  // noise_nodes > 0, `noise_sigma` on the first noise_nodes rows of layer 1.
  double noise_ratio = 0.0;
  Index noise_nodes = 0;
  double noise_sigma = 0.0;

  std::size_t snapshots = 10;
  double spacing = 1.0;
  std::size_t train_end = 6;
  double sim_dt = 0.0;  // 0: default_time_step of the true operator

  // Edges present in the generating dynamics but missing from the returned
  // network, added inside layer 1.
  int hidden_edges = 0;
  double hidden_weight = 1.0;

  // true: agents start at the mean of their documents; false: random vectors.
  bool agent_init_from_documents = true;
  bool require_connected = true;
  int max_retries = 20;

  void validate() const;
};

struct SyntheticData {
  InterconnectedNetwork network;
  DiffusionConstants constants;    // planted
  SupraLaplacian truth;            // generating operator (includes hidden edges)
  NoiseModel noise;
  SnapshotSeries series;
  DocumentAssignment assignment;
  TopicTable documents;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Shape of the two-agent-layer / one-information-layer academic dataset
/// (79 agents, 1000 documents, T = 10).
SyntheticSpec professors_like_spec();

bool layer_connected(const Eigen::MatrixXd& adjacency);

}  // namespace supradiff
