#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace supradiff {

using Eigen::Index;

// Dense operators only; anything larger is rejected up front.
inline constexpr Index kMaxNodes = 20000;

enum class LayerKind { agent, information };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

/// One connectivity layer. `adjacency(i, j)` is the weight with which node j
/// influences node i; undirected layers must be symmetric.
struct LayerGraph {
  int id = 0;
  LayerKind kind = LayerKind::agent;
  std::vector<std::string> node_ids;
  Eigen::MatrixXd adjacency;
  bool directed = false;

  Index size() const { return static_cast<Index>(node_ids.size()); }
};

/// Rectangular weights from the nodes of `from_layer` (rows) to the nodes of
/// `to_layer` (columns).
struct InterLayerCoupling {
  int from_layer = 0;
  int to_layer = 0;
  Eigen::MatrixXd weights;
};

/// A set of layers plus couplings, validated on construction. Nodes are
/// ordered layer-major in the order the layers were given; every matrix in
/// the library shares this ordering.
class InterconnectedNetwork {
 public:
  InterconnectedNetwork(std::vector<LayerGraph> layers, std::vector<InterLayerCoupling> couplings);

  const std::vector<LayerGraph>& layers() const { return layers_; }
  const std::vector<InterLayerCoupling>& couplings() const { return couplings_; }

  Index node_count() const { return node_count_; }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t agent_layer_count() const;
  std::size_t information_layer_count() const;

  bool has_layer(int layer_id) const;
  std::size_t layer_position(int layer_id) const;
  const LayerGraph& layer(int layer_id) const;
  Index offset(int layer_id) const;
  Index global_index(int layer_id, Index local) const;

  // nullptr when the pair has no declared coupling.
  const InterLayerCoupling* coupling(int from_layer, int to_layer) const;

  // "<layer id>:<node id>" per row, in row order.
  std::vector<std::string> node_labels() const;
  // Row lookup for a "<layer id>:<node id>" label.
  std::optional<Index> find_label(std::string_view label) const;

  bool all_undirected() const;

 private:
  std::vector<LayerGraph> layers_;
  std::vector<InterLayerCoupling> couplings_;
  std::vector<Index> offsets_;
  std::map<int, std::size_t> position_;
  std::map<std::string, Index, std::less<>> label_index_;
  Index node_count_ = 0;
};

/// Network restricted to a single layer (used by the single-layer baseline).
InterconnectedNetwork extract_layer(const InterconnectedNetwork& network, int layer_id);

/// Identity coupling for replica agent-layers that share a node set.
Eigen::MatrixXd identity_coupling(Index n);

/// Scalars weighting intra-layer and inter-layer flow. In symmetric mode an
/// inter constant may be declared for one direction only and is mirrored.
struct DiffusionConstants {
  std::map<int, double> intra;
  std::map<std::pair<int, int>, double> inter;
  bool symmetric = false;

  void validate() const;
  double intra_for(int layer_id) const;
  std::optional<double> inter_for(int from_layer, int to_layer) const;
};

struct SupraLaplacian {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd intra_part;
  Eigen::MatrixXd inter_part;
  std::vector<int> layer_ids;
  std::vector<Index> layer_offsets;
  std::vector<Index> layer_sizes;

  Index size() const { return matrix.rows(); }
};

/// K - W with K the diagonal of row sums (out-degree).
Eigen::MatrixXd build_laplacian(const Eigen::MatrixXd& adjacency);

/// Couplings actually used during assembly. In symmetric mode a coupling
/// declared in one direction supplies its transpose for the other.
std::vector<InterLayerCoupling> effective_couplings(const InterconnectedNetwork& network,
                                                    bool symmetric);

SupraLaplacian assemble_supra_laplacian(const InterconnectedNetwork& network,
                                        const DiffusionConstants& constants);

/// Replaces the inter-layer part by epsilon times itself.
SupraLaplacian scale_inter_layer(const SupraLaplacian& supra, double epsilon);

// max_i |sum_j M(i,j)| / (1 + max |M|)
double row_sum_defect(const Eigen::MatrixXd& m);

}  // namespace supradiff
