#include "supradiff/network.hpp"

#include "supradiff/error.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace supradiff {

std::string_view to_string(LayerKind kind) {
  return kind == LayerKind::agent ? "agent" : "information";
}

LayerKind parse_layer_kind(std::string_view text) {
  if (text == "agent") return LayerKind::agent;
  if (text == "information") return LayerKind::information;
  throw ValidationError("unknown layer kind '" + std::string(text) + "'");
}

namespace {

void check_weights(const Eigen::MatrixXd& w, const std::string& what) {
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < w.cols(); ++j) {
      const double v = w(i, j);
      if (!std::isfinite(v)) throw ValidationError(what + ": non-finite weight");
      if (v < 0.0) {
        std::ostringstream os;
        os << what << ": negative weight " << v << " at (" << i << ", " << j << ")";
        throw ValidationError(os.str());
      }
    }
  }
}

void validate_layer(const LayerGraph& layer) {
  const std::string name = "layer " + std::to_string(layer.id);
  const Index n = layer.size();
  if (layer.adjacency.rows() != n || layer.adjacency.cols() != n) {
    throw ValidationError(name + ": adjacency must be " + std::to_string(n) + "x" +
                          std::to_string(n));
  }
  std::set<std::string> seen;
  for (const auto& id : layer.node_ids) {
    if (!seen.insert(id).second) throw ValidationError(name + ": duplicate node id '" + id + "'");
  }
  check_weights(layer.adjacency, name);
  for (Index i = 0; i < n; ++i) {
    if (layer.adjacency(i, i) != 0.0) throw ValidationError(name + ": nonzero diagonal");
  }
  if (!layer.directed && n > 0 &&
      (layer.adjacency - layer.adjacency.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw ValidationError(name + ": undirected layer with asymmetric adjacency");
  }
}

}  // namespace

InterconnectedNetwork::InterconnectedNetwork(std::vector<LayerGraph> layers,
                                             std::vector<InterLayerCoupling> couplings)
    : layers_(std::move(layers)), couplings_(std::move(couplings)) {
  if (layers_.empty()) throw ValidationError("network has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    validate_layer(layer);
    if (!position_.emplace(layer.id, k).second) {
      throw ValidationError("duplicate layer id " + std::to_string(layer.id));
    }
    offsets_.push_back(node_count_);
    node_count_ += layer.size();
    if (node_count_ > kMaxNodes) {
      throw ValidationError("network exceeds " + std::to_string(kMaxNodes) + " nodes");
    }
  }

  std::set<std::pair<int, int>> pairs;
  for (const auto& c : couplings_) {
    const std::string name =
        "coupling " + std::to_string(c.from_layer) + "->" + std::to_string(c.to_layer);
    if (!has_layer(c.from_layer) || !has_layer(c.to_layer)) {
      throw ValidationError(name + ": references an unknown layer");
    }
    if (c.from_layer == c.to_layer) throw ValidationError(name + ": self coupling");
    if (!pairs.emplace(c.from_layer, c.to_layer).second) {
      throw ValidationError(name + ": declared twice");
    }
    if (c.weights.rows() != layer(c.from_layer).size() ||
        c.weights.cols() != layer(c.to_layer).size()) {
      throw ValidationError(name + ": dimension mismatch");
    }
    check_weights(c.weights, name);
  }

  for (const auto& l : layers_) {
    for (Index i = 0; i < l.size(); ++i) {
      label_index_.emplace(std::to_string(l.id) + ":" + l.node_ids[i], global_index(l.id, i));
    }
  }
}

std::size_t InterconnectedNetwork::agent_layer_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.kind == LayerKind::agent;
  return n;
}

std::size_t InterconnectedNetwork::information_layer_count() const {
  return layers_.size() - agent_layer_count();
}

bool InterconnectedNetwork::has_layer(int layer_id) const { return position_.count(layer_id) > 0; }

std::size_t InterconnectedNetwork::layer_position(int layer_id) const {
  auto it = position_.find(layer_id);
  if (it == position_.end()) throw ValidationError("unknown layer " + std::to_string(layer_id));
  return it->second;
}

const LayerGraph& InterconnectedNetwork::layer(int layer_id) const {
  return layers_[layer_position(layer_id)];
}

Index InterconnectedNetwork::offset(int layer_id) const { return offsets_[layer_position(layer_id)]; }

Index InterconnectedNetwork::global_index(int layer_id, Index local) const {
  const auto& l = layer(layer_id);
  if (local < 0 || local >= l.size()) throw ValidationError("node index out of range");
  return offset(layer_id) + local;
}

const InterLayerCoupling* InterconnectedNetwork::coupling(int from_layer, int to_layer) const {
  for (const auto& c : couplings_) {
    if (c.from_layer == from_layer && c.to_layer == to_layer) return &c;
  }
  return nullptr;
}

std::vector<std::string> InterconnectedNetwork::node_labels() const {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(node_count_));
  for (const auto& l : layers_) {
    for (const auto& id : l.node_ids) labels.push_back(std::to_string(l.id) + ":" + id);
  }
  return labels;
}

std::optional<Index> InterconnectedNetwork::find_label(std::string_view label) const {
  auto it = label_index_.find(label);
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

bool InterconnectedNetwork::all_undirected() const {
  for (const auto& l : layers_) {
    if (l.directed) return false;
  }
  return true;
}

InterconnectedNetwork extract_layer(const InterconnectedNetwork& network, int layer_id) {
  return InterconnectedNetwork({network.layer(layer_id)}, {});
}

Eigen::MatrixXd identity_coupling(Index n) { return Eigen::MatrixXd::Identity(n, n); }

void DiffusionConstants::validate() const {
  for (const auto& [id, d] : intra) {
    if (!std::isfinite(d) || d < 0.0) {
      throw ValidationError("intra constant for layer " + std::to_string(id) +
                            " must be finite and >= 0");
    }
  }
  for (const auto& [pair, d] : inter) {
    if (!std::isfinite(d) || d < 0.0) {
      throw ValidationError("inter constant " + std::to_string(pair.first) + "," +
                            std::to_string(pair.second) + " must be finite and >= 0");
    }
    if (symmetric) {
      auto rev = inter.find({pair.second, pair.first});
      if (rev != inter.end() && rev->second != d) {
        throw ValidationError("symmetric constants disagree for pair " +
                              std::to_string(pair.first) + "," + std::to_string(pair.second));
      }
    }
  }
}

double DiffusionConstants::intra_for(int layer_id) const {
  auto it = intra.find(layer_id);
  if (it == intra.end()) {
    throw ValidationError("missing intra constant for layer " + std::to_string(layer_id));
  }
  return it->second;
}

std::optional<double> DiffusionConstants::inter_for(int from_layer, int to_layer) const {
  if (auto it = inter.find({from_layer, to_layer}); it != inter.end()) return it->second;
  if (symmetric) {
    if (auto it = inter.find({to_layer, from_layer}); it != inter.end()) return it->second;
  }
  return std::nullopt;
}

Eigen::MatrixXd build_laplacian(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ValidationError("adjacency must be square");
  check_weights(adjacency, "adjacency");
  for (Index i = 0; i < adjacency.rows(); ++i) {
    if (adjacency(i, i) != 0.0) throw ValidationError("adjacency has a nonzero diagonal");
  }
  Eigen::MatrixXd lap = -adjacency;
  lap.diagonal() += adjacency.rowwise().sum();
  return lap;
}

std::vector<InterLayerCoupling> effective_couplings(const InterconnectedNetwork& network,
                                                    bool symmetric) {
  std::vector<InterLayerCoupling> out = network.couplings();
  if (!symmetric) return out;
  for (const auto& c : network.couplings()) {
    const auto* reverse = network.coupling(c.to_layer, c.from_layer);
    if (reverse == nullptr) {
      out.push_back({c.to_layer, c.from_layer, c.weights.transpose()});
    } else if ((reverse->weights - c.weights.transpose()).cwiseAbs().maxCoeff() > 0.0) {
      throw ValidationError("symmetric mode: coupling " + std::to_string(c.to_layer) + "->" +
                            std::to_string(c.from_layer) + " is not the transpose of its reverse");
    }
  }
  return out;
}

SupraLaplacian assemble_supra_laplacian(const InterconnectedNetwork& network,
                                        const DiffusionConstants& constants) {
  constants.validate();
  const Index p = network.node_count();

  SupraLaplacian supra;
  supra.intra_part = Eigen::MatrixXd::Zero(p, p);
  supra.inter_part = Eigen::MatrixXd::Zero(p, p);
  for (const auto& l : network.layers()) {
    const Index off = network.offset(l.id);
    supra.layer_ids.push_back(l.id);
    supra.layer_offsets.push_back(off);
    supra.layer_sizes.push_back(l.size());
    supra.intra_part.block(off, off, l.size(), l.size()) =
        constants.intra_for(l.id) * build_laplacian(l.adjacency);
  }

  // Inter-layer degree on the diagonal block of the source layer, negative
  // weights in the off-diagonal block; every row sums to zero.
  for (const auto& c : effective_couplings(network, constants.symmetric)) {
    const auto d = constants.inter_for(c.from_layer, c.to_layer);
    if (!d) {
      throw ValidationError("missing inter constant for coupling " +
                            std::to_string(c.from_layer) + "->" + std::to_string(c.to_layer));
    }
    const Index r0 = network.offset(c.from_layer);
    const Index c0 = network.offset(c.to_layer);
    const Index nr = c.weights.rows();
    const Index nc = c.weights.cols();
    supra.inter_part.block(r0, r0, nr, nr).diagonal() += *d * c.weights.rowwise().sum();
    supra.inter_part.block(r0, c0, nr, nc) -= *d * c.weights;
  }

  supra.matrix = supra.intra_part + supra.inter_part;
  return supra;
}

SupraLaplacian scale_inter_layer(const SupraLaplacian& supra, double epsilon) {
  if (!std::isfinite(epsilon)) throw ValidationError("epsilon must be finite");
  if (epsilon < 0.0) throw ValidationError("epsilon must be >= 0");
  SupraLaplacian out = supra;
  out.inter_part = epsilon * supra.inter_part;
  out.matrix = out.intra_part + out.inter_part;
  return out;
}

double row_sum_defect(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.rowwise().sum().cwiseAbs().maxCoeff() / (1.0 + m.cwiseAbs().maxCoeff());
}

}  // namespace supradiff
