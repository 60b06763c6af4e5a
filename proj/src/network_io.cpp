#include "supradiff/network_io.hpp"

#include "json_util.hpp"
#include "supradiff/error.hpp"

#include <fstream>
#include <sstream>

namespace supradiff {

using nlohmann::json;

namespace {

// Layer adjacency: dense row-major rows or {"triplets": [[i, j, w], ...]}.
// Coupling matrices additionally accept a bare triplet array.
Eigen::MatrixXd read_matrix(const json& j, Index rows, Index cols, bool mirror,
                            bool bare_triplets, const std::string& what) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  const json* triplets = nullptr;
  if (j.is_object()) {
    if (!j.contains("triplets")) throw ValidationError(what + ": expected 'triplets'");
    triplets = &j.at("triplets");
  } else if (bare_triplets) {
    triplets = &j;
  }

  if (triplets == nullptr) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
      throw ValidationError(what + ": dense matrix must have " + std::to_string(rows) + " rows");
    }
    for (Index i = 0; i < rows; ++i) {
      const auto& row = j[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
        throw ValidationError(what + ": dense row " + std::to_string(i) + " must have " +
                              std::to_string(cols) + " entries");
      }
      for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
  }

  if (!triplets->is_array()) throw ValidationError(what + ": triplets must be an array");
  Eigen::MatrixXi set = Eigen::MatrixXi::Zero(rows, cols);
  for (const auto& t : *triplets) {
    if (!t.is_array() || t.size() != 3) throw ValidationError(what + ": malformed triplet");
    const auto i = t[0].get<Index>();
    const auto c = t[1].get<Index>();
    if (i < 0 || i >= rows || c < 0 || c >= cols) {
      throw ValidationError(what + ": triplet index out of range");
    }
    if (set(i, c)) throw ValidationError(what + ": duplicate triplet");
    m(i, c) = t[2].get<double>();
    set(i, c) = 1;
  }
  if (mirror) {
    for (Index i = 0; i < rows; ++i) {
      for (Index c = 0; c < cols; ++c) {
        if (set(i, c) && !set(c, i)) m(c, i) = m(i, c);
      }
    }
  }
  return m;
}

json write_triplets(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (m(i, c) != 0.0) out.push_back(json::array({i, c, m(i, c)}));
    }
  }
  return json{{"triplets", out}};
}

NetworkFile from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("network file must be a JSON object");
  if (!doc.contains("layers")) throw ValidationError("network file lacks 'layers'");

  std::vector<LayerGraph> layers;
  for (const auto& lj : doc.at("layers")) {
    LayerGraph layer;
    layer.id = lj.at("id").get<int>();
    layer.kind = parse_layer_kind(lj.value("kind", std::string("agent")));
    layer.directed = lj.value("directed", false);
    layer.node_ids = lj.at("nodes").get<std::vector<std::string>>();
    const Index n = layer.size();
    layer.adjacency = lj.contains("adjacency")
                          ? read_matrix(lj.at("adjacency"), n, n, !layer.directed, false,
                                        "layer " + std::to_string(layer.id))
                          : Eigen::MatrixXd::Zero(n, n);
    layers.push_back(std::move(layer));
  }

  // Layer sizes are needed to size couplings before the network exists.
  std::map<int, Index> sizes;
  for (const auto& l : layers) sizes[l.id] = l.size();

  std::vector<InterLayerCoupling> couplings;
  if (doc.contains("couplings")) {
    for (const auto& cj : doc.at("couplings")) {
      InterLayerCoupling c;
      c.from_layer = cj.at("from").get<int>();
      c.to_layer = cj.at("to").get<int>();
      const std::string name =
          "coupling " + std::to_string(c.from_layer) + "->" + std::to_string(c.to_layer);
      if (!sizes.count(c.from_layer) || !sizes.count(c.to_layer)) {
        throw ValidationError(name + ": references an unknown layer");
      }
      if (cj.value("identity", false)) {
        if (sizes[c.from_layer] != sizes[c.to_layer]) {
          throw ValidationError(name + ": identity coupling needs equal layer sizes");
        }
        c.weights = identity_coupling(sizes[c.from_layer]);
      } else {
        c.weights = read_matrix(cj.at("matrix"), sizes[c.from_layer], sizes[c.to_layer], false,
                                true, name);
      }
      couplings.push_back(std::move(c));
    }
  }

  NetworkFile file{InterconnectedNetwork(std::move(layers), std::move(couplings)), std::nullopt};
  if (doc.contains("constants")) file.constants = detail::constants_from_json(doc.at("constants"));
  return file;
}

}  // namespace

namespace detail {

DiffusionConstants constants_from_json(const json& j) {
  DiffusionConstants c;
  c.symmetric = j.value("symmetric", false);
  if (j.contains("intra")) {
    for (const auto& [key, value] : j.at("intra").items()) {
      c.intra[std::stoi(key)] = value.get<double>();
    }
  }
  if (j.contains("inter")) {
    for (const auto& [key, value] : j.at("inter").items()) {
      const auto comma = key.find(',');
      if (comma == std::string::npos) {
        throw ValidationError("inter constant key '" + key + "' must look like 'from,to'");
      }
      c.inter[{std::stoi(key.substr(0, comma)), std::stoi(key.substr(comma + 1))}] =
          value.get<double>();
    }
  }
  c.validate();
  return c;
}

json constants_to_json(const DiffusionConstants& c) {
  json intra = json::object();
  for (const auto& [id, d] : c.intra) intra[std::to_string(id)] = d;
  json inter = json::object();
  for (const auto& [pair, d] : c.inter) {
    inter[std::to_string(pair.first) + "," + std::to_string(pair.second)] = d;
  }
  return json{{"symmetric", c.symmetric}, {"intra", intra}, {"inter", inter}};
}

}  // namespace detail

NetworkFile parse_network(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("network file: ") + e.what());
  }
  try {
    return from_json(doc);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("network file: ") + e.what());
  }
}

NetworkFile load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string dump_network(const InterconnectedNetwork& network,
                         const DiffusionConstants* constants) {
  json layers = json::array();
  for (const auto& l : network.layers()) {
    layers.push_back({{"id", l.id},
                      {"kind", std::string(to_string(l.kind))},
                      {"directed", l.directed},
                      {"nodes", l.node_ids},
                      {"adjacency", write_triplets(l.adjacency)}});
  }
  json couplings = json::array();
  for (const auto& c : network.couplings()) {
    couplings.push_back({{"from", c.from_layer}, {"to", c.to_layer}, {"matrix", write_triplets(c.weights)}});
  }
  json doc{{"layers", layers}, {"couplings", couplings}};
  if (constants != nullptr) doc["constants"] = detail::constants_to_json(*constants);
  return doc.dump(1) + "\n";
}

std::string dump_constants(const DiffusionConstants& constants) {
  return detail::constants_to_json(constants).dump(1) + "\n";
}

DiffusionConstants parse_constants(std::string_view json_text) {
  try {
    return detail::constants_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("constants: ") + e.what());
  }
}

}  // namespace supradiff
