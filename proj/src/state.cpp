#include "supradiff/state.hpp"

#include "supradiff/csv.hpp"
#include "supradiff/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace supradiff {

AgentStates init_agent_states(const DocumentAssignment& assignment, const TopicTable& documents) {
  if (static_cast<Index>(documents.ids.size()) != documents.values.rows()) {
    throw ValidationError("document table: id count does not match row count");
  }
  std::map<std::string, Index> row_of;
  for (std::size_t i = 0; i < documents.ids.size(); ++i) {
    row_of.emplace(documents.ids[i], static_cast<Index>(i));
  }

  const Index topics = documents.values.cols();
  AgentStates out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Index>(assignment.documents_of.size()), topics);
  Index r = 0;
  for (const auto& [agent, docs] : assignment.documents_of) {
    out.agent_ids.push_back(agent);
    out.without_documents.push_back(docs.empty());
    for (const auto& d : docs) {
      auto it = row_of.find(d);
      if (it == row_of.end()) {
        throw ValidationError("agent '" + agent + "' references unknown document '" + d + "'");
      }
      out.values.row(r) += documents.values.row(it->second);
    }
    if (!docs.empty()) out.values.row(r) /= static_cast<double>(docs.size());
    ++r;
  }
  return out;
}

StateMatrix initial_state(const InterconnectedNetwork& network,
                          const DocumentAssignment& assignment, const TopicTable& documents,
                          double time) {
  const AgentStates agents = init_agent_states(assignment, documents);
  std::map<std::string, Index> agent_row;
  for (std::size_t i = 0; i < agents.agent_ids.size(); ++i) {
    agent_row.emplace(agents.agent_ids[i], static_cast<Index>(i));
  }
  std::map<std::string, Index> doc_row;
  for (std::size_t i = 0; i < documents.ids.size(); ++i) {
    doc_row.emplace(documents.ids[i], static_cast<Index>(i));
  }

  StateMatrix state{Eigen::MatrixXd::Zero(network.node_count(), documents.values.cols()), time};
  for (const auto& layer : network.layers()) {
    const bool agent_layer = layer.kind == LayerKind::agent;
    const auto& lookup = agent_layer ? agent_row : doc_row;
    const auto& source = agent_layer ? agents.values : documents.values;
    for (Index i = 0; i < layer.size(); ++i) {
      auto it = lookup.find(layer.node_ids[static_cast<std::size_t>(i)]);
      // Agents absent from the assignment have no documents: zero state.
      if (it == lookup.end()) {
        if (agent_layer) continue;
        throw ValidationError("no topic vector for document '" +
                              layer.node_ids[static_cast<std::size_t>(i)] + "'");
      }
      state.values.row(network.global_index(layer.id, i)) = source.row(it->second);
    }
  }
  return state;
}

namespace {

void require_finite(const Eigen::MatrixXd& points, const char* what) {
  if (!points.allFinite()) throw ValidationError(std::string(what) + ": non-finite topic vector");
}

double distance(const Eigen::MatrixXd& points, Index i, Index j) {
  return (points.row(i) - points.row(j)).norm();
}

double inverse_distance(double d, double max_weight) {
  return d > 0.0 ? std::min(1.0 / d, max_weight) : max_weight;
}

}  // namespace

Eigen::MatrixXd inverse_distance_similarity(const Eigen::MatrixXd& points, double threshold,
                                            double max_weight) {
  require_finite(points, "inverse_distance_similarity");
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ValidationError("inverse_distance_similarity: threshold must be finite and > 0");
  }
  const Index n = points.rows();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = distance(points, i, j);
      if (!std::isfinite(d)) throw NumericalError("inverse_distance_similarity: non-finite distance");
      const double v = inverse_distance(d, max_weight);
      if (v > threshold) w(i, j) = w(j, i) = v;
    }
  }
  return w;
}

Eigen::MatrixXd jaccard_similarity(const std::vector<std::set<std::string>>& containers,
                                   double threshold) {
  const auto n = static_cast<Index>(containers.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Index m = 0; m < n; ++m) {
    const auto& a = containers[static_cast<std::size_t>(m)];
    for (Index k = m + 1; k < n; ++k) {
      const auto& b = containers[static_cast<std::size_t>(k)];
      std::size_t both = 0;
      for (const auto& x : a) both += b.count(x);
      const std::size_t either = a.size() + b.size() - both;
      const double j = either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
      if (j > threshold) w(m, k) = w(k, m) = j;
    }
  }
  return w;
}

Eigen::MatrixXd knn_similarity(const Eigen::MatrixXd& points, int k, double max_weight) {
  require_finite(points, "knn_similarity");
  const Index n = points.rows();
  if (k < 1 || k >= n) {
    throw ValidationError("knn_similarity: need 1 <= k < number of points");
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) dist[static_cast<std::size_t>(j)] = distance(points, i, j);
    std::iota(order.begin(), order.end(), Index{0});
    std::erase(order, i);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });
    for (int r = 0; r < k; ++r) {
      const Index j = order[static_cast<std::size_t>(r)];
      const double v = inverse_distance(dist[static_cast<std::size_t>(j)], max_weight);
      w(i, j) = w(j, i) = v;
    }
    order.resize(static_cast<std::size_t>(n));
  }
  return w;
}

std::vector<StateMatrix> read_states_csv(const std::filesystem::path& path,
                                         const InterconnectedNetwork& network) {
  const CsvTable table = read_csv(path);
  const std::size_t node_col = table.column("node_id");
  const std::size_t t_col = table.column("t");
  std::vector<std::size_t> x_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].rfind("x_", 0) == 0) x_cols.push_back(c);
  }
  if (x_cols.empty()) throw ValidationError(path.string() + ": no x_ columns");
  const auto topics = static_cast<Index>(x_cols.size());
  const Index p = network.node_count();

  std::map<double, std::pair<Eigen::MatrixXd, std::vector<bool>>> by_time;
  for (const auto& row : table.rows) {
    const double t = parse_number(row[t_col]);
    const auto idx = network.find_label(row[node_col]);
    if (!idx) throw ValidationError(path.string() + ": unknown node '" + row[node_col] + "'");
    auto [it, inserted] = by_time.try_emplace(
        t, Eigen::MatrixXd::Zero(p, topics), std::vector<bool>(static_cast<std::size_t>(p), false));
    auto& [values, seen] = it->second;
    if (seen[static_cast<std::size_t>(*idx)]) {
      throw ValidationError(path.string() + ": duplicate row for '" + row[node_col] + "'");
    }
    seen[static_cast<std::size_t>(*idx)] = true;
    for (Index c = 0; c < topics; ++c) {
      values(*idx, c) = parse_number(row[x_cols[static_cast<std::size_t>(c)]]);
    }
  }

  std::vector<StateMatrix> out;
  for (auto& [t, entry] : by_time) {
    if (std::find(entry.second.begin(), entry.second.end(), false) != entry.second.end()) {
      throw ValidationError(path.string() + ": snapshot t=" + format_number(t) +
                            " does not cover every node");
    }
    if (!entry.first.allFinite()) throw ValidationError(path.string() + ": non-finite state");
    out.push_back({std::move(entry.first), t});
  }
  return out;
}

std::string format_states_csv(const InterconnectedNetwork& network,
                              const std::vector<StateMatrix>& snapshots) {
  const auto labels = network.node_labels();
  const Index topics = snapshots.empty() ? 0 : snapshots.front().topics();
  CsvTable table;
  table.header = {"node_id", "t"};
  for (Index c = 0; c < topics; ++c) table.header.push_back("x_" + std::to_string(c + 1));
  for (const auto& s : snapshots) {
    if (s.nodes() != network.node_count() || s.topics() != topics) {
      throw ValidationError("state shape does not match network");
    }
    for (Index i = 0; i < s.nodes(); ++i) {
      std::vector<std::string> row{labels[static_cast<std::size_t>(i)], format_number(s.time)};
      for (Index c = 0; c < topics; ++c) row.push_back(format_number(s.values(i, c)));
      table.rows.push_back(std::move(row));
    }
  }
  return format_csv(table);
}

DocumentAssignment read_assignment_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t a = table.column("agent_id");
  const std::size_t d = table.column("document_id");
  DocumentAssignment out;
  std::map<std::string, std::size_t> slot;
  for (const auto& row : table.rows) {
    auto [it, inserted] = slot.try_emplace(row[a], out.documents_of.size());
    if (inserted) out.documents_of.push_back({row[a], {}});
    out.documents_of[it->second].second.push_back(row[d]);
  }
  return out;
}

std::string format_assignment_csv(const DocumentAssignment& assignment) {
  CsvTable table;
  table.header = {"agent_id", "document_id"};
  for (const auto& [agent, docs] : assignment.documents_of) {
    for (const auto& doc : docs) table.rows.push_back({agent, doc});
  }
  return format_csv(table);
}

}  // namespace supradiff
