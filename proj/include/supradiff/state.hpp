#pragma once

#include "supradiff/network.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace supradiff {

/// P x T topic states, rows in network order.
struct StateMatrix {
  Eigen::MatrixXd values;
  double time = 0.0;

  Index nodes() const { return values.rows(); }
  Index topics() const { return values.cols(); }
};

/// Topic vectors keyed by node id (e.g. documents of an information layer).
struct TopicTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
};

/// Which documents each agent produced, in agent order.
struct DocumentAssignment {
  std::vector<std::pair<std::string, std::vector<std::string>>> documents_of;
};

struct AgentStates {
  std::vector<std::string> agent_ids;
  Eigen::MatrixXd values;
  // Agents without documents start at the zero vector and are flagged here.
  std::vector<bool> without_documents;
};

/// Each agent's state is the mean of its documents' topic vectors.
AgentStates init_agent_states(const DocumentAssignment& assignment, const TopicTable& documents);

/// Full network state: information-layer rows come from `documents` by node id,
/// every agent-layer replica of an agent gets the same averaged vector.
StateMatrix initial_state(const InterconnectedNetwork& network,
                          const DocumentAssignment& assignment, const TopicTable& documents,
                          double time = 0.0);

inline constexpr double kDefaultMaxWeight = 1e6;

/// W(i,j) = 1/||x_i - x_j|| when that exceeds `threshold`, else 0. Zero
/// distances are capped at `max_weight`.
Eigen::MatrixXd inverse_distance_similarity(const Eigen::MatrixXd& points, double threshold,
                                            double max_weight = kDefaultMaxWeight);

/// W(m,n) = |S_m ∩ S_n| / |S_m ∪ S_n| when that exceeds `threshold`, else 0.
Eigen::MatrixXd jaccard_similarity(const std::vector<std::set<std::string>>& containers,
                                   double threshold = 0.0);

/// Symmetrized k-nearest-neighbour graph with inverse-distance weights.
/// Ties go to the lower node index.
Eigen::MatrixXd knn_similarity(const Eigen::MatrixXd& points, int k,
                               double max_weight = kDefaultMaxWeight);

// Long-format state CSV: node_id,t,x_1..x_T where node_id is "<layer>:<node>".
std::vector<StateMatrix> read_states_csv(const std::filesystem::path& path,
                                         const InterconnectedNetwork& network);
std::string format_states_csv(const InterconnectedNetwork& network,
                              const std::vector<StateMatrix>& snapshots);

// agent_id,document_id
DocumentAssignment read_assignment_csv(const std::filesystem::path& path);
std::string format_assignment_csv(const DocumentAssignment& assignment);

}  // namespace supradiff
