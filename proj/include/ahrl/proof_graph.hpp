#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ahrl/logic.hpp"

namespace ahrl::graph {

using NodeId = std::size_t;
using EdgeId = std::size_t;

inline constexpr int kDefaultDepthLimit = 5;

enum class Origin : unsigned char { observation, hypothesized };

struct GraphNode {
  logic::Atom atom;
  double cost = 0.0;
  int depth = 0;
  Origin origin = Origin::observation;
  std::optional<logic::ObsLabel> obs_label;
  // Chain edge that created this node; empty for observations.
  std::optional<EdgeId> creator;
};

// One backward application of a rule: the heads are the consequent instances
// being explained, the tails are the freshly hypothesized antecedents.
struct ChainEdge {
  std::string rule_id;
  std::size_t rule_index = 0;
  std::vector<NodeId> heads;
  std::vector<NodeId> tails;
  std::map<std::string, logic::Term> substitution;
};

struct UnifyEdge {
  NodeId a = 0;
  NodeId b = 0;
  logic::EqualitySet equalities;
};

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t chain_count = 0;
  std::size_t unify_count = 0;

  bool operator==(const GraphStats&) const = default;
};

class ProofGraph {
 public:
  std::vector<GraphNode> nodes;
  std::vector<ChainEdge> chain_edges;
  std::vector<UnifyEdge> unify_edges;
  int depth_limit = kDefaultDepthLimit;

  // Chain edges whose heads include `n`.
  const std::vector<EdgeId>& explainers(NodeId n) const { return explainers_[n]; }
  // Unify edges touching `n`.
  const std::vector<EdgeId>& unifiers(NodeId n) const { return unifiers_[n]; }

  // Rebuilds the adjacency indexes. Called by build_graph; call again after
  // editing the edge lists by hand.
  void index();

  bool is_acyclic() const;

 private:
  std::vector<std::vector<EdgeId>> explainers_;
  std::vector<std::vector<EdgeId>> unifiers_;
};

// Breadth-first backward chaining from the observation up to `depth_limit`,
// then unify edges between every same-predicate pair whose equalities do not
// equate two distinct constants and where neither node is a chain ancestor
// of the other. Never enumerates constants that are not
// already in the observation or the applied rules. Throws std::length_error
// once more than `max_nodes` nodes exist.
ProofGraph build_graph(const logic::KnowledgeBase& kb, const logic::Observation& obs,
                       int depth_limit = kDefaultDepthLimit,
                       std::size_t max_nodes = std::numeric_limits<std::size_t>::max());

GraphStats graph_stats(const ProofGraph& g);

}  // namespace ahrl::graph
