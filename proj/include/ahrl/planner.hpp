#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ahrl/ilp.hpp"
#include "ahrl/logic.hpp"
#include "ahrl/proof_graph.hpp"

namespace ahrl::planner {

struct Subgoal {
  std::string label;  // e.g. "get-rabbit"
  std::string action;  // label prefix: the declared action label or predicate
  std::string action_predicate;
  logic::Term target;
  int graph_distance = 0;
  // False when the distinguished argument is still a variable.
  bool resolved = true;

  bool operator==(const Subgoal&) const = default;
};

struct Plan {
  std::vector<Subgoal> subgoals;  // execution order, farthest from the goal first
  double source_score = 0.0;
  bool optimal = true;

  std::vector<std::string> labels() const;
  bool operator==(const Plan&) const = default;
};

struct PlannerConfig {
  int depth_limit = graph::kDefaultDepthLimit;
  int timeout_ms = ilp::kDefaultTimeoutMs;
  bool reward_enabled = true;
  double reward_sign = 1.0;
  bool use_cache = true;
};

// Plans keyed by canonical observation text. Not thread-safe; one cache per
// agent.
class PlanCache {
 public:
  const Plan* find(const std::string& key) const;
  void store(const std::string& key, Plan plan);

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t size() const { return entries_.size(); }
  void count_hit() { ++hits_; }
  void count_miss() { ++misses_; }

 private:
  std::unordered_map<std::string, Plan> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Everything produced by one uncached planner run, for debugging and export.
struct PlanTrace {
  bool solved = false;  // false on a cache hit
  graph::ProofGraph graph;
  ilp::Hypothesis hypothesis;
  ilp::SolveStats solve_stats;
  double solver_ms = 0.0;
};

// Atoms sorted with variables masked, then variables renamed v0, v1, ... in
// order of first occurrence. Costs and labels are part of the key.
std::string canonical_key(const logic::Observation& obs);

// "RabbitStew" -> "rabbit-stew".
std::string to_kebab(const std::string& name);

Plan extract_plan(const ilp::Hypothesis& h, const graph::ProofGraph& g, const logic::KnowledgeBase& kb);

// Returns the cached plan for an identical canonical observation, otherwise
// builds the graph, solves it and extracts a plan. A cached plan from a
// timed-out solve is recomputed.
Plan plan(const logic::KnowledgeBase& kb, const logic::Observation& obs, const PlannerConfig& cfg, PlanCache& cache,
          PlanTrace* trace = nullptr);

}  // namespace ahrl::planner
