#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ahrl/logic.hpp"
#include "ahrl/proof_graph.hpp"

namespace ahrl::ilp {

using graph::EdgeId;
using graph::NodeId;

enum class VarKind : unsigned char { node, chain, unify, equality, pay, reward };

struct Variable {
  VarKind kind = VarKind::node;
  std::size_t ref = 0;  // node, edge, equality-pair or reward-instance index
  std::optional<int> fixed;
  double objective = 0.0;
  std::string name;
};

struct LinearTerm {
  std::size_t var = 0;
  double coef = 0.0;
};

enum class Sense : unsigned char { le, ge, eq };

struct Constraint {
  std::vector<LinearTerm> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
  std::string tag;
};

// Candidate term equality, first < second.
struct EqualityPair {
  logic::Term first;
  logic::Term second;
};

// Two included nodes that may not coexist once the listed equalities hold.
struct InconsistencyInstance {
  NodeId first = 0;
  NodeId second = 0;
  std::vector<std::size_t> required_pairs;
};

// Reward earned when `node` is included and the listed equalities hold.
struct RewardInstance {
  NodeId node = 0;
  std::size_t decl = 0;
  double reward = 0.0;
  std::vector<std::size_t> required_pairs;
};

struct EncodeOptions {
  bool reward_enabled = true;
  // +1 rewards reduce the objective; -1 reproduces the literal "- r_H" form.
  double reward_sign = 1.0;
};

// The 0-1 program selecting a solution hypothesis over a proof graph:
//   minimize  sum_n cost_n * p_n  -  sign * sum_i reward_i * r_i
// Variables are x (node included), c (chain edge active), u (unify edge
// active), q (term pair equal), p (node cost paid) and r (reward earned).
class IlpProblem {
 public:
  graph::ProofGraph graph;
  EncodeOptions options;

  std::vector<EqualityPair> pairs;
  // Equality pairs required by each unify edge, by pair index.
  std::vector<std::vector<std::size_t>> unify_requirements;
  std::vector<InconsistencyInstance> inconsistencies;
  std::vector<RewardInstance> rewards;

  std::vector<Variable> vars;
  std::vector<Constraint> constraints;

  std::size_t node_var(NodeId n) const { return node_base_ + n; }
  std::size_t chain_var(EdgeId e) const { return chain_base_ + e; }
  std::size_t unify_var(EdgeId e) const { return unify_base_ + e; }
  std::size_t equality_var(std::size_t q) const { return equality_base_ + q; }
  std::size_t pay_var(NodeId n) const { return pay_base_ + n; }
  std::size_t reward_var(std::size_t i) const { return reward_base_ + i; }

  std::optional<std::size_t> pair_index(const logic::Term& a, const logic::Term& b) const;

  bool satisfied_by(const std::vector<std::uint8_t>& assignment) const;
  double objective_value(const std::vector<std::uint8_t>& assignment) const;

  // LP-format text: objective, constraints one per line, binaries.
  std::string to_lp() const;

 private:
  friend IlpProblem encode(const graph::ProofGraph&, const logic::KnowledgeBase&, EncodeOptions);

  std::size_t node_base_ = 0;
  std::size_t chain_base_ = 0;
  std::size_t unify_base_ = 0;
  std::size_t equality_base_ = 0;
  std::size_t pay_base_ = 0;
  std::size_t reward_base_ = 0;
  std::map<std::pair<logic::Term, logic::Term>, std::size_t> pair_lookup_;
};

IlpProblem encode(const graph::ProofGraph& g, const logic::KnowledgeBase& kb, EncodeOptions options = {});

struct Hypothesis {
  std::vector<NodeId> included;  // ascending
  std::vector<EdgeId> active_chain_edges;
  std::vector<EdgeId> active_unify_edges;
  std::vector<NodeId> paid;
  // All equal term pairs (first < second), sorted.
  std::vector<std::pair<logic::Term, logic::Term>> equalities;
  double cost = 0.0;
  double reward = 0.0;
  double score = 0.0;
  double objective = 0.0;
  double reward_sign = 1.0;
  bool optimal = true;

  bool includes(NodeId n) const;
  // Maps a term to its equality-class representative: the constant if the
  // class has one, else the smallest term.
  logic::Term resolve(const logic::Term& t) const;
  logic::Atom resolved_atom(const graph::ProofGraph& g, NodeId n) const;
};

// Strict ordering used to pick among hypotheses: objective, then fewer
// included nodes, then the lexicographically smaller node-id set, then fewer
// equalities, then the lexicographically smaller equality list.
bool better_than(const Hypothesis& a, const Hypothesis& b);
bool objectives_equal(double a, double b);

inline constexpr int kDefaultTimeoutMs = 5000;

struct SolveStats {
  std::uint64_t branch_nodes = 0;
  bool timed_out = false;
};

// Exact depth-first branch and bound. On timeout the incumbent is returned
// with optimal = false.
Hypothesis solve(const IlpProblem& prob, int timeout_ms = kDefaultTimeoutMs, SolveStats* stats = nullptr);

inline constexpr std::size_t kBruteForceNodeGuard = 25;
inline constexpr std::uint64_t kBruteForceSearchBudget = 5'000'000;

// Exhaustive enumeration straight from the graph and knowledge base. Throws
// std::length_error when the graph exceeds `node_guard` nodes or the
// partition search visits more than `search_budget` states; the latter
// happens on a few graphs whose terms form one large unifiable block.
Hypothesis brute_force_solve(const graph::ProofGraph& g, const logic::KnowledgeBase& kb,
                             EncodeOptions options = {}, std::size_t node_guard = kBruteForceNodeGuard,
                             std::uint64_t search_budget = kBruteForceSearchBudget);

// -cost + reward_sign * reward.
double evaluate(const Hypothesis& h);

// Full 0-1 assignment corresponding to a decoded hypothesis.
std::vector<std::uint8_t> to_assignment(const IlpProblem& prob, const Hypothesis& h);

}  // namespace ahrl::ilp
