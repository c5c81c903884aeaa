#include "ahrl/proof_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace ahrl::graph {

using logic::Atom;
using logic::Term;

void ProofGraph::index() {
  explainers_.assign(nodes.size(), {});
  unifiers_.assign(nodes.size(), {});
  for (EdgeId e = 0; e < chain_edges.size(); ++e) {
    for (NodeId h : chain_edges[e].heads) explainers_[h].push_back(e);
  }
  for (EdgeId e = 0; e < unify_edges.size(); ++e) {
    unifiers_[unify_edges[e].a].push_back(e);
    unifiers_[unify_edges[e].b].push_back(e);
  }
}

bool ProofGraph::is_acyclic() const {
  // Kahn's algorithm over head -> tail arcs.
  std::vector<std::size_t> indegree(nodes.size(), 0);
  std::vector<std::vector<NodeId>> out(nodes.size());
  for (const auto& e : chain_edges) {
    for (NodeId h : e.heads) {
      for (NodeId t : e.tails) {
        out[h].push_back(t);
        ++indegree[t];
      }
    }
  }
  std::vector<NodeId> ready;
  for (NodeId n = 0; n < nodes.size(); ++n) {
    if (indegree[n] == 0) ready.push_back(n);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    const NodeId n = ready.back();
    ready.pop_back();
    ++seen;
    for (NodeId t : out[n]) {
      if (--indegree[t] == 0) ready.push_back(t);
    }
  }
  return seen == nodes.size();
}

namespace {

using Substitution = std::map<std::string, Term>;

// Binds rule-side variables to node terms. Rule constants must match exactly;
// node variables can only be matched by rule variables.
bool match(const Atom& pattern, const Atom& target, Substitution& sub) {
  if (pattern.predicate != target.predicate || pattern.arity() != target.arity()) return false;
  for (std::size_t i = 0; i < pattern.arity(); ++i) {
    const Term& p = pattern.args[i];
    const Term& t = target.args[i];
    if (p.is_constant()) {
      if (p != t) return false;
      continue;
    }
    auto [it, inserted] = sub.emplace(p.name(), t);
    if (!inserted && it->second != t) return false;
  }
  return true;
}

class Builder {
 public:
  Builder(const logic::KnowledgeBase& kb, const logic::Observation& obs, int depth_limit, std::size_t max_nodes)
      : kb_(kb), obs_(obs), max_nodes_(max_nodes) {
    g_.depth_limit = depth_limit;
    for (const auto& o : obs.atoms) {
      for (const auto& t : o.atom.args) {
        if (t.is_variable()) reserved_.insert(t.name());
      }
    }
    rule_order_.resize(kb.rules.size());
    std::iota(rule_order_.begin(), rule_order_.end(), std::size_t{0});
    std::sort(rule_order_.begin(), rule_order_.end(),
              [&](std::size_t a, std::size_t b) { return kb.rules[a].id < kb.rules[b].id; });
  }

  ProofGraph run() {
    for (const auto& o : obs_.atoms) {
      GraphNode n;
      n.atom = o.atom;
      n.cost = o.cost;
      n.depth = 0;
      n.origin = Origin::observation;
      n.obs_label = o.label;
      g_.nodes.push_back(std::move(n));
    }
    for (int d = 0; d < g_.depth_limit; ++d) {
      const std::size_t frontier_end = g_.nodes.size();
      bool any_at_depth = false;
      for (NodeId n = 0; n < frontier_end; ++n) any_at_depth |= g_.nodes[n].depth == d;
      if (!any_at_depth) break;
      for (std::size_t r : rule_order_) chain_rule(r, d, frontier_end);
    }
    add_unify_edges();
    g_.index();
    return std::move(g_);
  }

 private:
  void chain_rule(std::size_t rule_index, int depth, std::size_t frontier_end) {
    std::vector<NodeId> heads;
    Substitution sub;
    enumerate(rule_index, 0, depth, frontier_end, heads, sub);
  }

  // Depth-first over consequent positions; node ids ascend within each
  // position, so tuples come out in lexicographic order.
  void enumerate(std::size_t rule_index, std::size_t pos, int depth, std::size_t frontier_end,
                 std::vector<NodeId>& heads, Substitution& sub) {
    const auto& rule = kb_.rules[rule_index];
    if (pos == rule.consequents.size()) {
      bool touches_depth = false;
      for (NodeId h : heads) touches_depth |= g_.nodes[h].depth == depth;
      if (touches_depth) apply(rule_index, heads, sub);
      return;
    }
    for (NodeId n = 0; n < frontier_end; ++n) {
      if (g_.nodes[n].depth > depth) continue;
      if (std::find(heads.begin(), heads.end(), n) != heads.end()) continue;
      Substitution next = sub;
      if (!match(rule.consequents[pos], g_.nodes[n].atom, next)) continue;
      heads.push_back(n);
      enumerate(rule_index, pos + 1, depth, frontier_end, heads, next);
      heads.pop_back();
    }
  }

  void apply(std::size_t rule_index, const std::vector<NodeId>& heads, Substitution sub) {
    const auto& rule = kb_.rules[rule_index];
    if (!applied_.emplace(rule.id, heads).second) return;

    double head_cost = 0.0;
    int head_depth = 0;
    for (NodeId h : heads) {
      head_cost += g_.nodes[h].cost;
      head_depth = std::max(head_depth, g_.nodes[h].depth);
    }

    ChainEdge edge;
    edge.rule_id = rule.id;
    edge.rule_index = rule_index;
    edge.heads = heads;
    const EdgeId eid = g_.chain_edges.size();
    for (const auto& wa : rule.antecedents) {
      GraphNode n;
      n.atom.predicate = wa.atom.predicate;
      for (const auto& t : wa.atom.args) {
        if (t.is_constant()) {
          n.atom.args.push_back(t);
          continue;
        }
        auto it = sub.find(t.name());
        if (it == sub.end()) it = sub.emplace(t.name(), fresh_variable()).first;
        n.atom.args.push_back(it->second);
      }
      n.cost = head_cost * wa.weight;
      n.depth = head_depth + 1;
      n.origin = Origin::hypothesized;
      n.creator = eid;
      edge.tails.push_back(g_.nodes.size());
      g_.nodes.push_back(std::move(n));
      if (g_.nodes.size() > max_nodes_) throw std::length_error("proof graph exceeds the node limit");
    }
    edge.substitution = std::move(sub);
    g_.chain_edges.push_back(std::move(edge));
  }

  Term fresh_variable() {
    for (;;) {
      std::string name = fmt::format("u{}", ++fresh_counter_);
      if (!reserved_.contains(name)) return Term::variable(std::move(name));
    }
  }

  // ancestors[n][m] != 0 when m lies on a chain path from n back to the
  // observation. Nodes are created after their heads, so one forward pass
  // suffices.
  std::vector<std::vector<char>> ancestors() const {
    const std::size_t n_nodes = g_.nodes.size();
    std::vector<std::vector<char>> anc(n_nodes, std::vector<char>(n_nodes, 0));
    for (NodeId n = 0; n < n_nodes; ++n) {
      if (!g_.nodes[n].creator) continue;
      for (NodeId h : g_.chain_edges[*g_.nodes[n].creator].heads) {
        anc[n][h] = 1;
        for (NodeId m = 0; m < n_nodes; ++m) anc[n][m] |= anc[h][m];
      }
    }
    return anc;
  }

  void add_unify_edges() {
    const auto anc = ancestors();
    for (NodeId a = 0; a < g_.nodes.size(); ++a) {
      for (NodeId b = a + 1; b < g_.nodes.size(); ++b) {
        // Unifying a node with one it helps explain would let it explain
        // itself.
        if (anc[b][a] != 0) continue;
        auto eqs = logic::unify(g_.nodes[a].atom, g_.nodes[b].atom);
        if (!eqs) continue;
        const bool impossible = std::any_of(eqs->begin(), eqs->end(), [](const logic::Equality& e) {
          return e.first.is_constant() && e.second.is_constant();
        });
        if (impossible) continue;
        g_.unify_edges.push_back(UnifyEdge{a, b, std::move(*eqs)});
      }
    }
  }

  const logic::KnowledgeBase& kb_;
  const logic::Observation& obs_;
  std::size_t max_nodes_;
  ProofGraph g_;
  std::vector<std::size_t> rule_order_;
  std::set<std::pair<std::string, std::vector<NodeId>>> applied_;
  std::set<std::string> reserved_;
  std::size_t fresh_counter_ = 0;
};

}  // namespace

ProofGraph build_graph(const logic::KnowledgeBase& kb, const logic::Observation& obs, int depth_limit,
                       std::size_t max_nodes) {
  if (depth_limit < 0) throw std::invalid_argument("depth_limit must be non-negative");
  return Builder(kb, obs, depth_limit, max_nodes).run();
}

GraphStats graph_stats(const ProofGraph& g) {
  return GraphStats{g.nodes.size(), g.chain_edges.size(), g.unify_edges.size()};
}

}  // namespace ahrl::graph
