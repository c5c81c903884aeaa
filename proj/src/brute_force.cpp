#include <algorithm>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "ahrl/ilp.hpp"

namespace ahrl::ilp {
namespace {

using logic::Term;

class Enumerator {
 public:
  Enumerator(const graph::ProofGraph& g, const logic::KnowledgeBase& kb, EncodeOptions options,
             std::uint64_t budget)
      : g_(g), kb_(kb), options_(options), budget_(budget) {
    g_.index();
    // Candidate terms and their connected components.
    std::map<Term, std::size_t> ids;
    std::vector<std::size_t> parent;
    auto id = [&](const Term& t) {
      auto [it, inserted] = ids.emplace(t, terms_.size());
      if (inserted) {
        terms_.push_back(t);
        parent.push_back(parent.size());
      }
      return it->second;
    };
    auto root = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i];
      return i;
    };
    for (const auto& ue : g_.unify_edges) {
      for (const auto& [a, b] : ue.equalities) parent[root(id(a))] = root(id(b));
    }
    term_index_ = ids;
    std::map<std::size_t, std::vector<std::size_t>> comps;
    for (std::size_t i = 0; i < terms_.size(); ++i) comps[root(i)].push_back(i);
    component_of_.assign(terms_.size(), 0);
    for (auto& [_, members] : comps) {
      for (std::size_t m : members) component_of_[m] = components_.size();
      components_.push_back(members);
    }
    block_.assign(terms_.size(), 0);
    included_.assign(g_.nodes.size(), 0);
    active_.assign(g_.chain_edges.size(), 0);
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (g_.nodes[n].origin == graph::Origin::observation) included_[n] = 1;
    }
  }

  Hypothesis run() {
    chains(0);
    if (!have_best_) throw std::logic_error("no feasible hypothesis");
    return best_;
  }

 private:
  static constexpr std::size_t kBlockSpan = 1'000'000;

  void chains(EdgeId e) {
    if (e == g_.chain_edges.size()) {
      assigned_.assign(terms_.size(), 0);
      if (hopeless()) return;
      mark_live_terms();
      partitions(0, 0);
      return;
    }
    const auto& edge = g_.chain_edges[e];
    chains(e + 1);
    const bool heads_in = std::all_of(edge.heads.begin(), edge.heads.end(), [&](NodeId h) { return included_[h] != 0; });
    if (!heads_in) return;
    active_[e] = 1;
    for (NodeId t : edge.tails) included_[t] = 1;
    chains(e + 1);
    active_[e] = 0;
    for (NodeId t : edge.tails) included_[t] = 0;
  }

  // Restricted-growth enumeration of the set partitions of each component.
  // Blocks are labelled (component index, block number).
  void partitions(std::size_t comp, std::size_t pos) {
    if (++visited_ > budget_) throw std::length_error("brute force search budget exceeded");
    if (comp == components_.size()) {
      evaluate();
      return;
    }
    const auto& members = components_[comp];
    if (pos == members.size()) {
      partitions(comp + 1, 0);
      return;
    }
    if (pos > 0 || comp > 0) {
      if (hopeless()) return;
      if (violated([this](const Term& a, const Term& b) { return settled_equal(a, b); })) return;
    }
    // A variable that occurs in no included node cannot change the outcome;
    // it keeps a block of its own.
    if (live_[members[pos]] == 0) {
      block_[members[pos]] = comp * kBlockSpan + kBlockSpan / 2 + pos;
      assigned_[members[pos]] = 1;
      partitions(comp, pos + 1);
      assigned_[members[pos]] = 0;
      return;
    }
    std::size_t max_block = 0;
    for (std::size_t i = 0; i < pos; ++i) {
      if (live_[members[i]] != 0) max_block = std::max(max_block, local_block(members[i]) + 1);
    }
    for (std::size_t b = 0; b <= max_block; ++b) {
      if (terms_[members[pos]].is_constant()) {
        bool clash = false;
        for (std::size_t i = 0; i < pos; ++i) {
          if (live_[members[i]] != 0 && local_block(members[i]) == b && terms_[members[i]].is_constant()) clash = true;
        }
        if (clash) continue;
      }
      block_[members[pos]] = comp * kBlockSpan + b;
      assigned_[members[pos]] = 1;
      partitions(comp, pos + 1);
      assigned_[members[pos]] = 0;
    }
  }

  std::size_t local_block(std::size_t term) const { return block_[term] % kBlockSpan; }

  // Constants stay live: reward and inconsistency patterns name them
  // directly.
  void mark_live_terms() {
    live_.assign(terms_.size(), 0);
    for (std::size_t i = 0; i < terms_.size(); ++i) live_[i] = terms_[i].is_constant() ? 1 : 0;
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (included_[n] == 0) continue;
      for (const auto& t : g_.nodes[n].atom.args) {
        if (auto it = term_index_.find(t); it != term_index_.end()) live_[it->second] = 1;
      }
    }
  }

  // True when some completion of the blocks assigned so far makes the two
  // terms equal.
  bool may_equal(const Term& a, const Term& b) const {
    if (a == b) return true;
    if (a.is_constant() && b.is_constant()) return false;
    auto ia = term_index_.find(a);
    auto ib = term_index_.find(b);
    if (ia == term_index_.end() || ib == term_index_.end()) return false;
    if (component_of_[ia->second] != component_of_[ib->second]) return false;
    if (assigned_[ia->second] != 0 && assigned_[ib->second] != 0) return block_[ia->second] == block_[ib->second];
    return true;
  }

  // Optimistic objective for the current chain choice and partial
  // partition: every node that may still unify is unified away and every
  // reward that may still match is earned. Prunes only when even that is
  // strictly worse than the best so far.
  bool hopeless() const {
    if (!have_best_) return false;
    const auto& nodes = g_.nodes;
    double cost = 0.0;
    for (NodeId n = 0; n < nodes.size(); ++n) {
      if (included_[n] == 0) continue;
      bool free = false;
      for (EdgeId e = 0; e < g_.chain_edges.size() && !free; ++e) {
        if (active_[e] == 0) continue;
        const auto& heads = g_.chain_edges[e].heads;
        free = std::find(heads.begin(), heads.end(), n) != heads.end();
      }
      for (const auto& ue : g_.unify_edges) {
        if (free) break;
        if (ue.a != n && ue.b != n) continue;
        const NodeId m = ue.a == n ? ue.b : ue.a;
        free = included_[m] != 0 && cheaper(m, n) &&
               std::all_of(ue.equalities.begin(), ue.equalities.end(),
                           [&](const logic::Equality& eq) { return may_equal(eq.first, eq.second); });
      }
      if (!free) cost += nodes[n].cost;
    }
    double reward = 0.0;
    if (options_.reward_enabled && options_.reward_sign > 0.0) {
      for (NodeId n = 0; n < nodes.size(); ++n) {
        if (included_[n] == 0) continue;
        for (const auto& decl : kb_.rewards) {
          const auto& atom = nodes[n].atom;
          if (decl.pattern.predicate != atom.predicate || decl.pattern.arity() != atom.arity()) continue;
          bool possible = true;
          for (std::size_t i = 0; i < atom.arity() && possible; ++i) possible = may_equal(decl.pattern.args[i], atom.args[i]);
          if (possible) reward += decl.reward;
        }
      }
    }
    const double bound = cost - options_.reward_sign * reward;
    if (!objectives_equal(bound, best_.objective)) return bound > best_.objective;
    // At best a tie on the objective: the node set is already fixed and the
    // equality count can only grow.
    std::vector<NodeId> included;
    for (NodeId n = 0; n < nodes.size(); ++n) {
      if (included_[n] != 0) included.push_back(n);
    }
    if (included.size() != best_.included.size()) return included.size() > best_.included.size();
    if (included != best_.included) return included > best_.included;
    return settled_equalities() > best_.equalities.size();
  }

  std::size_t settled_equalities() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (assigned_[i] == 0) continue;
      for (std::size_t j = i + 1; j < terms_.size(); ++j) {
        if (assigned_[j] != 0 && block_[i] == block_[j]) ++count;
      }
    }
    return count;
  }

  bool equal(const Term& a, const Term& b) const {
    if (a == b) return true;
    auto ia = term_index_.find(a);
    auto ib = term_index_.find(b);
    if (ia == term_index_.end() || ib == term_index_.end()) return false;
    return block_[ia->second] == block_[ib->second];
  }

  // Equal under every completion of the blocks assigned so far.
  bool settled_equal(const Term& a, const Term& b) const {
    if (a == b) return true;
    auto ia = term_index_.find(a);
    auto ib = term_index_.find(b);
    if (ia == term_index_.end() || ib == term_index_.end()) return false;
    return assigned_[ia->second] != 0 && assigned_[ib->second] != 0 && block_[ia->second] == block_[ib->second];
  }

  // Pattern matching modulo an equality test; shared variables bind through
  // `bindings` across both patterns of a declaration.
  template <typename Eq>
  bool matches(const logic::Atom& pattern, const logic::Atom& atom, std::map<std::string, Term>& bindings,
               Eq eq) const {
    if (pattern.predicate != atom.predicate || pattern.arity() != atom.arity()) return false;
    for (std::size_t i = 0; i < pattern.arity(); ++i) {
      const Term& p = pattern.args[i];
      const Term& t = atom.args[i];
      if (p.is_constant()) {
        if (!eq(p, t)) return false;
        continue;
      }
      auto [it, inserted] = bindings.emplace(p.name(), t);
      if (!inserted && !eq(it->second, t)) return false;
    }
    return true;
  }

  bool matches(const logic::Atom& pattern, const logic::Atom& atom, std::map<std::string, Term>& bindings) const {
    return matches(pattern, atom, bindings, [this](const Term& a, const Term& b) { return equal(a, b); });
  }

  // Some declared inconsistency holds whatever the unassigned terms become.
  template <typename Eq>
  bool violated(Eq eq) const {
    const auto& nodes = g_.nodes;
    for (const auto& decl : kb_.inconsistencies) {
      for (NodeId n = 0; n < nodes.size(); ++n) {
        if (included_[n] == 0) continue;
        for (NodeId m = 0; m < nodes.size(); ++m) {
          if (m == n || included_[m] == 0) continue;
          if (nodes[n].origin == graph::Origin::observation && nodes[m].origin == graph::Origin::observation) continue;
          std::map<std::string, Term> bindings;
          if (matches(decl.first, nodes[n].atom, bindings, eq) && matches(decl.second, nodes[m].atom, bindings, eq)) {
            return true;
          }
        }
      }
    }
    return false;
  }

  bool cheaper(NodeId m, NodeId n) const {
    const double cm = g_.nodes[m].cost;
    const double cn = g_.nodes[n].cost;
    return cm < cn || (cm == cn && m < n);
  }

  bool unify_holds(const graph::UnifyEdge& ue) const {
    return std::all_of(ue.equalities.begin(), ue.equalities.end(),
                       [&](const logic::Equality& eq) { return equal(eq.first, eq.second); });
  }

  void evaluate() {
    const auto& nodes = g_.nodes;
    if (violated([this](const Term& a, const Term& b) { return equal(a, b); })) return;

    Hypothesis h;
    double cost = 0.0;
    for (NodeId n = 0; n < nodes.size(); ++n) {
      if (included_[n] == 0) continue;
      h.included.push_back(n);
      bool explained = false;
      for (EdgeId e = 0; e < g_.chain_edges.size() && !explained; ++e) {
        if (active_[e] == 0) continue;
        const auto& heads = g_.chain_edges[e].heads;
        explained = std::find(heads.begin(), heads.end(), n) != heads.end();
      }
      for (const auto& ue : g_.unify_edges) {
        if (explained) break;
        if (ue.a != n && ue.b != n) continue;
        const NodeId m = ue.a == n ? ue.b : ue.a;
        explained = included_[m] != 0 && cheaper(m, n) && unify_holds(ue);
      }
      if (!explained) {
        h.paid.push_back(n);
        cost += nodes[n].cost;
      }
    }
    double reward = 0.0;
    if (options_.reward_enabled) {
      for (NodeId n = 0; n < nodes.size(); ++n) {
        if (included_[n] == 0) continue;
        for (const auto& decl : kb_.rewards) {
          std::map<std::string, Term> bindings;
          if (matches(decl.pattern, nodes[n].atom, bindings)) reward += decl.reward;
        }
      }
    }
    const double sign = options_.reward_sign;
    h.cost = cost;
    h.reward = reward;
    h.objective = cost - sign * reward;
    h.score = -cost + sign * reward;
    h.reward_sign = sign;
    if (have_best_ && !objectives_equal(h.objective, best_.objective) && h.objective > best_.objective) return;

    for (EdgeId e = 0; e < g_.chain_edges.size(); ++e) {
      if (active_[e] != 0) h.active_chain_edges.push_back(e);
    }
    for (EdgeId k = 0; k < g_.unify_edges.size(); ++k) {
      const auto& ue = g_.unify_edges[k];
      if (included_[ue.a] != 0 && included_[ue.b] != 0 && unify_holds(ue)) h.active_unify_edges.push_back(k);
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      for (std::size_t j = 0; j < terms_.size(); ++j) {
        if (i == j || !(terms_[i] < terms_[j])) continue;
        if (block_[i] == block_[j]) h.equalities.emplace_back(terms_[i], terms_[j]);
      }
    }
    std::sort(h.equalities.begin(), h.equalities.end());
    if (!have_best_ || better_than(h, best_)) {
      best_ = std::move(h);
      have_best_ = true;
    }
  }

  graph::ProofGraph g_;
  const logic::KnowledgeBase& kb_;
  EncodeOptions options_;
  std::uint64_t budget_;

  std::vector<Term> terms_;
  std::map<Term, std::size_t> term_index_;
  std::vector<std::vector<std::size_t>> components_;
  std::vector<std::size_t> block_;
  std::vector<std::size_t> component_of_;
  std::vector<char> live_;
  std::vector<char> assigned_;

  std::vector<char> included_;
  std::vector<char> active_;

  Hypothesis best_;
  bool have_best_ = false;
  std::uint64_t visited_ = 0;
};

}  // namespace

Hypothesis brute_force_solve(const graph::ProofGraph& g, const logic::KnowledgeBase& kb, EncodeOptions options,
                             std::size_t node_guard, std::uint64_t search_budget) {
  if (g.nodes.size() > node_guard) {
    throw std::length_error(fmt::format("brute force limited to {} nodes, graph has {}", node_guard, g.nodes.size()));
  }
  return Enumerator(g, kb, options, search_budget).run();
}

}  // namespace ahrl::ilp
