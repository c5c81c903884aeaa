#include "ahrl/ilp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace ahrl::ilp {

using logic::Term;

namespace {

std::pair<Term, Term> normalized(const Term& a, const Term& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

class TermUnionFind {
 public:
  std::size_t id(const Term& t) {
    auto [it, inserted] = index_.emplace(t, terms_.size());
    if (inserted) {
      terms_.push_back(t);
      parent_.push_back(parent_.size());
    }
    return it->second;
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::map<Term, std::size_t> index_;
  std::vector<Term> terms_;
  std::vector<std::size_t> parent_;
};

// Collects the equalities needed for `pattern` to describe `node` given
// pattern-variable bindings shared across calls. Returns false when the
// pattern can never match.
bool bind_pattern(const logic::Atom& pattern, const logic::Atom& node,
                  std::map<std::string, Term>& bindings, std::vector<std::pair<Term, Term>>& needs) {
  if (pattern.predicate != node.predicate || pattern.arity() != node.arity()) return false;
  for (std::size_t i = 0; i < pattern.arity(); ++i) {
    const Term& p = pattern.args[i];
    const Term& t = node.args[i];
    if (p.is_constant()) {
      if (t.is_constant() && t != p) return false;
      if (t != p) needs.emplace_back(p, t);
      continue;
    }
    auto [it, inserted] = bindings.emplace(p.name(), t);
    if (!inserted && it->second != t) {
      if (it->second.is_constant() && t.is_constant()) return false;
      needs.emplace_back(it->second, t);
    }
  }
  return true;
}

}  // namespace

std::optional<std::size_t> IlpProblem::pair_index(const Term& a, const Term& b) const {
  auto it = pair_lookup_.find(normalized(a, b));
  if (it == pair_lookup_.end()) return std::nullopt;
  return it->second;
}

IlpProblem encode(const graph::ProofGraph& g, const logic::KnowledgeBase& kb, EncodeOptions options) {
  IlpProblem prob;
  prob.graph = g;
  prob.graph.index();
  prob.options = options;
  const auto& nodes = prob.graph.nodes;

  // Equality candidates: the closure of the pairs named by unify edges.
  TermUnionFind uf;
  for (const auto& ue : g.unify_edges) {
    for (const auto& [a, b] : ue.equalities) uf.unite(uf.id(a), uf.id(b));
  }
  std::map<std::size_t, std::vector<Term>> components;
  for (std::size_t i = 0; i < uf.terms().size(); ++i) components[uf.find(i)].push_back(uf.terms()[i]);
  std::vector<std::pair<Term, Term>> pair_list;
  for (auto& [_, members] : components) {
    std::sort(members.begin(), members.end());
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        if (members[i].is_constant() && members[j].is_constant()) continue;
        pair_list.emplace_back(members[i], members[j]);
      }
    }
  }
  std::sort(pair_list.begin(), pair_list.end());
  for (const auto& [a, b] : pair_list) {
    prob.pair_lookup_.emplace(std::pair{a, b}, prob.pairs.size());
    prob.pairs.push_back(EqualityPair{a, b});
  }

  for (const auto& ue : prob.graph.unify_edges) {
    std::vector<std::size_t> req;
    for (const auto& [a, b] : ue.equalities) req.push_back(*prob.pair_index(a, b));
    std::sort(req.begin(), req.end());
    req.erase(std::unique(req.begin(), req.end()), req.end());
    prob.unify_requirements.push_back(std::move(req));
  }

  // Resolves needed equalities to pair indices; false if one can never hold.
  auto resolve_needs = [&](const std::vector<std::pair<Term, Term>>& needs, std::vector<std::size_t>& out) {
    for (const auto& [a, b] : needs) {
      if (a == b) continue;
      auto idx = prob.pair_index(a, b);
      if (!idx) return false;
      out.push_back(*idx);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return true;
  };

  std::set<std::tuple<NodeId, NodeId, std::vector<std::size_t>>> seen;
  for (const auto& decl : kb.inconsistencies) {
    for (NodeId n = 0; n < nodes.size(); ++n) {
      for (NodeId m = 0; m < nodes.size(); ++m) {
        if (n == m) continue;
        if (nodes[n].origin == graph::Origin::observation && nodes[m].origin == graph::Origin::observation) continue;
        std::map<std::string, Term> bindings;
        std::vector<std::pair<Term, Term>> needs;
        if (!bind_pattern(decl.first, nodes[n].atom, bindings, needs)) continue;
        if (!bind_pattern(decl.second, nodes[m].atom, bindings, needs)) continue;
        std::vector<std::size_t> req;
        if (!resolve_needs(needs, req)) continue;
        if (!seen.emplace(std::min(n, m), std::max(n, m), req).second) continue;
        prob.inconsistencies.push_back(InconsistencyInstance{std::min(n, m), std::max(n, m), std::move(req)});
      }
    }
  }

  if (options.reward_enabled) {
    for (NodeId n = 0; n < nodes.size(); ++n) {
      for (std::size_t d = 0; d < kb.rewards.size(); ++d) {
        std::map<std::string, Term> bindings;
        std::vector<std::pair<Term, Term>> needs;
        if (!bind_pattern(kb.rewards[d].pattern, nodes[n].atom, bindings, needs)) continue;
        std::vector<std::size_t> req;
        if (!resolve_needs(needs, req)) continue;
        prob.rewards.push_back(RewardInstance{n, d, kb.rewards[d].reward, std::move(req)});
      }
    }
  }

  // Variables.
  auto add_var = [&](VarKind kind, std::size_t ref, std::string name) {
    prob.vars.push_back(Variable{kind, ref, std::nullopt, 0.0, std::move(name)});
  };
  prob.node_base_ = prob.vars.size();
  for (NodeId n = 0; n < nodes.size(); ++n) {
    add_var(VarKind::node, n, fmt::format("x_{}", n));
    if (nodes[n].origin == graph::Origin::observation) prob.vars.back().fixed = 1;
  }
  prob.chain_base_ = prob.vars.size();
  for (EdgeId e = 0; e < g.chain_edges.size(); ++e) add_var(VarKind::chain, e, fmt::format("c_{}", e));
  prob.unify_base_ = prob.vars.size();
  for (EdgeId e = 0; e < g.unify_edges.size(); ++e) add_var(VarKind::unify, e, fmt::format("u_{}", e));
  prob.equality_base_ = prob.vars.size();
  for (std::size_t q = 0; q < prob.pairs.size(); ++q) add_var(VarKind::equality, q, fmt::format("q_{}", q));
  prob.pay_base_ = prob.vars.size();
  for (NodeId n = 0; n < nodes.size(); ++n) {
    add_var(VarKind::pay, n, fmt::format("p_{}", n));
    prob.vars.back().objective = nodes[n].cost;
  }
  prob.reward_base_ = prob.vars.size();
  for (std::size_t i = 0; i < prob.rewards.size(); ++i) {
    add_var(VarKind::reward, i, fmt::format("r_{}", i));
    prob.vars.back().objective = -options.reward_sign * prob.rewards[i].reward;
  }

  // Constraints.
  auto add = [&](std::vector<LinearTerm> terms, Sense sense, double rhs, std::string tag) {
    prob.constraints.push_back(Constraint{std::move(terms), sense, rhs, std::move(tag)});
  };
  const auto& chains = prob.graph.chain_edges;
  for (NodeId n = 0; n < nodes.size(); ++n) {
    if (nodes[n].creator) {
      add({{prob.node_var(n), 1.0}, {prob.chain_var(*nodes[n].creator), -1.0}}, Sense::eq, 0.0,
          fmt::format("created_{}", n));
    }
  }
  for (EdgeId e = 0; e < chains.size(); ++e) {
    for (NodeId h : chains[e].heads) {
      add({{prob.chain_var(e), 1.0}, {prob.node_var(h), -1.0}}, Sense::le, 0.0, fmt::format("chain_head_{}_{}", e, h));
    }
  }
  const auto& unifies = prob.graph.unify_edges;
  for (EdgeId k = 0; k < unifies.size(); ++k) {
    const auto& req = prob.unify_requirements[k];
    add({{prob.unify_var(k), 1.0}, {prob.node_var(unifies[k].a), -1.0}}, Sense::le, 0.0, fmt::format("unify_a_{}", k));
    add({{prob.unify_var(k), 1.0}, {prob.node_var(unifies[k].b), -1.0}}, Sense::le, 0.0, fmt::format("unify_b_{}", k));
    std::vector<LinearTerm> implied{{prob.node_var(unifies[k].a), 1.0}, {prob.node_var(unifies[k].b), 1.0},
                                    {prob.unify_var(k), -1.0}};
    for (std::size_t q : req) {
      add({{prob.unify_var(k), 1.0}, {prob.equality_var(q), -1.0}}, Sense::le, 0.0, fmt::format("unify_eq_{}_{}", k, q));
      implied.push_back({prob.equality_var(q), 1.0});
    }
    add(std::move(implied), Sense::le, 1.0 + static_cast<double>(req.size()), fmt::format("unify_implied_{}", k));
  }

  // Transitivity over each component; a missing pair (two constants) is 0.
  for (auto& [_, members] : components) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = 0; j < members.size(); ++j) {
        for (std::size_t k = 0; k < members.size(); ++k) {
          if (i == j || j == k || i == k || i > k) continue;
          auto ij = prob.pair_index(members[i], members[j]);
          auto jk = prob.pair_index(members[j], members[k]);
          auto ik = prob.pair_index(members[i], members[k]);
          if (!ij || !jk) continue;
          std::vector<LinearTerm> t{{prob.equality_var(*ij), 1.0}, {prob.equality_var(*jk), 1.0}};
          if (ik) t.push_back({prob.equality_var(*ik), -1.0});
          add(std::move(t), Sense::le, 1.0, fmt::format("trans_{}_{}_{}", i, j, k));
        }
      }
    }
  }

  for (NodeId n = 0; n < nodes.size(); ++n) {
    std::vector<LinearTerm> t{{prob.node_var(n), 1.0}, {prob.pay_var(n), -1.0}};
    for (EdgeId e : prob.graph.explainers(n)) t.push_back({prob.chain_var(e), -1.0});
    for (EdgeId k : prob.graph.unifiers(n)) {
      const NodeId m = unifies[k].a == n ? unifies[k].b : unifies[k].a;
      const bool cheaper = nodes[m].cost < nodes[n].cost || (nodes[m].cost == nodes[n].cost && m < n);
      if (cheaper) t.push_back({prob.unify_var(k), -1.0});
    }
    add(std::move(t), Sense::le, 0.0, fmt::format("pay_{}", n));
    add({{prob.pay_var(n), 1.0}, {prob.node_var(n), -1.0}}, Sense::le, 0.0, fmt::format("pay_only_included_{}", n));
  }

  for (std::size_t i = 0; i < prob.inconsistencies.size(); ++i) {
    const auto& inc = prob.inconsistencies[i];
    std::vector<LinearTerm> t{{prob.node_var(inc.first), 1.0}, {prob.node_var(inc.second), 1.0}};
    for (std::size_t q : inc.required_pairs) t.push_back({prob.equality_var(q), 1.0});
    add(std::move(t), Sense::le, 1.0 + static_cast<double>(inc.required_pairs.size()), fmt::format("inconsistent_{}", i));
  }

  for (std::size_t i = 0; i < prob.rewards.size(); ++i) {
    const auto& rw = prob.rewards[i];
    add({{prob.reward_var(i), 1.0}, {prob.node_var(rw.node), -1.0}}, Sense::le, 0.0, fmt::format("reward_node_{}", i));
    std::vector<LinearTerm> lower{{prob.reward_var(i), 1.0}, {prob.node_var(rw.node), -1.0}};
    for (std::size_t q : rw.required_pairs) {
      add({{prob.reward_var(i), 1.0}, {prob.equality_var(q), -1.0}}, Sense::le, 0.0, fmt::format("reward_eq_{}_{}", i, q));
      lower.push_back({prob.equality_var(q), -1.0});
    }
    add(std::move(lower), Sense::ge, -static_cast<double>(rw.required_pairs.size()), fmt::format("reward_implied_{}", i));
  }
  return prob;
}

bool IlpProblem::satisfied_by(const std::vector<std::uint8_t>& assignment) const {
  if (assignment.size() != vars.size()) return false;
  for (std::size_t v = 0; v < vars.size(); ++v) {
    if (assignment[v] > 1) return false;
    if (vars[v].fixed && *vars[v].fixed != assignment[v]) return false;
  }
  for (const auto& c : constraints) {
    double lhs = 0.0;
    for (const auto& t : c.terms) lhs += t.coef * assignment[t.var];
    constexpr double tol = 1e-9;
    switch (c.sense) {
      case Sense::le:
        if (lhs > c.rhs + tol) return false;
        break;
      case Sense::ge:
        if (lhs < c.rhs - tol) return false;
        break;
      case Sense::eq:
        if (std::abs(lhs - c.rhs) > tol) return false;
        break;
    }
  }
  return true;
}

double IlpProblem::objective_value(const std::vector<std::uint8_t>& assignment) const {
  double cost = 0.0;
  for (NodeId n = 0; n < graph.nodes.size(); ++n) {
    if (assignment[pay_var(n)] != 0) cost += graph.nodes[n].cost;
  }
  double reward = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (assignment[reward_var(i)] != 0) reward += rewards[i].reward;
  }
  return cost - options.reward_sign * reward;
}

std::string IlpProblem::to_lp() const {
  auto fmt_terms = [&](const std::vector<LinearTerm>& terms) {
    std::string s;
    for (const auto& t : terms) {
      if (t.coef == 0.0) continue;
      const bool neg = t.coef < 0.0;
      if (s.empty()) {
        s += neg ? "- " : "";
      } else {
        s += neg ? " - " : " + ";
      }
      const double mag = std::abs(t.coef);
      if (mag != 1.0) s += logic::format_real(mag) + " ";
      s += vars[t.var].name;
    }
    return s.empty() ? std::string("0") : s;
  };
  std::string out = "\\ solution-hypothesis selection\nMinimize\n obj: ";
  std::vector<LinearTerm> obj;
  for (std::size_t v = 0; v < vars.size(); ++v) {
    if (vars[v].objective != 0.0) obj.push_back({v, vars[v].objective});
  }
  out += fmt_terms(obj);
  out += "\nSubject To\n";
  for (const auto& c : constraints) {
    const char* op = c.sense == Sense::le ? "<=" : c.sense == Sense::ge ? ">=" : "=";
    out += fmt::format(" {}: {} {} {}\n", c.tag, fmt_terms(c.terms), op, logic::format_real(c.rhs));
  }
  for (const auto& v : vars) {
    if (v.fixed) out += fmt::format(" fix_{}: {} = {}\n", v.name, v.name, *v.fixed);
  }
  out += "Binaries\n";
  for (const auto& v : vars) out += " " + v.name + "\n";
  out += "End\n";
  return out;
}

bool Hypothesis::includes(NodeId n) const { return std::binary_search(included.begin(), included.end(), n); }

Term Hypothesis::resolve(const Term& t) const {
  Term best = t;
  bool have_constant = t.is_constant();
  for (const auto& [a, b] : equalities) {
    const Term* other = nullptr;
    if (a == t) other = &b;
    if (b == t) other = &a;
    if (other == nullptr) continue;
    if (other->is_constant() && !have_constant) {
      best = *other;
      have_constant = true;
    } else if (other->is_constant() == have_constant && *other < best) {
      best = *other;
    }
  }
  return best;
}

logic::Atom Hypothesis::resolved_atom(const graph::ProofGraph& g, NodeId n) const {
  logic::Atom a = g.nodes[n].atom;
  for (auto& t : a.args) t = resolve(t);
  return a;
}

bool objectives_equal(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= 1e-9 * scale;
}

bool better_than(const Hypothesis& a, const Hypothesis& b) {
  if (!objectives_equal(a.objective, b.objective)) return a.objective < b.objective;
  if (a.included.size() != b.included.size()) return a.included.size() < b.included.size();
  if (a.included != b.included) return a.included < b.included;
  if (a.equalities.size() != b.equalities.size()) return a.equalities.size() < b.equalities.size();
  return a.equalities < b.equalities;
}

double evaluate(const Hypothesis& h) { return -h.cost + h.reward_sign * h.reward; }

std::vector<std::uint8_t> to_assignment(const IlpProblem& prob, const Hypothesis& h) {
  std::vector<std::uint8_t> x(prob.vars.size(), 0);
  for (NodeId n : h.included) x[prob.node_var(n)] = 1;
  for (EdgeId e : h.active_chain_edges) x[prob.chain_var(e)] = 1;
  for (EdgeId e : h.active_unify_edges) x[prob.unify_var(e)] = 1;
  for (NodeId n : h.paid) x[prob.pay_var(n)] = 1;
  for (const auto& [a, b] : h.equalities) {
    if (auto q = prob.pair_index(a, b)) x[prob.equality_var(*q)] = 1;
  }
  for (std::size_t i = 0; i < prob.rewards.size(); ++i) {
    const auto& rw = prob.rewards[i];
    bool earned = x[prob.node_var(rw.node)] != 0;
    for (std::size_t q : rw.required_pairs) earned = earned && x[prob.equality_var(q)] != 0;
    x[prob.reward_var(i)] = earned ? 1 : 0;
  }
  return x;
}

}  // namespace ahrl::ilp
