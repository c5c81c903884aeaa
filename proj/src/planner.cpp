#include "ahrl/planner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

namespace ahrl::planner {

using graph::EdgeId;
using graph::NodeId;

std::vector<std::string> Plan::labels() const {
  std::vector<std::string> out;
  out.reserve(subgoals.size());
  for (const auto& s : subgoals) out.push_back(s.label);
  return out;
}

const Plan* PlanCache::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void PlanCache::store(const std::string& key, Plan plan) { entries_.insert_or_assign(key, std::move(plan)); }

std::string to_kebab(const std::string& name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const auto c = static_cast<unsigned char>(name[i]);
    if (std::isupper(c) != 0) {
      if (i > 0 && name[i - 1] != '-' && name[i - 1] != '_') out += '-';
      out += static_cast<char>(std::tolower(c));
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string canonical_key(const logic::Observation& obs) {
  auto masked = [](const logic::ObservedAtom& o) {
    std::string s = o.label == logic::ObsLabel::goal_state ? "G:" : "I:";
    s += o.atom.predicate;
    s += '(';
    for (const auto& t : o.atom.args) {
      s += t.is_variable() ? std::string("?") : t.name();
      s += ',';
    }
    s += ")$";
    s += logic::format_real(o.cost);
    return s;
  };
  std::vector<std::pair<std::string, std::size_t>> order;
  for (std::size_t i = 0; i < obs.atoms.size(); ++i) order.emplace_back(masked(obs.atoms[i]), i);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::map<std::string, std::string> renamed;
  std::string key;
  for (const auto& [_, i] : order) {
    const auto& o = obs.atoms[i];
    key += o.label == logic::ObsLabel::goal_state ? "G:" : "I:";
    key += o.atom.predicate;
    key += '(';
    for (const auto& t : o.atom.args) {
      if (t.is_variable()) {
        auto [it, inserted] = renamed.emplace(t.name(), fmt::format("v{}", renamed.size()));
        key += it->second;
      } else {
        key += t.name();
      }
      key += ',';
    }
    key += ")$";
    key += logic::format_real(o.cost);
    key += ';';
  }
  return key;
}

namespace {

// Shortest distance from any goal observation, counting active chain edges
// as length 1 and active unify edges as length 0.
std::vector<int> goal_distances(const ilp::Hypothesis& h, const graph::ProofGraph& g) {
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> dist(g.nodes.size(), kInf);
  std::vector<std::vector<std::pair<NodeId, int>>> adj(g.nodes.size());
  for (EdgeId e : h.active_chain_edges) {
    for (NodeId hd : g.chain_edges[e].heads) {
      for (NodeId t : g.chain_edges[e].tails) adj[hd].emplace_back(t, 1);
    }
  }
  for (EdgeId k : h.active_unify_edges) {
    adj[g.unify_edges[k].a].emplace_back(g.unify_edges[k].b, 0);
    adj[g.unify_edges[k].b].emplace_back(g.unify_edges[k].a, 0);
  }
  std::deque<NodeId> queue;
  for (NodeId n = 0; n < g.nodes.size(); ++n) {
    if (g.nodes[n].obs_label == logic::ObsLabel::goal_state) {
      dist[n] = 0;
      queue.push_back(n);
    }
  }
  while (!queue.empty()) {
    const NodeId n = queue.front();
    queue.pop_front();
    for (const auto& [m, w] : adj[n]) {
      if (dist[n] + w < dist[m]) {
        dist[m] = dist[n] + w;
        if (w == 0) {
          queue.push_front(m);
        } else {
          queue.push_back(m);
        }
      }
    }
  }
  return dist;
}

}  // namespace

Plan extract_plan(const ilp::Hypothesis& h, const graph::ProofGraph& g, const logic::KnowledgeBase& kb) {
  Plan plan;
  plan.source_score = h.score;
  plan.optimal = h.optimal;
  const auto dist = goal_distances(h, g);

  std::vector<logic::Atom> initial_atoms;
  for (NodeId n : h.included) {
    if (g.nodes[n].obs_label == logic::ObsLabel::initial_state) initial_atoms.push_back(h.resolved_atom(g, n));
  }

  struct Candidate {
    NodeId node;
    int distance;
  };
  std::vector<Candidate> actions;
  for (NodeId n : h.included) {
    const auto* decl = kb.action_for(g.nodes[n].atom.predicate);
    if (decl == nullptr || dist[n] == std::numeric_limits<int>::max()) continue;
    const logic::Atom resolved = h.resolved_atom(g, n);
    if (std::find(initial_atoms.begin(), initial_atoms.end(), resolved) != initial_atoms.end()) continue;
    actions.push_back({n, dist[n]});
  }
  std::stable_sort(actions.begin(), actions.end(), [](const Candidate& a, const Candidate& b) {
    return a.distance != b.distance ? a.distance > b.distance : a.node < b.node;
  });

  std::set<std::string> seen;
  for (const auto& c : actions) {
    const auto& atom = g.nodes[c.node].atom;
    const auto* decl = kb.action_for(atom.predicate);
    Subgoal s;
    s.action = decl->display();
    s.action_predicate = atom.predicate;
    s.target = h.resolve(atom.args[decl->arg_index]);
    s.resolved = s.target.is_constant();
    s.graph_distance = c.distance;

    std::optional<std::string> descriptor;
    for (NodeId m : h.included) {
      const auto& other = g.nodes[m].atom;
      if (other.arity() != 1 || !kb.is_sort(other.predicate)) continue;
      if (h.resolve(other.args[0]) == s.target) {
        descriptor = other.predicate;
        break;
      }
    }
    s.label = decl->display() + "-" + descriptor.value_or(to_kebab(s.target.name()));
    if (seen.insert(s.label).second) plan.subgoals.push_back(std::move(s));
  }
  return plan;
}

Plan plan(const logic::KnowledgeBase& kb, const logic::Observation& obs, const PlannerConfig& cfg, PlanCache& cache,
          PlanTrace* trace) {
  const std::string key = canonical_key(obs);
  if (cfg.use_cache) {
    if (const Plan* hit = cache.find(key); hit != nullptr && hit->optimal) {
      cache.count_hit();
      if (trace != nullptr) trace->solved = false;
      return *hit;
    }
  }
  cache.count_miss();
  const auto start = std::chrono::steady_clock::now();
  auto g = graph::build_graph(kb, obs, cfg.depth_limit);
  const auto prob = ilp::encode(g, kb, ilp::EncodeOptions{cfg.reward_enabled, cfg.reward_sign});
  ilp::SolveStats stats;
  auto h = ilp::solve(prob, cfg.timeout_ms, &stats);
  Plan result = extract_plan(h, prob.graph, kb);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (cfg.use_cache) cache.store(key, result);
  if (trace != nullptr) {
    trace->solved = true;
    trace->graph = std::move(g);
    trace->hypothesis = std::move(h);
    trace->solve_stats = stats;
    trace->solver_ms = ms;
  }
  return result;
}

}  // namespace ahrl::planner
