#include <algorithm>
#include <chrono>
#include <numeric>

#include "ahrl/ilp.hpp"

namespace ahrl::ilp {
namespace {

constexpr std::int8_t kUndecided = -1;

class BranchAndBound {
 public:
  BranchAndBound(const IlpProblem& prob, int timeout_ms)
      : prob_(prob),
        g_(prob.graph),
        deadline_(std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms)) {
    const std::size_t n_nodes = g_.nodes.size();
    cheaper_partners_.resize(n_nodes);
    for (NodeId n = 0; n < n_nodes; ++n) {
      for (EdgeId k : g_.unifiers(n)) {
        const auto& ue = g_.unify_edges[k];
        const NodeId m = ue.a == n ? ue.b : ue.a;
        if (cheaper(m, n)) cheaper_partners_[n].push_back({m, k});
      }
    }
    hard_conflicts_.resize(n_nodes);
    for (const auto& inc : prob_.inconsistencies) {
      if (!inc.required_pairs.empty()) continue;
      hard_conflicts_[inc.first].push_back(inc.second);
      hard_conflicts_[inc.second].push_back(inc.first);
    }
    build_reward_cliques();
    index_terms();
  }

  Hypothesis run(SolveStats* stats) {
    xs_.assign(g_.nodes.size(), kUndecided);
    cs_.assign(g_.chain_edges.size(), kUndecided);
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (!g_.nodes[n].creator) {
        xs_[n] = 1;
        ++included_count_;
      }
    }
    // Root incumbent: every observation assumed, nothing chained.
    {
      auto xs = xs_;
      auto cs = cs_;
      std::replace(xs_.begin(), xs_.end(), kUndecided, std::int8_t{0});
      std::fill(cs_.begin(), cs_.end(), std::int8_t{0});
      reset_classes();
      evaluate_leaf();
      xs_ = std::move(xs);
      cs_ = std::move(cs);
    }
    chain_phase(0);
    incumbent_.optimal = !timed_out_;
    if (stats != nullptr) {
      stats->branch_nodes = expansions_;
      stats->timed_out = timed_out_;
    }
    return incumbent_;
  }

 private:
  bool cheaper(NodeId m, NodeId n) const {
    const double cm = g_.nodes[m].cost;
    const double cn = g_.nodes[n].cost;
    return cm < cn || (cm == cn && m < n);
  }

  // Greedy clique cover of reward-bearing nodes under unconditional
  // conflicts; each clique contributes at most its best reward.
  void build_reward_cliques() {
    reward_by_node_.assign(g_.nodes.size(), 0.0);
    rewards_at_.resize(g_.nodes.size());
    for (std::size_t i = 0; i < prob_.rewards.size(); ++i) {
      const auto& rw = prob_.rewards[i];
      rewards_at_[rw.node].push_back(i);
      if (rw.reward > 0.0) reward_by_node_[rw.node] += rw.reward;
    }
    std::vector<NodeId> order;
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (reward_by_node_[n] > 0.0) order.push_back(n);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](NodeId a, NodeId b) { return reward_by_node_[a] > reward_by_node_[b]; });
    for (NodeId n : order) {
      bool placed = false;
      for (auto& clique : cliques_) {
        const bool all = std::all_of(clique.begin(), clique.end(), [&](NodeId m) {
          const auto& hc = hard_conflicts_[n];
          return std::find(hc.begin(), hc.end(), m) != hc.end();
        });
        if (all) {
          clique.push_back(n);
          placed = true;
          break;
        }
      }
      if (!placed) cliques_.push_back({n});
    }
  }

  void index_terms() {
    std::map<logic::Term, std::size_t> ids;
    auto id = [&](const logic::Term& t) {
      auto [it, inserted] = ids.emplace(t, term_is_constant_.size());
      if (inserted) term_is_constant_.push_back(t.is_constant());
      return it->second;
    };
    for (const auto& p : prob_.pairs) pair_terms_.emplace_back(id(p.first), id(p.second));
  }

  bool out_of_time() {
    if ((++expansions_ & 1023u) == 0 && std::chrono::steady_clock::now() > deadline_) timed_out_ = true;
    return timed_out_;
  }

  double lower_bound(EdgeId next_edge) const {
    double cost = 0.0;
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (xs_[n] != 1) continue;
      bool possible = false;
      for (EdgeId e : g_.explainers(n)) {
        if (cs_[e] == 1) {
          possible = true;
          break;
        }
        if (e >= next_edge) {
          const auto& heads = g_.chain_edges[e].heads;
          if (std::all_of(heads.begin(), heads.end(), [&](NodeId h) { return xs_[h] != 0; })) {
            possible = true;
            break;
          }
        }
      }
      if (!possible) {
        for (const auto& [m, _] : cheaper_partners_[n]) {
          if (xs_[m] != 0) {
            possible = true;
            break;
          }
        }
      }
      if (!possible) cost += g_.nodes[n].cost;
    }
    if (prob_.options.reward_sign <= 0.0) return cost;
    double reward = 0.0;
    for (const auto& clique : cliques_) {
      double best = 0.0;
      for (NodeId n : clique) {
        if (xs_[n] != 0) best = std::max(best, reward_by_node_[n]);
      }
      reward += best;
    }
    return cost - prob_.options.reward_sign * reward;
  }

  bool prunable(double bound) const {
    const double inc = incumbent_.objective;
    if (objectives_equal(bound, inc)) return included_count_ > incumbent_.included.size();
    return bound > inc;
  }

  void chain_phase(EdgeId e) {
    if (out_of_time()) return;
    if (e == cs_.size()) {
      equality_phase_start();
      return;
    }
    if (prunable(lower_bound(e))) return;
    const auto& edge = g_.chain_edges[e];
    const bool heads_in = std::all_of(edge.heads.begin(), edge.heads.end(), [&](NodeId h) { return xs_[h] == 1; });
    if (heads_in && activate(e)) {
      chain_phase(e + 1);
      deactivate(e);
    }
    cs_[e] = 0;
    for (NodeId t : edge.tails) xs_[t] = 0;
    chain_phase(e + 1);
    cs_[e] = kUndecided;
    for (NodeId t : edge.tails) xs_[t] = kUndecided;
  }

  bool activate(EdgeId e) {
    const auto& tails = g_.chain_edges[e].tails;
    for (NodeId t : tails) {
      for (NodeId m : hard_conflicts_[t]) {
        if (xs_[m] == 1) return false;
      }
    }
    cs_[e] = 1;
    for (NodeId t : tails) xs_[t] = 1;
    included_count_ += tails.size();
    return true;
  }

  void deactivate(EdgeId e) {
    const auto& tails = g_.chain_edges[e].tails;
    cs_[e] = kUndecided;
    for (NodeId t : tails) xs_[t] = kUndecided;
    included_count_ -= tails.size();
  }

  // Equality decisions range only over pairs that can change the objective:
  // pairs needed to unify away an unexplained node, or to earn a reward.
  // Any other equality can only add constraints.
  void equality_phase_start() {
    std::vector<char> useful(prob_.pairs.size(), 0);
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (xs_[n] != 1 || explained_by_chain(n)) continue;
      for (const auto& [m, k] : cheaper_partners_[n]) {
        if (xs_[m] != 1) continue;
        for (std::size_t q : prob_.unify_requirements[k]) useful[q] = 1;
      }
    }
    if (prob_.options.reward_sign > 0.0) {
      for (const auto& rw : prob_.rewards) {
        if (rw.reward <= 0.0 || xs_[rw.node] != 1) continue;
        for (std::size_t q : rw.required_pairs) useful[q] = 1;
      }
    }
    useful_pairs_.clear();
    for (std::size_t q = 0; q < useful.size(); ++q) {
      if (useful[q] != 0) useful_pairs_.push_back(q);
    }
    phase_included_.clear();
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (xs_[n] == 1) phase_included_.push_back(n);
    }
    reset_classes();
    if (inconsistent()) return;
    equality_phase(0);
  }

  bool explained_by_chain(NodeId n) const {
    for (EdgeId e : g_.explainers(n)) {
      if (cs_[e] == 1) return true;
    }
    return false;
  }

  void reset_classes() {
    parent_.resize(term_is_constant_.size());
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    constant_of_.assign(term_is_constant_.size(), -1);
    for (std::size_t t = 0; t < term_is_constant_.size(); ++t) {
      if (term_is_constant_[t]) constant_of_[t] = static_cast<long>(t);
    }
    trail_.clear();
    distinct_.clear();
  }

  std::size_t find(std::size_t t) const {
    while (parent_[t] != t) t = parent_[t];
    return t;
  }

  void merge(std::size_t ra, std::size_t rb) {
    trail_.push_back({ra, constant_of_[rb]});
    parent_[ra] = rb;
    if (constant_of_[rb] < 0) constant_of_[rb] = constant_of_[ra];
  }

  void rollback(std::size_t mark) {
    while (trail_.size() > mark) {
      const auto [child, saved_const] = trail_.back();
      trail_.pop_back();
      constant_of_[parent_[child]] = saved_const;
      parent_[child] = child;
    }
  }

  bool inconsistent() const {
    for (const auto& inc : prob_.inconsistencies) {
      if (xs_[inc.first] == 1 && xs_[inc.second] == 1 && all_equal(inc.required_pairs)) return true;
    }
    return false;
  }

  bool separated(std::size_t ra, std::size_t rb, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) const {
    return std::any_of(pairs.begin(), pairs.end(), [&](const auto& d) {
      const std::size_t x = find(d.first);
      const std::size_t y = find(d.second);
      return (x == ra && y == rb) || (x == rb && y == ra);
    });
  }

  void equality_phase(std::size_t i) {
    if (out_of_time()) return;
    if (i == useful_pairs_.size()) {
      evaluate_leaf();
      return;
    }
    if (equality_prunable(equality_bound())) return;
    const auto [a, b] = pair_terms_[useful_pairs_[i]];
    const std::size_t ra = find(a);
    const std::size_t rb = find(b);
    if (ra == rb) {
      equality_phase(i + 1);
      return;
    }
    const bool constants_clash = constant_of_[ra] >= 0 && constant_of_[rb] >= 0;
    if (!constants_clash && !separated(ra, rb, distinct_)) {
      const std::size_t mark = trail_.size();
      merge(ra, rb);
      if (!inconsistent()) equality_phase(i + 1);
      rollback(mark);
    }
    distinct_.emplace_back(a, b);
    equality_phase(i + 1);
    distinct_.pop_back();
  }

  // Like prunable, but the node set is final here and equalities only
  // accumulate, so a tie with the incumbent is settled by the same order
  // better_than uses.
  bool equality_prunable(double bound) const {
    const double inc = incumbent_.objective;
    if (!objectives_equal(bound, inc)) return bound > inc;
    const auto& other = incumbent_.included;
    if (phase_included_.size() != other.size()) return phase_included_.size() > other.size();
    if (phase_included_ != other) return other < phase_included_;
    std::size_t equal = 0;
    for (std::size_t q = 0; q < prob_.pairs.size(); ++q) equal += pair_equal(q) ? 1 : 0;
    return equal > incumbent_.equalities.size();
  }

  // Class pairs that can never be merged below this point: explicit
  // distinct decisions, plus the last missing pair of an inconsistency
  // whose nodes are both included.
  void collect_blocked() {
    blocked_ = distinct_;
    for (const auto& inc : prob_.inconsistencies) {
      if (xs_[inc.first] != 1 || xs_[inc.second] != 1) continue;
      std::optional<std::size_t> missing;
      bool more = false;
      for (std::size_t q : inc.required_pairs) {
        if (pair_equal(q)) continue;
        if (missing) {
          more = true;
          break;
        }
        missing = q;
      }
      if (missing && !more) blocked_.push_back(pair_terms_[*missing]);
    }
  }

  bool pair_possible(std::size_t q) const {
    const auto [a, b] = pair_terms_[q];
    const std::size_t ra = find(a);
    const std::size_t rb = find(b);
    if (ra == rb) return true;
    if (constant_of_[ra] >= 0 && constant_of_[rb] >= 0) return false;
    return !separated(ra, rb, blocked_);
  }

  bool all_possible(const std::vector<std::size_t>& req) const {
    return std::all_of(req.begin(), req.end(), [&](std::size_t q) { return pair_possible(q); });
  }

  // Node choices are final here; only unifications and rewards that some
  // completion of the equality decisions can still reach are counted.
  double equality_bound() {
    collect_blocked();
    double cost = 0.0;
    for (NodeId n = 0; n < g_.nodes.size(); ++n) {
      if (xs_[n] != 1 || explained_by_chain(n)) continue;
      const bool free = std::any_of(cheaper_partners_[n].begin(), cheaper_partners_[n].end(), [&](const auto& mk) {
        return xs_[mk.first] == 1 && all_possible(prob_.unify_requirements[mk.second]);
      });
      if (!free) cost += g_.nodes[n].cost;
    }
    if (prob_.options.reward_sign <= 0.0) return cost;
    double reward = 0.0;
    for (const auto& rw : prob_.rewards) {
      if (rw.reward > 0.0 && xs_[rw.node] == 1 && all_possible(rw.required_pairs)) reward += rw.reward;
    }
    return cost - prob_.options.reward_sign * reward;
  }

  bool pair_equal(std::size_t q) const {
    const auto [a, b] = pair_terms_[q];
    return find(a) == find(b);
  }

  bool all_equal(const std::vector<std::size_t>& req) const {
    return std::all_of(req.begin(), req.end(), [&](std::size_t q) { return pair_equal(q); });
  }

  void evaluate_leaf() {
    for (const auto& inc : prob_.inconsistencies) {
      if (xs_[inc.first] == 1 && xs_[inc.second] == 1 && all_equal(inc.required_pairs)) return;
    }
    const auto& nodes = g_.nodes;
    double cost = 0.0;
    for (NodeId n = 0; n < nodes.size(); ++n) {
      if (xs_[n] == 1 && is_paid(n)) cost += nodes[n].cost;
    }
    double reward = 0.0;
    for (const auto& rw : prob_.rewards) {
      if (xs_[rw.node] == 1 && all_equal(rw.required_pairs)) reward += rw.reward;
    }
    const double sign = prob_.options.reward_sign;
    const double objective = cost - sign * reward;
    if (have_incumbent_ && !objectives_equal(objective, incumbent_.objective) && objective > incumbent_.objective) {
      return;
    }

    Hypothesis h;
    for (NodeId n = 0; n < nodes.size(); ++n) {
      if (xs_[n] != 1) continue;
      h.included.push_back(n);
      if (is_paid(n)) h.paid.push_back(n);
    }
    for (EdgeId e = 0; e < cs_.size(); ++e) {
      if (cs_[e] == 1) h.active_chain_edges.push_back(e);
    }
    for (EdgeId k = 0; k < g_.unify_edges.size(); ++k) {
      const auto& ue = g_.unify_edges[k];
      if (xs_[ue.a] == 1 && xs_[ue.b] == 1 && all_equal(prob_.unify_requirements[k])) {
        h.active_unify_edges.push_back(k);
      }
    }
    for (std::size_t q = 0; q < prob_.pairs.size(); ++q) {
      if (pair_equal(q)) h.equalities.emplace_back(prob_.pairs[q].first, prob_.pairs[q].second);
    }
    h.cost = cost;
    h.reward = reward;
    h.objective = objective;
    h.score = -cost + sign * reward;
    h.reward_sign = sign;
    if (!have_incumbent_ || better_than(h, incumbent_)) {
      incumbent_ = std::move(h);
      have_incumbent_ = true;
    }
  }

  bool is_paid(NodeId n) const {
    if (explained_by_chain(n)) return false;
    for (const auto& [m, k] : cheaper_partners_[n]) {
      if (xs_[m] == 1 && all_equal(prob_.unify_requirements[k])) return false;
    }
    return true;
  }

  const IlpProblem& prob_;
  const graph::ProofGraph& g_;
  std::chrono::steady_clock::time_point deadline_;

  std::vector<std::vector<std::pair<NodeId, EdgeId>>> cheaper_partners_;
  std::vector<std::vector<NodeId>> hard_conflicts_;
  std::vector<double> reward_by_node_;
  std::vector<std::vector<std::size_t>> rewards_at_;
  std::vector<std::vector<NodeId>> cliques_;
  std::vector<std::pair<std::size_t, std::size_t>> pair_terms_;
  std::vector<bool> term_is_constant_;

  std::vector<std::int8_t> xs_;
  std::vector<std::int8_t> cs_;
  std::size_t included_count_ = 0;

  std::vector<std::size_t> useful_pairs_;
  std::vector<NodeId> phase_included_;
  std::vector<std::pair<std::size_t, std::size_t>> distinct_;
  std::vector<std::pair<std::size_t, std::size_t>> blocked_;
  std::vector<std::size_t> parent_;
  std::vector<long> constant_of_;
  // (merged root, its new root's previous constant marker)
  std::vector<std::pair<std::size_t, long>> trail_;

  Hypothesis incumbent_;
  bool have_incumbent_ = false;
  std::uint64_t expansions_ = 0;
  bool timed_out_ = false;
};

}  // namespace

Hypothesis solve(const IlpProblem& prob, int timeout_ms, SolveStats* stats) {
  return BranchAndBound(prob, timeout_ms).run(stats);
}

}  // namespace ahrl::ilp
