#pragma once

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ahrl/logic.hpp"
#include "ahrl/proof_graph.hpp"

namespace ahrl::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string data_path(const std::string& name) { return std::string(AHRL_DATA_DIR) + "/" + name; }
inline std::string test_data_path(const std::string& name) { return std::string(AHRL_TEST_DATA_DIR) + "/" + name; }

// The smallest interesting instance: q is observed, p explains q.
inline const char* kQpKb = "rule r1 { p(x):1.2 => q(x) }\n";
inline const char* kQpRewardKb = "rule r1 { p(x):1.2 => q(x) }\nreward p(A) = 5\n";
inline const char* kQpObs = "goal: q(A)$10";

struct RandomInstance {
  logic::KnowledgeBase kb;
  logic::Observation obs;
  int depth = 0;
  graph::ProofGraph graph;
};

// Small random abduction problems: at most 8 rules, 4 observed atoms,
// depth 3 and 25 graph nodes.
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_nodes = 25) {
  const char* preds[] = {"p0", "p1", "p2", "p3", "p4"};
  const std::size_t arity[] = {1, 1, 2, 2, 1};
  const char* constants[] = {"A", "B", "C"};
  const char* rule_vars[] = {"x", "y", "z"};
  const double weights[] = {0.2, 0.4, 0.6, 0.9, 1.2, 1.5};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };

  for (;;) {
    RandomInstance inst;
    auto& kb = inst.kb;
    const std::size_t n_rules = 1 + pick(8);
    std::set<std::string> antecedent_preds;
    for (std::size_t r = 0; r < n_rules; ++r) {
      logic::WeightedRule rule;
      rule.id = "r" + std::to_string(r);
      auto make_atom = [&](bool allow_fresh) {
        logic::Atom a;
        const std::size_t p = pick(5);
        a.predicate = preds[p];
        for (std::size_t i = 0; i < arity[p]; ++i) {
          if (chance(0.2)) {
            a.args.push_back(logic::Term::constant(constants[pick(3)]));
          } else {
            a.args.push_back(logic::Term::variable(rule_vars[pick(allow_fresh ? 3 : 2)]));
          }
        }
        return a;
      };
      const std::size_t n_cons = chance(0.2) ? 2 : 1;
      for (std::size_t i = 0; i < n_cons; ++i) rule.consequents.push_back(make_atom(false));
      const std::size_t n_ante = 1 + pick(3);
      for (std::size_t i = 0; i < n_ante; ++i) {
        rule.antecedents.push_back({make_atom(true), weights[pick(6)]});
        antecedent_preds.insert(rule.antecedents.back().atom.predicate);
      }
      kb.rules.push_back(std::move(rule));
    }
    std::vector<std::string> reward_preds(antecedent_preds.begin(), antecedent_preds.end());
    const std::size_t n_rewards = pick(3);
    for (std::size_t i = 0; i < n_rewards && !reward_preds.empty(); ++i) {
      logic::RewardDecl d;
      const std::string p = reward_preds[pick(reward_preds.size())];
      d.pattern.predicate = p;
      const std::size_t ar = (p == "p2" || p == "p3") ? 2 : 1;
      for (std::size_t k = 0; k < ar; ++k) d.pattern.args.push_back(logic::Term::constant(constants[pick(3)]));
      d.reward = static_cast<double>(1 + pick(15));
      kb.rewards.push_back(std::move(d));
    }
    if (chance(0.4)) {
      logic::InconsistencyDecl d;
      const std::size_t a = pick(5);
      const std::size_t b = pick(5);
      d.first.predicate = preds[a];
      d.second.predicate = preds[b];
      for (std::size_t k = 0; k < arity[a]; ++k) d.first.args.push_back(logic::Term::variable(k == 0 ? "x" : "y"));
      for (std::size_t k = 0; k < arity[b]; ++k) d.second.args.push_back(logic::Term::variable(k == 0 ? "x" : "w"));
      kb.inconsistencies.push_back(std::move(d));
    }
    try {
      kb.validate();
    } catch (const logic::ValidationError&) {
      continue;
    }

    const std::size_t n_obs = 1 + pick(4);
    const char* obs_vars[] = {"e1", "e2"};
    const double costs[] = {5.0, 10.0, 20.0};
    for (std::size_t i = 0; i < n_obs; ++i) {
      logic::ObservedAtom o;
      const std::size_t p = pick(5);
      o.atom.predicate = preds[p];
      for (std::size_t k = 0; k < arity[p]; ++k) {
        if (chance(0.7)) {
          o.atom.args.push_back(logic::Term::constant(constants[pick(3)]));
        } else {
          o.atom.args.push_back(logic::Term::variable(obs_vars[pick(2)]));
        }
      }
      o.cost = costs[pick(3)];
      o.label = (i == 0 || chance(0.5)) ? logic::ObsLabel::goal_state : logic::ObsLabel::initial_state;
      inst.obs.atoms.push_back(std::move(o));
    }
    // Initial-state atoms first, as in the text form.
    std::stable_partition(inst.obs.atoms.begin(), inst.obs.atoms.end(),
                          [](const logic::ObservedAtom& o) { return o.label == logic::ObsLabel::initial_state; });
    inst.depth = static_cast<int>(pick(4));
    try {
      inst.graph = graph::build_graph(kb, inst.obs, inst.depth, max_nodes);
    } catch (const std::length_error&) {
      continue;
    }
    return inst;
  }
}

}  // namespace ahrl::testing
