#include "ahrl/dot.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace ahrl::harness {
namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string render(const graph::ProofGraph& g, const std::vector<graph::NodeId>& nodes,
                   const std::vector<graph::EdgeId>& chains, const std::vector<graph::EdgeId>& unifies) {
  std::vector<char> shown(g.nodes.size(), 0);
  for (auto n : nodes) shown[n] = 1;

  auto node_line = [&](graph::NodeId n) {
    const auto& node = g.nodes[n];
    const bool obs = node.origin == graph::Origin::observation;
    return fmt::format("    n{} [label=\"{}\\n{:.6g}\"{}];\n", n, escape(node.atom.to_string()), node.cost,
                       obs ? ", style=filled, fillcolor=gray" : "");
  };

  std::string out = "digraph proof {\n  rankdir=BT;\n  node [shape=plaintext];\n";
  for (auto label : {logic::ObsLabel::initial_state, logic::ObsLabel::goal_state}) {
    std::string body;
    for (auto n : nodes) {
      if (g.nodes[n].obs_label == label) body += node_line(n);
    }
    if (body.empty()) continue;
    const bool init = label == logic::ObsLabel::initial_state;
    out += fmt::format("  subgraph cluster_{} {{\n    label=\"{}\";\n{}  }}\n", init ? "init" : "goal",
                       init ? "initial state" : "goal state", body);
  }
  for (auto e : chains) {
    std::string body;
    for (auto t : g.chain_edges[e].tails) {
      if (shown[t] != 0) body += node_line(t);
    }
    if (body.empty()) continue;
    out += fmt::format("  subgraph cluster_chain{} {{\n    label=\"{}\";\n{}  }}\n", e, escape(g.chain_edges[e].rule_id),
                       body);
  }
  for (auto e : chains) {
    const auto& edge = g.chain_edges[e];
    for (auto h : edge.heads) {
      for (auto t : edge.tails) out += fmt::format("  n{} -> n{} [style=solid];\n", h, t);
    }
  }
  for (auto k : unifies) {
    const auto& ue = g.unify_edges[k];
    std::string label;
    for (const auto& [a, b] : ue.equalities) {
      if (!label.empty()) label += ", ";
      label += a.name() + "=" + b.name();
    }
    out += fmt::format("  n{} -> n{} [dir=none, style=dotted, label=\"{}\"];\n", ue.a, ue.b, escape(label));
  }
  out += "}\n";
  return out;
}

}  // namespace

std::string export_dot(const ilp::Hypothesis& h, const graph::ProofGraph& g) {
  return render(g, h.included, h.active_chain_edges, h.active_unify_edges);
}

std::string export_dot(const graph::ProofGraph& g) {
  std::vector<graph::NodeId> nodes(g.nodes.size());
  std::iota(nodes.begin(), nodes.end(), graph::NodeId{0});
  std::vector<graph::EdgeId> chains(g.chain_edges.size());
  std::iota(chains.begin(), chains.end(), graph::EdgeId{0});
  std::vector<graph::EdgeId> unifies(g.unify_edges.size());
  std::iota(unifies.begin(), unifies.end(), graph::EdgeId{0});
  return render(g, nodes, chains, unifies);
}

}  // namespace ahrl::harness
