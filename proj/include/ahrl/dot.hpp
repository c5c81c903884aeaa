#pragma once

#include <string>

#include "ahrl/ilp.hpp"
#include "ahrl/proof_graph.hpp"

namespace ahrl::harness {

// Graphviz rendering of a solution hypothesis: included atoms only,
// observation atoms filled gray, conjunctive atoms grouped in a box, solid
// arrows for backward chaining and dotted undirected edges labelled with the
// equalities for unification.
std::string export_dot(const ilp::Hypothesis& h, const graph::ProofGraph& g);

// The whole candidate graph, same conventions.
std::string export_dot(const graph::ProofGraph& g);

}  // namespace ahrl::harness
