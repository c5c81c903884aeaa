// Command-line front end: experiments, one-shot planning and raw solving.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ahrl/dot.hpp"
#include "ahrl/experiment.hpp"
#include "ahrl/ilp.hpp"
#include "ahrl/planner.hpp"

using namespace ahrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<agent::Mode> parse_modes(const std::string& list) {
  std::vector<agent::Mode> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    auto m = agent::parse_mode(item);
    if (!m) throw std::invalid_argument("unknown mode '" + item + "'");
    out.push_back(*m);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abductive hierarchical RL experiments"};
  app.require_subcommand(1);

  harness::ExperimentConfig cfg;
  cfg.kb_path = "data/crafting.kb";
  cfg.domain_path = "data/crafting.domain";
  cfg.output_dir = "out";
  std::string modes = "NO-PLANNER,FIXED-GOAL,ABDUCTIVE";
  auto* run = app.add_subcommand("run", "train and test the selected models");
  run->add_option("--kb", cfg.kb_path, "knowledge base")->capture_default_str();
  run->add_option("--domain", cfg.domain_path, "crafting domain file")->capture_default_str();
  run->add_option("--modes", modes, "comma-separated models")->capture_default_str();
  run->add_option("--episodes", cfg.episodes, "training episodes per trial")->capture_default_str();
  run->add_option("--trials", cfg.trials)->capture_default_str();
  run->add_option("--test-every", cfg.test_every)->capture_default_str();
  run->add_option("--window", cfg.sliding_window, "sliding window in episodes")->capture_default_str();
  run->add_option("--seed", cfg.master_seed)->capture_default_str();
  run->add_option("--threads", cfg.threads, "0 uses every hardware thread")->capture_default_str();
  run->add_option("--out", cfg.output_dir)->capture_default_str();

  std::string kb_path = "data/crafting.kb";
  std::string obs_path;
  std::string dot_path;
  int depth = graph::kDefaultDepthLimit;
  bool no_reward = false;
  auto* plan = app.add_subcommand("plan", "plan once for an observation file");
  plan->add_option("--kb", kb_path)->capture_default_str();
  plan->add_option("--obs", obs_path)->required();
  plan->add_option("--dot", dot_path, "write the solution proof graph here");
  plan->add_option("--depth", depth)->capture_default_str();
  plan->add_flag("--no-reward", no_reward, "drop the reward term from the objective");

  std::string lp_path;
  int timeout_ms = ilp::kDefaultTimeoutMs;
  auto* solve = app.add_subcommand("solve", "solve the abduction problem and print the hypothesis");
  solve->add_option("--kb", kb_path)->capture_default_str();
  solve->add_option("--obs", obs_path)->required();
  solve->add_option("--depth", depth)->capture_default_str();
  solve->add_option("--timeout-ms", timeout_ms)->capture_default_str();
  solve->add_flag("--no-reward", no_reward);
  solve->add_option("--lp-dump", lp_path, "write the 0-1 program in LP format");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.modes = parse_modes(modes);
      harness::validate(cfg);
      const auto kb = logic::parse_knowledge_base(slurp(cfg.kb_path));
      const auto book = world::parse_craft_book(slurp(cfg.domain_path));
      const auto result = harness::run_experiment(cfg, kb, book);
      harness::write_outputs(cfg, result, kb, book);
      const auto curve = harness::window_average(result.rows, cfg.sliding_window);
      for (auto m : cfg.modes) {
        fmt::print("{:<11} final window mean return {:.3f}\n", agent::to_string(m), harness::final_window_mean(curve, m));
      }
      fmt::print("{} rows in {:.1f} s, written to {}\n", result.rows.size(), result.wall_seconds, cfg.output_dir);
      return 0;
    }

    const auto kb = logic::parse_knowledge_base(slurp(kb_path));
    const auto obs = logic::parse_observation(slurp(obs_path));
    if (*plan) {
      planner::PlannerConfig pcfg;
      pcfg.depth_limit = depth;
      pcfg.reward_enabled = !no_reward;
      planner::PlanCache cache;
      planner::PlanTrace trace;
      const auto p = planner::plan(kb, obs, pcfg, cache, &trace);
      for (const auto& g : p.subgoals) fmt::print("{}\n", g.label);
      fmt::print("# score {} ({}), {:.3f} ms\n", p.source_score, p.optimal ? "optimal" : "timed out", trace.solver_ms);
      if (!dot_path.empty()) spit(dot_path, harness::export_dot(trace.hypothesis, trace.graph));
      return 0;
    }

    const auto g = graph::build_graph(kb, obs, depth);
    const auto prob = ilp::encode(g, kb, {.reward_enabled = !no_reward});
    if (!lp_path.empty()) spit(lp_path, prob.to_lp());
    ilp::SolveStats stats;
    const auto h = ilp::solve(prob, timeout_ms, &stats);
    for (auto n : h.included) {
      fmt::print("{}{}\n", h.resolved_atom(g, n).to_string(), h.includes(n) &&
                 std::find(h.paid.begin(), h.paid.end(), n) != h.paid.end() ? fmt::format(" ${}", g.nodes[n].cost) : "");
    }
    fmt::print("# cost {} reward {} score {} ({}, {} branch nodes)\n", h.cost, h.reward, h.score,
               h.optimal ? "optimal" : "timed out", stats.branch_nodes);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
