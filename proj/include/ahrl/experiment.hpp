#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ahrl/agent.hpp"
#include "ahrl/craft_book.hpp"
#include "ahrl/logic.hpp"

namespace ahrl::harness {

struct ExperimentConfig {
  int episodes = 3000;  // training episodes per trial
  int trials = 3;
  int test_every = 10;
  int sliding_window = 100;  // in episodes
  std::vector<agent::Mode> modes = {agent::Mode::no_planner, agent::Mode::fixed_goal, agent::Mode::abductive};
  std::string kb_path;
  std::string domain_path;
  std::string output_dir;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0: one per hardware thread
  int dot_exports = 3;  // proof graphs written for the first worlds
  agent::AgentConfig agent;
};

// Throws std::invalid_argument.
void validate(const ExperimentConfig& cfg);

struct MetricsRow {
  agent::Mode mode = agent::Mode::abductive;
  int trial = 0;
  int episode = 0;  // training episodes completed before this test
  double test_return = 0.0;
  int steps = 0;
  std::size_t plans_requested = 0;
  std::size_t cache_hits = 0;
  double solver_ms = 0.0;  // wall clock, so kept out of metrics.csv
};

// Test worlds come from their own seed range so that training never sees them.
std::uint64_t test_world_index(int episode);

// Seed for the agent's random stream; world generation never uses it.
std::uint64_t agent_seed(std::uint64_t master_seed, agent::Mode mode, int trial);

std::vector<MetricsRow> run_trial(const ExperimentConfig& cfg, const logic::KnowledgeBase& kb,
                                  const world::CraftBook& book, agent::Mode mode, int trial);

struct ExperimentResult {
  std::vector<MetricsRow> rows;  // ordered by mode, trial, episode
  double wall_seconds = 0.0;
};

// Runs every mode and trial, in parallel.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const logic::KnowledgeBase& kb,
                                const world::CraftBook& book);

struct CurvePoint {
  agent::Mode mode = agent::Mode::abductive;
  int episode = 0;
  double mean_return = 0.0;
};

// Per mode and test episode: mean test return over the trailing `window`
// episodes (fewer at the start), averaged across trials.
std::vector<CurvePoint> window_average(const std::vector<MetricsRow>& rows, int window);

// Last point of each mode's curve.
double final_window_mean(const std::vector<CurvePoint>& curve, agent::Mode mode);

inline constexpr const char* kMetricsSchema = "# ahrl-metrics v1";

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string timing_csv(const std::vector<MetricsRow>& rows);
std::string summary_csv(const std::vector<CurvePoint>& curve);
std::string config_echo(const ExperimentConfig& cfg);

// metrics.csv, timing.csv, summary.csv, run_config.txt and proof_<n>.dot
// under cfg.output_dir.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result, const logic::KnowledgeBase& kb,
                   const world::CraftBook& book);

}  // namespace ahrl::harness
