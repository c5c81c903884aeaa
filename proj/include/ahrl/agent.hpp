#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ahrl/craft_book.hpp"
#include "ahrl/gridworld.hpp"
#include "ahrl/logic.hpp"
#include "ahrl/planner.hpp"

namespace ahrl::agent {

enum class Mode : std::uint8_t { no_planner, fixed_goal, abductive };

std::string to_string(Mode m);  // "NO-PLANNER", "FIXED-GOAL", "ABDUCTIVE"
std::optional<Mode> parse_mode(const std::string& s);

enum class ReplanPolicy : std::uint8_t { on_new_sense, on_subgoal_complete, both };

struct AgentConfig {
  Mode mode = Mode::abductive;
  double intrinsic_reward = 1.0;
  double step_penalty = -0.01;
  // Learner-only; the reported return still gets 0 for lava.
  double lava_penalty = -1.0;
  double learning_rate = 0.1;
  double discount = 0.95;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_anneal_fraction = 0.4;  // of all training episodes
  ReplanPolicy replan_policy = ReplanPolicy::both;
  int stuck_limit = 50;  // steps without completing the current subgoal
  int planner_timeout_ms = ilp::kDefaultTimeoutMs;
};

// Linear anneal from epsilon_start to epsilon_end, flat afterwards.
double epsilon_at(const AgentConfig& cfg, int episode, int total_episodes);

// The learner's actions. craft resolves to the best item craftable in place.
enum class Move : std::uint8_t { north, south, east, west, pickup, craft };
inline constexpr std::size_t kMoveCount = 6;

enum class Direction : std::uint8_t { north, northeast, east, southeast, south, southwest, west, northwest, here, unknown };

struct Route {
  Direction direction = Direction::unknown;
  int distance = 0;  // steps
};

// First step and length of a shortest route to `target` that avoids known
// lava, treating unexplored cells as passable. Direction::unknown when no
// route exists.
Route route_to(const world::SensedView& v, world::Pos target);

inline constexpr int kDistanceBands = 9;

// 0, 1, 2, 3, 4, 5-6, 7-9, 10-14, 15+ steps.
int distance_band(int steps);

struct FeatureKey {
  int label = 0;  // interned subgoal action (find, get, go), 0 for none
  Direction direction = Direction::unknown;
  std::uint8_t distance = kDistanceBands;  // band of the route length; kDistanceBands when unknown
  std::uint16_t lava = 0;  // the four neighbours, bit 3*(dy+1)+(dx+1)
  bool can_craft = false;

  std::uint64_t packed() const;
  bool operator==(const FeatureKey&) const = default;
};

class QTable {
 public:
  using Row = std::array<double, kMoveCount>;

  // Id 0 is reserved for "no subgoal".
  int intern(const std::string& label);
  double value(const FeatureKey& k, Move m) const;
  const Row& row(const FeatureKey& k) const;
  void set(const FeatureKey& k, Move m, double v);
  std::uint64_t visits(const FeatureKey& k, Move m) const;
  std::size_t size() const { return values_.size(); }

 private:
  std::unordered_map<std::uint64_t, Row> values_;
  std::unordered_map<std::uint64_t, std::array<std::uint64_t, kMoveCount>> visits_;
  std::map<std::string, int> labels_;
};

// Nearest known land cell next to unexplored ground, by walking distance
// over known land. nullopt when the map is fully explored or walled in.
std::optional<world::Pos> nearest_frontier(const world::SensedView& v);

// Where the learner is steered: the subgoal's target when known, otherwise
// the nearest frontier. Without a subgoal the goal cell is the target.
std::optional<world::Pos> steering_target(const world::SensedView& v, const planner::Subgoal* current);


FeatureKey make_feature(const world::SensedView& v, const world::WorldState& s, const world::CraftBook& book,
                        const planner::Subgoal* current, QTable& q);

// Epsilon-greedy; ties among the best values are broken at random.
Move select_action(const QTable& q, const FeatureKey& key, double epsilon, std::mt19937_64& rng);

world::LowLevelAction to_low_level(Move m, const world::WorldState& s, const world::CraftBook& book);

// cfg.intrinsic_reward if the subgoal went from incomplete to complete,
// cfg.step_penalty otherwise.
double intrinsic_step_reward(const world::SensedView& before, const world::SensedView& after,
                             const planner::Subgoal& subgoal, const AgentConfig& cfg);

// One-step Q-learning update; terminal transitions bootstrap from 0.
void learn(QTable& q, const FeatureKey& key, Move action, double reward, const FeatureKey& next_key, bool done,
           const AgentConfig& cfg);

struct EpisodeResult {
  double extrinsic_return = 0.0;
  int steps = 0;
  world::Event end = world::Event::timeout;
  int subgoals_completed = 0;
  int subgoals_abandoned = 0;
  std::size_t plans_requested = 0;
  std::size_t cache_hits = 0;
  std::size_t solver_calls = 0;
  double solver_ms = 0.0;
  std::set<std::string> crafted;
  std::vector<std::string> labels_followed;  // subgoal labels in the order they were pursued
};

// Everything one trial owns: the table, the plan cache and the random stream.
struct AgentState {
  QTable q;
  planner::PlanCache cache;
  std::mt19937_64 rng;
};

// What the learner saw and did on one step, for tracing.
struct StepTrace {
  FeatureKey key;
  Move move = Move::north;
  const planner::Subgoal* subgoal = nullptr;  // null without a plan
  const world::StepResult* result = nullptr;
  double learner_reward = 0.0;
};

struct EpisodeContext {
  const logic::KnowledgeBase* kb = nullptr;  // unused in NO-PLANNER mode
  const world::CraftBook* book = nullptr;
  AgentConfig cfg;
  double epsilon = 0.0;
  bool learning = true;
  std::function<void(const StepTrace&)> on_step;
};

planner::PlannerConfig planner_config(const AgentConfig& cfg);

// Runs one episode from `start`. `rng` drives exploration only.
EpisodeResult run_episode(const world::WorldState& start, AgentState& agent, const EpisodeContext& ctx,
                          std::mt19937_64& rng);

}  // namespace ahrl::agent
