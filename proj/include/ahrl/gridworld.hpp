#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ahrl/craft_book.hpp"
#include "ahrl/logic.hpp"
#include "ahrl/planner.hpp"

namespace ahrl::world {

enum class Cell : std::uint8_t { land, lava };

struct Pos {
  int x = 0;
  int y = 0;  // grows southward

  auto operator<=>(const Pos&) const = default;
};

int chebyshev(Pos a, Pos b);

// Name used for the goal cell in observations and plans.
inline const std::string kGoal = "Goal";

struct WorldState {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;  // row-major
  std::map<Pos, std::string> objects;  // materials and utilities
  Pos player;
  Pos goal;
  std::map<std::string, int> inventory;  // materials and crafted items
  std::set<std::string> crafted;
  int steps_taken = 0;
  std::uint64_t episode_seed = 0;

  bool in_bounds(Pos p) const { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; }
  Cell cell(Pos p) const { return cells[static_cast<std::size_t>(p.y * width + p.x)]; }
  std::set<std::string> material_kinds(const CraftBook& book) const;

  bool operator==(const WorldState&) const = default;
};

enum class ActionKind : std::uint8_t { north, south, east, west, pickup, craft };

struct LowLevelAction {
  ActionKind kind = ActionKind::north;
  std::string item;  // craft only

  bool operator==(const LowLevelAction&) const = default;
};

std::string to_string(const LowLevelAction& a);

enum class Event : std::uint8_t { moved, lava, goal, timeout, picked, crafted, illegal };

std::string to_string(Event e);

struct StepResult {
  WorldState state;
  double reward = 0.0;
  bool done = false;
  Event event = Event::moved;
};

// Deterministic in (episode_index, book). Throws std::runtime_error if no
// reachable layout turns up within the retry bound.
WorldState generate_episode(std::uint64_t episode_index, const CraftBook& book);

// Reward paid on reaching the goal: the base plus the best held item.
double goal_reward(const WorldState& s, const CraftBook& book);

// True when the item can be crafted where the player stands.
bool can_craft(const WorldState& s, const CraftBook& book, const std::string& item);

// Highest-reward item craftable here, if any.
std::optional<std::string> best_craftable(const WorldState& s, const CraftBook& book);

StepResult step(const WorldState& s, const LowLevelAction& a, const CraftBook& book);

// What the player has seen. Knowledge only grows, except that a known
// object disappears once its cell is seen empty again.
struct SensedView {
  int width = 0;
  int height = 0;
  std::vector<std::int8_t> known_cells;  // -1 unknown, else Cell
  std::map<Pos, std::string> known_objects;
  Pos player;
  std::map<std::string, int> inventory;
  std::set<std::string> crafted;
  std::optional<Pos> goal_known;
  int steps_taken = 0;

  bool known(Pos p) const;
  std::optional<Cell> cell(Pos p) const;
  std::set<std::string> known_kinds() const;

  bool operator==(const SensedView&) const = default;
};

SensedView observe(const WorldState& s, const SensedView& previous, const CraftBook& book);
SensedView initial_view(const WorldState& s, const CraftBook& book);

// Initial-state atoms have(m), sensed(o), utility-available(u); the goal is
// goal-achieved(e), or crafted(item) ^ at-goal(e) for a fixed goal.
logic::Observation to_observation(const SensedView& v, const CraftBook& book,
                                  const std::optional<std::string>& fixed_goal = std::nullopt);

// find-X: X is a known object (or the goal is known); get-X: X is held;
// go-X: within one cell of a known X, or on the goal.
bool subgoal_complete(const planner::Subgoal& g, const SensedView& v);

// Nearest known position matching the subgoal's target.
std::optional<Pos> subgoal_target(const planner::Subgoal& g, const SensedView& v);

}  // namespace ahrl::world
