#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ahrl::world {

struct Recipe {
  std::string item;
  std::vector<std::string> ingredients;  // materials or other items
  std::optional<std::string> utility;
  bool needs_fuel = false;

  bool operator==(const Recipe&) const = default;
};

// Recipes, rewards and world-generation knobs, loaded from a domain file.
// Names are capitalized symbols, the same constants the knowledge base uses.
struct CraftBook {
  std::vector<std::string> materials;
  std::vector<std::string> fuels;  // a subset of materials
  std::vector<std::string> utilities;
  std::vector<Recipe> recipes;
  std::map<std::string, double> reward_table;

  double base_goal_reward = 1.0;
  double reward_per_material = 4.0;
  int sensing_radius = 2;
  double lava_density = 0.1;
  int min_size = 12;
  int max_size = 15;
  int min_kinds = 4;
  int max_kinds = 9;
  int min_copies = 1;
  int max_copies = 2;
  int max_steps = 100;
  // Observation costs handed to the planner.
  double init_cost = 1.0;
  double goal_cost = 10.0;
  std::string fixed_goal = "RabbitStew";

  const Recipe* recipe_for(const std::string& item) const;
  bool is_material(const std::string& name) const;
  bool is_fuel(const std::string& name) const;
  bool is_utility(const std::string& name) const;
  // Raw materials in the item's full recipe tree, one per fuel use.
  int material_count(const std::string& item) const;
  double reward_of(const std::string& item) const;

  // Fills missing reward_table entries and checks the invariants. Throws
  // logic::ValidationError.
  void validate();
};

// Line-oriented format:
//   material Rabbit Bowl ...
//   fuel Coal Wood
//   utility Furnace
//   recipe RabbitStew = Rabbit ^ Bowl ^ Carrot @ Furnace + fuel
//   reward RabbitStew = 24
//   option sensing-radius = 2
// Throws logic::ParseError or logic::ValidationError.
CraftBook parse_craft_book(const std::string& text);

}  // namespace ahrl::world
