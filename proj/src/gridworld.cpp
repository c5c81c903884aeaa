#include "ahrl/gridworld.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace ahrl::world {

namespace {

constexpr int kMaxAttempts = 1000;

Pos offset(Pos p, ActionKind k) {
  switch (k) {
    case ActionKind::north:
      return {p.x, p.y - 1};
    case ActionKind::south:
      return {p.x, p.y + 1};
    case ActionKind::east:
      return {p.x + 1, p.y};
    case ActionKind::west:
      return {p.x - 1, p.y};
    default:
      return p;
  }
}

// Land cells reachable from `from` by 4-neighbour moves.
std::vector<Pos> reachable(const WorldState& s, Pos from) {
  std::vector<char> seen(s.cells.size(), 0);
  std::vector<Pos> out;
  std::deque<Pos> queue{from};
  seen[static_cast<std::size_t>(from.y * s.width + from.x)] = 1;
  while (!queue.empty()) {
    const Pos p = queue.front();
    queue.pop_front();
    out.push_back(p);
    for (auto k : {ActionKind::north, ActionKind::south, ActionKind::east, ActionKind::west}) {
      const Pos q = offset(p, k);
      if (!s.in_bounds(q) || s.cell(q) == Cell::lava) continue;
      auto& flag = seen[static_cast<std::size_t>(q.y * s.width + q.x)];
      if (flag != 0) continue;
      flag = 1;
      queue.push_back(q);
    }
  }
  return out;
}

std::optional<WorldState> try_generate(std::uint64_t index, int attempt, const CraftBook& book) {
  std::seed_seq seq{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(attempt)};
  std::mt19937_64 rng(seq);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  WorldState s;
  s.episode_seed = index;
  s.width = uniform(book.min_size, book.max_size);
  s.height = uniform(book.min_size, book.max_size);
  s.cells.assign(static_cast<std::size_t>(s.width * s.height), Cell::land);
  std::bernoulli_distribution lava(book.lava_density);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const bool border = x == 0 || y == 0 || x == s.width - 1 || y == s.height - 1;
      if (border || lava(rng)) s.cells[static_cast<std::size_t>(y * s.width + x)] = Cell::lava;
    }
  }

  std::vector<Pos> land;
  for (int y = 1; y < s.height - 1; ++y) {
    for (int x = 1; x < s.width - 1; ++x) {
      if (s.cell({x, y}) == Cell::land) land.push_back({x, y});
    }
  }
  if (land.empty()) return std::nullopt;
  s.player = land[static_cast<std::size_t>(uniform(0, static_cast<int>(land.size()) - 1))];

  // Everything else goes where the player can walk to.
  auto spots = reachable(s, s.player);
  spots.erase(spots.begin());
  std::shuffle(spots.begin(), spots.end(), rng);

  std::vector<std::string> kinds = book.materials;
  std::shuffle(kinds.begin(), kinds.end(), rng);
  kinds.resize(static_cast<std::size_t>(uniform(book.min_kinds, book.max_kinds)));

  std::vector<std::string> objects;
  for (const auto& k : kinds) {
    const int copies = uniform(book.min_copies, book.max_copies);
    for (int c = 0; c < copies; ++c) objects.push_back(k);
  }
  objects.insert(objects.end(), book.utilities.begin(), book.utilities.end());
  if (spots.size() < objects.size() + 1) return std::nullopt;

  s.goal = spots[0];
  for (std::size_t i = 0; i < objects.size(); ++i) s.objects[spots[i + 1]] = objects[i];
  return s;
}

bool near_utility(const WorldState& s, const std::string& utility) {
  for (const auto& [p, name] : s.objects) {
    if (name == utility && chebyshev(p, s.player) <= 1) return true;
  }
  return false;
}

}  // namespace

int chebyshev(Pos a, Pos b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

std::set<std::string> WorldState::material_kinds(const CraftBook& book) const {
  std::set<std::string> out;
  for (const auto& [_, name] : objects) {
    if (book.is_material(name)) out.insert(name);
  }
  return out;
}

std::string to_string(const LowLevelAction& a) {
  switch (a.kind) {
    case ActionKind::north:
      return "move-north";
    case ActionKind::south:
      return "move-south";
    case ActionKind::east:
      return "move-east";
    case ActionKind::west:
      return "move-west";
    case ActionKind::pickup:
      return "pickup";
    case ActionKind::craft:
      return "craft(" + a.item + ")";
  }
  return "?";
}

std::string to_string(Event e) {
  switch (e) {
    case Event::moved:
      return "moved";
    case Event::lava:
      return "lava";
    case Event::goal:
      return "goal";
    case Event::timeout:
      return "timeout";
    case Event::picked:
      return "picked";
    case Event::crafted:
      return "crafted";
    case Event::illegal:
      return "illegal-action";
  }
  return "?";
}

WorldState generate_episode(std::uint64_t episode_index, const CraftBook& book) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    auto s = try_generate(episode_index, attempt, book);
    if (!s) continue;
    const auto reach = reachable(*s, s->player);
    if (std::find(reach.begin(), reach.end(), s->goal) == reach.end()) continue;
    return *s;
  }
  throw std::runtime_error(fmt::format("no usable world for episode {}", episode_index));
}

double goal_reward(const WorldState& s, const CraftBook& book) {
  double best = 0.0;
  for (const auto& [item, n] : s.inventory) {
    if (n > 0) best = std::max(best, book.reward_of(item));
  }
  return book.base_goal_reward + best;
}

bool can_craft(const WorldState& s, const CraftBook& book, const std::string& item) {
  const Recipe* r = book.recipe_for(item);
  if (r == nullptr) return false;
  if (r->utility && !near_utility(s, *r->utility)) return false;
  std::map<std::string, int> need;
  for (const auto& i : r->ingredients) ++need[i];
  auto held = [&](const std::string& name) {
    auto it = s.inventory.find(name);
    return it == s.inventory.end() ? 0 : it->second;
  };
  for (const auto& [name, n] : need) {
    if (held(name) < n) return false;
  }
  if (!r->needs_fuel) return true;
  return std::any_of(book.fuels.begin(), book.fuels.end(),
                     [&](const std::string& f) { return held(f) > (need.contains(f) ? need[f] : 0); });
}

std::optional<std::string> best_craftable(const WorldState& s, const CraftBook& book) {
  std::optional<std::string> best;
  for (const auto& r : book.recipes) {
    if (!can_craft(s, book, r.item)) continue;
    if (!best || book.reward_of(r.item) > book.reward_of(*best)) best = r.item;
  }
  return best;
}

StepResult step(const WorldState& s, const LowLevelAction& a, const CraftBook& book) {
  StepResult r{s, 0.0, false, Event::moved};
  auto& t = r.state;
  ++t.steps_taken;
  switch (a.kind) {
    case ActionKind::north:
    case ActionKind::south:
    case ActionKind::east:
    case ActionKind::west: {
      const Pos next = offset(t.player, a.kind);
      t.player = next;
      if (!t.in_bounds(next) || t.cell(next) == Cell::lava) {
        r.done = true;
        r.event = Event::lava;
        return r;
      }
      if (next == t.goal) {
        r.done = true;
        r.event = Event::goal;
        r.reward = goal_reward(t, book);
        return r;
      }
      break;
    }
    case ActionKind::pickup: {
      auto it = t.objects.find(t.player);
      if (it == t.objects.end() || !book.is_material(it->second)) {
        r.event = Event::illegal;
        break;
      }
      ++t.inventory[it->second];
      t.objects.erase(it);
      r.event = Event::picked;
      break;
    }
    case ActionKind::craft: {
      if (!can_craft(t, book, a.item)) {
        r.event = Event::illegal;
        break;
      }
      const Recipe& recipe = *book.recipe_for(a.item);
      auto take = [&](const std::string& name) {
        if (--t.inventory[name] == 0) t.inventory.erase(name);
      };
      for (const auto& i : recipe.ingredients) take(i);
      if (recipe.needs_fuel) {
        for (const auto& f : book.fuels) {
          if (t.inventory.contains(f)) {
            take(f);
            break;
          }
        }
      }
      ++t.inventory[a.item];
      t.crafted.insert(a.item);
      r.event = Event::crafted;
      break;
    }
  }
  if (t.steps_taken >= book.max_steps) {
    r.done = true;
    r.event = Event::timeout;
  }
  return r;
}

bool SensedView::known(Pos p) const { return cell(p).has_value(); }

std::optional<Cell> SensedView::cell(Pos p) const {
  if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) return std::nullopt;
  const auto c = known_cells[static_cast<std::size_t>(p.y * width + p.x)];
  if (c < 0) return std::nullopt;
  return static_cast<Cell>(c);
}

std::set<std::string> SensedView::known_kinds() const {
  std::set<std::string> out;
  for (const auto& [_, name] : known_objects) out.insert(name);
  return out;
}

SensedView observe(const WorldState& s, const SensedView& previous, const CraftBook& book) {
  SensedView v = previous;
  if (v.width != s.width || v.height != s.height) {
    v = SensedView{};
    v.width = s.width;
    v.height = s.height;
    v.known_cells.assign(static_cast<std::size_t>(s.width * s.height), -1);
  }
  const int r = book.sensing_radius;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const Pos p{s.player.x + dx, s.player.y + dy};
      if (!s.in_bounds(p)) continue;
      v.known_cells[static_cast<std::size_t>(p.y * s.width + p.x)] = static_cast<std::int8_t>(s.cell(p));
      if (auto it = s.objects.find(p); it != s.objects.end()) {
        v.known_objects[p] = it->second;
      } else {
        v.known_objects.erase(p);
      }
      if (p == s.goal) v.goal_known = p;
    }
  }
  v.player = s.player;
  v.inventory = s.inventory;
  v.crafted = s.crafted;
  v.steps_taken = s.steps_taken;
  return v;
}

SensedView initial_view(const WorldState& s, const CraftBook& book) { return observe(s, SensedView{}, book); }

logic::Observation to_observation(const SensedView& v, const CraftBook& book,
                                  const std::optional<std::string>& fixed_goal) {
  logic::Observation obs;
  auto add = [&](const std::string& predicate, const std::string& arg, double cost, logic::ObsLabel label) {
    logic::ObservedAtom o;
    o.atom.predicate = predicate;
    o.atom.args.push_back(logic::Term::from_name(arg));
    o.cost = cost;
    o.label = label;
    obs.atoms.push_back(std::move(o));
  };
  const auto init = logic::ObsLabel::initial_state;
  const auto goal = logic::ObsLabel::goal_state;
  for (const auto& [item, n] : v.inventory) {
    if (n > 0) add("have", item, book.init_cost, init);
  }
  auto kinds = v.known_kinds();
  if (v.goal_known) kinds.insert(kGoal);
  for (const auto& k : kinds) add("sensed", k, book.init_cost, init);
  for (const auto& k : kinds) {
    if (book.is_utility(k)) add("utility-available", k, book.init_cost, init);
  }
  if (fixed_goal) {
    add("crafted", *fixed_goal, book.goal_cost, goal);
    add("at-goal", "e", book.goal_cost, goal);
  } else {
    add("goal-achieved", "e", book.goal_cost, goal);
  }
  return obs;
}

bool subgoal_complete(const planner::Subgoal& g, const SensedView& v) {
  if (!g.target.is_constant()) return false;
  const std::string& name = g.target.name();
  if (g.action == "find") {
    if (name == kGoal) return v.goal_known.has_value();
    return v.known_kinds().contains(name);
  }
  if (g.action == "get") {
    auto it = v.inventory.find(name);
    return it != v.inventory.end() && it->second > 0;
  }
  if (g.action == "go") {
    if (name == kGoal) return v.goal_known && *v.goal_known == v.player;
    for (const auto& [p, obj] : v.known_objects) {
      if (obj == name && chebyshev(p, v.player) <= 1) return true;
    }
  }
  return false;
}

std::optional<Pos> subgoal_target(const planner::Subgoal& g, const SensedView& v) {
  if (!g.target.is_constant()) return std::nullopt;
  const std::string& name = g.target.name();
  if (name == kGoal) return v.goal_known;
  std::optional<Pos> best;
  int best_d = 0;
  for (const auto& [p, obj] : v.known_objects) {
    if (obj != name) continue;
    const int d = std::abs(p.x - v.player.x) + std::abs(p.y - v.player.y);
    if (!best || d < best_d) {
      best = p;
      best_d = d;
    }
  }
  return best;
}

}  // namespace ahrl::world
