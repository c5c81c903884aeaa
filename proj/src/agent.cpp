#include "ahrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace ahrl::agent {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::no_planner:
      return "NO-PLANNER";
    case Mode::fixed_goal:
      return "FIXED-GOAL";
    case Mode::abductive:
      return "ABDUCTIVE";
  }
  return "?";
}

std::optional<Mode> parse_mode(const std::string& s) {
  for (auto m : {Mode::no_planner, Mode::fixed_goal, Mode::abductive}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

double epsilon_at(const AgentConfig& cfg, int episode, int total_episodes) {
  const double span = cfg.epsilon_anneal_fraction * total_episodes;
  if (span <= 0.0 || episode >= span) return cfg.epsilon_end;
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * (episode / span);
}

std::uint64_t FeatureKey::packed() const {
  std::uint64_t k = static_cast<std::uint64_t>(label);
  k = k * 10 + static_cast<std::uint64_t>(direction);
  k = k * (kDistanceBands + 1) + distance;
  k = k * 512 + lava;
  return k * 2 + (can_craft ? 1 : 0);
}

int QTable::intern(const std::string& label) {
  auto [it, _] = labels_.try_emplace(label, static_cast<int>(labels_.size()) + 1);
  return it->second;
}

const QTable::Row& QTable::row(const FeatureKey& k) const {
  static const Row kZero{};
  auto it = values_.find(k.packed());
  return it == values_.end() ? kZero : it->second;
}

double QTable::value(const FeatureKey& k, Move m) const { return row(k)[static_cast<std::size_t>(m)]; }

void QTable::set(const FeatureKey& k, Move m, double v) {
  values_[k.packed()][static_cast<std::size_t>(m)] = v;
  ++visits_[k.packed()][static_cast<std::size_t>(m)];
}

std::uint64_t QTable::visits(const FeatureKey& k, Move m) const {
  auto it = visits_.find(k.packed());
  return it == visits_.end() ? 0 : it->second[static_cast<std::size_t>(m)];
}

std::optional<world::Pos> nearest_frontier(const world::SensedView& v) {
  const auto land = [&](world::Pos p) { return v.cell(p) == world::Cell::land; };
  const auto neighbours = [](world::Pos p) {
    return std::array<world::Pos, 4>{{{p.x, p.y - 1}, {p.x, p.y + 1}, {p.x + 1, p.y}, {p.x - 1, p.y}}};
  };
  const auto in_bounds = [&](world::Pos p) { return p.x >= 0 && p.y >= 0 && p.x < v.width && p.y < v.height; };
  if (!land(v.player)) return std::nullopt;

  std::vector<char> seen(static_cast<std::size_t>(v.width * v.height), 0);
  std::deque<world::Pos> queue{v.player};
  seen[static_cast<std::size_t>(v.player.y * v.width + v.player.x)] = 1;
  while (!queue.empty()) {
    const auto p = queue.front();
    queue.pop_front();
    for (const auto n : neighbours(p)) {
      if (in_bounds(n) && !v.known(n)) return p;
    }
    for (const auto n : neighbours(p)) {
      if (!in_bounds(n) || !land(n)) continue;
      auto& flag = seen[static_cast<std::size_t>(n.y * v.width + n.x)];
      if (flag != 0) continue;
      flag = 1;
      queue.push_back(n);
    }
  }
  return std::nullopt;
}

std::optional<world::Pos> steering_target(const world::SensedView& v, const planner::Subgoal* current) {
  std::optional<world::Pos> target;
  if (current == nullptr) {
    target = v.goal_known;
  } else if (current->action != "find") {
    target = world::subgoal_target(*current, v);
  }
  return target ? target : nearest_frontier(v);
}

Route route_to(const world::SensedView& v, world::Pos target) {
  if (v.player == target) return {Direction::here, 0};
  const auto in_bounds = [&](world::Pos p) { return p.x >= 0 && p.y >= 0 && p.x < v.width && p.y < v.height; };
  // Unknown ground counts as walkable; known lava does not.
  const auto open = [&](world::Pos p) { return in_bounds(p) && v.cell(p) != world::Cell::lava; };
  constexpr Direction kFirst[] = {Direction::north, Direction::south, Direction::east, Direction::west};
  const auto neighbours = [](world::Pos p) {
    return std::array<world::Pos, 4>{{{p.x, p.y - 1}, {p.x, p.y + 1}, {p.x + 1, p.y}, {p.x - 1, p.y}}};
  };

  std::vector<std::int8_t> first(static_cast<std::size_t>(v.width * v.height), -1);
  std::vector<int> dist(first.size(), 0);
  std::deque<world::Pos> queue;
  const auto start = neighbours(v.player);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto n = start[i];
    if (!open(n)) continue;
    if (n == target) return {kFirst[i], 1};
    auto& f = first[static_cast<std::size_t>(n.y * v.width + n.x)];
    if (f >= 0) continue;
    f = static_cast<std::int8_t>(i);
    dist[static_cast<std::size_t>(n.y * v.width + n.x)] = 1;
    queue.push_back(n);
  }
  while (!queue.empty()) {
    const auto p = queue.front();
    queue.pop_front();
    const auto at = static_cast<std::size_t>(p.y * v.width + p.x);
    for (const auto n : neighbours(p)) {
      if (!open(n) || n == v.player) continue;
      const auto ni = static_cast<std::size_t>(n.y * v.width + n.x);
      if (first[ni] >= 0) continue;
      if (n == target) return {kFirst[first[at]], dist[at] + 1};
      first[ni] = first[at];
      dist[ni] = dist[at] + 1;
      queue.push_back(n);
    }
  }
  return {};
}

int distance_band(int d) {
  static constexpr int kUpper[] = {0, 1, 2, 3, 4, 6, 9, 14};
  int band = 0;
  while (band < 8 && d > kUpper[band]) ++band;
  return band;
}

FeatureKey make_feature(const world::SensedView& v, const world::WorldState& s, const world::CraftBook& book,
                        const planner::Subgoal* current, QTable& q) {
  FeatureKey k;
  // Keyed on find/get/go rather than the full label: the target already
  // enters through the route, and per-label tables learn far too slowly.
  k.label = current == nullptr ? 0 : q.intern(current->action);
  const auto target = steering_target(v, current);
  if (target) {
    const auto r = route_to(v, *target);
    k.direction = r.direction;
    if (r.direction != Direction::unknown) k.distance = static_cast<std::uint8_t>(distance_band(r.distance));
  }
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const world::Pos p{v.player.x + dx, v.player.y + dy};
      // Off the map counts as lava; it is just as deadly.
      if (dx != 0 && dy != 0) continue;  // diagonals cannot be stepped onto
      if (v.cell(p).value_or(world::Cell::lava) == world::Cell::lava) {
        k.lava |= static_cast<std::uint16_t>(1u << (3 * (dy + 1) + (dx + 1)));
      }
    }
  }
  k.can_craft = world::best_craftable(s, book).has_value();
  return k;
}

Move select_action(const QTable& q, const FeatureKey& key, double epsilon, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> any(0, kMoveCount - 1);
  if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    return static_cast<Move>(any(rng));
  }
  const auto& row = q.row(key);
  const double best = *std::max_element(row.begin(), row.end());
  std::array<std::size_t, kMoveCount> ties{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < kMoveCount; ++i) {
    if (row[i] == best) ties[n++] = i;
  }
  if (n == 1) return static_cast<Move>(ties[0]);
  return static_cast<Move>(ties[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
}

world::LowLevelAction to_low_level(Move m, const world::WorldState& s, const world::CraftBook& book) {
  switch (m) {
    case Move::north:
      return {world::ActionKind::north, {}};
    case Move::south:
      return {world::ActionKind::south, {}};
    case Move::east:
      return {world::ActionKind::east, {}};
    case Move::west:
      return {world::ActionKind::west, {}};
    case Move::pickup:
      return {world::ActionKind::pickup, {}};
    case Move::craft:
      return {world::ActionKind::craft, world::best_craftable(s, book).value_or("")};
  }
  return {};
}

double intrinsic_step_reward(const world::SensedView& before, const world::SensedView& after,
                             const planner::Subgoal& subgoal, const AgentConfig& cfg) {
  const bool turned = !world::subgoal_complete(subgoal, before) && world::subgoal_complete(subgoal, after);
  return turned ? cfg.intrinsic_reward : cfg.step_penalty;
}

void learn(QTable& q, const FeatureKey& key, Move action, double reward, const FeatureKey& next_key, bool done,
           const AgentConfig& cfg) {
  double target = reward;
  if (!done) {
    const auto& next = q.row(next_key);
    target += cfg.discount * *std::max_element(next.begin(), next.end());
  }
  const double old = q.value(key, action);
  q.set(key, action, old + cfg.learning_rate * (target - old));
}

planner::PlannerConfig planner_config(const AgentConfig& cfg) {
  planner::PlannerConfig p;
  p.timeout_ms = cfg.planner_timeout_ms;
  p.reward_enabled = cfg.mode == Mode::abductive;
  return p;
}

namespace {

// Plan bookkeeping for one episode.
class PlanFollower {
 public:
  PlanFollower(AgentState& agent, const EpisodeContext& ctx, EpisodeResult& out)
      : agent_(agent), ctx_(ctx), out_(out), pcfg_(planner_config(ctx.cfg)) {
    if (ctx.cfg.mode == Mode::fixed_goal) fixed_goal_ = ctx.book->fixed_goal;
  }

  bool enabled() const { return ctx_.cfg.mode != Mode::no_planner; }
  const planner::Subgoal* current() const { return current_ ? &plan_.subgoals[*current_] : nullptr; }

  logic::Observation observation(const world::SensedView& v) const {
    return world::to_observation(v, *ctx_.book, fixed_goal_);
  }

  bool sensed_change(const world::SensedView& v) const {
    return planner::canonical_key(observation(v)) != plan_key_;
  }

  void replan(const world::SensedView& v) {
    const auto obs = observation(v);
    const auto key = planner::canonical_key(obs);
    planner::PlanTrace trace;
    plan_ = planner::plan(*ctx_.kb, obs, pcfg_, agent_.cache, &trace);
    ++out_.plans_requested;
    if (trace.solved) {
      ++out_.solver_calls;
      out_.solver_ms += trace.solver_ms;
    } else {
      ++out_.cache_hits;
    }
    // The same observation gives the same plan, so its progress carries over.
    if (key != plan_key_) completed_.clear();
    plan_key_ = key;
    current_.reset();
  }

  // Picks the first subgoal not yet done or given up on. Subgoals already
  // satisfied are marked done; returns those marked so the caller can act.
  std::vector<const planner::Subgoal*> advance(const world::SensedView& v) {
    std::vector<const planner::Subgoal*> satisfied;
    const auto previous = current_;
    current_.reset();
    for (std::size_t i = 0; i < plan_.subgoals.size(); ++i) {
      const auto& g = plan_.subgoals[i];
      if (completed_.contains(i) || abandoned_.contains(g.label)) continue;
      if (world::subgoal_complete(g, v)) {
        completed_.insert(i);
        satisfied.push_back(&g);
        continue;
      }
      current_ = i;
      break;
    }
    if (current_ != previous || !current_) stuck_ = 0;
    if (current_ && (out_.labels_followed.empty() || out_.labels_followed.back() != current()->label)) {
      out_.labels_followed.push_back(current()->label);
    }
    return satisfied;
  }

  void mark_completed() {
    completed_.insert(*current_);
    ++out_.subgoals_completed;
  }

  // True once the current subgoal has gone stale and been dropped.
  bool tick_stuck() {
    if (!current_ || ++stuck_ < ctx_.cfg.stuck_limit) return false;
    abandoned_.insert(current()->label);
    ++out_.subgoals_abandoned;
    return true;
  }

 private:
  AgentState& agent_;
  const EpisodeContext& ctx_;
  EpisodeResult& out_;
  planner::PlannerConfig pcfg_;
  std::optional<std::string> fixed_goal_;
  planner::Plan plan_;
  std::string plan_key_;
  std::set<std::size_t> completed_;
  std::set<std::string> abandoned_;
  std::optional<std::size_t> current_;
  int stuck_ = 0;
};

bool is_go_utility(const planner::Subgoal& g, const world::CraftBook& book) {
  return g.action == "go" && g.target.is_constant() && book.is_utility(g.target.name());
}

}  // namespace

EpisodeResult run_episode(const world::WorldState& start, AgentState& agent, const EpisodeContext& ctx,
                          std::mt19937_64& rng) {
  const auto& book = *ctx.book;
  const auto& cfg = ctx.cfg;
  EpisodeResult out;
  PlanFollower follower(agent, ctx, out);
  const bool replan_on_sense = cfg.replan_policy != ReplanPolicy::on_subgoal_complete;
  const bool replan_on_complete = cfg.replan_policy != ReplanPolicy::on_new_sense;

  world::WorldState state = start;
  world::SensedView view = world::initial_view(state, book);
  bool done = false;

  auto finish_step = [&](const world::StepResult& r) {
    out.extrinsic_return += r.reward;
    out.steps = r.state.steps_taken;
    out.end = r.event;
    if (r.event == world::Event::crafted) out.crafted.insert(r.state.crafted.begin(), r.state.crafted.end());
    state = r.state;
    view = world::observe(state, view, book);
    done = r.done;
  };

  // Reaching a utility the plan routes through means crafting there.
  auto on_satisfied = [&](const std::vector<const planner::Subgoal*>& gs) {
    for (const auto* g : gs) {
      if (done || !is_go_utility(*g, book)) continue;
      if (auto item = world::best_craftable(state, book)) finish_step(world::step(state, {world::ActionKind::craft, *item}, book));
    }
  };

  auto refresh = [&](bool force) {
    if (!follower.enabled()) return;
    if (force || (replan_on_sense && follower.sensed_change(view))) follower.replan(view);
    // Crafting changes the inventory, which changes the observation.
    for (int guard = 0; guard < 8 && !done; ++guard) {
      const auto satisfied = follower.advance(view);
      if (satisfied.empty()) break;
      on_satisfied(satisfied);
      if (!follower.sensed_change(view)) break;
      follower.replan(view);
    }
  };

  refresh(true);
  while (!done) {
    const planner::Subgoal* goal = follower.current();
    const auto key = make_feature(view, state, book, goal, agent.q);
    const Move move = select_action(agent.q, key, ctx.epsilon, rng);
    const world::SensedView before = view;
    const auto result = world::step(state, to_low_level(move, state, book), book);
    finish_step(result);

    double reward = result.reward;
    if (result.event == world::Event::lava) reward += cfg.lava_penalty;
    bool completed = false;
    if (follower.enabled()) {
      reward += goal != nullptr ? intrinsic_step_reward(before, view, *goal, cfg) : cfg.step_penalty;
      completed = goal != nullptr && world::subgoal_complete(*goal, view);
    }

    bool force = false;
    if (completed) {
      follower.mark_completed();
      if (is_go_utility(*goal, book)) on_satisfied({goal});
      force = replan_on_complete;
    } else if (follower.tick_stuck()) {
      force = true;
    }
    if (ctx.on_step) ctx.on_step({key, move, goal, &result, reward});
    if (!done) refresh(force);

    if (ctx.learning) {
      const auto next_key = make_feature(view, state, book, follower.current(), agent.q);
      learn(agent.q, key, move, reward, next_key, done || completed, cfg);
    }
  }
  return out;
}

}  // namespace ahrl::agent
