#include <cmath>
#include <deque>
#include <map>
#include <random>

#include "doctest.h"

#include "ahrl/agent.hpp"
#include "support.hpp"

using namespace ahrl;
using agent::Direction;
using agent::Mode;
using agent::Move;
using world::Pos;

namespace {

const world::CraftBook& book() {
  static const auto b = world::parse_craft_book(testing::read_file(testing::data_path("crafting.domain")));
  return b;
}

const logic::KnowledgeBase& crafting_kb() {
  static const auto kb = logic::parse_knowledge_base(testing::read_file(testing::data_path("crafting.kb")));
  return kb;
}

world::WorldState room(int w, int h) {
  world::WorldState s;
  s.width = w;
  s.height = h;
  s.cells.assign(static_cast<std::size_t>(w * h), world::Cell::land);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) s.cells[static_cast<std::size_t>(y * w + x)] = world::Cell::lava;
    }
  }
  s.player = {1, 1};
  s.goal = {w - 2, h - 2};
  return s;
}

planner::Subgoal subgoal(const std::string& action, const std::string& target) {
  planner::Subgoal g;
  g.action = action;
  g.label = action + "-" + planner::to_kebab(target);
  g.target = logic::Term::constant(target);
  return g;
}

agent::EpisodeContext context(Mode mode, double epsilon, bool learning) {
  agent::EpisodeContext ctx;
  ctx.kb = &crafting_kb();
  ctx.book = &book();
  ctx.cfg.mode = mode;
  ctx.epsilon = epsilon;
  ctx.learning = learning;
  return ctx;
}

// Breadth-first distance over cells not known to be lava.
int bfs_distance(const world::SensedView& v, Pos from, Pos to) {
  std::map<Pos, int> dist{{from, 0}};
  std::deque<Pos> q{from};
  while (!q.empty()) {
    const Pos p = q.front();
    q.pop_front();
    if (p == to) return dist[p];
    for (const Pos n : {Pos{p.x + 1, p.y}, Pos{p.x - 1, p.y}, Pos{p.x, p.y + 1}, Pos{p.x, p.y - 1}}) {
      if (n.x < 0 || n.y < 0 || n.x >= v.width || n.y >= v.height) continue;
      if (v.cell(n) == world::Cell::lava || dist.contains(n)) continue;
      dist[n] = dist[p] + 1;
      q.push_back(n);
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("mode names") {
  for (auto m : {Mode::no_planner, Mode::fixed_goal, Mode::abductive}) CHECK(agent::parse_mode(to_string(m)) == m);
  CHECK_FALSE(agent::parse_mode("abductive"));
}

TEST_CASE("epsilon anneals linearly over the first 40 percent") {
  agent::AgentConfig cfg;
  CHECK(agent::epsilon_at(cfg, 0, 1000) == 1.0);
  CHECK(agent::epsilon_at(cfg, 200, 1000) == doctest::Approx(0.525));
  CHECK(agent::epsilon_at(cfg, 400, 1000) == 0.05);
  CHECK(agent::epsilon_at(cfg, 999, 1000) == 0.05);
}

TEST_CASE("greedy and random action selection") {
  agent::QTable q;
  agent::FeatureKey k;
  q.set(k, Move::west, 2.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) CHECK(agent::select_action(q, k, 0.0, rng) == Move::west);

  std::mt19937_64 a(11);
  std::mt19937_64 b(11);
  std::array<int, agent::kMoveCount> counts{};
  for (int i = 0; i < 6000; ++i) {
    const Move m = agent::select_action(q, k, 1.0, a);
    CHECK(m == agent::select_action(q, k, 1.0, b));
    ++counts[static_cast<std::size_t>(m)];
  }
  for (int c : counts) {
    CHECK(c > 850);
    CHECK(c < 1150);
  }
}

TEST_CASE("q table reads zero and updates one entry") {
  agent::QTable q;
  agent::FeatureKey k;
  k.direction = Direction::east;
  CHECK(q.value(k, Move::east) == 0.0);
  CHECK(q.size() == 0);
  q.set(k, Move::east, 1.5);
  CHECK(q.size() == 1);
  CHECK(q.visits(k, Move::east) == 1);
  CHECK(q.visits(k, Move::west) == 0);
  for (std::size_t m = 0; m < agent::kMoveCount; ++m) {
    if (static_cast<Move>(m) != Move::east) CHECK(q.value(k, static_cast<Move>(m)) == 0.0);
  }
  CHECK(q.intern("get") == q.intern("get"));
  CHECK(q.intern("get") != q.intern("go"));
  CHECK(q.intern("find") > 0);
}

TEST_CASE("feature keys pack without collisions") {
  std::set<std::uint64_t> seen;
  std::size_t n = 0;
  for (int label = 0; label < 4; ++label) {
    for (int d = 0; d < 10; ++d) {
      for (int band = 0; band <= agent::kDistanceBands; ++band) {
        for (std::uint16_t lava : {0, 2, 8, 32, 128, 170}) {
          for (bool craft : {false, true}) {
            agent::FeatureKey k{label, static_cast<Direction>(d), static_cast<std::uint8_t>(band), lava, craft};
            seen.insert(k.packed());
            ++n;
          }
        }
      }
    }
  }
  CHECK(seen.size() == n);
}

TEST_CASE("distance bands") {
  const int expected[] = {0, 1, 2, 3, 4, 5, 5, 6, 6, 6, 7, 7, 7, 7, 7, 8, 8};
  for (int d = 0; d < 17; ++d) CHECK(agent::distance_band(d) == expected[d]);
  CHECK(agent::distance_band(40) == 8);
}

TEST_CASE("route to a sensed rabbit points north") {
  auto s = room(10, 10);
  s.player = {4, 5};
  s.objects[{4, 3}] = "Rabbit";
  const auto v = world::initial_view(s, book());
  agent::QTable q;
  const auto g = subgoal("get", "Rabbit");
  const auto k = agent::make_feature(v, s, book(), &g, q);
  CHECK(k.direction == Direction::north);
  CHECK(k.distance == agent::distance_band(2));
  CHECK(k.label == q.intern("get"));

  s.player = {4, 3};
  const auto here = agent::make_feature(world::initial_view(s, book()), s, book(), &g, q);
  CHECK(here.direction == Direction::here);
  CHECK(here.distance == 0);
}

TEST_CASE("routes avoid known lava and match an independent search") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto s = world::generate_episode(i, book());
    auto v = world::initial_view(s, book());
    // Reveal everything so the oracle and the route see the same map.
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        v.known_cells[static_cast<std::size_t>(y * s.width + x)] = static_cast<std::int8_t>(s.cell({x, y}));
      }
    }
    for (const auto& [p, _] : s.objects) {
      const auto r = agent::route_to(v, p);
      const int d = bfs_distance(v, s.player, p);
      REQUIRE(d > 0);
      CHECK(r.distance == d);
      // The first step is onto land and one step closer.
      Pos next = s.player;
      switch (r.direction) {
        case Direction::north: --next.y; break;
        case Direction::south: ++next.y; break;
        case Direction::east: ++next.x; break;
        case Direction::west: --next.x; break;
        default: FAIL("not a step");
      }
      CHECK(s.cell(next) == world::Cell::land);
      CHECK(bfs_distance(v, next, p) == d - 1);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("lava bits cover the four neighbours only") {
  auto s = room(5, 5);
  s.player = {1, 1};
  agent::QTable q;
  const auto k = agent::make_feature(world::initial_view(s, book()), s, book(), nullptr, q);
  // North and west are border lava; the corner diagonal is ignored.
  CHECK(k.lava == ((1u << 1) | (1u << 3)));
  CHECK(k.label == 0);
}

TEST_CASE("frontier steering without a known target") {
  auto s = room(14, 14);
  s.player = {2, 2};
  s.goal = {11, 11};
  const auto v = world::initial_view(s, book());
  const auto f = agent::nearest_frontier(v);
  REQUIRE(f);
  CHECK(v.known(*f));
  CHECK(world::chebyshev(*f, s.player) == 2);
  CHECK(agent::steering_target(v, nullptr) == f);
  const auto find = subgoal("find", "Goal");
  CHECK(agent::steering_target(v, &find) == f);
}

TEST_CASE("intrinsic reward on completion only") {
  agent::AgentConfig cfg;
  auto s = room(10, 10);
  s.player = {2, 2};
  s.objects[{2, 2}] = "Rabbit";
  const auto before = world::initial_view(s, book());
  const auto picked = world::step(s, {world::ActionKind::pickup, {}}, book());
  const auto after = world::observe(picked.state, before, book());
  CHECK(agent::intrinsic_step_reward(before, after, subgoal("get", "Rabbit"), cfg) == 1.0);
  CHECK(agent::intrinsic_step_reward(before, before, subgoal("get", "Rabbit"), cfg) == -0.01);
  // Already complete is not a completion.
  CHECK(agent::intrinsic_step_reward(after, after, subgoal("get", "Rabbit"), cfg) == -0.01);

  s.objects[{6, 2}] = "Coal";
  const auto v0 = world::initial_view(s, book());
  CHECK_FALSE(world::subgoal_complete(subgoal("find", "Coal"), v0));
  auto moved = world::step(s, {world::ActionKind::east, {}}, book());
  moved = world::step(moved.state, {world::ActionKind::east, {}}, book());
  const auto v1 = world::observe(moved.state, v0, book());
  CHECK(agent::intrinsic_step_reward(v0, v1, subgoal("find", "Coal"), cfg) == 1.0);
}

TEST_CASE("one-step update") {
  agent::AgentConfig cfg;
  agent::FeatureKey k;
  agent::FeatureKey next;
  next.direction = Direction::here;

  agent::QTable q;
  cfg.learning_rate = 1.0;
  cfg.discount = 0.0;
  agent::learn(q, k, Move::pickup, 5.0, next, false, cfg);
  CHECK(q.value(k, Move::pickup) == 5.0);

  cfg.learning_rate = 0.0;
  agent::learn(q, k, Move::pickup, 100.0, next, false, cfg);
  CHECK(q.value(k, Move::pickup) == 5.0);

  // A self-loop settles at r / (1 - discount).
  agent::QTable loop;
  cfg.learning_rate = 0.5;
  cfg.discount = 0.9;
  for (int i = 0; i < 2000; ++i) agent::learn(loop, k, Move::north, 1.0, k, false, cfg);
  CHECK(loop.value(k, Move::north) == doctest::Approx(10.0).epsilon(1e-9));

  // Terminal transitions ignore the successor.
  agent::QTable term;
  term.set(next, Move::north, 50.0);
  cfg.learning_rate = 1.0;
  agent::learn(term, k, Move::east, 2.0, next, true, cfg);
  CHECK(term.value(k, Move::east) == 2.0);
}

TEST_CASE("planner wiring per mode") {
  CHECK(agent::planner_config({.mode = Mode::abductive}).reward_enabled);
  CHECK_FALSE(agent::planner_config({.mode = Mode::fixed_goal}).reward_enabled);

  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto w = world::generate_episode(i, book());
    agent::AgentState a;
    std::mt19937_64 rng(i);
    const auto r = agent::run_episode(w, a, context(Mode::no_planner, 0.3, true), rng);
    CHECK(r.plans_requested == 0);
    CHECK(r.subgoals_completed == 0);
    CHECK(a.cache.size() == 0);

    agent::AgentState b;
    const auto p = agent::run_episode(w, b, context(Mode::abductive, 0.3, true), rng);
    CHECK(p.plans_requested >= 1);
    CHECK(p.plans_requested == p.cache_hits + p.solver_calls);
  }
}

TEST_CASE("reported return is the simulator's reward alone") {
  for (auto mode : {Mode::no_planner, Mode::fixed_goal, Mode::abductive}) {
    agent::AgentState a;
    a.rng.seed(9);
    for (std::uint64_t i = 0; i < 40; ++i) {
      auto ctx = context(mode, 0.2, true);
      double sum = 0.0;
      ctx.on_step = [&](const agent::StepTrace& t) { sum += t.result->reward; };
      const auto r = agent::run_episode(world::generate_episode(i, book()), a, ctx, a.rng);
      CHECK(r.extrinsic_return == sum);
      CHECK(r.steps <= book().max_steps);
    }
  }
}

TEST_CASE("episodes replay exactly from their seeds") {
  for (auto mode : {Mode::no_planner, Mode::abductive}) {
    auto run = [&] {
      agent::AgentState a;
      a.rng.seed(21);
      std::vector<agent::EpisodeResult> out;
      for (std::uint64_t i = 0; i < 30; ++i) {
        out.push_back(agent::run_episode(world::generate_episode(i, book()), a, context(mode, 0.5, true), a.rng));
      }
      return out;
    };
    const auto x = run();
    const auto y = run();
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].extrinsic_return == y[i].extrinsic_return);
      CHECK(x[i].steps == y[i].steps);
      CHECK(x[i].labels_followed == y[i].labels_followed);
      CHECK(x[i].plans_requested == y[i].plans_requested);
    }
  }
}

TEST_CASE("replaying a sensed trajectory hits the cache") {
  agent::AgentState a;
  a.rng.seed(4);
  for (std::uint64_t i = 0; i < 50; ++i) {
    agent::run_episode(world::generate_episode(i, book()), a, context(Mode::abductive, 0.3, true), a.rng);
  }
  for (std::uint64_t i = 100; i < 110; ++i) {
    const auto w = world::generate_episode(i, book());
    std::mt19937_64 r1(i);
    std::mt19937_64 r2(i);
    const auto first = agent::run_episode(w, a, context(Mode::abductive, 0.0, false), r1);
    const auto second = agent::run_episode(w, a, context(Mode::abductive, 0.0, false), r2);
    CHECK(second.steps == first.steps);
    CHECK(second.plans_requested == first.plans_requested);
    CHECK(second.solver_calls == 0);
    CHECK(second.cache_hits == second.plans_requested);
  }
}

TEST_CASE("frozen learning leaves the table alone") {
  agent::AgentState a;
  a.rng.seed(2);
  agent::run_episode(world::generate_episode(0, book()), a, context(Mode::abductive, 1.0, true), a.rng);
  const auto size = a.q.size();
  std::mt19937_64 rng(1);
  agent::run_episode(world::generate_episode(1, book()), a, context(Mode::abductive, 0.5, false), rng);
  CHECK(a.q.size() == size);
}

TEST_CASE("no rabbit in the world, no rabbit in the plan") {
  int worlds = 0;
  agent::AgentState a;
  a.rng.seed(8);
  for (std::uint64_t i = 0; worlds < 40; ++i) {
    const auto w = world::generate_episode(i, book());
    if (w.material_kinds(book()).contains("Rabbit")) continue;
    ++worlds;
    const auto r = agent::run_episode(w, a, context(Mode::abductive, 0.2, true), a.rng);
    for (const auto& l : r.labels_followed) {
      CHECK(l != "get-rabbit");
      CHECK(l != "find-rabbit");
    }
    CHECK_FALSE(r.crafted.contains("RabbitStew"));
  }
}

TEST_CASE("a completed subgoal is not pursued again") {
  agent::AgentState a;
  a.rng.seed(13);
  for (std::uint64_t i = 0; i < 60; ++i) {
    auto ctx = context(Mode::abductive, 0.3, true);
    std::string just_completed;
    ctx.on_step = [&](const agent::StepTrace& t) {
      if (!just_completed.empty() && t.subgoal != nullptr) CHECK(t.subgoal->label != just_completed);
      just_completed.clear();
      if (t.subgoal != nullptr && t.learner_reward >= ctx.cfg.intrinsic_reward + ctx.cfg.step_penalty) {
        just_completed = t.subgoal->label;
      }
    };
    agent::run_episode(world::generate_episode(i, book()), a, ctx, a.rng);
  }
}

TEST_CASE("auto-craft at the utility in planner modes") {
  // A corridor: furnace and then the goal lie due east.
  auto s = room(10, 5);
  s.player = {2, 2};
  s.objects[{5, 2}] = "Furnace";
  s.goal = {8, 2};
  s.inventory = {{"Coal", 1}, {"Rabbit", 1}};

  // A table that always heads east.
  agent::AgentState a;
  for (const char* label : {"find", "get", "go"}) {
    for (int band = 0; band <= agent::kDistanceBands; ++band) {
      for (std::uint16_t lava = 0; lava < 512; ++lava) {
        for (bool craft : {false, true}) {
          const agent::FeatureKey k{a.q.intern(label), Direction::east, static_cast<std::uint8_t>(band), lava, craft};
          a.q.set(k, Move::east, 1.0);
        }
      }
    }
  }
  std::mt19937_64 rng(1);
  const auto r = agent::run_episode(s, a, context(Mode::abductive, 0.0, false), rng);
  CHECK(r.end == world::Event::goal);
  CHECK(r.crafted == std::set<std::string>{"CookedRabbit"});
  CHECK(r.extrinsic_return == 1.0 + book().reward_of("CookedRabbit"));
  CHECK(r.labels_followed ==
        std::vector<std::string>{"find-furnace", "go-furnace", "find-goal", "go-goal"});
  // One step spent crafting on top of the walk.
  CHECK(r.steps == 7);
}
