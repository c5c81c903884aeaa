#include <random>

#include "doctest.h"

#include "ahrl/logic.hpp"
#include "support.hpp"

using namespace ahrl::logic;

TEST_CASE("terms classify by first character") {
  CHECK(Term::from_name("Rabbit").is_constant());
  CHECK(Term::from_name("7").is_constant());
  CHECK(Term::from_name("x").is_variable());
  CHECK(Term::from_name("u1").is_variable());
  CHECK_THROWS_AS(Term::from_name(""), std::invalid_argument);
  CHECK_THROWS_AS(Term::from_name("a b"), std::invalid_argument);
}

TEST_CASE("single rule with a defaulted weight") {
  const auto kb = parse_knowledge_base("rule r1 { coal(x) => fuel(x) }\n");
  REQUIRE(kb.rules.size() == 1);
  const auto& r = kb.rules[0];
  CHECK(r.id == "r1");
  REQUIRE(r.antecedents.size() == 1);
  CHECK(r.antecedents[0].atom.predicate == "coal");
  CHECK(r.antecedents[0].weight == doctest::Approx(1.2));
  REQUIRE(r.consequents.size() == 1);
  CHECK(r.consequents[0].predicate == "fuel");
  CHECK(r.consequents[0].args[0] == Term::variable("x"));
}

TEST_CASE("defaulted weights split 1.2 across antecedents") {
  const auto kb = parse_knowledge_base("rule r { a(x) ^ b(x) ^ c(x) => d(x) }");
  for (const auto& wa : kb.rules[0].antecedents) CHECK(wa.weight == doctest::Approx(0.4));
  const auto mixed = parse_knowledge_base("rule r { a(x):0.3 ^ b(x) => d(x) }");
  CHECK(mixed.rules[0].antecedents[0].weight == doctest::Approx(0.3));
  CHECK(mixed.rules[0].antecedents[1].weight == doctest::Approx(0.6));
}

TEST_CASE("malformed knowledge bases are rejected") {
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { }"), ParseError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { => fuel(x) }"), ParseError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { coal(x) => }"), ParseError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { coal(x):0 => fuel(x) }"), ParseError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { coal(x):-1 => fuel(x) }"), ParseError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { coal(x) => fuel(x) }\nrule r1 { wood(x) => fuel(x) }"),
                  ValidationError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { coal(x) => fuel(x) }\naction burn/1 arg=0"), ValidationError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { coal(x) => fuel(x) }\nreward coal(x) = 3"), ValidationError);
}

TEST_CASE("parse errors carry a position") {
  try {
    parse_knowledge_base("rule r1 { coal(x) => fuel(x) }\nrule r2 { coal(x) => }\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 1);
  }
}

TEST_CASE("arity conflicts are rejected") {
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { coal(x) => fuel(x) }\nrule r2 { coal(x, y) => fuel(x) }"),
                  ValidationError);
  CHECK_THROWS_AS(parse_knowledge_base("rule r1 { p(x) => q(x, x) }\nrule r2 { q(x) => p(x) }"), ValidationError);
}

TEST_CASE("large domain file") {
  const auto kb = parse_knowledge_base(ahrl::testing::read_file(ahrl::testing::test_data_path("scale125.kb")));
  CHECK(kb.rules.size() == 125);
  CHECK(kb.rule_predicates().size() == 31);
  CHECK(kb.arities().size() == 31);
}

TEST_CASE("observation with initial and goal parts") {
  const auto obs = parse_observation("init: have(M) ^ money(M); goal: get(A) ^ apple(A)");
  REQUIRE(obs.atoms.size() == 4);
  CHECK(obs.goal_count() == 2);
  CHECK(obs.atoms[0].label == ObsLabel::initial_state);
  CHECK(obs.atoms[1].label == ObsLabel::initial_state);
  CHECK(obs.atoms[2].label == ObsLabel::goal_state);
  CHECK(obs.atoms[3].label == ObsLabel::goal_state);
  for (const auto& o : obs.atoms) CHECK(o.cost == 10.0);
  CHECK(obs.atoms[0].atom.args[0] == Term::constant("M"));
}

TEST_CASE("observation costs and errors") {
  const auto obs = parse_observation("goal: get(A)$20 ^ apple(A)");
  CHECK(obs.atoms[0].cost == 20.0);
  CHECK(obs.atoms[1].cost == 10.0);
  CHECK(parse_observation("goal: get(A)", 7.5).atoms[0].cost == 7.5);
  CHECK_THROWS_AS(parse_observation("init: have(M) ^ money(M)"), ValidationError);
  CHECK_THROWS_AS(parse_observation("goal: get(A"), ParseError);

  const auto kb = parse_knowledge_base("rule r1 { buy(x) => get(x) }");
  CHECK_NOTHROW(parse_observation("goal: get(A)", 10.0, &kb));
  CHECK_THROWS(parse_observation("goal: get(A, B)", 10.0, &kb));
}

TEST_CASE("unify pairs arguments without substituting") {
  Atom have_m{"have", {Term::constant("M")}};
  Atom have_u{"have", {Term::variable("u1")}};
  auto eq = unify(have_m, have_u);
  REQUIRE(eq.has_value());
  REQUIRE(eq->size() == 1);
  CHECK((*eq)[0] == Equality{Term::constant("M"), Term::variable("u1")});

  Atom pa{"p", {Term::constant("A")}};
  Atom qa{"q", {Term::constant("A")}};
  REQUIRE(unify(pa, pa).has_value());
  CHECK(unify(pa, pa)->empty());
  CHECK_FALSE(unify(pa, qa).has_value());
  CHECK_FALSE(unify(pa, Atom{"p", {Term::constant("A"), Term::constant("B")}}).has_value());
}

TEST_CASE("unify is symmetric") {
  std::mt19937_64 rng(11);
  const char* names[] = {"A", "B", "x", "y", "u1"};
  const char* preds[] = {"p", "q"};
  for (int trial = 0; trial < 500; ++trial) {
    auto random_atom = [&] {
      Atom a;
      a.predicate = preds[rng() % 2];
      const std::size_t n = 1 + rng() % 3;
      for (std::size_t i = 0; i < n; ++i) a.args.push_back(Term::from_name(names[rng() % 5]));
      return a;
    };
    const Atom a = random_atom();
    const Atom b = random_atom();
    const auto ab = unify(a, b);
    const auto ba = unify(b, a);
    REQUIRE(ab.has_value() == ba.has_value());
    if (!ab) continue;
    REQUIRE(ab->size() == ba->size());
    for (std::size_t i = 0; i < ab->size(); ++i) {
      CHECK((*ab)[i].first == (*ba)[i].second);
      CHECK((*ab)[i].second == (*ba)[i].first);
    }
  }
}

TEST_CASE("pretty-print round trip") {
  const char* text =
      "# grocery\n"
      "rule buy-to-get { buy(x) ^ apple(x) => get(x) }\n"
      "rule shop { have(m):0.25 ^ money(m) ^ go(g) ^ grocery(g) => buy(x) }\n"
      "action go/1 arg=0\n"
      "action have/1 arg=0 label=get\n"
      "sort apple/1\n"
      "reward apple(A) = 2.5\n"
      "inconsistent get(x) , !apple(x)\n"
      "option observation-cost = 12\n";
  const auto kb = parse_knowledge_base(text);
  CHECK(kb.observation_cost == 12.0);
  CHECK(kb.action_for("have")->display() == "get");
  CHECK(kb.action_for("go")->display() == "go");
  const auto again = parse_knowledge_base(to_string(kb));
  CHECK(again == kb);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto inst = ahrl::testing::random_instance(rng, 1000);
    const auto reparsed = parse_knowledge_base(to_string(inst.kb));
    REQUIRE(reparsed == inst.kb);
    const auto obs = parse_observation(to_string(inst.obs));
    REQUIRE(obs == inst.obs);
  }
}

TEST_CASE("format_real round-trips doubles") {
  for (double v : {0.1, 1.2 / 7.0, 1e-9, 12.0, 123456.789}) {
    CHECK(std::stod(format_real(v)) == v);
  }
}
