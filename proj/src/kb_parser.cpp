#include <charconv>
#include <optional>

#include <fmt/format.h>

#include "ahrl/logic.hpp"

namespace ahrl::logic {
namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) != token) return false;
    for (std::size_t i = 0; i < token.size(); ++i) advance();
    return true;
  }

  void expect(std::string_view token) {
    if (!consume(token)) fail(fmt::format("expected '{}'", token));
  }

  std::string symbol(std::string_view what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_symbol_char(text_[pos_])) advance();
    if (pos_ == start) fail(fmt::format("expected {}", what));
    return std::string(text_.substr(start, pos_ - start));
  }

  double real() {
    skip_space();
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) fail("expected a number");
    const auto n = static_cast<std::size_t>(ptr - first);
    for (std::size_t i = 0; i < n; ++i) advance();
    return v;
  }

  std::size_t integer() {
    skip_space();
    std::size_t v = 0;
    const char* first = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected an integer");
    const auto n = static_cast<std::size_t>(ptr - first);
    for (std::size_t i = 0; i < n; ++i) advance();
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, column_); }

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

Atom parse_atom(Cursor& cur, bool allow_negation) {
  Atom atom;
  if (cur.peek() == '!') {
    if (!allow_negation) cur.fail("negation is only allowed in inconsistency declarations");
    cur.expect("!");
    atom.negated = true;
  }
  atom.predicate = cur.symbol("predicate name");
  if (cur.consume("(")) {
    if (!cur.consume(")")) {
      do {
        atom.args.push_back(Term::from_name(cur.symbol("term")));
      } while (cur.consume(","));
      cur.expect(")");
    }
  }
  return atom;
}

WeightedRule parse_rule(Cursor& cur) {
  WeightedRule rule;
  rule.id = cur.symbol("rule id");
  cur.expect("{");
  if (cur.peek() == '=' || cur.peek() == '}') cur.fail("rule has no antecedent");
  std::vector<std::optional<double>> weights;
  do {
    WeightedAtom wa;
    wa.atom = parse_atom(cur, false);
    std::optional<double> w;
    if (cur.consume(":")) w = cur.real();
    rule.antecedents.push_back(std::move(wa));
    weights.push_back(w);
  } while (cur.consume("^"));
  cur.expect("=>");
  if (cur.peek() == '}') cur.fail("rule has no consequent");
  do {
    rule.consequents.push_back(parse_atom(cur, false));
  } while (cur.consume("^"));
  cur.expect("}");
  const double fallback = kDefaultRuleWeightTotal / static_cast<double>(rule.antecedents.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    rule.antecedents[i].weight = weights[i].value_or(fallback);
    if (!(rule.antecedents[i].weight > 0.0)) {
      throw ParseError(fmt::format("non-positive weight in rule {}", rule.id), cur.line(), cur.column());
    }
  }
  return rule;
}

}  // namespace

KnowledgeBase parse_knowledge_base(std::string_view text) {
  KnowledgeBase kb;
  Cursor cur(text);
  while (!cur.at_end()) {
    const std::size_t line = cur.line();
    const std::size_t column = cur.column();
    const std::string keyword = cur.symbol("statement keyword");
    try {
      if (keyword == "rule") {
        kb.rules.push_back(parse_rule(cur));
      } else if (keyword == "action") {
        ActionDecl a;
        a.predicate = cur.symbol("predicate name");
        cur.expect("/");
        a.arity = cur.integer();
        cur.expect("arg");
        cur.expect("=");
        a.arg_index = cur.integer();
        if (cur.consume("label")) {
          cur.expect("=");
          a.label = cur.symbol("action label");
        }
        kb.actions.push_back(a);
      } else if (keyword == "sort") {
        std::string p = cur.symbol("predicate name");
        cur.expect("/");
        if (cur.integer() != 1) cur.fail("sort predicates must be unary");
        kb.sorts.push_back(std::move(p));
      } else if (keyword == "reward") {
        RewardDecl r;
        r.pattern = parse_atom(cur, false);
        cur.expect("=");
        r.reward = cur.real();
        kb.rewards.push_back(std::move(r));
      } else if (keyword == "inconsistent") {
        InconsistencyDecl d;
        d.first = parse_atom(cur, true);
        cur.expect(",");
        d.second = parse_atom(cur, true);
        kb.inconsistencies.push_back(std::move(d));
      } else if (keyword == "option") {
        const std::string name = cur.symbol("option name");
        cur.expect("=");
        const double v = cur.real();
        if (name != "observation-cost") cur.fail(fmt::format("unknown option '{}'", name));
        kb.observation_cost = v;
      } else {
        throw ParseError(fmt::format("unknown statement '{}'", keyword), line, column);
      }
    } catch (const std::invalid_argument& e) {
      cur.fail(e.what());
    }
  }
  kb.validate();
  return kb;
}

Observation parse_observation(std::string_view text, double default_cost, const KnowledgeBase* kb) {
  Observation obs;
  Cursor cur(text);
  auto section = [&](ObsLabel label) {
    // A section may be empty ("init: ;").
    const char next = cur.peek();
    if (next == ';' || next == '\0') return;
    do {
      ObservedAtom o;
      o.atom = parse_atom(cur, false);
      o.label = label;
      o.cost = default_cost;
      if (cur.consume("$")) {
        o.cost = cur.real();
        if (!(o.cost > 0.0)) cur.fail("observation cost must be positive");
      }
      if (kb != nullptr) {
        auto arity = kb->arity_of(o.atom.predicate);
        if (!arity) cur.fail(fmt::format("unknown predicate '{}'", o.atom.predicate));
        if (*arity != o.atom.arity()) cur.fail(fmt::format("arity mismatch for '{}'", o.atom.predicate));
      }
      obs.atoms.push_back(std::move(o));
    } while (cur.consume("^"));
  };
  try {
    if (cur.consume("init")) {
      cur.expect(":");
      section(ObsLabel::initial_state);
      if (!cur.consume(";") && !cur.at_end()) cur.fail("expected ';'");
    }
    if (!cur.at_end()) {
      cur.expect("goal");
      cur.expect(":");
      section(ObsLabel::goal_state);
      cur.consume(";");
      if (!cur.at_end()) cur.fail("trailing input after observation");
    }
  } catch (const std::invalid_argument& e) {
    cur.fail(e.what());
  }
  if (obs.goal_count() == 0) throw ValidationError("observation has no goal atoms");
  return obs;
}

}  // namespace ahrl::logic
