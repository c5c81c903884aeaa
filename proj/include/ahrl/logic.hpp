#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ahrl::logic {

enum class TermKind : unsigned char { constant, variable };

// A constant or a variable. Names starting with an upper-case letter or a
// digit are constants, everything else is a variable.
class Term {
 public:
  Term() = default;

  static Term constant(std::string name) { return Term(TermKind::constant, std::move(name)); }
  static Term variable(std::string name) { return Term(TermKind::variable, std::move(name)); }
  // Classifies by the first character. Throws std::invalid_argument on an
  // empty name or a character outside [A-Za-z0-9_-].
  static Term from_name(std::string_view name);

  TermKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool is_constant() const { return kind_ == TermKind::constant; }
  bool is_variable() const { return kind_ == TermKind::variable; }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;

 private:
  Term(TermKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  TermKind kind_ = TermKind::constant;
  std::string name_;
};

bool is_symbol_char(char c);
bool is_valid_symbol(std::string_view s);

struct Atom {
  std::string predicate;
  std::vector<Term> args;
  bool negated = false;

  std::size_t arity() const { return args.size(); }
  bool is_ground() const;
  std::string to_string() const;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

// Pairwise argument equalities assumed by unifying two atoms.
using Equality = std::pair<Term, Term>;
using EqualitySet = std::vector<Equality>;

// Pairs up the arguments of two same-predicate atoms. Positions whose terms
// are already identical are omitted. Returns nullopt when the predicates or
// arities differ. No substitution is applied.
std::optional<EqualitySet> unify(const Atom& a, const Atom& b);

struct WeightedAtom {
  Atom atom;
  double weight = 1.0;

  bool operator==(const WeightedAtom&) const = default;
};

struct WeightedRule {
  std::string id;
  std::vector<WeightedAtom> antecedents;
  std::vector<Atom> consequents;

  bool operator==(const WeightedRule&) const = default;
};

struct ActionDecl {
  std::string predicate;
  std::size_t arity = 0;
  std::size_t arg_index = 0;
  // Name used in plan labels; the predicate itself when empty.
  std::string label;

  const std::string& display() const { return label.empty() ? predicate : label; }
  bool operator==(const ActionDecl&) const = default;
};

struct RewardDecl {
  Atom pattern;
  double reward = 0.0;

  bool operator==(const RewardDecl&) const = default;
};

// Two atoms that may not both hold. Variables shared between the two
// patterns must bind to equal terms for the declaration to fire.
struct InconsistencyDecl {
  Atom first;
  Atom second;

  bool operator==(const InconsistencyDecl&) const = default;
};

inline constexpr double kDefaultObservationCost = 10.0;
inline constexpr double kDefaultRuleWeightTotal = 1.2;

class KnowledgeBase {
 public:
  std::vector<WeightedRule> rules;
  std::vector<ActionDecl> actions;
  std::vector<RewardDecl> rewards;
  std::vector<InconsistencyDecl> inconsistencies;
  // Unary predicates that name the type of their argument (apple(x)).
  std::vector<std::string> sorts;
  double observation_cost = kDefaultObservationCost;

  // Rebuilds the arity table and checks every invariant. Throws
  // ValidationError on the first problem found.
  void validate();

  std::optional<std::size_t> arity_of(const std::string& predicate) const;
  const ActionDecl* action_for(const std::string& predicate) const;
  bool is_sort(const std::string& predicate) const;
  const std::map<std::string, std::size_t>& arities() const { return arity_; }
  std::set<std::string> rule_predicates() const;

  bool operator==(const KnowledgeBase& other) const;

 private:
  std::map<std::string, std::size_t> arity_;
};

enum class ObsLabel : unsigned char { initial_state, goal_state };

struct ObservedAtom {
  Atom atom;
  double cost = kDefaultObservationCost;
  ObsLabel label = ObsLabel::initial_state;

  bool operator==(const ObservedAtom&) const = default;
};

struct Observation {
  std::vector<ObservedAtom> atoms;

  std::size_t goal_count() const;
  bool operator==(const Observation&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

KnowledgeBase parse_knowledge_base(std::string_view text);

// When `kb` is given, every atom's arity is checked against it.
Observation parse_observation(std::string_view text, double default_cost = kDefaultObservationCost,
                              const KnowledgeBase* kb = nullptr);

std::string to_string(const KnowledgeBase& kb);
std::string to_string(const Observation& obs);

// Formats a real so that parsing it back yields the same double.
std::string format_real(double v);

}  // namespace ahrl::logic
