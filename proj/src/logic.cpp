#include "ahrl/logic.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace ahrl::logic {

bool is_symbol_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
}

bool is_valid_symbol(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_symbol_char);
}

Term Term::from_name(std::string_view name) {
  if (!is_valid_symbol(name)) {
    throw std::invalid_argument(fmt::format("invalid term name '{}'", name));
  }
  const auto c = static_cast<unsigned char>(name.front());
  if (std::isupper(c) != 0 || std::isdigit(c) != 0) return constant(std::string(name));
  return variable(std::string(name));
}

bool Atom::is_ground() const {
  return std::all_of(args.begin(), args.end(), [](const Term& t) { return t.is_constant(); });
}

std::string Atom::to_string() const {
  std::string out = negated ? "!" : "";
  out += predicate;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out += ',';
    out += args[i].name();
  }
  out += ')';
  return out;
}

std::optional<EqualitySet> unify(const Atom& a, const Atom& b) {
  if (a.predicate != b.predicate || a.arity() != b.arity()) return std::nullopt;
  EqualitySet eqs;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (a.args[i] != b.args[i]) eqs.emplace_back(a.args[i], b.args[i]);
  }
  return eqs;
}

std::size_t Observation::goal_count() const {
  return static_cast<std::size_t>(std::count_if(atoms.begin(), atoms.end(), [](const ObservedAtom& o) {
    return o.label == ObsLabel::goal_state;
  }));
}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(fmt::format("{}:{}: {}", line, column, what)), line_(line), column_(column) {}

namespace {

void record_arity(std::map<std::string, std::size_t>& table, const Atom& atom, std::string_view where) {
  auto [it, inserted] = table.emplace(atom.predicate, atom.arity());
  if (!inserted && it->second != atom.arity()) {
    throw ValidationError(fmt::format("arity conflict for '{}': {} vs {} (in {})", atom.predicate, it->second,
                                      atom.arity(), where));
  }
}

void check_known(const std::map<std::string, std::size_t>& table, const Atom& atom, std::string_view where) {
  auto it = table.find(atom.predicate);
  if (it == table.end()) {
    throw ValidationError(fmt::format("unknown predicate '{}' in {}", atom.predicate, where));
  }
  if (it->second != atom.arity()) {
    throw ValidationError(fmt::format("arity conflict for '{}': {} vs {} (in {})", atom.predicate, it->second,
                                      atom.arity(), where));
  }
}

}  // namespace

void KnowledgeBase::validate() {
  arity_.clear();
  std::set<std::string> ids;
  std::set<std::string> antecedent_preds;
  for (const auto& rule : rules) {
    const std::string where = fmt::format("rule {}", rule.id);
    if (!is_valid_symbol(rule.id)) throw ValidationError("rule with invalid id");
    if (!ids.insert(rule.id).second) throw ValidationError(fmt::format("duplicate rule id '{}'", rule.id));
    if (rule.antecedents.empty()) throw ValidationError(where + " has no antecedent");
    if (rule.consequents.empty()) throw ValidationError(where + " has no consequent");
    for (const auto& wa : rule.antecedents) {
      if (!(wa.weight > 0.0)) throw ValidationError(fmt::format("non-positive weight in {}", where));
      if (wa.atom.negated) throw ValidationError(fmt::format("negated atom in {}", where));
      record_arity(arity_, wa.atom, where);
      antecedent_preds.insert(wa.atom.predicate);
    }
    for (const auto& c : rule.consequents) {
      if (c.negated) throw ValidationError(fmt::format("negated atom in {}", where));
      record_arity(arity_, c, where);
    }
  }
  for (const auto& a : actions) {
    auto it = arity_.find(a.predicate);
    if (it == arity_.end()) throw ValidationError(fmt::format("unknown predicate '{}' in action", a.predicate));
    if (it->second != a.arity) {
      throw ValidationError(fmt::format("arity conflict for '{}' in action declaration", a.predicate));
    }
    if (a.arg_index >= a.arity) throw ValidationError(fmt::format("action '{}' arg index out of range", a.predicate));
  }
  for (const auto& r : rewards) {
    check_known(arity_, r.pattern, "reward declaration");
    if (!r.pattern.is_ground()) throw ValidationError("reward pattern must be ground: " + r.pattern.to_string());
    if (!antecedent_preds.contains(r.pattern.predicate)) {
      throw ValidationError(fmt::format("reward predicate '{}' is never reachable by backward chaining",
                                        r.pattern.predicate));
    }
  }
  for (const auto& d : inconsistencies) {
    check_known(arity_, d.first, "inconsistency declaration");
    check_known(arity_, d.second, "inconsistency declaration");
  }
  for (const auto& s : sorts) {
    auto it = arity_.find(s);
    if (it == arity_.end()) throw ValidationError(fmt::format("unknown predicate '{}' in sort", s));
    if (it->second != 1) throw ValidationError(fmt::format("sort predicate '{}' must be unary", s));
  }
  if (!(observation_cost > 0.0)) throw ValidationError("observation cost must be positive");
}

std::optional<std::size_t> KnowledgeBase::arity_of(const std::string& predicate) const {
  auto it = arity_.find(predicate);
  if (it == arity_.end()) return std::nullopt;
  return it->second;
}

const ActionDecl* KnowledgeBase::action_for(const std::string& predicate) const {
  for (const auto& a : actions) {
    if (a.predicate == predicate) return &a;
  }
  return nullptr;
}

bool KnowledgeBase::is_sort(const std::string& predicate) const {
  return std::find(sorts.begin(), sorts.end(), predicate) != sorts.end();
}

std::set<std::string> KnowledgeBase::rule_predicates() const {
  std::set<std::string> out;
  for (const auto& [p, _] : arity_) out.insert(p);
  return out;
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
  return rules == other.rules && actions == other.actions && rewards == other.rewards &&
         inconsistencies == other.inconsistencies && sorts == other.sorts &&
         observation_cost == other.observation_cost;
}

std::string format_real(double v) { return fmt::format("{}", v); }

std::string to_string(const KnowledgeBase& kb) {
  std::string out;
  out += fmt::format("option observation-cost = {}\n", format_real(kb.observation_cost));
  for (const auto& rule : kb.rules) {
    out += fmt::format("rule {} {{ ", rule.id);
    for (std::size_t i = 0; i < rule.antecedents.size(); ++i) {
      if (i > 0) out += " ^ ";
      out += rule.antecedents[i].atom.to_string();
      out += ':';
      out += format_real(rule.antecedents[i].weight);
    }
    out += " => ";
    for (std::size_t i = 0; i < rule.consequents.size(); ++i) {
      if (i > 0) out += " ^ ";
      out += rule.consequents[i].to_string();
    }
    out += " }\n";
  }
  for (const auto& a : kb.actions) {
    out += fmt::format("action {}/{} arg={}", a.predicate, a.arity, a.arg_index);
    out += a.label.empty() ? "\n" : fmt::format(" label={}\n", a.label);
  }
  for (const auto& s : kb.sorts) out += fmt::format("sort {}/1\n", s);
  for (const auto& r : kb.rewards) {
    out += fmt::format("reward {} = {}\n", r.pattern.to_string(), format_real(r.reward));
  }
  for (const auto& d : kb.inconsistencies) {
    out += fmt::format("inconsistent {} , {}\n", d.first.to_string(), d.second.to_string());
  }
  return out;
}

std::string to_string(const Observation& obs) {
  auto section = [&](ObsLabel label) {
    std::string s;
    for (const auto& o : obs.atoms) {
      if (o.label != label) continue;
      if (!s.empty()) s += " ^ ";
      s += o.atom.to_string();
      s += '$';
      s += format_real(o.cost);
    }
    return s;
  };
  return "init: " + section(ObsLabel::initial_state) + " ; goal: " + section(ObsLabel::goal_state);
}

}  // namespace ahrl::logic
