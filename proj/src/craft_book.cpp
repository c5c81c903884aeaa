#include "ahrl/craft_book.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ahrl/logic.hpp"

namespace ahrl::world {

using logic::ParseError;
using logic::ValidationError;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

const Recipe* CraftBook::recipe_for(const std::string& item) const {
  for (const auto& r : recipes) {
    if (r.item == item) return &r;
  }
  return nullptr;
}

bool CraftBook::is_material(const std::string& name) const { return contains(materials, name); }
bool CraftBook::is_fuel(const std::string& name) const { return contains(fuels, name); }
bool CraftBook::is_utility(const std::string& name) const { return contains(utilities, name); }

int CraftBook::material_count(const std::string& item) const {
  if (is_material(item)) return 1;
  const Recipe* r = recipe_for(item);
  if (r == nullptr) throw ValidationError(fmt::format("unknown item '{}'", item));
  int n = r->needs_fuel ? 1 : 0;
  for (const auto& i : r->ingredients) n += material_count(i);
  return n;
}

double CraftBook::reward_of(const std::string& item) const {
  auto it = reward_table.find(item);
  return it == reward_table.end() ? 0.0 : it->second;
}

void CraftBook::validate() {
  std::set<std::string> names;
  auto declare = [&](const std::string& n) {
    if (!names.insert(n).second) throw ValidationError(fmt::format("'{}' declared twice", n));
    if (n.empty() || std::isupper(static_cast<unsigned char>(n[0])) == 0) {
      throw ValidationError(fmt::format("'{}' must be capitalized", n));
    }
  };
  for (const auto& m : materials) declare(m);
  for (const auto& u : utilities) declare(u);
  for (const auto& r : recipes) declare(r.item);
  for (const auto& f : fuels) {
    if (!is_material(f)) throw ValidationError(fmt::format("fuel '{}' is not a material", f));
  }

  // Ingredients must be known, and recipe trees acyclic.
  std::map<std::string, int> state;
  std::function<void(const std::string&)> visit = [&](const std::string& item) {
    if (state[item] == 2) return;
    if (state[item] == 1) throw ValidationError(fmt::format("recipe cycle through '{}'", item));
    state[item] = 1;
    const Recipe* r = recipe_for(item);
    for (const auto& i : r->ingredients) {
      if (is_material(i)) continue;
      if (recipe_for(i) == nullptr) throw ValidationError(fmt::format("unknown ingredient '{}' in '{}'", i, item));
      visit(i);
    }
    state[item] = 2;
  };
  for (const auto& r : recipes) {
    if (r.ingredients.empty()) throw ValidationError(fmt::format("recipe '{}' has no ingredients", r.item));
    if (r.utility && !is_utility(*r.utility)) {
      throw ValidationError(fmt::format("unknown utility '{}' in '{}'", *r.utility, r.item));
    }
    if (r.needs_fuel && fuels.empty()) throw ValidationError(fmt::format("'{}' needs fuel but none is declared", r.item));
    visit(r.item);
  }

  for (const auto& [item, _] : reward_table) {
    if (recipe_for(item) == nullptr) throw ValidationError(fmt::format("reward for unknown item '{}'", item));
  }
  for (const auto& r : recipes) {
    reward_table.try_emplace(r.item, reward_per_material * material_count(r.item));
  }
  for (const auto& a : recipes) {
    for (const auto& b : recipes) {
      if (material_count(a.item) < material_count(b.item) && reward_table[a.item] >= reward_table[b.item]) {
        throw ValidationError(fmt::format("reward of '{}' must exceed that of '{}'", b.item, a.item));
      }
    }
  }

  if (min_size < 3 || min_size > max_size) throw ValidationError("bad world size range");
  if (min_kinds < 1 || min_kinds > max_kinds) throw ValidationError("bad material kind range");
  if (max_kinds > static_cast<int>(materials.size())) {
    throw ValidationError(fmt::format("max-kinds {} exceeds the {} declared materials", max_kinds, materials.size()));
  }
  if (min_copies < 1 || min_copies > max_copies) throw ValidationError("bad copy range");
  if (sensing_radius < 0 || max_steps < 1) throw ValidationError("bad sensing radius or step limit");
  if (lava_density < 0.0 || lava_density >= 1.0) throw ValidationError("lava density must lie in [0,1)");
  if (init_cost <= 0.0 || goal_cost <= 0.0) throw ValidationError("observation costs must be positive");
  if (!fixed_goal.empty() && recipe_for(fixed_goal) == nullptr) {
    throw ValidationError(fmt::format("fixed goal '{}' has no recipe", fixed_goal));
  }
}

CraftBook parse_craft_book(const std::string& text) {
  CraftBook book;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = raw.substr(0, raw.find('#'));
    auto words = split_words(line);
    if (words.empty()) continue;
    auto fail = [&](const std::string& msg) -> void { throw ParseError(msg, line_no, 1); };
    const std::string keyword = words[0];
    const std::vector<std::string> rest(words.begin() + 1, words.end());

    if (keyword == "material" || keyword == "fuel" || keyword == "utility") {
      if (rest.empty()) fail(fmt::format("'{}' needs at least one name", keyword));
      auto& dest = keyword == "material" ? book.materials : keyword == "fuel" ? book.fuels : book.utilities;
      dest.insert(dest.end(), rest.begin(), rest.end());
    } else if (keyword == "recipe") {
      // recipe Item = A ^ B [@ Utility] [+ fuel]
      if (rest.size() < 3 || rest[1] != "=") fail("expected 'recipe <item> = <ingredients>'");
      Recipe r;
      r.item = rest[0];
      bool expect_name = true;
      for (std::size_t i = 2; i < rest.size(); ++i) {
        const auto& w = rest[i];
        if (w == "^") {
          if (expect_name) fail("unexpected '^'");
          expect_name = true;
        } else if (w == "@") {
          if (i + 1 >= rest.size()) fail("expected a utility after '@'");
          r.utility = rest[++i];
        } else if (w == "+") {
          if (i + 1 >= rest.size() || rest[i + 1] != "fuel") fail("expected 'fuel' after '+'");
          r.needs_fuel = true;
          ++i;
        } else {
          if (!expect_name || r.utility || r.needs_fuel) fail(fmt::format("unexpected '{}'", w));
          r.ingredients.push_back(w);
          expect_name = false;
        }
      }
      if (expect_name) fail("recipe ends without an ingredient");
      book.recipes.push_back(std::move(r));
    } else if (keyword == "reward" || keyword == "option") {
      if (rest.size() != 3 || rest[1] != "=") fail(fmt::format("expected '{} <name> = <value>'", keyword));
      if (keyword == "option" && rest[0] == "fixed-goal") {
        book.fixed_goal = rest[2];
        continue;
      }
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(rest[2], &used);
        if (used != rest[2].size()) fail(fmt::format("bad number '{}'", rest[2]));
      } catch (const std::logic_error&) {
        fail(fmt::format("bad number '{}'", rest[2]));
      }
      if (keyword == "reward") {
        book.reward_table[rest[0]] = v;
        continue;
      }
      const std::map<std::string, double*> reals = {
          {"base-goal-reward", &book.base_goal_reward}, {"reward-per-material", &book.reward_per_material},
          {"lava-density", &book.lava_density},         {"init-cost", &book.init_cost},
          {"goal-cost", &book.goal_cost},
      };
      const std::map<std::string, int*> ints = {
          {"sensing-radius", &book.sensing_radius}, {"min-size", &book.min_size},   {"max-size", &book.max_size},
          {"min-kinds", &book.min_kinds},           {"max-kinds", &book.max_kinds}, {"min-copies", &book.min_copies},
          {"max-copies", &book.max_copies},         {"max-steps", &book.max_steps},
      };
      if (auto it = reals.find(rest[0]); it != reals.end()) {
        *it->second = v;
      } else if (auto jt = ints.find(rest[0]); jt != ints.end()) {
        if (v != static_cast<int>(v)) fail(fmt::format("option '{}' takes an integer", rest[0]));
        *jt->second = static_cast<int>(v);
      } else {
        fail(fmt::format("unknown option '{}'", rest[0]));
      }
    } else {
      fail(fmt::format("unknown statement '{}'", keyword));
    }
  }
  book.validate();
  return book;
}

}  // namespace ahrl::world
