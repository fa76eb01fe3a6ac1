#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "crbm/errors.hpp"

namespace crbm {

enum class Domain { binary, ordinal, categorical, continuous };
enum class Role { background, longitudinal };

/// Which timescale models a variable belongs to.
enum class GroupPattern { three_month, six_month, both };

/// A cell is either an admissible value or MISSING (nullopt). Ordinal cells
/// hold the numeric level value; categorical cells hold the level index.
using Cell = std::optional<double>;

inline std::string to_string(Domain d) {
  switch (d) {
    case Domain::binary: return "binary";
    case Domain::ordinal: return "ordinal";
    case Domain::categorical: return "categorical";
    case Domain::continuous: return "continuous";
  }
  return "?";
}

inline std::string to_string(Role r) { return r == Role::background ? "background" : "longitudinal"; }

struct VariableSpec {
  std::string name;
  Domain domain = Domain::continuous;
  Role role = Role::longitudinal;
  GroupPattern groups = GroupPattern::both;
  std::vector<std::string> levels;  // ordinal / categorical
  double range_min = 0.0;           // continuous
  double range_max = 0.0;
  std::string unit;

  bool in_three_month() const { return groups != GroupPattern::six_month; }
  bool in_six_month() const { return groups != GroupPattern::three_month; }
  bool longitudinal() const { return role == Role::longitudinal; }

  std::size_t level_count() const { return levels.size(); }

  /// Numeric value of ordinal level k.
  double level_value(std::size_t k) const {
    if (level_values_.size() == levels.size()) return level_values_[k];
    return parse_level(k);
  }

  double parse_level(std::size_t k) const {
    double v = 0.0;
    const auto& s = levels.at(k);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw SchemaError("ordinal level '" + s + "' of '" + name + "' is not numeric");
    return v;
  }

  /// Index of the ordinal level whose value equals v, if any.
  std::optional<std::size_t> ordinal_index(double v) const {
    for (std::size_t k = 0; k < levels.size(); ++k)
      if (std::abs(level_value(k) - v) <= 1e-9 * std::max(1.0, std::abs(v))) return k;
    return std::nullopt;
  }

  bool admissible(double v) const {
    if (!std::isfinite(v)) return false;
    switch (domain) {
      case Domain::binary: return v == 0.0 || v == 1.0;
      case Domain::ordinal: return ordinal_index(v).has_value();
      case Domain::categorical:
        return v >= 0 && v < static_cast<double>(levels.size()) && v == std::floor(v);
      case Domain::continuous: return v >= range_min && v <= range_max;
    }
    return false;
  }

  void validate() const {
    if (name.empty()) throw SchemaError("variable with empty name");
    if (domain == Domain::ordinal || domain == Domain::categorical) {
      if (levels.size() < 2) throw SchemaError("variable '" + name + "' needs at least 2 levels");
      if (domain == Domain::ordinal) {
        level_values_.clear();
        for (std::size_t k = 0; k < levels.size(); ++k) {
          double v = parse_level(k);
          if (k > 0 && !(v > level_values_.back()))
            throw SchemaError("ordinal levels of '" + name + "' must be strictly increasing");
          level_values_.push_back(v);
        }
      }
    }
    if (domain == Domain::continuous && !(range_min < range_max))
      throw SchemaError("continuous variable '" + name + "' needs min < max");
  }

  friend bool operator==(const VariableSpec& a, const VariableSpec& b) {
    return a.name == b.name && a.domain == b.domain && a.role == b.role && a.groups == b.groups &&
           a.levels == b.levels && a.range_min == b.range_min && a.range_max == b.range_max &&
           a.unit == b.unit;
  }

  // Parsed ordinal level values, filled by validate().
  mutable std::vector<double> level_values_ = {};
};

/// Convenience constructors; each returns a validated spec.
inline VariableSpec continuous_variable(std::string name, Role role, GroupPattern groups, double lo,
                                       double hi, std::string unit = {}) {
  VariableSpec v{std::move(name), Domain::continuous, role, groups, {}, lo, hi, std::move(unit), {}};
  v.validate();
  return v;
}

inline VariableSpec binary_variable(std::string name, Role role, GroupPattern groups) {
  VariableSpec v{std::move(name), Domain::binary, role, groups, {}, 0.0, 0.0, {}, {}};
  v.validate();
  return v;
}

inline VariableSpec ordinal_variable(std::string name, Role role, GroupPattern groups,
                                    const std::vector<double>& values) {
  VariableSpec v{std::move(name), Domain::ordinal, role, groups, {}, 0.0, 0.0, {}, {}};
  for (double x : values) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    v.levels.emplace_back(buf, r.ptr);
  }
  v.validate();
  return v;
}

inline VariableSpec categorical_variable(std::string name, Role role, GroupPattern groups,
                                        std::vector<std::string> labels) {
  VariableSpec v{std::move(name), Domain::categorical, role, groups, std::move(labels), 0.0, 0.0, {}, {}};
  v.validate();
  return v;
}

using Schema = std::vector<VariableSpec>;

inline std::optional<std::size_t> find_variable(const Schema& schema, std::string_view name) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return i;
  return std::nullopt;
}

inline std::size_t require_variable(const Schema& schema, std::string_view name) {
  auto i = find_variable(schema, name);
  if (!i) throw SchemaError("unknown variable '" + std::string(name) + "'");
  return *i;
}

// ---- JSON ----------------------------------------------------------------

inline Domain parse_domain(const std::string& s) {
  if (s == "binary") return Domain::binary;
  if (s == "ordinal") return Domain::ordinal;
  if (s == "categorical") return Domain::categorical;
  if (s == "continuous") return Domain::continuous;
  throw SchemaError("unknown domain '" + s + "'");
}

inline Role parse_role(const std::string& s) {
  if (s == "background") return Role::background;
  if (s == "longitudinal") return Role::longitudinal;
  throw SchemaError("unknown role '" + s + "'");
}

inline nlohmann::json to_json(const VariableSpec& v) {
  nlohmann::json j;
  j["name"] = v.name;
  j["domain"] = to_string(v.domain);
  j["role"] = to_string(v.role);
  switch (v.groups) {
    case GroupPattern::three_month: j["groups"] = {3}; break;
    case GroupPattern::six_month: j["groups"] = {6}; break;
    case GroupPattern::both: j["groups"] = {3, 6}; break;
  }
  if (v.domain == Domain::ordinal) {
    auto lv = nlohmann::json::array();
    for (std::size_t k = 0; k < v.levels.size(); ++k) lv.push_back(v.level_value(k));
    j["levels"] = lv;
  } else if (v.domain == Domain::categorical) {
    j["levels"] = v.levels;
  }
  if (v.domain == Domain::continuous) j["range"] = {v.range_min, v.range_max};
  j["unit"] = v.unit;
  return j;
}

inline VariableSpec variable_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known{"name", "domain", "role", "groups", "levels", "range", "unit"};
  if (!j.is_object()) throw SchemaError("schema entry is not an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw SchemaError("unknown schema field '" + it.key() + "'");
  VariableSpec v;
  try {
    v.name = j.at("name").get<std::string>();
    v.domain = parse_domain(j.at("domain").get<std::string>());
    v.role = parse_role(j.at("role").get<std::string>());
    auto groups = j.at("groups").get<std::vector<int>>();
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    if (groups == std::vector<int>{3}) v.groups = GroupPattern::three_month;
    else if (groups == std::vector<int>{6}) v.groups = GroupPattern::six_month;
    else if (groups == std::vector<int>{3, 6}) v.groups = GroupPattern::both;
    else throw SchemaError("variable '" + v.name + "': groups must be {3}, {6} or {3,6}");
    if (j.contains("levels")) {
      for (const auto& l : j.at("levels")) {
        if (l.is_string()) v.levels.push_back(l.get<std::string>());
        else if (l.is_number_integer()) v.levels.push_back(std::to_string(l.get<long long>()));
        else if (l.is_number()) {
          char buf[64];
          auto r = std::to_chars(buf, buf + sizeof buf, l.get<double>());
          v.levels.emplace_back(buf, r.ptr);
        }
        else throw SchemaError("variable '" + v.name + "': levels must be numbers or strings");
      }
    }
    if (j.contains("range")) {
      auto r = j.at("range").get<std::vector<double>>();
      if (r.size() != 2) throw SchemaError("variable '" + v.name + "': range must be [min, max]");
      v.range_min = r[0];
      v.range_max = r[1];
    }
    if (j.contains("unit")) v.unit = j.at("unit").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema entry: ") + e.what());
  }
  v.validate();
  return v;
}

inline Schema schema_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("schema must be a JSON array");
  Schema s;
  for (const auto& e : j) s.push_back(variable_from_json(e));
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t k = i + 1; k < s.size(); ++k)
      if (s[i].name == s[k].name) throw SchemaError("duplicate variable '" + s[i].name + "'");
  return s;
}

inline nlohmann::json schema_to_json(const Schema& s) {
  auto j = nlohmann::json::array();
  for (const auto& v : s) j.push_back(to_json(v));
  return j;
}

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file '" + path + "' is not valid JSON: " + e.what());
  }
  return schema_from_json(j);
}

inline void save_schema(const Schema& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << schema_to_json(s).dump(2) << '\n';
}

}  // namespace crbm
