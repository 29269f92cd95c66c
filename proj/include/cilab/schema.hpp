#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cilab/errors.hpp"

namespace cilab {

/// A named finite-support variable. Outcome labels are opaque strings;
/// numeric meaning is attached separately via value maps where needed.
struct Variable {
  std::string name;
  std::vector<std::string> support;

  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Ordered collection of variables with unique names and non-empty,
/// duplicate-free supports. Immutable after construction.
class Schema {
 public:
  Schema() = default;

  explicit Schema(std::vector<Variable> variables) : vars_(std::move(variables)) {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const Variable& v = vars_[i];
      if (v.name.empty()) raise(errc::bad_schema, "variable with empty name");
      if (!name_index_.emplace(v.name, i).second)
        raise(errc::duplicate_variable, "duplicate variable \"" + v.name + "\"");
      if (v.support.empty()) raise(errc::bad_schema, "variable \"" + v.name + "\" has empty support");
      std::set<std::string_view> seen;
      for (const std::string& label : v.support) {
        if (label.empty()) raise(errc::bad_schema, "variable \"" + v.name + "\" has an empty outcome label");
        if (!seen.insert(label).second)
          raise(errc::bad_schema, "variable \"" + v.name + "\" repeats outcome \"" + label + "\"");
      }
    }
  }

  std::size_t size() const { return vars_.size(); }
  const std::vector<Variable>& variables() const { return vars_; }
  const Variable& variable(std::size_t i) const { return vars_[i]; }

  bool has_variable(const std::string& name) const { return name_index_.count(name) != 0; }

  std::size_t index_of(const std::string& name) const {
    const auto it = name_index_.find(name);
    if (it == name_index_.end()) raise(errc::unknown_variable, "no variable \"" + name + "\"");
    return it->second;
  }

  std::uint32_t outcome_index(std::size_t var, const std::string& label) const {
    const Variable& v = vars_.at(var);
    for (std::uint32_t i = 0; i < v.support.size(); ++i) {
      if (v.support[i] == label) return i;
    }
    raise(errc::unknown_outcome, "variable \"" + v.name + "\" has no outcome \"" + label + "\"");
  }

  /// Product of support sizes, saturating at SIZE_MAX.
  std::size_t cell_count() const {
    std::size_t cells = 1;
    for (const Variable& v : vars_) {
      if (v.support.size() != 0 && cells > std::numeric_limits<std::size_t>::max() / v.support.size())
        return std::numeric_limits<std::size_t>::max();
      cells *= v.support.size();
    }
    return cells;
  }

  /// Sub-schema over the given variable indices (caller supplies schema order).
  Schema project(const std::vector<std::size_t>& indices) const {
    std::vector<Variable> kept;
    kept.reserve(indices.size());
    for (std::size_t i : indices) kept.push_back(vars_.at(i));
    return Schema(std::move(kept));
  }

  friend bool operator==(const Schema& a, const Schema& b) { return a.vars_ == b.vars_; }

 private:
  std::vector<Variable> vars_;
  std::map<std::string, std::size_t> name_index_;
};

/// Partial or full assignment: variable name -> outcome label. std::map keeps
/// iteration canonical for serialization and error messages.
using Assignment = std::map<std::string, std::string>;

/// Parses "A1=0,A2=1" into an assignment. Used by the CLI's --target and in
/// tests; whitespace around tokens is ignored.
inline Assignment parse_assignment(std::string_view text) {
  const auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  Assignment out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = trim(text.substr(pos, comma - pos));
    if (item.empty()) raise(errc::parse_error, "empty assignment item in \"" + std::string(text) + "\"");
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size())
      raise(errc::parse_error, "expected name=label in \"" + std::string(item) + "\"");
    const std::string name(trim(item.substr(0, eq)));
    const std::string label(trim(item.substr(eq + 1)));
    if (!out.emplace(name, label).second)
      raise(errc::duplicate_assignment, "variable \"" + name + "\" assigned twice");
    if (comma == text.size()) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace cilab
