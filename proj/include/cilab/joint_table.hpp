#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cilab/errors.hpp"
#include "cilab/rational.hpp"
#include "cilab/schema.hpp"

namespace cilab {

/// Exact joint probability distribution over a Schema.
///
/// Sparse representation: only positive-probability cells are stored, keyed
/// by per-variable outcome indices in schema order. Entries always sum to
/// exactly 1. Immutable after construction; all operations return new tables.
class JointTable {
 public:
  using Key = std::vector<std::uint32_t>;
  using EntryMap = std::map<Key, Rational>;

  JointTable() = default;

  /// Builds a validated table. Assignments must be full and distinct;
  /// omitted assignments have probability zero.
  static JointTable from_entries(Schema schema,
                                 const std::vector<std::pair<Assignment, Rational>>& rows) {
    EntryMap entries;
    for (const auto& [assignment, p] : rows) {
      if (p.is_negative())
        raise(errc::negative_probability, "probability " + p.str() + " is negative");
      Key key = key_for(schema, assignment);
      if (p.is_zero()) continue;
      if (!entries.emplace(std::move(key), p).second)
        raise(errc::duplicate_assignment, "assignment listed twice: " + describe(schema, assignment));
    }
    return from_keyed(std::move(schema), std::move(entries));
  }

  /// Internal-form constructor: entries keyed by outcome indices. Zero cells
  /// are dropped; the exact-sum-one invariant is enforced.
  static JointTable from_keyed(Schema schema, EntryMap entries) {
    Rational sum;
    for (auto it = entries.begin(); it != entries.end();) {
      if (it->second.is_negative())
        raise(errc::negative_probability, "probability " + it->second.str() + " is negative");
      if (it->second.is_zero()) {
        it = entries.erase(it);
        continue;
      }
      sum += it->second;
      ++it;
    }
    if (sum != Rational(1))
      raise(errc::sum_not_one, "probabilities sum to " + sum.str() + ", not 1");
    JointTable t;
    t.schema_ = std::move(schema);
    t.entries_ = std::move(entries);
    return t;
  }

  const Schema& schema() const { return schema_; }
  const EntryMap& entries() const { return entries_; }

  /// Exact probability of a (possibly partial) assignment event.
  Rational probability(const Assignment& event) const {
    const auto constraints = constraints_for(event);
    Rational sum;
    for (const auto& [key, p] : entries_) {
      if (matches(key, constraints)) sum += p;
    }
    return sum;
  }

  /// Exact marginal over the named variables (result keeps schema order).
  JointTable marginal(const std::set<std::string>& vars) const {
    if (vars.empty()) raise(errc::bad_argument, "marginal over empty variable set");
    const std::vector<std::size_t> kept = indices_of(vars);
    EntryMap folded;
    for (const auto& [key, p] : entries_) {
      Key sub;
      sub.reserve(kept.size());
      for (std::size_t i : kept) sub.push_back(key[i]);
      folded[std::move(sub)] += p;
    }
    return from_keyed(schema_.project(kept), std::move(folded));
  }

  /// Exact conditional distribution over the remaining variables.
  /// Conditioning on the empty assignment returns the table unchanged.
  JointTable condition(const Assignment& on) const {
    if (on.empty()) return *this;
    const auto constraints = constraints_for(on);
    Rational event;
    for (const auto& [key, p] : entries_) {
      if (matches(key, constraints)) event += p;
    }
    if (event.is_zero())
      raise(errc::zero_probability_event, "conditioning event has probability 0: " + describe(schema_, on));

    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      if (!on.count(schema_.variable(i).name)) kept.push_back(i);
    }
    EntryMap conditioned;
    for (const auto& [key, p] : entries_) {
      if (!matches(key, constraints)) continue;
      Key sub;
      sub.reserve(kept.size());
      for (std::size_t i : kept) sub.push_back(key[i]);
      conditioned[std::move(sub)] += p / event;
    }
    return from_keyed(schema_.project(kept), std::move(conditioned));
  }

  /// Exact expectation of value_map(var) under this table's marginal.
  /// value_map must cover the variable's whole support.
  Rational expectation(const std::string& var, const std::map<std::string, Rational>& value_map) const {
    const std::size_t idx = schema_.index_of(var);
    const Variable& v = schema_.variable(idx);
    for (const std::string& label : v.support) {
      if (!value_map.count(label))
        raise(errc::missing_value, "value map lacks outcome \"" + label + "\" of \"" + var + "\"");
    }
    Rational sum;
    for (const auto& [key, p] : entries_) sum += value_map.at(v.support[key[idx]]) * p;
    return sum;
  }

  /// Product extension: appends a new variable distributed by `dist`,
  /// independent of every existing variable.
  JointTable extend_independent(const Variable& added, const std::vector<Rational>& dist) const {
    if (schema_.has_variable(added.name))
      raise(errc::duplicate_variable, "variable \"" + added.name + "\" already exists");
    if (dist.size() != added.support.size())
      raise(errc::bad_argument, "distribution size does not match support of \"" + added.name + "\"");
    Rational sum;
    for (const Rational& p : dist) {
      if (p.is_negative()) raise(errc::negative_probability, "probability " + p.str() + " is negative");
      sum += p;
    }
    if (sum != Rational(1)) raise(errc::sum_not_one, "distribution sums to " + sum.str() + ", not 1");

    std::vector<Variable> vars = schema_.variables();
    vars.push_back(added);
    EntryMap extended;
    for (const auto& [key, p] : entries_) {
      for (std::uint32_t o = 0; o < dist.size(); ++o) {
        if (dist[o].is_zero()) continue;
        Key k = key;
        k.push_back(o);
        extended.emplace(std::move(k), p * dist[o]);
      }
    }
    return from_keyed(Schema(std::move(vars)), std::move(extended));
  }

  /// Appends new_var = f(existing variables). The new variable is a
  /// deterministic function of the rest: for each positive-probability
  /// assignment exactly one value of new_var has positive probability.
  /// Its support is the sorted set of labels f takes on this table's support.
  JointTable push_forward_deterministic(
      const std::string& new_var,
      const std::function<std::string(const Assignment&)>& f) const {
    if (schema_.has_variable(new_var))
      raise(errc::duplicate_variable, "variable \"" + new_var + "\" already exists");

    std::map<Key, std::string> images;
    std::set<std::string> labels;
    for (const auto& [key, p] : entries_) {
      std::string label = f(label_assignment(key));
      labels.insert(label);
      images.emplace(key, std::move(label));
    }

    Variable added{new_var, std::vector<std::string>(labels.begin(), labels.end())};
    std::vector<Variable> vars = schema_.variables();
    vars.push_back(added);
    Schema extended(std::move(vars));

    EntryMap pushed;
    for (const auto& [key, p] : entries_) {
      Key k = key;
      k.push_back(extended.outcome_index(extended.size() - 1, images.at(key)));
      pushed.emplace(std::move(k), p);
    }
    return from_keyed(std::move(extended), std::move(pushed));
  }

  /// Labels of a full internal key.
  Assignment label_assignment(const Key& key) const {
    Assignment a;
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      const Variable& v = schema_.variable(i);
      a.emplace(v.name, v.support[key[i]]);
    }
    return a;
  }

  /// Schema-order indices of the named variables (validated).
  std::vector<std::size_t> indices_of(const std::set<std::string>& vars) const {
    std::vector<std::size_t> indices;
    indices.reserve(vars.size());
    for (const std::string& name : vars) indices.push_back(schema_.index_of(name));
    std::sort(indices.begin(), indices.end());
    return indices;
  }

  friend bool operator==(const JointTable& a, const JointTable& b) {
    return a.schema_ == b.schema_ && a.entries_ == b.entries_;
  }

 private:
  static Key key_for(const Schema& schema, const Assignment& full) {
    if (full.size() != schema.size())
      raise(errc::bad_argument, "assignment is not full: " + describe(schema, full));
    Key key(schema.size());
    for (const auto& [name, label] : full) {
      const std::size_t idx = schema.index_of(name);
      key[idx] = schema.outcome_index(idx, label);
    }
    return key;
  }

  std::vector<std::pair<std::size_t, std::uint32_t>> constraints_for(const Assignment& partial) const {
    std::vector<std::pair<std::size_t, std::uint32_t>> constraints;
    constraints.reserve(partial.size());
    for (const auto& [name, label] : partial) {
      const std::size_t idx = schema_.index_of(name);
      constraints.emplace_back(idx, schema_.outcome_index(idx, label));
    }
    return constraints;
  }

  static bool matches(const Key& key, const std::vector<std::pair<std::size_t, std::uint32_t>>& constraints) {
    for (const auto& [idx, outcome] : constraints) {
      if (key[idx] != outcome) return false;
    }
    return true;
  }

  static std::string describe(const Schema& schema, const Assignment& a) {
    std::string s;
    for (const auto& [name, label] : a) {
      if (!s.empty()) s += ", ";
      s += name + "=" + label;
    }
    (void)schema;
    return s.empty() ? "{}" : "{" + s + "}";
  }

  Schema schema_;
  EntryMap entries_;
};

}  // namespace cilab
