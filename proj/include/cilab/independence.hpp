#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cilab/errors.hpp"
#include "cilab/joint_table.hpp"

namespace cilab {

/// A conditional-independence claim "x is independent of y given `given`".
/// The three sets must be pairwise disjoint and non-empty (given may be empty).
struct CIStatement {
  std::set<std::string> x;
  std::set<std::string> y;
  std::set<std::string> given;

  friend bool operator==(const CIStatement&, const CIStatement&) = default;
};

namespace detail {

inline void require_disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const std::string& name : a) {
    if (b.count(name)) raise(errc::overlapping_sets, "variable \"" + name + "\" appears on both sides");
  }
}

inline void require_known(const JointTable& t, const std::set<std::string>& names) {
  for (const std::string& name : names) (void)t.schema().index_of(name);
}

/// Per-stratum sufficient statistics for factorization checks: the stratum
/// probability, each group's marginal within the stratum, and the joint over
/// all groups within the stratum. All probabilities include the stratum event
/// (they are P(. , z), not conditionals), so checks can avoid division.
struct Strata {
  struct Stratum {
    Rational pz;
    std::vector<std::map<JointTable::Key, Rational>> group_marginals;
    std::map<JointTable::Key, Rational> joint;  // key = concatenated group keys
  };
  std::map<JointTable::Key, Stratum> by_given;
};

/// Builds the stratum statistics for `groups` given `given`, validating the
/// statement against the table's schema.
inline Strata build_strata(const JointTable& table,
                           const std::vector<std::set<std::string>>& groups,
                           const std::set<std::string>& given) {
  if (groups.size() < 2) raise(errc::malformed_statement, "need at least two groups");
  std::set<std::string> all = given;
  require_known(table, given);
  for (const auto& g : groups) {
    if (g.empty()) raise(errc::malformed_statement, "empty variable group");
    require_known(table, g);
    for (const std::string& name : g) {
      if (!all.insert(name).second)
        raise(errc::overlapping_sets, "variable \"" + name + "\" appears in two roles");
    }
  }

  const JointTable m = table.marginal(all);
  const Schema& schema = m.schema();

  const auto positions = [&schema](const std::set<std::string>& names) {
    std::vector<std::size_t> idx;
    for (const std::string& n : names) idx.push_back(schema.index_of(n));
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  const std::vector<std::size_t> given_idx = positions(given);
  std::vector<std::vector<std::size_t>> group_idx;
  group_idx.reserve(groups.size());
  for (const auto& g : groups) group_idx.push_back(positions(g));

  const auto project = [](const JointTable::Key& key, const std::vector<std::size_t>& idx) {
    JointTable::Key sub;
    sub.reserve(idx.size());
    for (std::size_t i : idx) sub.push_back(key[i]);
    return sub;
  };

  Strata strata;
  for (const auto& [key, p] : m.entries()) {
    Strata::Stratum& s = strata.by_given[project(key, given_idx)];
    if (s.group_marginals.empty()) s.group_marginals.resize(groups.size());
    s.pz += p;
    JointTable::Key joint_key;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      JointTable::Key gk = project(key, group_idx[g]);
      s.group_marginals[g][gk] += p;
      joint_key.insert(joint_key.end(), gk.begin(), gk.end());
    }
    s.joint[joint_key] += p;
  }
  return strata;
}

/// Walks every combination of positive per-group outcomes within each
/// stratum and reports the factorization residual
///   P(g1..gk, z) * P(z)^(k-1)  -  prod_i P(gi, z)
/// to the callback. Returning false from the callback stops the walk.
template <typename Callback>
void for_each_factorization_gap(const Strata& strata, std::size_t group_count, Callback&& cb) {
  for (const auto& [zkey, s] : strata.by_given) {
    if (s.pz.is_zero()) continue;  // vacuous stratum
    std::vector<std::vector<const std::pair<const JointTable::Key, Rational>*>> supports(group_count);
    for (std::size_t g = 0; g < group_count; ++g) {
      for (const auto& entry : s.group_marginals[g]) supports[g].push_back(&entry);
    }
    const Rational pz_power = pow(s.pz, static_cast<unsigned>(group_count - 1));

    std::vector<std::size_t> odo(group_count, 0);
    while (true) {
      JointTable::Key joint_key;
      Rational product(1);
      for (std::size_t g = 0; g < group_count; ++g) {
        const auto* entry = supports[g][odo[g]];
        joint_key.insert(joint_key.end(), entry->first.begin(), entry->first.end());
        product *= entry->second;
      }
      Rational joint;
      if (const auto it = s.joint.find(joint_key); it != s.joint.end()) joint = it->second;
      if (!cb(joint * pz_power - product)) return;

      std::size_t g = 0;
      while (g < group_count && ++odo[g] == supports[g].size()) {
        odo[g] = 0;
        ++g;
      }
      if (g == group_count) break;
    }
  }
}

}  // namespace detail

/// Exact mutual-independence test: true iff within every positive-probability
/// stratum of `given`, the conditional joint over the groups factorizes into
/// the product of the group marginals. Full factorization, not pairwise.
inline bool is_mutually_independent(const JointTable& table,
                                    const std::vector<std::set<std::string>>& groups,
                                    const std::set<std::string>& given) {
  const detail::Strata strata = detail::build_strata(table, groups, given);
  bool ok = true;
  detail::for_each_factorization_gap(strata, groups.size(), [&ok](const Rational& gap) {
    if (!gap.is_zero()) {
      ok = false;
      return false;
    }
    return true;
  });
  return ok;
}

/// Exact conditional-independence test for "x _||_ y | given". Strata of
/// `given` with probability zero are vacuously independent.
inline bool is_ci(const JointTable& table, const CIStatement& s) {
  if (s.x.empty() || s.y.empty()) raise(errc::malformed_statement, "x and y must be non-empty");
  return is_mutually_independent(table, {s.x, s.y}, s.given);
}

/// Side-by-side pairwise vs joint diagnostics for a target set.
struct PairwiseJointReport {
  std::vector<std::set<std::string>> groups;
  std::set<std::string> target;
  std::set<std::string> given;
  std::vector<bool> group_vs_target;  // is_ci(g _||_ target | given) per group
  bool union_vs_target = false;       // is_ci(union of groups _||_ target | given)
  bool groups_mutual = false;         // is_mutually_independent(groups | given)
  bool pairwise_joint_gap = false;    // every group independent, union not
};

inline PairwiseJointReport pairwise_joint_report(const JointTable& table,
                                                 const std::vector<std::set<std::string>>& groups,
                                                 const std::set<std::string>& target,
                                                 const std::set<std::string>& given) {
  PairwiseJointReport r;
  r.groups = groups;
  r.target = target;
  r.given = given;
  std::set<std::string> all;
  for (const auto& g : groups) {
    r.group_vs_target.push_back(is_ci(table, {g, target, given}));
    all.insert(g.begin(), g.end());
  }
  r.union_vs_target = is_ci(table, {all, target, given});
  r.groups_mutual = groups.size() >= 2 ? is_mutually_independent(table, groups, given) : true;
  bool each = true;
  for (bool b : r.group_vs_target) each = each && b;
  r.pairwise_joint_gap = each && !r.union_vs_target;
  return r;
}

/// A partition of a variable's support into disjoint non-empty blocks.
struct Partition {
  std::vector<std::vector<std::string>> blocks;
};

/// All set partitions of `labels` (restricted-growth-string enumeration).
/// Used to coarsen a conditioner's support; callers bound the size.
inline std::vector<Partition> set_partitions(const std::vector<std::string>& labels) {
  std::vector<Partition> out;
  const std::size_t n = labels.size();
  if (n == 0) return out;
  std::vector<std::size_t> rgs(n, 0);
  while (true) {
    std::size_t block_count = 0;
    for (std::size_t b : rgs) block_count = std::max(block_count, b + 1);
    Partition p;
    p.blocks.assign(block_count, {});
    for (std::size_t i = 0; i < n; ++i) p.blocks[rgs[i]].push_back(labels[i]);
    out.push_back(std::move(p));

    // next restricted growth string
    std::size_t i = n;
    while (i-- > 1) {
      std::size_t prefix_max = 0;
      for (std::size_t j = 0; j < i; ++j) prefix_max = std::max(prefix_max, rgs[j]);
      if (rgs[i] <= prefix_max) {
        ++rgs[i];
        for (std::size_t j = i + 1; j < n; ++j) rgs[j] = 0;
        break;
      }
    }
    if (i == 0 || i == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

/// Conditioner-minimality check: true iff no proper coarsening of u's
/// positive-probability support (strictly fewer blocks, including the
/// one-block coarsening = the unconditional case) induces a variable that
/// already renders the groups mutually independent.
inline bool minimality_check(const JointTable& table, const std::string& u,
                             const std::vector<std::set<std::string>>& groups,
                             std::size_t max_support = 8) {
  (void)table.schema().index_of(u);
  for (const auto& g : groups) {
    if (g.count(u)) raise(errc::overlapping_sets, "conditioner \"" + u + "\" appears in a group");
  }

  const JointTable u_marginal = table.marginal({u});
  std::vector<std::string> effective;
  for (const auto& [key, p] : u_marginal.entries())
    effective.push_back(u_marginal.schema().variable(0).support[key[0]]);
  if (effective.size() > max_support)
    raise(errc::support_too_large,
          "\"" + u + "\" has " + std::to_string(effective.size()) +
              " positive outcomes; partition enumeration bounded at " + std::to_string(max_support));
  if (effective.size() <= 1) return true;  // trivial sigma-algebra, nothing to coarsen

  std::string coarse_name = "_coarse_" + u;
  while (table.schema().has_variable(coarse_name)) coarse_name += "_";

  for (const Partition& partition : set_partitions(effective)) {
    if (partition.blocks.size() >= effective.size()) continue;  // not a proper coarsening
    std::map<std::string, std::string> block_of;
    for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
      for (const std::string& label : partition.blocks[b]) block_of[label] = "b" + std::to_string(b);
    }
    const JointTable coarse = table.push_forward_deterministic(
        coarse_name, [&](const Assignment& a) {
          const auto it = block_of.find(a.at(u));
          return it == block_of.end() ? std::string("b0") : it->second;
        });
    if (is_mutually_independent(coarse, groups, {coarse_name})) return false;
  }
  return true;
}

}  // namespace cilab
