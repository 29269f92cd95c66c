#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cilab/errors.hpp"
#include "cilab/independence.hpp"
#include "cilab/joint_table.hpp"

namespace cilab {

/// A joint table with role tags: the causes, the outcome stand-in w, an
/// optional conditioner u for the premises, and the conditioner z for the
/// conclusion. An absent u means "constant": premise checks run
/// unconditionally and the minimality premise holds trivially.
struct ClaimInstance {
  JointTable table;
  std::vector<std::string> causes;
  std::string w;
  std::optional<std::string> u;
  std::string z;
};

/// Checks the role constraints: every role names a schema variable, the
/// causes are distinct, and w/z are distinct from the causes and each other.
/// u may coincide with z (conditioning the premises on the same variable as
/// the conclusion is a meaningful instance) but with nothing else.
inline void validate_roles(const ClaimInstance& inst) {
  const Schema& schema = inst.table.schema();
  if (inst.causes.empty()) raise(errc::bad_role, "instance has no causes");
  std::set<std::string> causes;
  for (const std::string& c : inst.causes) {
    (void)schema.index_of(c);
    if (!causes.insert(c).second) raise(errc::bad_role, "cause \"" + c + "\" listed twice");
  }
  (void)schema.index_of(inst.w);
  (void)schema.index_of(inst.z);
  if (causes.count(inst.w)) raise(errc::bad_role, "w coincides with a cause");
  if (causes.count(inst.z)) raise(errc::bad_role, "z coincides with a cause");
  if (inst.w == inst.z) raise(errc::bad_role, "w and z coincide");
  if (inst.u) {
    (void)schema.index_of(*inst.u);
    if (causes.count(*inst.u)) raise(errc::bad_role, "u coincides with a cause");
    if (*inst.u == inst.w) raise(errc::bad_role, "u coincides with w");
  }
}

enum class Verdict { ClaimRefuted, ClaimInstanceConsistent, PremisesFail };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::ClaimRefuted: return "ClaimRefuted";
    case Verdict::ClaimInstanceConsistent: return "ClaimInstanceConsistent";
    case Verdict::PremisesFail: return "PremisesFail";
  }
  return "?";
}

/// Verdict on one instance. premise_1i/premise_1ii are per cause, aligned
/// with `causes`. conclusion_3 and verdict are only set once the conclusion
/// has been evaluated (check_premises leaves them empty).
struct ClaimReport {
  std::vector<std::string> causes;
  std::vector<bool> premise_1i;
  std::vector<bool> premise_1ii;
  bool premise_iii = false;
  bool premise_2 = false;
  std::optional<bool> conclusion_3;
  std::optional<Verdict> verdict;

  bool premises_hold() const {
    bool all = premise_iii && premise_2;
    for (bool b : premise_1i) all = all && b;
    for (bool b : premise_1ii) all = all && b;
    return all;
  }
};

inline Verdict verdict_from(bool premises_hold, bool conclusion) {
  if (!premises_hold) return Verdict::PremisesFail;
  return conclusion ? Verdict::ClaimInstanceConsistent : Verdict::ClaimRefuted;
}

/// Evaluates the premises:
///   (1)(i)  each cause independent of w given u,
///   (1)(ii) each cause independent of the remaining causes given u,
///   (iii)   no proper coarsening of u already satisfies (ii),
///   (2)     the causes mutually independent given z.
inline ClaimReport check_premises(const ClaimInstance& inst) {
  validate_roles(inst);
  ClaimReport r;
  r.causes = inst.causes;
  const std::set<std::string> given_u =
      inst.u ? std::set<std::string>{*inst.u} : std::set<std::string>{};

  std::vector<std::set<std::string>> cause_groups;
  for (const std::string& c : inst.causes) cause_groups.push_back({c});

  for (std::size_t j = 0; j < inst.causes.size(); ++j) {
    r.premise_1i.push_back(is_ci(inst.table, {{inst.causes[j]}, {inst.w}, given_u}));
    std::set<std::string> others;
    for (std::size_t k = 0; k < inst.causes.size(); ++k) {
      if (k != j) others.insert(inst.causes[k]);
    }
    r.premise_1ii.push_back(others.empty() ||
                            is_ci(inst.table, {{inst.causes[j]}, others, given_u}));
  }
  r.premise_iii = !inst.u || minimality_check(inst.table, *inst.u, cause_groups);
  r.premise_2 = inst.causes.size() < 2 ||
                is_mutually_independent(inst.table, cause_groups, {inst.z});
  return r;
}

/// The conclusion: all causes jointly independent of w given z.
inline bool check_conclusion(const ClaimInstance& inst) {
  validate_roles(inst);
  std::set<std::string> all_causes(inst.causes.begin(), inst.causes.end());
  return is_ci(inst.table, {all_causes, {inst.w}, {inst.z}});
}

/// Premises + conclusion + verdict in one report.
inline ClaimReport evaluate_claim(const ClaimInstance& inst) {
  ClaimReport r = check_premises(inst);
  r.conclusion_3 = check_conclusion(inst);
  r.verdict = verdict_from(r.premises_hold(), *r.conclusion_3);
  return r;
}

namespace detail {

/// The three-variable table that is pairwise independent but not jointly:
/// (A1, A2, W) uniform on the even-parity-violating rows
/// {(0,0,0),(0,1,1),(1,0,1),(1,1,0)}, i.e. W = A1 xor A2 with A1, A2 fair.
inline JointTable xor_triple() {
  Schema schema({{"A1", {"0", "1"}}, {"A2", {"0", "1"}}, {"W", {"0", "1"}}});
  const Rational q(1, 4);
  return JointTable::from_entries(
      schema, {
                  {{{"A1", "0"}, {"A2", "0"}, {"W", "0"}}, q},
                  {{{"A1", "0"}, {"A2", "1"}, {"W", "1"}}, q},
                  {{{"A1", "1"}, {"A2", "0"}, {"W", "1"}}, q},
                  {{{"A1", "1"}, {"A2", "1"}, {"W", "0"}}, q},
              });
}

}  // namespace detail

/// First refuting fixture: the xor triple times an independent fair coin Z,
/// with no u (constant). Every premise holds, the conclusion fails.
inline ClaimInstance build_ce1() {
  JointTable table =
      detail::xor_triple().extend_independent({"Z", {"0", "1"}}, {Rational(1, 2), Rational(1, 2)});
  return ClaimInstance{std::move(table), {"A1", "A2"}, "W", std::nullopt, "Z"};
}

/// Second refuting fixture: u = z = a fair coin that the causes need for
/// independence. Given Z=0 the xor triple on outcomes {0,1}; given Z=1 the
/// same pattern on outcomes {0,2}.
inline ClaimInstance build_ce2() {
  Schema schema({{"A1", {"0", "1", "2"}}, {"A2", {"0", "1", "2"}}, {"W", {"0", "1"}}, {"Z", {"0", "1"}}});
  const Rational e(1, 8);
  JointTable table = JointTable::from_entries(
      schema, {
                  {{{"A1", "0"}, {"A2", "0"}, {"W", "0"}, {"Z", "0"}}, e},
                  {{{"A1", "0"}, {"A2", "1"}, {"W", "1"}, {"Z", "0"}}, e},
                  {{{"A1", "1"}, {"A2", "0"}, {"W", "1"}, {"Z", "0"}}, e},
                  {{{"A1", "1"}, {"A2", "1"}, {"W", "0"}, {"Z", "0"}}, e},
                  {{{"A1", "0"}, {"A2", "0"}, {"W", "0"}, {"Z", "1"}}, e},
                  {{{"A1", "0"}, {"A2", "2"}, {"W", "1"}, {"Z", "1"}}, e},
                  {{{"A1", "2"}, {"A2", "0"}, {"W", "1"}, {"Z", "1"}}, e},
                  {{{"A1", "2"}, {"A2", "2"}, {"W", "0"}, {"Z", "1"}}, e},
              });
  return ClaimInstance{std::move(table), {"A1", "A2"}, "W", "Z", "Z"};
}

/// Positivity-respecting variant: the xor triple extended with
/// `extra_causes` independent fair-coin causes A3.., and Z defined as a
/// deterministic function of the extras (A3 itself for one extra, the
/// concatenated labels otherwise). Every (a1, a2, z) cell has positive
/// probability while the claim is still refuted.
inline ClaimInstance build_overlap_variant(std::size_t extra_causes) {
  if (extra_causes < 1) raise(errc::bad_argument, "need at least one extra cause");
  JointTable table = detail::xor_triple();
  std::vector<std::string> causes = {"A1", "A2"};
  std::vector<std::string> extras;
  for (std::size_t i = 0; i < extra_causes; ++i) {
    std::string name = "A" + std::to_string(3 + i);
    table = table.extend_independent({name, {"0", "1"}}, {Rational(1, 2), Rational(1, 2)});
    causes.push_back(name);
    extras.push_back(std::move(name));
  }
  table = table.push_forward_deterministic("Z", [&extras](const Assignment& a) {
    std::string label;
    for (const std::string& name : extras) label += a.at(name);
    return label;
  });
  return ClaimInstance{std::move(table), std::move(causes), "W", std::nullopt, "Z"};
}

}  // namespace cilab
