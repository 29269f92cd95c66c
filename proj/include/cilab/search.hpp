#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cilab/errors.hpp"
#include "cilab/independence.hpp"
#include "cilab/joint_table.hpp"
#include "cilab/rational.hpp"
#include "cilab/statements.hpp"

namespace cilab {

/// "Do these premises imply this conclusion?" — the search looks for a table
/// that exactly satisfies every premise and exactly violates the conclusion.
struct ImplicationQuery {
  Schema schema;
  std::vector<IndependenceStatement> premises;
  IndependenceStatement conclusion;
};

enum class SearchMode { heuristic, exhaustive_grid, structured };

inline const char* search_mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::heuristic: return "heuristic";
    case SearchMode::exhaustive_grid: return "exhaustive_grid";
    case SearchMode::structured: return "structured";
  }
  return "?";
}

inline SearchMode parse_search_mode(const std::string& name) {
  if (name == "heuristic") return SearchMode::heuristic;
  if (name == "exhaustive_grid" || name == "exhaustive") return SearchMode::exhaustive_grid;
  if (name == "structured") return SearchMode::structured;
  raise(errc::parse_error, "unknown search mode \"" + name + "\"");
}

struct SearchConfig {
  std::uint64_t seed = 0;
  std::size_t restarts = 256;
  std::size_t max_iterations = 2000;   // hill-climb proposals per restart
  unsigned snap_denominator = 64;
  double premise_penalty_weight = 16.0;
  SearchMode mode = SearchMode::heuristic;
  std::size_t max_cells = 4096;        // schema size bound
  std::uint64_t max_grid_tables = 20'000'000;
};

struct StatementCheck {
  std::string statement;
  bool holds = false;
};

/// Exact boolean verification of a candidate against a query.
struct VerificationRecord {
  std::vector<StatementCheck> premises;
  StatementCheck conclusion;

  bool is_counterexample() const {
    for (const StatementCheck& c : premises) {
      if (!c.holds) return false;
    }
    return !conclusion.holds;
  }
};

struct SearchWitness {
  JointTable table;
  VerificationRecord verification;
  std::size_t restart_index = 0;
};

struct SearchOutcome {
  std::optional<SearchWitness> witness;
  SearchConfig config;          // echoed for reproducibility
  std::size_t restarts_used = 0;
};

/// Largest factorization residual of a CI statement over all strata and
/// outcome pairs: max |P(x,y,z)P(z) - P(x,z)P(y,z)|. Zero iff is_ci holds.
inline Rational violation_score(const JointTable& table, const CIStatement& s) {
  if (s.x.empty() || s.y.empty()) raise(errc::malformed_statement, "x and y must be non-empty");
  const detail::Strata strata = detail::build_strata(table, {s.x, s.y}, s.given);
  Rational worst;
  detail::for_each_factorization_gap(strata, 2, [&worst](const Rational& gap) {
    const Rational a = abs(gap);
    if (a > worst) worst = a;
    return true;
  });
  return worst;
}

/// Multi-group generalization used for mutual-independence premises.
inline Rational violation_score(const JointTable& table, const IndependenceStatement& s) {
  const detail::Strata strata = detail::build_strata(table, s.groups, s.given);
  Rational worst;
  detail::for_each_factorization_gap(strata, s.groups.size(), [&worst](const Rational& gap) {
    const Rational a = abs(gap);
    if (a > worst) worst = a;
    return true;
  });
  return worst;
}

namespace detail {

inline void validate_statement(const Schema& schema, const IndependenceStatement& s) {
  if (s.groups.size() < 2) raise(errc::malformed_statement, "need at least two groups");
  std::set<std::string> seen = s.given;
  for (const std::string& n : s.given) (void)schema.index_of(n);
  for (const auto& g : s.groups) {
    if (g.empty()) raise(errc::malformed_statement, "empty variable group");
    for (const std::string& n : g) {
      (void)schema.index_of(n);
      if (!seen.insert(n).second)
        raise(errc::overlapping_sets, "variable \"" + n + "\" appears in two roles");
    }
  }
}

inline void validate_query(const ImplicationQuery& q, std::size_t max_cells) {
  if (q.schema.size() == 0) raise(errc::bad_schema, "query schema is empty");
  if (q.schema.cell_count() > max_cells)
    raise(errc::schema_too_large, "schema has " + std::to_string(q.schema.cell_count()) +
                                      " cells, bound is " + std::to_string(max_cells));
  for (const auto& p : q.premises) validate_statement(q.schema, p);
  validate_statement(q.schema, q.conclusion);
}

inline VerificationRecord verify_candidate(const ImplicationQuery& q, const JointTable& t) {
  VerificationRecord rec;
  for (const auto& p : q.premises) rec.premises.push_back({p.text(), p.holds(t)});
  rec.conclusion = {q.conclusion.text(), q.conclusion.holds(t)};
  return rec;
}

/// Float surrogate of the exact factorization residuals, evaluated over a
/// dense cell vector. Built once per query; used only to steer the
/// hill-climb — every candidate is re-verified exactly before it is returned.
class SurrogateScorer {
 public:
  SurrogateScorer(const Schema& schema, const ImplicationQuery& q) {
    radices_.reserve(schema.size());
    for (const Variable& v : schema.variables()) radices_.push_back(v.support.size());
    strides_.assign(schema.size(), 1);
    for (std::size_t i = schema.size(); i-- > 1;) strides_[i - 1] = strides_[i] * radices_[i];
    cells_ = schema.size() == 0 ? 1 : strides_[0] * radices_[0];
    for (const auto& p : q.premises) premises_.push_back(compile(schema, p));
    conclusion_ = compile(schema, q.conclusion);
  }

  std::size_t cell_count() const { return cells_; }

  double objective(const std::vector<double>& p, double penalty) const {
    double obj = score(conclusion_, p);
    for (const auto& c : premises_) obj -= penalty * score(c, p);
    return obj;
  }

  double premise_total(const std::vector<double>& p) const {
    double total = 0.0;
    for (const auto& c : premises_) total += score(c, p);
    return total;
  }

 private:
  struct Compiled {
    std::size_t z_radix = 1;
    std::vector<std::size_t> group_radix;
    std::size_t joint_radix = 1;
    // per cell: stratum id, joint id, per-group ids (group-major)
    std::vector<std::size_t> z_id, joint_id;
    std::vector<std::vector<std::size_t>> group_id;
  };

  Compiled compile(const Schema& schema, const IndependenceStatement& s) const {
    Compiled c;
    const auto id_of = [&](const std::set<std::string>& names, std::size_t cell) {
      std::size_t id = 0;
      for (const std::string& n : names) {
        const std::size_t v = schema.index_of(n);
        id = id * radices_[v] + (cell / strides_[v]) % radices_[v];
      }
      return id;
    };
    const auto radix_of = [&](const std::set<std::string>& names) {
      std::size_t r = 1;
      for (const std::string& n : names) r *= radices_[schema.index_of(n)];
      return r;
    };
    c.z_radix = radix_of(s.given);
    for (const auto& g : s.groups) {
      c.group_radix.push_back(radix_of(g));
      c.joint_radix *= c.group_radix.back();
    }
    c.z_id.resize(cells_);
    c.joint_id.resize(cells_);
    c.group_id.assign(s.groups.size(), std::vector<std::size_t>(cells_));
    for (std::size_t cell = 0; cell < cells_; ++cell) {
      c.z_id[cell] = id_of(s.given, cell);
      std::size_t joint = 0;
      for (std::size_t g = 0; g < s.groups.size(); ++g) {
        const std::size_t gid = id_of(s.groups[g], cell);
        c.group_id[g][cell] = gid;
        joint = joint * c.group_radix[g] + gid;
      }
      c.joint_id[cell] = joint;
    }
    return c;
  }

  double score(const Compiled& c, const std::vector<double>& p) const {
    const std::size_t k = c.group_radix.size();
    std::vector<double> pz(c.z_radix, 0.0);
    std::vector<double> pjoint(c.z_radix * c.joint_radix, 0.0);
    std::vector<std::vector<double>> pg(k);
    for (std::size_t g = 0; g < k; ++g) pg[g].assign(c.z_radix * c.group_radix[g], 0.0);
    for (std::size_t cell = 0; cell < cells_; ++cell) {
      const double v = p[cell];
      if (v == 0.0) continue;
      const std::size_t z = c.z_id[cell];
      pz[z] += v;
      pjoint[z * c.joint_radix + c.joint_id[cell]] += v;
      for (std::size_t g = 0; g < k; ++g) pg[g][z * c.group_radix[g] + c.group_id[g][cell]] += v;
    }
    double worst = 0.0;
    std::vector<std::size_t> odo(k, 0);
    for (std::size_t z = 0; z < c.z_radix; ++z) {
      if (pz[z] == 0.0) continue;
      const double zpow = std::pow(pz[z], static_cast<double>(k - 1));
      std::fill(odo.begin(), odo.end(), 0);
      while (true) {
        std::size_t joint = 0;
        double prod = 1.0;
        for (std::size_t g = 0; g < k; ++g) {
          joint = joint * c.group_radix[g] + odo[g];
          prod *= pg[g][z * c.group_radix[g] + odo[g]];
        }
        const double gap = std::fabs(pjoint[z * c.joint_radix + joint] * zpow - prod);
        if (gap > worst) worst = gap;
        std::size_t g = 0;
        while (g < k && ++odo[g] == c.group_radix[g]) {
          odo[g] = 0;
          ++g;
        }
        if (g == k) break;
      }
    }
    return worst;
  }

  std::vector<std::size_t> radices_;
  std::vector<std::size_t> strides_;
  std::size_t cells_ = 1;
  std::vector<Compiled> premises_;
  Compiled conclusion_;
};

inline JointTable table_from_cells(const Schema& schema, const std::vector<std::uint64_t>& counts,
                                   std::uint64_t total) {
  JointTable::EntryMap entries;
  const std::size_t n = schema.size();
  std::vector<std::size_t> radices(n);
  for (std::size_t i = 0; i < n; ++i) radices[i] = schema.variable(i).support.size();
  for (std::size_t cell = 0; cell < counts.size(); ++cell) {
    if (counts[cell] == 0) continue;
    JointTable::Key key(n);
    std::size_t rest = cell;
    for (std::size_t i = n; i-- > 0;) {
      key[i] = static_cast<std::uint32_t>(rest % radices[i]);
      rest /= radices[i];
    }
    entries.emplace(std::move(key),
                    Rational(BigInt(counts[cell]), BigInt(total)));
  }
  return JointTable::from_keyed(schema, std::move(entries));
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over (seed, index); stable across platforms
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace detail

/// Enumerates every table whose entries are multiples of 1/denominator, in
/// lexicographic order over canonical cell order, and returns the first
/// exact counterexample; empty means there is none at this resolution.
inline std::optional<JointTable> exhaustive_grid_search(const ImplicationQuery& q,
                                                        unsigned denominator,
                                                        std::uint64_t max_tables = 20'000'000) {
  if (denominator < 1) raise(errc::bad_argument, "denominator must be positive");
  detail::validate_query(q, std::numeric_limits<std::size_t>::max());
  const std::size_t cells = q.schema.cell_count();

  // number of grid tables = C(D + cells - 1, cells - 1)
  BigInt tables = 1;
  for (std::size_t i = 1; i < cells; ++i) {
    tables = tables * BigInt(denominator + i) / BigInt(i);
  }
  if (tables > BigInt(max_tables))
    raise(errc::grid_too_large, "grid has " + tables.str() + " tables, bound is " +
                                    std::to_string(max_tables));

  std::vector<std::uint64_t> counts(cells, 0);
  std::optional<JointTable> found;
  const std::function<bool(std::size_t, std::uint64_t)> walk = [&](std::size_t cell,
                                                                   std::uint64_t remaining) {
    if (cell + 1 == cells) {
      counts[cell] = remaining;
      JointTable t = detail::table_from_cells(q.schema, counts, denominator);
      if (detail::verify_candidate(q, t).is_counterexample()) {
        found = std::move(t);
        return true;
      }
      return false;
    }
    for (std::uint64_t k = 0; k <= remaining; ++k) {
      counts[cell] = k;
      if (walk(cell + 1, remaining - k)) return true;
    }
    counts[cell] = 0;
    return false;
  };
  walk(0, denominator);
  return found;
}

/// Searches for a table that exactly satisfies every premise and exactly
/// violates the conclusion. Heuristic mode optimizes a float surrogate
/// (conclusion residual minus penalized premise residuals) by randomized
/// restarts with coordinate perturbation, snaps probabilities onto the
/// 1/snap_denominator grid, renormalizes, and re-verifies exactly; snap
/// failures just continue the search. Structured mode instantiates xor-gadget
/// templates whose premises hold by construction. Deterministic given the
/// seed. An empty result means the budget was exhausted, not that no
/// counterexample exists (use exhaustive_grid_search for grid-definitive
/// negatives).
inline SearchOutcome find_counterexample(const ImplicationQuery& q, const SearchConfig& cfg) {
  detail::validate_query(q, cfg.max_cells);
  SearchOutcome out;
  out.config = cfg;

  // A conclusion that is literally one of the premises can never be satisfied
  // and violated by the same table.
  for (const auto& p : q.premises) {
    if (p.content_key() == q.conclusion.content_key()) return out;
  }

  if (cfg.mode == SearchMode::exhaustive_grid) {
    auto t = exhaustive_grid_search(q, cfg.snap_denominator, cfg.max_grid_tables);
    if (t) {
      SearchWitness w{*t, detail::verify_candidate(q, *t), 0};
      out.witness = std::move(w);
    }
    out.restarts_used = 1;
    return out;
  }

  if (cfg.mode == SearchMode::structured) {
    // xor gadget over an unordered pair of "cause" variables and one "target"
    // variable, everything else extended independently and uniformly.
    const Schema& schema = q.schema;
    const std::size_t n = schema.size();
    std::size_t template_index = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        for (std::size_t w = 0; w < n; ++w) {
          if (w == i || w == j) continue;
          if (schema.variable(i).support.size() < 2 || schema.variable(j).support.size() < 2 ||
              schema.variable(w).support.size() < 2)
            continue;
          ++template_index;
          JointTable::EntryMap entries;
          const std::size_t cells = schema.cell_count();
          std::vector<std::size_t> radices(n);
          for (std::size_t v = 0; v < n; ++v) radices[v] = schema.variable(v).support.size();
          BigInt uniform_den = 4;  // the gadget mass
          for (std::size_t v = 0; v < n; ++v) {
            if (v != i && v != j && v != w) uniform_den *= BigInt(radices[v]);
          }
          for (std::size_t cell = 0; cell < cells; ++cell) {
            JointTable::Key key(n);
            std::size_t rest = cell;
            for (std::size_t v = n; v-- > 0;) {
              key[v] = static_cast<std::uint32_t>(rest % radices[v]);
              rest /= radices[v];
            }
            if (key[i] > 1 || key[j] > 1 || key[w] > 1) continue;
            if ((key[i] ^ key[j]) != key[w]) continue;
            entries.emplace(std::move(key), Rational(BigInt(1), uniform_den));
          }
          JointTable t = JointTable::from_keyed(schema, std::move(entries));
          VerificationRecord rec = detail::verify_candidate(q, t);
          if (rec.is_counterexample()) {
            out.witness = SearchWitness{std::move(t), std::move(rec), template_index - 1};
            out.restarts_used = template_index;
            return out;
          }
        }
      }
    }
    out.restarts_used = template_index;
    return out;
  }

  // heuristic mode
  const detail::SurrogateScorer scorer(q.schema, q);
  const std::size_t cells = scorer.cell_count();

  std::vector<unsigned> snap_grids;
  for (unsigned d = 2; d <= cfg.snap_denominator; ++d) {
    if (cfg.snap_denominator % d == 0) snap_grids.push_back(d);
  }
  if (snap_grids.empty()) snap_grids.push_back(cfg.snap_denominator);

  for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
    std::mt19937_64 rng(detail::derive_stream(cfg.seed, restart));

    std::vector<double> p(cells);
    double total = 0.0;
    for (double& v : p) {
      v = -std::log(std::max(detail::unit_double(rng), 1e-300));
      total += v;
    }
    for (double& v : p) v /= total;

    double best = scorer.objective(p, cfg.premise_penalty_weight);
    std::vector<double> trial(cells);
    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
      const double step = 0.5 * std::pow(0.05, static_cast<double>(iter) /
                                                   static_cast<double>(cfg.max_iterations));
      trial = p;
      const std::size_t i = rng() % cells;
      std::size_t j = rng() % cells;
      if (j == i) j = (j + 1) % cells;
      switch (rng() % 8) {
        case 6:  // zero out i
          trial[j] += trial[i];
          trial[i] = 0.0;
          break;
        case 7: {  // equalize
          const double avg = 0.5 * (trial[i] + trial[j]);
          trial[i] = avg;
          trial[j] = avg;
          break;
        }
        default: {  // mass transfer
          const double delta = step * detail::unit_double(rng) * trial[i];
          trial[i] -= delta;
          trial[j] += delta;
          break;
        }
      }
      const double obj = scorer.objective(trial, cfg.premise_penalty_weight);
      if (obj > best + 1e-15) {
        best = obj;
        p.swap(trial);
      }
    }

    for (unsigned d : snap_grids) {
      std::vector<std::uint64_t> counts(cells, 0);
      std::uint64_t total_counts = 0;
      for (std::size_t c = 0; c < cells; ++c) {
        counts[c] = static_cast<std::uint64_t>(std::llround(p[c] * d));
        total_counts += counts[c];
      }
      if (total_counts == 0) continue;
      JointTable t = detail::table_from_cells(q.schema, counts, total_counts);
      VerificationRecord rec = detail::verify_candidate(q, t);
      if (rec.is_counterexample()) {
        out.witness = SearchWitness{std::move(t), std::move(rec), restart};
        out.restarts_used = restart + 1;
        return out;
      }
    }
  }
  out.restarts_used = cfg.restarts;
  return out;
}

}  // namespace cilab
