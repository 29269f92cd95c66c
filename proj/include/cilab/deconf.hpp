#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cilab/errors.hpp"
#include "cilab/independence.hpp"
#include "cilab/joint_table.hpp"
#include "cilab/rational.hpp"
#include "cilab/search.hpp"

namespace cilab {

/// Finite sample of cause assignments. Rows hold outcome indices into the
/// schema's supports; the seed that produced the draw travels with the data.
struct Dataset {
  Schema schema;
  std::vector<std::vector<std::uint32_t>> rows;
  std::uint64_t seed = 0;
};

/// n i.i.d. draws from the marginal of `table` over `vars`. Deterministic
/// given the seed (raw mt19937_64 output, no library distributions).
inline Dataset simulate_samples(const JointTable& table, const std::set<std::string>& vars,
                                std::size_t n, std::uint64_t seed) {
  if (n < 1) raise(errc::bad_argument, "need at least one sample");
  const JointTable m = table.marginal(vars);

  std::vector<const JointTable::Key*> keys;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& [key, p] : m.entries()) {
    keys.push_back(&key);
    acc += p.to_double();
    cumulative.push_back(acc);
  }
  cumulative.back() = 1.0;  // guard against float round-off at the top

  Dataset ds;
  ds.schema = m.schema();
  ds.seed = seed;
  ds.rows.reserve(n);
  std::mt19937_64 rng(detail::derive_stream(seed, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = detail::unit_double(rng);
    const std::size_t at = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    ds.rows.push_back(*keys[std::min(at, keys.size() - 1)]);
  }
  return ds;
}

/// CSV form: header row of variable names, then one outcome label per cell.
inline std::string to_csv(const Dataset& ds) {
  std::string out;
  for (std::size_t i = 0; i < ds.schema.size(); ++i) {
    if (i) out += ',';
    out += ds.schema.variable(i).name;
  }
  out += '\n';
  for (const auto& row : ds.rows) {
    for (std::size_t i = 0; i < ds.schema.size(); ++i) {
      if (i) out += ',';
      out += ds.schema.variable(i).support[row[i]];
    }
    out += '\n';
  }
  return out;
}

inline Dataset dataset_from_csv(const Schema& schema, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) raise(errc::parse_error, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i) expected += ',';
    expected += schema.variable(i).name;
  }
  if (line != expected)
    raise(errc::parse_error, "CSV header \"" + line + "\" does not match schema \"" + expected + "\"");

  Dataset ds;
  ds.schema = schema;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::uint32_t> row;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      if (i + 1 < schema.size() && comma == line.size())
        raise(errc::parse_error, "short CSV row \"" + line + "\"");
      row.push_back(schema.outcome_index(i, line.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    if (pos <= line.size()) raise(errc::parse_error, "extra cells in CSV row \"" + line + "\"");
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

/// Mixture of independent categoricals over the causes: k class weights and
/// one categorical per class per cause. The probability type draws the
/// exact/float boundary: Rational for specified models, double for fitted.
template <typename P>
struct LatentClassModel {
  Schema cause_schema;
  std::vector<P> weights;                                    // [k]
  std::vector<std::vector<std::vector<P>>> class_cause_probs;  // [k][cause][outcome]
  bool fitted = false;
  double smoothing = 0.0;

  std::size_t class_count() const { return weights.size(); }
};

using ExactLatentClassModel = LatentClassModel<Rational>;
using FittedLatentClassModel = LatentClassModel<double>;

/// Reads the latent-class model off a table whose causes are rendered
/// mutually independent by z: weights = P(z), categoricals = P(cause | z).
/// Classes follow z's support order, skipping zero-probability outcomes.
inline ExactLatentClassModel exact_latent_class_from_table(const JointTable& table,
                                                           const std::vector<std::string>& causes,
                                                           const std::string& z) {
  std::vector<std::set<std::string>> groups;
  for (const std::string& c : causes) groups.push_back({c});
  if (causes.size() >= 2 && !is_mutually_independent(table, groups, {z}))
    raise(errc::bad_argument, "causes are not mutually independent given \"" + z + "\"");

  ExactLatentClassModel model;
  std::vector<Variable> cause_vars;
  for (const std::string& c : causes) cause_vars.push_back(table.schema().variable(table.schema().index_of(c)));
  model.cause_schema = Schema(cause_vars);
  model.fitted = false;

  const Variable& zvar = table.schema().variable(table.schema().index_of(z));
  for (const std::string& zlabel : zvar.support) {
    const Rational wz = table.probability({{z, zlabel}});
    if (wz.is_zero()) continue;
    model.weights.push_back(wz);
    const JointTable stratum = table.condition({{z, zlabel}});
    std::vector<std::vector<Rational>> per_cause;
    for (const Variable& cv : cause_vars) {
      std::vector<Rational> cat;
      for (const std::string& label : cv.support) cat.push_back(stratum.probability({{cv.name, label}}));
      per_cause.push_back(std::move(cat));
    }
    model.class_cause_probs.push_back(std::move(per_cause));
  }
  return model;
}

/// Posterior over classes for one cause assignment, with the MAP class
/// (ties broken toward the lowest index). A zero-likelihood assignment
/// yields the uniform posterior, flagged.
template <typename P>
struct ClassPosterior {
  std::vector<P> probs;
  std::size_t map_class = 0;
  bool zero_likelihood = false;
};

template <typename P>
ClassPosterior<P> substitute_confounder(const LatentClassModel<P>& model, const Assignment& a) {
  const Schema& schema = model.cause_schema;
  std::vector<std::uint32_t> outcome(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const std::string& name = schema.variable(j).name;
    const auto it = a.find(name);
    if (it == a.end()) raise(errc::missing_value, "assignment lacks cause \"" + name + "\"");
    outcome[j] = schema.outcome_index(j, it->second);
  }
  if (a.size() != schema.size()) raise(errc::unknown_variable, "assignment names a non-cause variable");

  const std::size_t k = model.class_count();
  ClassPosterior<P> post;
  post.probs.assign(k, P(0));
  P total(0);
  for (std::size_t c = 0; c < k; ++c) {
    P lik = model.weights[c];
    for (std::size_t j = 0; j < schema.size(); ++j) lik = lik * model.class_cause_probs[c][j][outcome[j]];
    post.probs[c] = lik;
    total = total + lik;
  }
  if (total == P(0)) {
    post.zero_likelihood = true;
    for (std::size_t c = 0; c < k; ++c) post.probs[c] = P(1) / P(static_cast<long long>(k));
    post.map_class = 0;
    return post;
  }
  for (std::size_t c = 0; c < k; ++c) post.probs[c] = post.probs[c] / total;
  post.map_class = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (post.probs[c] > post.probs[post.map_class]) post.map_class = c;
  }
  return post;
}

/// Sample log-likelihood of a latent-class model (float evaluation; exact
/// models are converted cell-wise).
template <typename P>
double log_likelihood(const LatentClassModel<P>& model, const Dataset& data) {
  if (data.rows.empty()) raise(errc::empty_data, "no rows");
  if (!(data.schema == model.cause_schema))
    raise(errc::bad_argument, "dataset schema does not match model causes");
  const std::size_t k = model.class_count();
  double ll = 0.0;
  for (const auto& row : data.rows) {
    double lik = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double term;
      if constexpr (std::is_same_v<P, double>) {
        term = model.weights[c];
      } else {
        term = model.weights[c].to_double();
      }
      for (std::size_t j = 0; j < row.size(); ++j) {
        if constexpr (std::is_same_v<P, double>) {
          term *= model.class_cause_probs[c][j][row[j]];
        } else {
          term *= model.class_cause_probs[c][j][row[j]].to_double();
        }
      }
      lik += term;
    }
    ll += std::log(lik);
  }
  return ll;
}

struct EmConfig {
  std::size_t max_iter = 500;
  double tol = 1e-9;          // relative log-likelihood change
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  double smoothing = 1e-6;    // additive pseudo-count per categorical cell
};

struct EmFit {
  FittedLatentClassModel model;
  double log_likelihood = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t best_restart = 0;
  std::vector<double> ll_trace;                       // best restart, per iteration
  std::vector<std::vector<double>> responsibilities;  // [row][class], best restart
};

namespace detail {

struct EmRun {
  FittedLatentClassModel model;
  double ll = -std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

inline double em_penalized(double ll, const FittedLatentClassModel& m) {
  if (m.smoothing == 0.0) return ll;
  double prior = 0.0;
  for (const auto& per_cause : m.class_cause_probs) {
    for (const auto& cat : per_cause) {
      for (double p : cat) prior += std::log(std::max(p, 1e-300));
    }
  }
  return ll + m.smoothing * prior;
}

inline EmRun run_em_once(const Dataset& data, std::size_t k, const EmConfig& cfg,
                         std::uint64_t stream) {
  const std::size_t n = data.rows.size();
  const std::size_t m = data.schema.size();
  std::mt19937_64 rng(stream);

  EmRun run;
  run.model.cause_schema = data.schema;
  run.model.fitted = true;
  run.model.smoothing = cfg.smoothing;
  run.model.weights.assign(k, 1.0 / static_cast<double>(k));
  run.model.class_cause_probs.assign(k, {});
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t s = data.schema.variable(j).support.size();
      std::vector<double> cat(s);
      double total = 0.0;
      for (double& v : cat) {
        v = 0.1 + unit_double(rng);
        total += v;
      }
      for (double& v : cat) v /= total;
      run.model.class_cause_probs[c].push_back(std::move(cat));
    }
  }

  std::vector<double> resp(k);
  std::vector<double> weight_acc(k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  double prev_pen = -std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
    // E-step accumulators for the M-step
    std::vector<std::vector<std::vector<double>>> counts(k);
    for (std::size_t c = 0; c < k; ++c) {
      counts[c].resize(m);
      for (std::size_t j = 0; j < m; ++j)
        counts[c][j].assign(data.schema.variable(j).support.size(), 0.0);
    }
    std::fill(weight_acc.begin(), weight_acc.end(), 0.0);

    double ll = 0.0;
    for (const auto& row : data.rows) {
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        double lik = run.model.weights[c];
        for (std::size_t j = 0; j < m; ++j) lik *= run.model.class_cause_probs[c][j][row[j]];
        resp[c] = lik;
        total += lik;
      }
      ll += std::log(total);
      for (std::size_t c = 0; c < k; ++c) {
        const double r = resp[c] / total;
        weight_acc[c] += r;
        for (std::size_t j = 0; j < m; ++j) counts[c][j][row[j]] += r;
      }
    }

    // Monotonicity of the EM objective, asserted every iteration. The
    // smoothed M-step maximizes the penalized objective exactly, so this
    // holds up to float noise.
    const double pen = em_penalized(ll, run.model);
    if (iter > 0 && pen < prev_pen - 1e-9 * (1.0 + std::fabs(prev_pen)))
      throw std::logic_error("EM objective decreased: " + std::to_string(prev_pen) + " -> " +
                             std::to_string(pen));
    run.trace.push_back(ll);
    run.iterations = iter + 1;

    const bool settled = iter > 0 && std::fabs(ll - prev_ll) <= cfg.tol * (1.0 + std::fabs(ll));
    prev_ll = ll;
    prev_pen = pen;
    run.ll = ll;
    if (settled) {
      run.converged = true;
      break;
    }

    // M-step with additive smoothing on categorical cells
    for (std::size_t c = 0; c < k; ++c) {
      run.model.weights[c] = weight_acc[c] / static_cast<double>(n);
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t s = data.schema.variable(j).support.size();
        const double denom = weight_acc[c] + cfg.smoothing * static_cast<double>(s);
        for (std::size_t v = 0; v < s; ++v)
          run.model.class_cause_probs[c][j][v] = (counts[c][j][v] + cfg.smoothing) / denom;
      }
    }
  }
  return run;
}

}  // namespace detail

/// Fits a latent-class model by EM with random restarts. The best restart by
/// final log-likelihood wins (ties to the lowest index). Non-convergence is
/// reported, not thrown. k = 1 has a closed form: one class whose
/// categoricals are the smoothed empirical marginals.
inline EmFit fit_latent_class_em(const Dataset& data, std::size_t k, const EmConfig& cfg = {}) {
  if (data.rows.empty()) raise(errc::empty_data, "cannot fit a model to an empty dataset");
  if (k < 1) raise(errc::bad_argument, "need at least one class");

  EmFit fit;
  if (k == 1) {
    fit.model.cause_schema = data.schema;
    fit.model.fitted = true;
    fit.model.smoothing = cfg.smoothing;
    fit.model.weights = {1.0};
    fit.model.class_cause_probs.assign(1, std::vector<std::vector<double>>(data.schema.size()));
    const double n = static_cast<double>(data.rows.size());
    for (std::size_t j = 0; j < data.schema.size(); ++j) {
      const std::size_t s = data.schema.variable(j).support.size();
      std::vector<double> cat(s, 0.0);
      for (const auto& row : data.rows) cat[row[j]] += 1.0;
      for (double& v : cat) v = (v + cfg.smoothing) / (n + cfg.smoothing * static_cast<double>(s));
      fit.model.class_cause_probs[0][j] = std::move(cat);
    }
    fit.log_likelihood = log_likelihood(fit.model, data);
    fit.converged = true;
    fit.iterations = 1;
    fit.ll_trace = {fit.log_likelihood};
    fit.responsibilities.assign(data.rows.size(), {1.0});
    return fit;
  }

  std::optional<detail::EmRun> best;
  std::size_t best_index = 0;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    detail::EmRun run = detail::run_em_once(data, k, cfg, detail::derive_stream(cfg.seed, r + 1));
    if (!best || run.ll > best->ll) {
      best = std::move(run);
      best_index = r;
    }
  }

  fit.model = best->model;
  fit.log_likelihood = best->ll;
  fit.converged = best->converged;
  fit.iterations = best->iterations;
  fit.best_restart = best_index;
  fit.ll_trace = best->trace;

  fit.responsibilities.reserve(data.rows.size());
  for (const auto& row : data.rows) {
    std::vector<double> resp(k);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double lik = fit.model.weights[c];
      for (std::size_t j = 0; j < row.size(); ++j) lik *= fit.model.class_cause_probs[c][j][row[j]];
      resp[c] = lik;
      total += lik;
    }
    for (double& v : resp) v /= total;
    fit.responsibilities.push_back(std::move(resp));
  }
  return fit;
}

/// Best permutation aligning fitted classes to reference classes by summed
/// total-variation distance of the per-cause categoricals. Enumerates the k!
/// permutations; bounded at k <= 5. Returns p with "fitted class c plays
/// reference class p[c]".
inline std::vector<std::size_t> align_classes(const FittedLatentClassModel& fitted,
                                              const ExactLatentClassModel& reference) {
  const std::size_t k = fitted.class_count();
  if (k != reference.class_count()) raise(errc::bad_argument, "class counts differ");
  if (k > 5) raise(errc::support_too_large, "alignment enumerates k! permutations; k bounded at 5");
  if (!(fitted.cause_schema == reference.cause_schema))
    raise(errc::bad_argument, "cause schemas differ");

  const auto cost = [&](std::size_t c, std::size_t ref) {
    double d = 0.0;
    for (std::size_t j = 0; j < fitted.cause_schema.size(); ++j) {
      for (std::size_t v = 0; v < fitted.cause_schema.variable(j).support.size(); ++v) {
        d += 0.5 * std::fabs(fitted.class_cause_probs[c][j][v] -
                             reference.class_cause_probs[ref][j][v].to_double());
      }
    }
    return d;
  };

  std::vector<std::size_t> perm(k), best_perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  best_perm = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += cost(c, perm[c]);
    if (total < best_cost) {
      best_cost = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best_perm;
}

/// One conditioning stratum of the adjustment functional.
struct StratumTerm {
  std::string z_label;
  Rational p_z;
  std::optional<Rational> e_w;  // empty when the stratum is degenerate
};

/// psi(a) = sum_z P(Z=z) E[W | A=a, Z=z], with the baseline E[W] and the
/// gap psi - E[W]. Any stratum with P(z) > 0 but P(A=a, Z=z) = 0 makes psi
/// undefined; such strata are listed, never imputed.
struct AdjustmentReport {
  Assignment target;
  std::optional<Rational> psi;
  Rational baseline;
  std::optional<Rational> gap;
  std::vector<StratumTerm> strata;
  std::vector<std::string> degenerate_strata;
};

inline AdjustmentReport adjustment_functional(const JointTable& table,
                                              const std::vector<std::string>& causes,
                                              const std::string& w, const std::string& z,
                                              const Assignment& a,
                                              const std::map<std::string, Rational>& value_map) {
  const Schema& schema = table.schema();
  std::set<std::string> cause_set;
  for (const std::string& c : causes) {
    (void)schema.index_of(c);
    if (!cause_set.insert(c).second) raise(errc::bad_role, "cause \"" + c + "\" listed twice");
  }
  (void)schema.index_of(w);
  (void)schema.index_of(z);
  if (cause_set.count(w) || cause_set.count(z) || w == z)
    raise(errc::bad_role, "w/z must be distinct non-cause variables");
  if (a.size() != causes.size()) raise(errc::bad_role, "target must assign every cause exactly once");
  for (const std::string& c : causes) {
    if (!a.count(c)) raise(errc::bad_role, "target lacks cause \"" + c + "\"");
  }

  AdjustmentReport report;
  report.target = a;
  report.baseline = table.expectation(w, value_map);

  const Variable& zvar = schema.variable(schema.index_of(z));
  Rational psi;
  for (const std::string& zlabel : zvar.support) {
    const Rational pz = table.probability({{z, zlabel}});
    if (pz.is_zero()) continue;
    Assignment event = a;
    event.emplace(z, zlabel);
    if (table.probability(event).is_zero()) {
      report.degenerate_strata.push_back(zlabel);
      report.strata.push_back({zlabel, pz, std::nullopt});
      continue;
    }
    const Rational ew = table.condition(event).expectation(w, value_map);
    report.strata.push_back({zlabel, pz, ew});
    psi += pz * ew;
  }
  if (report.degenerate_strata.empty()) {
    report.psi = psi;
    report.gap = psi - report.baseline;
  }
  return report;
}

enum class ConditioningStatus { OnManifold, OffManifold };

/// Whether conditioning on (A = a, Z = z_value) is probabilistically
/// meaningful when Z is a deterministic function of the causes. Off-manifold
/// means z_value differs from the value Z takes at a, so the event has
/// probability zero and no conditional is defined.
struct DegenerateConditioningReport {
  Assignment a;
  std::string z;
  std::string z_value;
  Rational event_probability;
  bool well_defined = false;
  ConditioningStatus status = ConditioningStatus::OffManifold;
  std::vector<std::string> feasible_z;
};

inline DegenerateConditioningReport degenerate_conditioning_report(const JointTable& table,
                                                                   const std::string& z,
                                                                   const Assignment& a,
                                                                   const std::string& z_value) {
  const Schema& schema = table.schema();
  const std::size_t z_idx = schema.index_of(z);
  (void)schema.outcome_index(z_idx, z_value);
  if (a.count(z)) raise(errc::bad_role, "target assignment must not include \"" + z + "\"");
  if (a.empty()) raise(errc::bad_role, "target assignment is empty");
  std::set<std::string> cause_names;
  for (const auto& [name, label] : a) {
    const std::size_t idx = schema.index_of(name);
    (void)schema.outcome_index(idx, label);
    cause_names.insert(name);
  }

  // determinism: within every positive-probability cause assignment exactly
  // one z value occurs
  std::set<std::string> rel = cause_names;
  rel.insert(z);
  const JointTable m = table.marginal(rel);
  const std::size_t mz = m.schema().index_of(z);
  std::map<JointTable::Key, std::uint32_t> seen;
  for (const auto& [key, p] : m.entries()) {
    JointTable::Key causes_only;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (i != mz) causes_only.push_back(key[i]);
    }
    const auto [it, inserted] = seen.emplace(causes_only, key[mz]);
    if (!inserted && it->second != key[mz])
      raise(errc::not_deterministic,
            "\"" + z + "\" is not a deterministic function of the target variables");
  }

  DegenerateConditioningReport report;
  report.a = a;
  report.z = z;
  report.z_value = z_value;

  const Variable& zvar = schema.variable(z_idx);
  for (const std::string& label : zvar.support) {
    Assignment event = a;
    event.emplace(z, label);
    if (!table.probability(event).is_zero()) report.feasible_z.push_back(label);
  }
  Assignment query = a;
  query.emplace(z, z_value);
  report.event_probability = table.probability(query);
  report.well_defined = !report.event_probability.is_zero();
  report.status = report.well_defined ? ConditioningStatus::OnManifold : ConditioningStatus::OffManifold;
  return report;
}

/// Variant taking the deterministic definition directly: pushes z = f(causes)
/// onto the table first, then reports as above.
inline DegenerateConditioningReport degenerate_conditioning_report(
    const JointTable& table, const std::function<std::string(const Assignment&)>& z_def,
    const std::string& z_name, const Assignment& a, const std::string& z_value) {
  const JointTable extended = table.push_forward_deterministic(z_name, z_def);
  return degenerate_conditioning_report(extended, z_name, a, z_value);
}

}  // namespace cilab
