#pragma once

#include <stdexcept>
#include <string>

namespace cilab {

// Error conditions named by the operation contracts. zero_probability_event
// is load-bearing: the pipeline layer catches it to surface undefined
// conditional expectations instead of papering over them.
enum class errc {
  sum_not_one,
  negative_probability,
  unknown_outcome,
  duplicate_assignment,
  unknown_variable,
  duplicate_variable,
  zero_probability_event,
  missing_value,
  overlapping_sets,
  malformed_statement,
  support_too_large,
  schema_too_large,
  grid_too_large,
  empty_data,
  not_deterministic,
  bad_role,
  bad_schema,
  bad_argument,
  parse_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::sum_not_one: return "SumNotOne";
    case errc::negative_probability: return "NegativeProbability";
    case errc::unknown_outcome: return "UnknownOutcome";
    case errc::duplicate_assignment: return "DuplicateAssignment";
    case errc::unknown_variable: return "UnknownVariable";
    case errc::duplicate_variable: return "DuplicateVariable";
    case errc::zero_probability_event: return "ZeroProbabilityEvent";
    case errc::missing_value: return "MissingValue";
    case errc::overlapping_sets: return "OverlappingSets";
    case errc::malformed_statement: return "MalformedStatement";
    case errc::support_too_large: return "SupportTooLarge";
    case errc::schema_too_large: return "SchemaTooLarge";
    case errc::grid_too_large: return "GridTooLarge";
    case errc::empty_data: return "EmptyData";
    case errc::not_deterministic: return "NotDeterministic";
    case errc::bad_role: return "BadRole";
    case errc::bad_schema: return "BadSchema";
    case errc::bad_argument: return "BadArgument";
    case errc::parse_error: return "ParseError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace cilab
