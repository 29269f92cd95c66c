#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cilab/errors.hpp"
#include "cilab/independence.hpp"
#include "cilab/joint_table.hpp"

namespace cilab {

/// An independence statement over two or more disjoint variable groups,
/// optionally conditioned. Two groups is plain conditional independence;
/// more groups asserts full mutual independence given the conditioner.
struct IndependenceStatement {
  std::vector<std::set<std::string>> groups;
  std::set<std::string> given;

  bool holds(const JointTable& table) const { return is_mutually_independent(table, groups, given); }

  /// True CI statement form; only valid for exactly two groups.
  CIStatement as_ci() const {
    if (groups.size() != 2) raise(errc::malformed_statement, "statement has more than two groups");
    return CIStatement{groups[0], groups[1], given};
  }

  /// Canonical grammar rendering, e.g. "A1,A2 _||_ W | Z" with "-" for an
  /// empty conditioning set. Names print sorted; output re-parses to an
  /// equivalent statement.
  std::string text() const {
    const auto join = [](const std::set<std::string>& names) {
      std::string s;
      for (const std::string& n : names) {
        if (!s.empty()) s += ',';
        s += n;
      }
      return s;
    };
    std::string s;
    for (const auto& g : groups) {
      if (!s.empty()) s += " _||_ ";
      s += join(g);
    }
    s += " | ";
    s += given.empty() ? "-" : join(given);
    return s;
  }

  /// Normalized identity: statements with the same groups (as a set) and the
  /// same conditioner compare equal regardless of listing order.
  std::string content_key() const {
    std::set<std::string> rendered;
    const auto join = [](const std::set<std::string>& names) {
      std::string s;
      for (const std::string& n : names) s += n + ",";
      return s;
    };
    for (const auto& g : groups) rendered.insert(join(g));
    std::string key;
    for (const std::string& r : rendered) key += r + ";";
    key += "|" + join(given);
    return key;
  }

  friend bool operator==(const IndependenceStatement&, const IndependenceStatement&) = default;
};

namespace detail {

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::set<std::string> parse_name_list(std::string_view segment, std::size_t offset,
                                             std::string_view whole) {
  std::set<std::string> names;
  std::size_t pos = 0;
  while (pos <= segment.size()) {
    std::size_t comma = segment.find(',', pos);
    if (comma == std::string_view::npos) comma = segment.size();
    const std::string_view raw = segment.substr(pos, comma - pos);
    const std::string_view name = strip(raw);
    if (name.empty())
      raise(errc::parse_error, "empty variable name at position " + std::to_string(offset + pos) +
                                   " in \"" + std::string(whole) + "\"");
    for (char c : name) {
      if (c == '|' || c == ',' || c == ' ' || c == '\t')
        raise(errc::parse_error, "bad character in name at position " + std::to_string(offset + pos));
    }
    if (!names.insert(std::string(name)).second)
      raise(errc::parse_error, "name \"" + std::string(name) + "\" repeated at position " +
                                   std::to_string(offset + pos));
    if (comma == segment.size()) break;
    pos = comma + 1;
  }
  return names;
}

}  // namespace detail

/// Parses the statement grammar
///   group ( "_||_" group )+ [ "|" [ conditioner | "-" ] ]
/// where each group is a comma-separated variable list. Whitespace around
/// tokens is ignored. Disjointness is semantic and checked at evaluation,
/// not here.
inline IndependenceStatement parse_independence_statement(std::string_view text) {
  IndependenceStatement out;

  // The conditioning bar is the first '|' that is not part of a "_||_" token.
  std::vector<bool> in_separator(text.size(), false);
  for (std::size_t at = text.find("_||_"); at != std::string_view::npos;
       at = text.find("_||_", at + 4)) {
    for (std::size_t k = 0; k < 4; ++k) in_separator[at + k] = true;
  }
  std::size_t bar = std::string_view::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '|' && !in_separator[i]) {
      bar = i;
      break;
    }
  }

  std::string_view head = text;
  if (bar != std::string_view::npos) {
    head = text.substr(0, bar);
    const std::string_view tail = detail::strip(text.substr(bar + 1));
    if (tail.find('|') != std::string_view::npos)
      raise(errc::parse_error, "more than one conditioning bar in \"" + std::string(text) + "\"");
    if (!tail.empty() && tail != "-") out.given = detail::parse_name_list(tail, bar + 1, text);
  }

  // split the head on "_||_"
  const std::size_t base = 0;
  std::size_t pos = 0;
  while (true) {
    std::size_t sep = head.find("_||_", pos);
    if (sep == std::string_view::npos) sep = head.size();
    const std::string_view segment = head.substr(pos, sep - pos);
    if (detail::strip(segment).empty())
      raise(errc::parse_error, "empty group at position " + std::to_string(base + pos) + " in \"" +
                                   std::string(text) + "\"");
    out.groups.push_back(detail::parse_name_list(detail::strip(segment), base + pos, text));
    if (sep == head.size()) break;
    pos = sep + 4;
  }
  if (out.groups.size() < 2)
    raise(errc::parse_error, "expected at least two groups separated by _||_ in \"" +
                                 std::string(text) + "\"");
  return out;
}

/// Parses the two-group CI grammar "X1,X2 _||_ Y | Z1,Z2"; empty conditioning
/// is written with a trailing "|", with "| -", or by omitting the bar.
inline CIStatement parse_ci_statement(std::string_view text) {
  const IndependenceStatement s = parse_independence_statement(text);
  if (s.groups.size() != 2)
    raise(errc::parse_error, "expected exactly two groups in \"" + std::string(text) + "\"");
  return CIStatement{s.groups[0], s.groups[1], s.given};
}

}  // namespace cilab
