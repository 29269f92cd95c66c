#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "cilab/errors.hpp"

namespace cilab {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational number with arbitrary-precision components.
///
/// Always stored in lowest terms with a positive denominator. Negative
/// values are allowed (scores and gaps need them); tables enforce the
/// probability-specific non-negativity at construction.
class Rational {
 public:
  Rational() : value_(0) {}
  Rational(long long n) : value_(n) {}  // NOLINT(google-explicit-constructor)
  Rational(long long num, long long den) : Rational(BigInt(num), BigInt(den)) {}
  Rational(BigInt num, BigInt den) {
    if (den == 0) raise(errc::bad_argument, "rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    value_ = Backend(std::move(num), std::move(den));
  }

  /// Parses "num/den" or "num"; den must be a positive integer.
  static Rational parse(std::string_view text) {
    const auto bad = [&](const char* why) -> Rational {
      raise(errc::parse_error, "invalid rational \"" + std::string(text) + "\": " + why);
    };
    if (text.empty()) return bad("empty");
    const auto slash = text.find('/');
    const std::string_view num_part = text.substr(0, slash);
    if (!is_integer_token(num_part, true)) return bad("bad numerator");
    BigInt num(std::string(num_part));
    BigInt den(1);
    if (slash != std::string_view::npos) {
      const std::string_view den_part = text.substr(slash + 1);
      if (!is_integer_token(den_part, false)) return bad("bad denominator");
      den = BigInt(std::string(den_part));
      if (den == 0) return bad("zero denominator");
    }
    return Rational(std::move(num), std::move(den));
  }

  BigInt numerator() const { return boost::multiprecision::numerator(value_); }
  BigInt denominator() const { return boost::multiprecision::denominator(value_); }

  /// Canonical text form: "num/den", with "/den" omitted when den == 1.
  std::string str() const {
    std::string s = numerator().str();
    const BigInt den = denominator();
    if (den != 1) {
      s += '/';
      s += den.str();
    }
    return s;
  }

  double to_double() const { return value_.convert_to<double>(); }

  bool is_zero() const { return value_ == 0; }
  bool is_negative() const { return value_ < 0; }
  bool is_positive() const { return value_ > 0; }

  Rational operator-() const { return Rational(Backend(-value_)); }
  Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
  Rational& operator-=(const Rational& o) { value_ -= o.value_; return *this; }
  Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) raise(errc::bad_argument, "rational division by zero");
    value_ /= o.value_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.value_ == b.value_; }
  friend bool operator!=(const Rational& a, const Rational& b) { return a.value_ != b.value_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.value_ < b.value_; }
  friend bool operator<=(const Rational& a, const Rational& b) { return a.value_ <= b.value_; }
  friend bool operator>(const Rational& a, const Rational& b) { return a.value_ > b.value_; }
  friend bool operator>=(const Rational& a, const Rational& b) { return a.value_ >= b.value_; }

  friend Rational abs(const Rational& a) { return a.is_negative() ? -a : a; }

  friend Rational pow(Rational base, unsigned exp) {
    Rational out(1);
    while (exp != 0) {
      if (exp & 1u) out *= base;
      exp >>= 1u;
      if (exp != 0) base *= base;
    }
    return out;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  using Backend = boost::multiprecision::cpp_rational;

  explicit Rational(Backend v) : value_(std::move(v)) {}

  static bool is_integer_token(std::string_view s, bool allow_sign) {
    if (allow_sign && !s.empty() && s.front() == '-') s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  }

  Backend value_;
};

}  // namespace cilab
