#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

#include "cotlearn/errors.hpp"

namespace cotlearn {

using Rational = mpq_class;

// Parses "num/den", "-num/den" or a plain integer. A leading '+' is accepted.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (!s.empty() && s.front() == '+') s.erase(0, 1);
  if (s.empty()) throw InputError("empty rational literal");
  for (char c : s) {
    if (!(c == '-' || c == '/' || (c >= '0' && c <= '9'))) {
      throw InputError("malformed rational literal '" + std::string(text) + "'");
    }
  }
  Rational r;
  if (r.set_str(s, 10) != 0) {
    throw InputError("malformed rational literal '" + std::string(text) + "'");
  }
  if (r.get_den() == 0) throw InputError("zero denominator in '" + std::string(text) + "'");
  r.canonicalize();
  return r;
}

// mpq_class(n, d) keeps n/d as given; counts need the canonical form.
inline Rational fraction(long num, long den) {
  if (den == 0) throw InputError("zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

// Decimal rendering with a fixed number of digits, used for CSV output only.
inline std::string to_decimal(const Rational& r, int digits = 6) {
  mpf_class f(r, 128);
  std::string out;
  // gmp_snprintf handles the rounding; 64 bytes is enough for values in [0,1].
  char buf[64];
  gmp_snprintf(buf, sizeof buf, "%.*Ff", digits, f.get_mpf_t());
  out = buf;
  return out;
}

}  // namespace cotlearn
