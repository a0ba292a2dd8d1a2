#pragma once
// Exact rational arithmetic for the engine core.  Thin helpers around GMP's
// mpq_class: canonical form is maintained by GMP; we add parsing, rendering,
// height, and dyadic utilities.  No floating point is used anywhere in the
// core.

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace redec {

using Int = mpz_class;
using Rat = mpq_class;

enum class ErrorCode {
  ParseError,
  RecipThroughZero,
  DimensionMismatch,
  SmoothnessExceeded,
  DomainViolation,
  UnknownFamilyIndex,
  MalformedName,
  PrecondViolated,
  PrecondUnverifiable,
  InvalidCertificate,
  InvalidName,
  NotRefinable,
  InadmissibleTransformation,
  BudgetExhausted,
  OracleDivergence,
  GenConditionFails,
  InfiniteOrder,
  EmptyBlock,
  CompatibilityViolation,
  GluingMismatch,
  NormalizationFailure,
  SyntaxError,
  UnknownSymbol,
  IOError,
  Internal,
};

class EngineError : public std::runtime_error {
 public:
  EngineError(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline Rat rat_of(long num, long den = 1) {
  Rat r(num, den);
  r.canonicalize();
  return r;
}

// Parses "p", "-p", or "p/q" with arbitrary-precision integers.
inline std::optional<Rat> parse_rat(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      Int n(s, 10);
      return Rat(n);
    }
    std::string ns = s.substr(0, slash), ds = s.substr(slash + 1);
    if (ns.empty() || ds.empty()) return std::nullopt;
    Int n(ns, 10), d(ds, 10);
    if (d <= 0) return std::nullopt;
    Rat r(n, d);
    r.canonicalize();
    return r;
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

inline std::string rat_to_string(const Rat& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

// Height of a rational p/q in lowest terms: max(|p|, q).
inline Int rat_height(const Rat& r) {
  Int n = abs(r.get_num());
  const Int& d = r.get_den();
  return n > d ? n : Int(d);
}

inline Rat pow_rat(const Rat& base, unsigned e) {
  Rat acc = 1, b = base;
  unsigned k = e;
  while (k) {
    if (k & 1u) acc *= b;
    b *= b;
    k >>= 1;
  }
  return acc;
}

// 2^{-k} as an exact rational.
inline Rat dyadic(unsigned k) {
  Rat r(1);
  r /= pow_rat(Rat(2), k);
  return r;
}

inline Int factorial(unsigned n) {
  Int f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= static_cast<unsigned long>(i);
  return f;
}

inline Rat rat_min(const Rat& a, const Rat& b) { return a < b ? a : b; }
inline Rat rat_max(const Rat& a, const Rat& b) { return a > b ? a : b; }
inline Rat rat_abs(const Rat& a) { return a < 0 ? Rat(-a) : a; }

inline int sign_of(const Rat& a) { return sgn(a); }

// Enumerates all rationals of height exactly h >= 1 in increasing
// numerator/denominator order (used by canonical searches).
inline std::vector<Rat> rationals_of_height(long h) {
  std::vector<Rat> out;
  if (h < 1) return out;
  for (long den = 1; den <= h; ++den) {
    for (long num = -h; num <= h; ++num) {
      Rat r(num, den);
      r.canonicalize();
      if (rat_height(r) == h || (h == 1 && rat_height(r) <= 1)) {
        // keep exactly-height-h entries (height-1 includes 0, ±1)
        if (rat_height(r) == h) out.push_back(r);
        else if (h == 1 && num >= -1 && num <= 1 && den == 1)
          out.push_back(r);
      }
    }
  }
  // dedupe (different num/den pairs can reduce to the same rational)
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace redec
