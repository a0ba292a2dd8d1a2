#pragma once
// Sparse multivariate polynomials over Q.  Exact arithmetic, partial
// derivatives, substitution/composition, interval range enclosures, Taylor
// shifts, and monomial divisibility — the symbolic workhorse for the
// geometric layers.

#include <redec/box.hpp>

#include <map>
#include <numeric>
#include <sstream>
#include <vector>

namespace redec {

using Expo = std::vector<unsigned>;  // exponent vector, length = nvars

class Poly {
 public:
  size_t nvars = 0;
  std::map<Expo, Rat> terms;  // nonzero coefficients only

  Poly() = default;
  explicit Poly(size_t n) : nvars(n) {}

  static Poly constant(size_t n, const Rat& c) {
    Poly p(n);
    if (c != 0) p.terms[Expo(n, 0)] = c;
    return p;
  }
  static Poly var(size_t n, size_t i) {
    if (i >= n) throw EngineError(ErrorCode::DimensionMismatch, "Poly::var");
    Poly p(n);
    Expo e(n, 0);
    e[i] = 1;
    p.terms[e] = 1;
    return p;
  }
  static Poly monomial(size_t n, const Expo& e, const Rat& c) {
    Poly p(n);
    if (c != 0) p.terms[e] = c;
    return p;
  }

  bool is_zero() const { return terms.empty(); }
  bool is_constant() const {
    return terms.empty() ||
           (terms.size() == 1 &&
            std::all_of(terms.begin()->first.begin(), terms.begin()->first.end(),
                        [](unsigned e) { return e == 0; }));
  }
  Rat constant_value() const {
    if (terms.empty()) return Rat(0);
    return terms.begin()->second;
  }

  unsigned total_degree() const {
    unsigned d = 0;
    for (auto& [e, c] : terms)
      d = std::max(d, std::accumulate(e.begin(), e.end(), 0u));
    return d;
  }
  unsigned degree_in(size_t i) const {
    unsigned d = 0;
    for (auto& [e, c] : terms) d = std::max(d, e[i]);
    return d;
  }

  void add_term(const Expo& e, const Rat& c) {
    if (c == 0) return;
    auto it = terms.find(e);
    if (it == terms.end()) {
      terms.emplace(e, c);
    } else {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }

  Poly operator+(const Poly& o) const {
    check(o);
    Poly r = *this;
    for (auto& [e, c] : o.terms) r.add_term(e, c);
    return r;
  }
  Poly operator-() const {
    Poly r = *this;
    for (auto& [e, c] : r.terms) c = -c;
    return r;
  }
  Poly operator-(const Poly& o) const { return *this + (-o); }
  Poly operator*(const Poly& o) const {
    check(o);
    Poly r(nvars);
    for (auto& [e1, c1] : terms)
      for (auto& [e2, c2] : o.terms) {
        Expo e(nvars);
        for (size_t i = 0; i < nvars; ++i) e[i] = e1[i] + e2[i];
        r.add_term(e, Rat(c1 * c2));
      }
    return r;
  }
  Poly operator*(const Rat& c) const {
    Poly r(nvars);
    if (c == 0) return r;
    for (auto& [e, k] : terms) r.terms[e] = k * c;
    return r;
  }
  bool operator==(const Poly& o) const { return nvars == o.nvars && terms == o.terms; }

  Poly pow(unsigned k) const {
    Poly acc = constant(nvars, 1), b = *this;
    while (k) {
      if (k & 1u) acc = acc * b;
      if (k >>= 1) b = b * b;
    }
    return acc;
  }

  Poly deriv(size_t i) const {
    Poly r(nvars);
    for (auto& [e, c] : terms) {
      if (e[i] == 0) continue;
      Expo e2 = e;
      e2[i] -= 1;
      r.add_term(e2, Rat(c * e[i]));
    }
    return r;
  }
  Poly deriv_multi(const Expo& alpha) const {
    Poly r = *this;
    for (size_t i = 0; i < alpha.size(); ++i)
      for (unsigned k = 0; k < alpha[i]; ++k) r = r.deriv(i);
    return r;
  }

  Rat eval(const std::vector<Rat>& x) const {
    if (x.size() != nvars) throw EngineError(ErrorCode::DimensionMismatch, "Poly::eval");
    Rat s(0);
    for (auto& [e, c] : terms) {
      Rat t = c;
      for (size_t i = 0; i < nvars; ++i)
        if (e[i]) t *= pow_rat(x[i], e[i]);
      s += t;
    }
    return s;
  }

  // Substitutes args[i] (polynomials in m variables) for x_i.
  Poly compose(const std::vector<Poly>& args) const {
    if (args.size() != nvars)
      throw EngineError(ErrorCode::DimensionMismatch, "Poly::compose arity");
    size_t m = args.empty() ? 0 : args[0].nvars;
    for (auto& a : args)
      if (a.nvars != m) throw EngineError(ErrorCode::DimensionMismatch, "Poly::compose vars");
    Poly r(m);
    for (auto& [e, c] : terms) {
      Poly t = Poly::constant(m, c);
      for (size_t i = 0; i < nvars; ++i)
        if (e[i]) t = t * args[i].pow(e[i]);
      r = r + t;
    }
    return r;
  }

  // Interval range enclosure over a bounded box (naive term-wise; exact
  // endpoints, not necessarily tight).
  RationalInterval range_on(const RationalBox& B) const {
    if (B.dim() != nvars) throw EngineError(ErrorCode::DimensionMismatch, "Poly::range_on");
    RationalInterval acc = RationalInterval::point(Rat(0));
    bool first = true;
    for (auto& [e, c] : terms) {
      RationalInterval t = RationalInterval::point(c);
      for (size_t i = 0; i < nvars; ++i) {
        RationalInterval p = RationalInterval::point(Rat(1));
        for (unsigned k = 0; k < e[i]; ++k) p = interval_mul(p, B.dims[i]);
        t = interval_mul(t, p);
      }
      acc = first ? t : interval_add(acc, t);
      first = false;
    }
    return acc;
  }

  // Taylor shift: returns g with g(x) = f(a + x).
  Poly shift(const std::vector<Rat>& a) const {
    std::vector<Poly> args;
    args.reserve(nvars);
    for (size_t i = 0; i < nvars; ++i)
      args.push_back(Poly::var(nvars, i) + Poly::constant(nvars, a[i]));
    return compose(args);
  }

  // Order (vanishing multiplicity) at a point: min total degree of the
  // Taylor expansion, or nullopt if f ≡ 0.
  std::optional<unsigned> order_at(const std::vector<Rat>& a) const {
    if (is_zero()) return std::nullopt;
    Poly g = shift(a);
    unsigned best = UINT32_MAX;
    for (auto& [e, c] : g.terms)
      best = std::min(best, std::accumulate(e.begin(), e.end(), 0u));
    return best;
  }

  // Min over monomials of the exponent mass on the index set E (the order
  // along the coordinate center {x_E = 0}); nullopt if f ≡ 0.
  std::optional<unsigned> order_along(const std::vector<size_t>& E) const {
    if (is_zero()) return std::nullopt;
    unsigned best = UINT32_MAX;
    for (auto& [e, c] : terms) {
      unsigned m = 0;
      for (size_t i : E) m += e[i];
      best = std::min(best, m);
    }
    return best;
  }

  bool divisible_by_var_power(size_t i, unsigned d) const {
    for (auto& [e, c] : terms)
      if (e[i] < d) return false;
    return true;
  }
  Poly divide_var_power(size_t i, unsigned d) const {
    Poly r(nvars);
    for (auto& [e, c] : terms) {
      if (e[i] < d)
        throw EngineError(ErrorCode::DomainViolation, "not divisible by x_i^d");
      Expo e2 = e;
      e2[i] -= d;
      r.terms[e2] = c;
    }
    return r;
  }
  // Largest monomial x^d dividing f (componentwise min of exponents).
  Expo content_monomial() const {
    Expo d(nvars, 0);
    if (terms.empty()) return d;
    d = terms.begin()->first;
    for (auto& [e, c] : terms)
      for (size_t i = 0; i < nvars; ++i) d[i] = std::min(d[i], e[i]);
    return d;
  }

  // Adds fresh trailing variables (extends exponent vectors with zeros).
  Poly extend_vars(size_t new_n) const {
    if (new_n < nvars) throw EngineError(ErrorCode::DimensionMismatch, "extend_vars");
    Poly r(new_n);
    for (auto& [e, c] : terms) {
      Expo e2 = e;
      e2.resize(new_n, 0);
      r.terms[std::move(e2)] = c;
    }
    return r;
  }

  std::string to_string(const std::vector<std::string>& names = {}) const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [e, c] : terms) {
      Rat a = c;
      if (!first) {
        os << (a < 0 ? " - " : " + ");
        if (a < 0) a = -a;
      }
      first = false;
      bool any_var = std::any_of(e.begin(), e.end(), [](unsigned k) { return k > 0; });
      if (!any_var || a != 1) os << rat_to_string(a);
      bool star = !any_var || a != 1;
      for (size_t i = 0; i < nvars; ++i) {
        if (!e[i]) continue;
        if (star) os << "*";
        star = true;
        if (names.size() == nvars) os << names[i];
        else os << "x" << (i + 1);
        if (e[i] > 1) os << "^" << e[i];
      }
    }
    return os.str();
  }

 private:
  void check(const Poly& o) const {
    if (o.nvars != nvars) throw EngineError(ErrorCode::DimensionMismatch, "Poly arity");
  }
};

inline Poly operator*(const Rat& c, const Poly& p) { return p * c; }

}  // namespace redec
