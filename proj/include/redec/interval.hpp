#pragma once
// Rational intervals with open/closed endpoints and infinite bounds, plus the
// exact (tightest) interval extensions of +, *, 1/x.

#include <redec/rational.hpp>

#include <algorithm>
#include <optional>
#include <vector>

namespace redec {

// An endpoint value in Q ∪ {−∞, +∞}.
struct ExtRat {
  int inf = 0;  // -1 = −∞, 0 = finite, +1 = +∞
  Rat v;        // meaningful iff inf == 0

  static ExtRat neg_inf() { return {-1, Rat(0)}; }
  static ExtRat pos_inf() { return {+1, Rat(0)}; }
  static ExtRat fin(Rat r) { return {0, std::move(r)}; }
  bool finite() const { return inf == 0; }
};

inline int cmp(const ExtRat& a, const ExtRat& b) {
  if (a.inf != b.inf) return a.inf < b.inf ? -1 : 1;
  if (a.inf != 0) return 0;
  int c = ::cmp(a.v, b.v);  // mpq_cmp: correct on non-canonical operands too
  return c < 0 ? -1 : (c == 0 ? 0 : 1);
}
inline bool operator<(const ExtRat& a, const ExtRat& b) { return cmp(a, b) < 0; }
inline bool operator==(const ExtRat& a, const ExtRat& b) { return cmp(a, b) == 0; }
inline bool operator<=(const ExtRat& a, const ExtRat& b) { return cmp(a, b) <= 0; }

inline ExtRat ext_min(const ExtRat& a, const ExtRat& b) { return a < b ? a : b; }
inline ExtRat ext_max(const ExtRat& a, const ExtRat& b) { return a < b ? b : a; }

// A nonempty interval in R with rational (or infinite) endpoints.
// Invariants: lo <= hi; if lo == hi both endpoints closed (a point);
// infinite endpoints are open.
class RationalInterval {
 public:
  ExtRat lo, hi;
  bool lo_closed = false, hi_closed = false;

  RationalInterval() : lo(ExtRat::fin(0)), hi(ExtRat::fin(0)), lo_closed(true), hi_closed(true) {}
  RationalInterval(ExtRat l, ExtRat h, bool lc, bool hc)
      : lo(std::move(l)), hi(std::move(h)), lo_closed(lc), hi_closed(hc) {
    // Keep endpoints canonical: mpq equality elsewhere assumes reduced form.
    if (lo.inf == 0) lo.v.canonicalize();
    if (hi.inf == 0) hi.v.canonicalize();
    if (lo.inf != 0) lo_closed = false;
    if (hi.inf != 0) hi_closed = false;
    int c = cmp(lo, hi);
    if (c > 0 || (c == 0 && !(lo_closed && hi_closed)) ||
        (lo.inf != 0 && lo.inf == hi.inf))
      throw EngineError(ErrorCode::ParseError, "empty interval");
  }

  static RationalInterval closed(const Rat& a, const Rat& b) {
    return RationalInterval(ExtRat::fin(a), ExtRat::fin(b), true, true);
  }
  static RationalInterval open(const Rat& a, const Rat& b) {
    return RationalInterval(ExtRat::fin(a), ExtRat::fin(b), false, false);
  }
  static RationalInterval point(const Rat& a) { return closed(a, a); }
  static RationalInterval whole() {
    return RationalInterval(ExtRat::neg_inf(), ExtRat::pos_inf(), false, false);
  }

  bool bounded() const { return lo.finite() && hi.finite(); }
  bool compact() const { return bounded() && lo_closed && hi_closed; }
  bool is_open_interval() const { return !lo_closed && !hi_closed; }
  bool degenerate() const { return bounded() && lo.v == hi.v; }

  bool contains(const Rat& x) const {
    if (lo.finite()) {
      if (x < lo.v || (x == lo.v && !lo_closed)) return false;
    }
    if (hi.finite()) {
      if (x > hi.v || (x == hi.v && !hi_closed)) return false;
    }
    return true;
  }

  // this ⊆ other, honoring endpoint openness exactly.
  bool subset_of(const RationalInterval& o) const {
    int cl = cmp(lo, o.lo);
    if (cl < 0) return false;
    if (cl == 0 && lo_closed && !o.lo_closed) return false;
    int ch = cmp(hi, o.hi);
    if (ch > 0) return false;
    if (ch == 0 && hi_closed && !o.hi_closed) return false;
    return true;
  }

  bool intersects(const RationalInterval& o) const {
    // sup of los vs inf of his
    int c = cmp(hi, o.lo);
    if (c < 0) return false;
    if (c == 0 && !(hi_closed && o.lo_closed)) return false;
    c = cmp(o.hi, lo);
    if (c < 0) return false;
    if (c == 0 && !(o.hi_closed && lo_closed)) return false;
    return true;
  }

  std::optional<RationalInterval> intersect(const RationalInterval& o) const {
    if (!intersects(o)) return std::nullopt;
    ExtRat l = lo, h = hi;
    bool lc = lo_closed, hc = hi_closed;
    int c = cmp(o.lo, l);
    if (c > 0) { l = o.lo; lc = o.lo_closed; }
    else if (c == 0) lc = lc && o.lo_closed;
    c = cmp(o.hi, h);
    if (c < 0) { h = o.hi; hc = o.hi_closed; }
    else if (c == 0) hc = hc && o.hi_closed;
    return RationalInterval(l, h, lc, hc);
  }

  RationalInterval closure() const {
    return RationalInterval(lo, hi, lo.finite(), hi.finite());
  }
  // Interior; nullopt if empty (degenerate interval).
  std::optional<RationalInterval> interior() const {
    if (degenerate()) return std::nullopt;
    return RationalInterval(lo, hi, false, false);
  }

  Rat width() const {
    if (!bounded()) throw EngineError(ErrorCode::DomainViolation, "unbounded width");
    return Rat(hi.v - lo.v);
  }
  Rat midpoint() const {
    if (!bounded()) throw EngineError(ErrorCode::DomainViolation, "unbounded midpoint");
    Rat m = (lo.v + hi.v) / 2;
    m.canonicalize();
    return m;
  }

  RationalInterval inflate(const Rat& eps, bool make_open = true) const {
    if (!bounded()) throw EngineError(ErrorCode::DomainViolation, "inflate unbounded");
    return RationalInterval(ExtRat::fin(lo.v - eps), ExtRat::fin(hi.v + eps),
                            !make_open, !make_open);
  }

  bool operator==(const RationalInterval& o) const {
    return cmp(lo, o.lo) == 0 && cmp(hi, o.hi) == 0 && lo_closed == o.lo_closed &&
           hi_closed == o.hi_closed;
  }
};

namespace detail {
struct Cand {
  ExtRat val;
  bool attained;
};
inline ExtRat ext_add(const ExtRat& a, const ExtRat& b) {
  if (a.inf != 0) return a;
  if (b.inf != 0) return b;
  return ExtRat::fin(Rat(a.v + b.v));
}
// Product with the range convention 0 * ±∞ = 0 (valid for computing the exact
// range of x*y over nonempty intervals from endpoint candidates).
inline ExtRat ext_mul(const ExtRat& a, const ExtRat& b) {
  if (a.inf == 0 && b.inf == 0) return ExtRat::fin(Rat(a.v * b.v));
  int sa = a.inf != 0 ? a.inf : sign_of(a.v);
  int sb = b.inf != 0 ? b.inf : sign_of(b.v);
  if (sa == 0 || sb == 0) return ExtRat::fin(0);
  return sa * sb > 0 ? ExtRat::pos_inf() : ExtRat::neg_inf();
}
inline RationalInterval from_cands(const std::vector<Cand>& cs) {
  ExtRat lo = cs[0].val, hi = cs[0].val;
  bool lc = cs[0].attained, hc = cs[0].attained;
  for (size_t i = 1; i < cs.size(); ++i) {
    int c = cmp(cs[i].val, lo);
    if (c < 0) { lo = cs[i].val; lc = cs[i].attained; }
    else if (c == 0) lc = lc || cs[i].attained;
    c = cmp(cs[i].val, hi);
    if (c > 0) { hi = cs[i].val; hc = cs[i].attained; }
    else if (c == 0) hc = hc || cs[i].attained;
  }
  if (lo.inf != 0) lc = false;
  if (hi.inf != 0) hc = false;
  return RationalInterval(lo, hi, lc, hc);
}
}  // namespace detail

inline RationalInterval interval_add(const RationalInterval& a, const RationalInterval& b) {
  using detail::Cand;
  std::vector<Cand> cs = {
      {detail::ext_add(a.lo, b.lo), a.lo_closed && b.lo_closed},
      {detail::ext_add(a.hi, b.hi), a.hi_closed && b.hi_closed}};
  return detail::from_cands(cs);
}

inline RationalInterval interval_neg(const RationalInterval& a) {
  auto neg = [](const ExtRat& e) {
    if (e.inf != 0) return ExtRat{-e.inf, Rat(0)};
    return ExtRat::fin(Rat(-e.v));
  };
  return RationalInterval(neg(a.hi), neg(a.lo), a.hi_closed, a.lo_closed);
}

inline RationalInterval interval_mul(const RationalInterval& a, const RationalInterval& b) {
  using detail::Cand;
  std::vector<Cand> cs;
  const ExtRat* ea[2] = {&a.lo, &a.hi};
  const bool ca[2] = {a.lo_closed, a.hi_closed};
  const ExtRat* eb[2] = {&b.lo, &b.hi};
  const bool cb[2] = {b.lo_closed, b.hi_closed};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      cs.push_back({detail::ext_mul(*ea[i], *eb[j]), ca[i] && cb[j]});
  // 0 is an interior extremum candidate when both intervals straddle it, and
  // 0 is attained in the product whenever either factor contains 0.
  Rat zero(0);
  if (a.contains(zero) || b.contains(zero)) cs.push_back({ExtRat::fin(0), true});
  return detail::from_cands(cs);
}

inline RationalInterval interval_recip(const RationalInterval& a) {
  if (a.contains(Rat(0)))
    throw EngineError(ErrorCode::RecipThroughZero, "0 in interval for recip");
  // Also reject intervals with 0 as an open endpoint straddled... 0 excluded
  // but approached: recip is still defined on the interval; range unbounded.
  auto inv = [](const ExtRat& e, bool closed) -> detail::Cand {
    if (e.inf != 0) return {ExtRat::fin(0), false};
    if (e.v == 0)  // open endpoint at 0: 1/x tends to ±∞ (sign handled by caller)
      return {ExtRat{0, Rat(0)}, false};  // placeholder, fixed below
    Rat r(1);
    r /= e.v;
    return {ExtRat::fin(r), closed};
  };
  // Determine sign side: since 0 ∉ interval, either hi < 0, hi == 0 (open), or lo >= 0.
  bool pos_side;
  if (a.lo.inf == 0 && (a.lo.v > 0 || (a.lo.v == 0 && !a.lo_closed))) pos_side = true;
  else if (a.hi.inf == 0 && (a.hi.v < 0 || (a.hi.v == 0 && !a.hi_closed))) pos_side = false;
  else throw EngineError(ErrorCode::RecipThroughZero, "interval straddles 0");
  detail::Cand clo = inv(a.hi, a.hi_closed);
  detail::Cand chi = inv(a.lo, a.lo_closed);
  // Fix endpoints at 0 or ∞: 1/(x→0±) = ±∞; 1/±∞ = 0 (open).
  auto fix = [&](detail::Cand& c, const ExtRat& src) {
    if (src.inf != 0) { c.val = ExtRat::fin(0); c.attained = false; }
    else if (src.v == 0) { c.val = pos_side ? ExtRat::pos_inf() : ExtRat::neg_inf(); c.attained = false; }
  };
  fix(clo, a.hi);
  fix(chi, a.lo);
  return detail::from_cands({clo, chi});
}

}  // namespace redec
