// Basic presentations, refinement towers, admissible transformations with
// replayable names, and the rank-decreasing local resolution driver for
// polynomial families with exact rational certification.

#include <redec/resolution.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace redec {

namespace {

// ---- fuel ---------------------------------------------------------------------------

struct Gas {
  unsigned long long left = 0;
  bool take(unsigned long long c = 1) {
    if (left < c) {
      left = 0;
      return false;
    }
    left -= c;
    return true;
  }
  void demand(unsigned long long c = 1) {
    if (!take(c)) throw EngineError(ErrorCode::BudgetExhausted, "work budget exhausted");
  }
};

constexpr unsigned long long kCertSlice = 2500;  // cells per bounded certificate attempt

// ---- small utilities ----------------------------------------------------------------

bool contains_zero(const RationalInterval& I) { return I.contains(Rat(0)); }

std::pair<RationalBox, RationalBox> split_box(const RationalBox& b, size_t ax) {
  Rat mid = b.dims[ax].midpoint();
  RationalBox l = b, r = b;
  l.dims[ax] = RationalInterval(b.dims[ax].lo, ExtRat::fin(mid), b.dims[ax].lo_closed, true);
  r.dims[ax] = RationalInterval(ExtRat::fin(mid), b.dims[ax].hi, true, b.dims[ax].hi_closed);
  return {l, r};
}

// Widest non-degenerate axis; nullopt when the box is a point.
std::optional<size_t> widest_axis(const RationalBox& b) {
  std::optional<size_t> best;
  Rat bw = 0;
  for (size_t i = 0; i < b.dim(); ++i) {
    if (!b.dims[i].bounded())
      throw EngineError(ErrorCode::DomainViolation, "certification requires a compact box");
    Rat w = b.dims[i].width();
    if (w > bw) {
      bw = w;
      best = i;
    }
  }
  return best;
}

std::vector<Rat> box_point(const RationalBox& b) {
  std::vector<Rat> p;
  p.reserve(b.dim());
  for (const auto& I : b.dims) p.push_back(I.midpoint());
  return p;
}

int rat_sign(const Rat& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Sign of an interval known not to contain zero.
int interval_sign(const RationalInterval& r) {
  if (r.hi.finite() && (r.hi.v < 0 || (r.hi.v == 0 && !r.hi_closed))) return -1;
  return 1;
}

bool poly_eq(const Poly& a, const Poly& b) {
  if (a.nvars != b.nvars || a.terms.size() != b.terms.size()) return false;
  auto it = a.terms.begin(), jt = b.terms.begin();
  for (; it != a.terms.end(); ++it, ++jt) {
    if (it->first != jt->first || cmp(it->second, jt->second) != 0) return false;
  }
  return true;
}

bool extrat_eq(const ExtRat& a, const ExtRat& b) { return cmp(a, b) == 0; }

bool box_eq(const RationalBox& a, const RationalBox& b) {
  if (a.dim() != b.dim()) return false;
  for (size_t i = 0; i < a.dim(); ++i) {
    const auto& x = a.dims[i];
    const auto& y = b.dims[i];
    if (!extrat_eq(x.lo, y.lo) || !extrat_eq(x.hi, y.hi) || x.lo_closed != y.lo_closed ||
        x.hi_closed != y.hi_closed)
      return false;
  }
  return true;
}

bool is_const_poly(const Poly& p) {
  if (p.is_zero()) return true;
  return p.terms.size() == 1 && p.total_degree() == 0;
}

Rat const_value(const Poly& p) {
  if (p.is_zero()) return Rat(0);
  return p.terms.begin()->second;
}

Poly derivk(const Poly& f, size_t i, unsigned k) {
  Poly r = f;
  for (unsigned t = 0; t < k; ++t) r = r.deriv(i);
  return r;
}

// f with x_i := 0, same variable count.
Poly subst_zero(const Poly& f, size_t i) {
  Poly r(f.nvars);
  for (const auto& [e, c] : f.terms)
    if (e[i] == 0) r.add_term(e, c);
  return r;
}

// Restriction of f to {x_S = 0}, with the S coordinates removed.
Poly drop_coords(const Poly& f, const std::vector<size_t>& S) {
  size_t n = f.nvars;
  std::vector<size_t> keep;
  for (size_t v = 0; v < n; ++v)
    if (!std::binary_search(S.begin(), S.end(), v)) keep.push_back(v);
  Poly r(keep.size());
  for (const auto& [e, c] : f.terms) {
    bool on_slice = true;
    for (size_t s : S)
      if (e[s] != 0) {
        on_slice = false;
        break;
      }
    if (!on_slice) continue;
    Expo e2(keep.size(), 0);
    for (size_t t = 0; t < keep.size(); ++t) e2[t] = e[keep[t]];
    r.add_term(e2, c);
  }
  return r;
}

RationalBox box_drop(const RationalBox& B, const std::vector<size_t>& S) {
  std::vector<RationalInterval> d;
  for (size_t v = 0; v < B.dim(); ++v)
    if (!std::binary_search(S.begin(), S.end(), v)) d.push_back(B.dims[v]);
  return RationalBox(std::move(d));
}

std::string rat_str(const Rat& r) { return rat_to_string(r); }

std::string box_str(const RationalBox& b) { return render_box_name(b); }

std::string poly_str(const Poly& p) { return p.to_string(); }

std::string labels_str(const std::vector<size_t>& v) {
  std::ostringstream os;
  for (size_t t = 0; t < v.size(); ++t) os << (t ? "," : "") << v[t];
  return os.str();
}

// ---- family helpers -------------------------------------------------------------------

bool family_all_zero(const std::vector<Poly>& F) {
  for (const auto& f : F)
    if (!f.is_zero()) return false;
  return true;
}

// d_t = min over nonzero members of the minimal exponent of x_{E[t]}.
std::vector<unsigned> family_div(const std::vector<Poly>& F, const std::vector<size_t>& E) {
  std::vector<unsigned> d(E.size(), 0);
  bool first = true;
  for (const auto& f : F) {
    if (f.is_zero()) continue;
    Expo cm = f.content_monomial();
    for (size_t t = 0; t < E.size(); ++t) {
      unsigned v = cm[E[t]];
      d[t] = first ? v : std::min(d[t], v);
    }
    first = false;
  }
  if (first) throw EngineError(ErrorCode::Internal, "divisor of an identically zero family");
  return d;
}

std::vector<Poly> family_reduce(const std::vector<Poly>& F, const std::vector<size_t>& E,
                                const std::vector<unsigned>& d) {
  std::vector<Poly> FE;
  FE.reserve(F.size());
  for (const auto& f : F) {
    Poly g = f;
    if (!g.is_zero())
      for (size_t t = 0; t < E.size(); ++t)
        if (d[t]) g = g.divide_var_power(E[t], d[t]);
    FE.push_back(g);
  }
  return FE;
}

std::vector<Poly> nonzero_members(const std::vector<Poly>& F) {
  std::vector<Poly> nz;
  for (const auto& f : F)
    if (!f.is_zero()) nz.push_back(f);
  return nz;
}

unsigned divisor_total(const std::vector<unsigned>& d) {
  unsigned s = 0;
  for (unsigned v : d) s += v;
  return s;
}

// ---- certification cores ----------------------------------------------------------------

std::optional<int> cert_sign_core(const Poly& f, const RationalBox& B, Gas& fu) {
  if (f.is_zero()) return std::nullopt;
  // exact refutation at the corners of B (see cert_order_core)
  if (B.dim() <= 6) {
    std::vector<Rat> p(B.dim());
    size_t nc = size_t{1} << B.dim();
    for (size_t mask = 0; mask < nc; ++mask) {
      bool fin = true;
      for (size_t a = 0; a < B.dim(); ++a) {
        const ExtRat& e = (mask >> a) & 1 ? B.dims[a].hi : B.dims[a].lo;
        if (!e.finite()) {
          fin = false;
          break;
        }
        p[a] = e.v;
      }
      if (fin && f.eval(p) == 0) return std::nullopt;
    }
  }
  int sign = 0;
  std::deque<RationalBox> work{B.closure()};
  while (!work.empty()) {
    if (!fu.take()) return std::nullopt;
    RationalBox b = work.front();
    work.pop_front();
    RationalInterval r = f.range_on(b);
    if (!contains_zero(r)) {
      int s = interval_sign(r);
      if (sign && s != sign) return std::nullopt;
      sign = s;
      continue;
    }
    // exact counterexample: a zero at the cell midpoint refutes the certificate
    if (f.eval(box_point(b)) == 0) return std::nullopt;
    auto ax = widest_axis(b);
    if (!ax) {
      int s = rat_sign(f.eval(box_point(b)));
      if (s == 0) return std::nullopt;
      if (sign && s != sign) return std::nullopt;
      sign = s;
      continue;
    }
    auto [l, rgt] = split_box(b, *ax);
    work.push_back(l);
    work.push_back(rgt);
  }
  return sign ? std::optional<int>(sign) : std::nullopt;
}

// Every point of B has some derivative of total order ≤ m of some member of G
// nonvanishing.
bool cert_order_core(const std::vector<Poly>& G, unsigned m, const RationalBox& B, Gas& fu) {
  std::vector<Poly> D;
  std::function<void(const Poly&, size_t, unsigned)> gen = [&](const Poly& g, size_t from,
                                                               unsigned budget) {
    if (!g.is_zero()) D.push_back(g);
    if (g.is_zero() || budget == 0) return;
    for (size_t i = from; i < g.nvars; ++i) gen(g.deriv(i), i, budget - 1);
  };
  for (const auto& g : G)
    if (!g.is_zero()) gen(g, 0, m);
  if (D.empty()) return false;
  // exact refutation at the corners of B: zeros introduced by earlier dyadic
  // subdivision sit on the corner grid, and a corner where every candidate
  // derivative vanishes refutes the certificate outright
  if (B.dim() <= 6) {
    std::vector<Rat> p(B.dim());
    size_t nc = size_t{1} << B.dim();
    for (size_t mask = 0; mask < nc; ++mask) {
      bool fin = true;
      for (size_t a = 0; a < B.dim(); ++a) {
        const ExtRat& e = (mask >> a) & 1 ? B.dims[a].hi : B.dims[a].lo;
        if (!e.finite()) {
          fin = false;
          break;
        }
        p[a] = e.v;
      }
      if (!fin) continue;
      bool pt_ok = false;
      for (const auto& g : D)
        if (g.eval(p) != 0) {
          pt_ok = true;
          break;
        }
      if (!pt_ok) return false;
    }
  }
  std::deque<RationalBox> work{B.closure()};
  while (!work.empty()) {
    if (!fu.take()) return false;
    RationalBox b = work.front();
    work.pop_front();
    bool cell_ok = false;
    for (const auto& g : D) {
      if (!contains_zero(g.range_on(b))) {
        cell_ok = true;
        break;
      }
    }
    if (cell_ok) continue;
    // exact counterexample: all candidate derivatives vanishing at the cell
    // midpoint refutes the certificate outright
    {
      auto p = box_point(b);
      bool pt_ok = false;
      for (const auto& g : D)
        if (g.eval(p) != 0) {
          pt_ok = true;
          break;
        }
      if (!pt_ok) return false;
    }
    auto ax = widest_axis(b);
    if (!ax) continue;
    auto [l, r] = split_box(b, *ax);
    work.push_back(l);
    work.push_back(r);
  }
  return true;
}

// Bounded-slice variants: spend at most kCertSlice cells of the shared budget.
std::optional<int> slice_sign(const Poly& f, const RationalBox& B, Gas& fu) {
  unsigned long long init = std::min(fu.left, kCertSlice);
  Gas sub{init};
  auto r = cert_sign_core(f, B, sub);
  fu.left -= (init - sub.left);
  return r;
}

bool slice_order(const std::vector<Poly>& G, unsigned m, const RationalBox& B, Gas& fu) {
  unsigned long long init = std::min(fu.left, kCertSlice);
  Gas sub{init};
  bool r = cert_order_core(G, m, B, sub);
  fu.left -= (init - sub.left);
  return r;
}

// A bound valid at every point: some derivative of exponent equal to a
// top-degree monomial of f is a nonzero constant.
unsigned degree_cap(const std::vector<Poly>& FE) {
  unsigned cap = 0;
  bool first = true;
  for (const auto& f : FE) {
    if (f.is_zero()) continue;
    unsigned dg = f.total_degree();
    cap = first ? dg : std::min(cap, dg);
    first = false;
  }
  return cap;
}

// Least m' ≤ cap with ord(F;·) ≤ m' certified on K.
std::optional<unsigned> order_bound_search(const std::vector<Poly>& FE, const RationalBox& K,
                                           unsigned cap, Gas& fu) {
  auto nz = nonzero_members(FE);
  if (nz.empty()) return std::nullopt;
  for (unsigned mb = 0; mb <= cap; ++mb) {
    if (slice_order(nz, mb, K, fu)) return mb;
  }
  return std::nullopt;
}

// ---- exponent-vector enumeration ---------------------------------------------------------

// Full-length exponent vectors supported on N with |α| < m, ordered by total
// degree then lexicographically on the N slots.
std::vector<Expo> alphas_below(size_t n, const std::vector<size_t>& N, unsigned m) {
  std::vector<Expo> out;
  std::vector<unsigned> slot(N.size(), 0);
  std::function<void(size_t, unsigned)> rec = [&](size_t pos, unsigned left) {
    if (pos == N.size()) {
      Expo e(n, 0);
      for (size_t t = 0; t < N.size(); ++t) e[N[t]] = slot[t];
      out.push_back(e);
      return;
    }
    for (unsigned v = 0; v <= left; ++v) {
      slot[pos] = v;
      rec(pos + 1, left - v);
    }
    slot[pos] = 0;
  };
  for (unsigned total = 0; total < m; ++total) {
    std::function<void(size_t, unsigned)> fixtot = [&](size_t pos, unsigned left) {
      if (pos + 1 == N.size()) {
        slot[pos] = left;
        Expo e(n, 0);
        for (size_t t = 0; t < N.size(); ++t) e[N[t]] = slot[t];
        out.push_back(e);
        return;
      }
      for (unsigned v = 0; v <= left; ++v) {
        slot[pos] = v;
        fixtot(pos + 1, left - v);
      }
    };
    if (N.empty()) {
      if (total == 0) out.push_back(Expo(n, 0));
      continue;
    }
    fixtot(0, total);
  }
  (void)rec;
  return out;
}

// Full-length exponent vectors supported on N with |α| = m and α_i ≥ 1, lex order.
std::vector<Expo> alphas_exact_with(size_t n, const std::vector<size_t>& N, unsigned m,
                                    size_t i) {
  std::vector<Expo> out;
  std::vector<unsigned> slot(N.size(), 0);
  std::function<void(size_t, unsigned)> rec = [&](size_t pos, unsigned left) {
    if (pos + 1 == N.size()) {
      slot[pos] = left;
      Expo e(n, 0);
      for (size_t t = 0; t < N.size(); ++t) e[N[t]] = slot[t];
      if (e[i] >= 1) out.push_back(e);
      return;
    }
    for (unsigned v = 0; v <= left; ++v) {
      slot[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  if (!N.empty()) rec(0, m);
  return out;
}

unsigned alpha_total(const Expo& a) {
  unsigned s = 0;
  for (unsigned v : a) s += v;
  return s;
}

// ---- stage core: refinement and witness verification -------------------------------------

struct StageCore {
  std::vector<Poly> F;
  std::vector<size_t> E;     // stage-local, sorted
  std::vector<size_t> vars;  // stage-local -> chart label
  RationalBox K;
  unsigned p = 0;
};

StageCore core_of(const Stage& s) { return StageCore{s.F, s.E, s.vars, s.K, s.p}; }

// Verifies an (m, N, r) refinability certificate on the stage carrier.
bool verify_cert(const StageCore& s, const std::vector<Poly>& FE, const RefinableCert& c,
                 Gas& fu) {
  size_t n = s.vars.size();
  if (c.m == 0 || c.N.empty()) return false;
  if (!std::is_sorted(c.N.begin(), c.N.end())) return false;
  for (size_t i : c.N) {
    if (i >= n) return false;
    if (!contains_zero(s.K.dims[i])) return false;
  }
  if (c.r == 0) {
    if (c.N.size() != 1 || c.witnesses.size() != 1) return false;
    size_t i = c.N[0];
    if (std::binary_search(s.E.begin(), s.E.end(), i)) return false;
    const auto& w = c.witnesses[0];
    if (w.f_index >= FE.size()) return false;
    Expo want(n, 0);
    want[i] = c.m;
    if (w.alpha != want) return false;
    const Poly& f = FE[w.f_index];
    if (f.is_zero()) return false;
    Poly top = derivk(f, i, c.m);
    if (top.is_zero()) return false;
    if (!subst_zero(derivk(f, i, c.m - 1), i).is_zero()) return false;
    return slice_sign(top, s.K, fu).has_value();
  }
  if (c.r != c.N.size() || c.witnesses.size() != c.N.size()) return false;
  for (size_t i : c.N)
    if (!std::binary_search(s.E.begin(), s.E.end(), i)) return false;
  for (size_t t = 0; t < c.N.size(); ++t) {
    const auto& w = c.witnesses[t];
    if (w.f_index >= FE.size() || w.alpha.size() != n) return false;
    if (alpha_total(w.alpha) != c.m || w.alpha[c.N[t]] == 0) return false;
    for (size_t v = 0; v < n; ++v)
      if (w.alpha[v] && !std::binary_search(c.N.begin(), c.N.end(), v)) return false;
    const Poly& f = FE[w.f_index];
    if (f.is_zero()) return false;
    Poly top = f.deriv_multi(w.alpha);
    if (top.is_zero()) return false;
    if (!slice_sign(top, s.K, fu).has_value()) return false;
  }
  return true;
}

// The (p, m, N)-refinement of a stage: restricted N-derivative powers, plus the
// divisor-monomial power when the exponent deficit q is positive.
StageCore refine_core(const StageCore& s, unsigned m, const std::vector<size_t>& N,
                      unsigned* ptilde_out) {
  size_t n = s.vars.size();
  auto d = family_div(s.F, s.E);
  auto FE = family_reduce(s.F, s.E, d);
  auto alphas = alphas_below(n, N, m);

  unsigned dEN = 0;
  for (size_t t = 0; t < s.E.size(); ++t)
    if (std::binary_search(N.begin(), N.end(), s.E[t])) dEN += d[t];
  unsigned q = (s.p > m + dEN) ? s.p - m - dEN : 0;

  // restrictions and occurring gaps
  std::vector<std::vector<Poly>> restr(FE.size());
  std::set<unsigned> gaps;
  for (size_t fi = 0; fi < FE.size(); ++fi) {
    restr[fi].reserve(alphas.size());
    for (const auto& a : alphas) {
      Poly rp = FE[fi].is_zero() ? Poly(n - N.size())
                                 : drop_coords(FE[fi].deriv_multi(a), N);
      if (!rp.is_zero()) gaps.insert(m - alpha_total(a));
      restr[fi].push_back(rp);
    }
  }
  if (q) gaps.insert(q);
  unsigned pt = 1;
  for (unsigned g : gaps) pt = std::lcm(pt, g);

  StageCore out;
  out.vars.reserve(n - N.size());
  for (size_t v = 0; v < n; ++v)
    if (!std::binary_search(N.begin(), N.end(), v)) out.vars.push_back(s.vars[v]);
  // new stage-local indices of surviving coordinates
  std::vector<size_t> newidx(n, SIZE_MAX);
  {
    size_t t = 0;
    for (size_t v = 0; v < n; ++v)
      if (!std::binary_search(N.begin(), N.end(), v)) newidx[v] = t++;
  }
  for (size_t fi = 0; fi < FE.size(); ++fi)
    for (size_t ai = 0; ai < alphas.size(); ++ai) {
      const Poly& rp = restr[fi][ai];
      if (rp.is_zero())
        out.F.push_back(Poly(n - N.size()));
      else
        out.F.push_back(rp.pow(pt / (m - alpha_total(alphas[ai]))));
    }
  if (q) {
    Poly mono = Poly::constant(n - N.size(), 1);
    for (size_t t = 0; t < s.E.size(); ++t) {
      if (std::binary_search(N.begin(), N.end(), s.E[t]) || d[t] == 0) continue;
      mono = mono * Poly::var(n - N.size(), newidx[s.E[t]]).pow(d[t]);
    }
    out.F.push_back(mono.pow(pt / q));
  }
  for (size_t t = 0; t < s.E.size(); ++t)
    if (!std::binary_search(N.begin(), N.end(), s.E[t])) out.E.push_back(newidx[s.E[t]]);
  out.K = box_drop(s.K, N);
  out.p = pt;
  if (ptilde_out) *ptilde_out = pt;
  return out;
}

// Minimal subset of E-local coordinates whose divisor mass reaches p.
std::vector<size_t> minimal_center(const std::vector<size_t>& E, const std::vector<unsigned>& d,
                                   unsigned p) {
  std::vector<size_t> idx(E.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (d[a] != d[b]) return d[a] > d[b];
    return E[a] < E[b];
  });
  std::vector<size_t> N;
  unsigned s = 0;
  for (size_t t : idx) {
    if (s >= p) break;
    if (d[t] == 0) break;
    N.push_back(E[t]);
    s += d[t];
  }
  std::sort(N.begin(), N.end());
  return N;
}

// ---- tower construction -------------------------------------------------------------------

Stage make_stage(const StageCore& c) {
  Stage s;
  s.F = c.F;
  s.E = c.E;
  s.vars = c.vars;
  s.K = c.K;
  s.p = c.p;
  return s;
}

// Rebuilds the refinement tower over a base: stage data of the parent tower is
// re-verified greedily; the first failing stage (or the directive's stage) is
// classified terminally by a certified order-bound search.
std::vector<Stage> build_tower(const BasicPresentation& base, const std::vector<Stage>& ptower,
                               const std::optional<ExtendDirective>& ext,
                               const std::optional<TruncateDirective>& trunc, Gas& fu) {
  std::vector<Stage> tower;
  StageCore cur;
  cur.F = base.F;
  cur.E = base.E;
  cur.vars.resize(base.n);
  std::iota(cur.vars.begin(), cur.vars.end(), 0);
  cur.K = base.K;
  cur.p = 0;
  bool ext_used = false, trunc_used = false, frozen = false;

  for (size_t j = 0;; ++j) {
    fu.demand();
    Stage st = make_stage(cur);
    if (family_all_zero(cur.F)) {
      st.m = ExtNat::infinity();
      st.d.assign(cur.E.size(), 0);
      tower.push_back(st);
      break;
    }
    auto d = family_div(cur.F, cur.E);
    auto FE = family_reduce(cur.F, cur.E, d);
    st.d = d;
    if (frozen) {
      st.m = ExtNat::infinity();
      tower.push_back(st);
      break;
    }

    std::optional<RefinableCert> cert;
    std::optional<unsigned> cap;
    if (trunc && trunc->stage == j) {
      cap = trunc->bound;
      trunc_used = true;
    } else if (ext && ext->stage == j) {
      if (!verify_cert(cur, FE, ext->cert, fu))
        throw EngineError(ErrorCode::InadmissibleTransformation,
                          "extension certificate failed to verify");
      cert = ext->cert;
      ext_used = true;
    } else if (j + 1 < ptower.size() && ptower[j].has_N) {
      RefinableCert pc{ptower[j].m.v, ptower[j].N, ptower[j].r, ptower[j].witnesses};
      if (verify_cert(cur, FE, pc, fu))
        cert = pc;
      else
        cap = ptower[j].m.v;
    } else if (j < ptower.size() && !ptower[j].m.inf) {
      cap = ptower[j].m.v;
    } else {
      cap = degree_cap(FE);
    }

    if (cert) {
      st.m = ExtNat::of(cert->m);
      st.N = cert->N;
      st.r = cert->r;
      st.witnesses = cert->witnesses;
      st.has_N = true;
      unsigned pt = 1;
      StageCore next = refine_core(cur, cert->m, cert->N, &pt);
      tower.push_back(st);
      cur = next;
      if (ext && ext->stage == j) frozen = true;  // stop the greedy rebuild after an extension
      continue;
    }

    auto mb = order_bound_search(FE, cur.K, *cap, fu);
    if (!mb) {
      if (trunc && trunc->stage == j)
        throw EngineError(ErrorCode::InadmissibleTransformation,
                          "truncation bound failed to certify");
      // only a genuinely empty gas tank is resumable; otherwise the rebuild
      // failed to certify on this carrier and the caller should subdivide
      throw EngineError(fu.left == 0 ? ErrorCode::BudgetExhausted
                                     : ErrorCode::InadmissibleTransformation,
                        "terminal order bound not certified");
    }
    st.m = ExtNat::of(*mb);
    if (*mb == 0) {
      st.r = divisor_total(d);
      if (st.r >= cur.p) st.N = minimal_center(cur.E, d, cur.p);
    }
    tower.push_back(st);
    break;
  }
  if (ext && !ext_used)
    throw EngineError(ErrorCode::InadmissibleTransformation, "extension stage not reached");
  if (trunc && !trunc_used)
    throw EngineError(ErrorCode::InadmissibleTransformation, "truncation stage not reached");
  return tower;
}

}  // namespace

// ---- ranks ----------------------------------------------------------------------------

std::string Rank::str() const {
  std::ostringstream os;
  os << "(";
  for (size_t t = 0; t < seq.size(); ++t) os << (t ? "," : "") << seq[t].str();
  os << ")";
  return os.str();
}

bool rank_less(const Rank& a, const Rank& b) {
  size_t n = std::max(a.seq.size(), b.seq.size());
  for (size_t t = 0; t < n; ++t) {
    ExtNat x = t < a.seq.size() ? a.seq[t] : ExtNat::infinity();
    ExtNat y = t < b.seq.size() ? b.seq[t] : ExtNat::infinity();
    if (x < y) return true;
    if (y < x) return false;
  }
  return false;
}

bool rank_eq(const Rank& a, const Rank& b) { return !rank_less(a, b) && !rank_less(b, a); }

// ---- basic presentations -----------------------------------------------------------------

void BasicPresentation::validate() const {
  if (U.dim() != n || K.dim() != n)
    throw EngineError(ErrorCode::DimensionMismatch, "carrier dimension mismatch");
  if (!K.compact()) throw EngineError(ErrorCode::InvalidName, "K must be a compact box");
  if (!K.subset_of(U)) throw EngineError(ErrorCode::InvalidName, "K must lie inside U");
  for (const auto& f : F)
    if (f.nvars != n)
      throw EngineError(ErrorCode::DimensionMismatch, "family member arity mismatch");
  if (!std::is_sorted(E.begin(), E.end()) ||
      std::adjacent_find(E.begin(), E.end()) != E.end())
    throw EngineError(ErrorCode::InvalidName, "E must be sorted and duplicate-free");
  for (size_t e : E)
    if (e >= n) throw EngineError(ErrorCode::InvalidName, "E coordinate out of range");
}

DivResult zero_test_and_div(const BasicPresentation& bp, unsigned fuel) {
  bp.validate();
  Gas fu{fuel};
  DivResult out;
  if (family_all_zero(bp.F)) {
    out.all_zero = true;
    return out;
  }
  out.d = family_div(bp.F, bp.E);
  out.F_E = family_reduce(bp.F, bp.E, out.d);
  auto mb = order_bound_search(out.F_E, bp.K, degree_cap(out.F_E), fu);
  if (!mb) throw EngineError(ErrorCode::BudgetExhausted, "order bound not certified");
  out.order_bound = *mb;
  return out;
}

// ---- presentations -------------------------------------------------------------------------

Rank Presentation::rank() const {
  Rank r;
  for (size_t j = 0; j < tower.size(); ++j) {
    const Stage& s = tower[j];
    r.seq.push_back(s.m);
    if (j + 1 < tower.size())
      r.seq.push_back(ExtNat::of((unsigned)s.r));
    else if (!s.m.inf && s.m.v == 0)
      r.seq.push_back(ExtNat::of((unsigned)s.r));
  }
  return r;
}

bool Presentation::resolved() const {
  return tower.size() == 1 && !tower[0].m.inf && tower[0].m.v == 0;
}

bool Presentation::complete() const {
  const Stage& s = tower.back();
  if (family_all_zero(s.F)) return true;
  return !s.m.inf && s.m.v == 0 && divisor_total(s.d) >= s.p;
}

void Presentation::check_invariants(unsigned fuel) const {
  base.validate();
  Gas fu{fuel};
  if (tower.empty()) throw EngineError(ErrorCode::InvalidCertificate, "empty tower");
  // stage 0 mirrors the base
  if (tower[0].vars.size() != base.n || tower[0].F.size() != base.F.size())
    throw EngineError(ErrorCode::InvalidCertificate, "stage 0 does not mirror the base");
  std::set<size_t> used;
  for (size_t j = 0; j < tower.size(); ++j) {
    const Stage& s = tower[j];
    bool terminal = (j + 1 == tower.size());
    if (!terminal) {
      if (!s.has_N || s.m.inf)
        throw EngineError(ErrorCode::InvalidCertificate, "interior stage lacks refinement data");
      for (size_t t : s.N) {
        size_t lbl = s.vars[t];
        if (used.count(lbl))
          throw EngineError(ErrorCode::InvalidCertificate, "refinement coordinates overlap");
        used.insert(lbl);
      }
      StageCore c = core_of(s);
      if (family_all_zero(c.F))
        throw EngineError(ErrorCode::InvalidCertificate, "interior stage is identically zero");
      auto d = family_div(c.F, c.E);
      if (d != s.d) throw EngineError(ErrorCode::InvalidCertificate, "stage divisor mismatch");
      auto FE = family_reduce(c.F, c.E, d);
      RefinableCert rc{s.m.v, s.N, s.r, s.witnesses};
      if (!verify_cert(c, FE, rc, fu))
        throw EngineError(ErrorCode::InvalidCertificate, "stage witnesses failed to verify");
      unsigned pt = 1;
      StageCore nx = refine_core(c, s.m.v, s.N, &pt);
      const Stage& nst = tower[j + 1];
      if (pt != nst.p || nx.E != nst.E || nx.vars != nst.vars || !box_eq(nx.K, nst.K) ||
          nx.F.size() != nst.F.size())
        throw EngineError(ErrorCode::InvalidCertificate, "refined stage mismatch");
      for (size_t t = 0; t < nx.F.size(); ++t)
        if (!poly_eq(nx.F[t], nst.F[t]))
          throw EngineError(ErrorCode::InvalidCertificate, "refined family mismatch");
    } else {
      if (family_all_zero(s.F)) {
        if (!s.m.inf)
          throw EngineError(ErrorCode::InvalidCertificate, "zero family with a finite bound");
        continue;
      }
      StageCore c = core_of(s);
      auto d = family_div(c.F, c.E);
      if (d != s.d) throw EngineError(ErrorCode::InvalidCertificate, "terminal divisor mismatch");
      if (!s.m.inf) {
        auto FE = family_reduce(c.F, c.E, d);
        if (!slice_order(nonzero_members(FE), s.m.v, s.K, fu))
          throw EngineError(ErrorCode::InvalidCertificate, "terminal bound failed to certify");
      }
    }
  }
}

Presentation trivial_presentation(const BasicPresentation& bp) {
  bp.validate();
  Presentation P;
  P.base = bp;
  Stage s;
  s.F = bp.F;
  s.E = bp.E;
  s.vars.resize(bp.n);
  std::iota(s.vars.begin(), s.vars.end(), 0);
  s.K = bp.K;
  s.p = 0;
  s.m = ExtNat::infinity();
  if (!family_all_zero(bp.F)) s.d = family_div(bp.F, bp.E);
  else s.d.assign(bp.E.size(), 0);
  P.tower.push_back(std::move(s));
  return P;
}

// ---- transformation names ------------------------------------------------------------------

std::string trans_kind_name(TransKind k) {
  switch (k) {
    case TransKind::Inclusion: return "incl";
    case TransKind::LinearShear: return "shear";
    case TransKind::ImplicitTranslation: return "trans";
    case TransKind::BlowupChart: return "blow";
    case TransKind::CenterInclusion: return "type0";
  }
  return "?";
}

std::string TransStep::name() const {
  std::ostringstream os;
  os << trans_kind_name(kind) << "[s" << stage << "](";
  switch (kind) {
    case TransKind::Inclusion:
      os << "K=" << box_str(K_child);
      break;
    case TransKind::LinearShear:
      os << "i=" << coord << ";j=" << labels_str(center) << ";w=" << rat_str(const_value(g))
         << ";K=" << box_str(K_child);
      break;
    case TransKind::ImplicitTranslation:
      os << "i=" << coord << ";g=" << poly_str(g) << ";K=" << box_str(K_child);
      break;
    case TransKind::BlowupChart:
      os << "I=" << labels_str(center) << ";i=" << coord << ";K=" << box_str(K_child);
      break;
    case TransKind::CenterInclusion:
      break;
  }
  if (!drop_E.empty()) os << ";dropE=" << labels_str(drop_E);
  os << ")";
  return os.str();
}

TransKind AdmissibleTransformation::kind() const {
  TransKind k = TransKind::Inclusion;
  for (const auto& s : steps) {
    if (s.kind == TransKind::BlowupChart) return TransKind::BlowupChart;
    if (s.kind == TransKind::CenterInclusion) k = TransKind::CenterInclusion;
    if (s.kind == TransKind::LinearShear && k == TransKind::Inclusion) k = s.kind;
    if (s.kind == TransKind::ImplicitTranslation &&
        (k == TransKind::Inclusion || k == TransKind::LinearShear))
      k = s.kind;
  }
  return k;
}

std::vector<Poly> AdmissibleTransformation::forward() const {
  std::vector<Poly> acc;  // empty = identity
  for (const auto& s : steps) {
    if (s.h.empty()) continue;
    if (acc.empty()) {
      acc = s.h;
    } else {
      std::vector<Poly> next;
      next.reserve(acc.size());
      for (const auto& f : acc) next.push_back(f.compose(s.h));
      acc = next;
    }
  }
  return acc;
}

std::string AdmissibleTransformation::name() const {
  std::ostringstream os;
  for (size_t t = 0; t < steps.size(); ++t) os << (t ? "|" : "") << steps[t].name();
  if (extend) {
    os << "#ext(s=" << extend->stage << ";m=" << extend->cert.m
       << ";N=" << labels_str(extend->cert.N) << ";r=" << extend->cert.r << ";wit=";
    for (size_t t = 0; t < extend->cert.witnesses.size(); ++t) {
      const auto& w = extend->cert.witnesses[t];
      os << (t ? "," : "") << w.f_index << ":";
      for (size_t v = 0; v < w.alpha.size(); ++v) os << (v ? "." : "") << w.alpha[v];
    }
    os << ")";
  }
  if (truncate) os << "#trunc(s=" << truncate->stage << ";b=" << truncate->bound << ")";
  return os.str();
}

// ---- pullback --------------------------------------------------------------------------------

namespace {

Presentation pullback_core(const Presentation& P, const AdmissibleTransformation& T, Gas& fu) {
  size_t n = P.base.n;
  std::vector<Poly> F = P.base.F;
  std::vector<size_t> E = P.base.E;
  RationalBox K = P.base.K;
  for (const auto& st : T.steps) {
    if (st.K_child.dim() != n)
      throw EngineError(ErrorCode::DimensionMismatch, "step carrier dimension mismatch");
    if (!st.h.empty()) {
      if (st.h.size() != n)
        throw EngineError(ErrorCode::DimensionMismatch, "step map arity mismatch");
      for (auto& f : F) f = f.compose(st.h);
    }
    if (st.kind == TransKind::BlowupChart) {
      if (!std::binary_search(E.begin(), E.end(), st.coord)) {
        E.insert(std::upper_bound(E.begin(), E.end(), st.coord), st.coord);
      }
      for (size_t c : st.center)
        if (c >= n)
          throw EngineError(ErrorCode::InadmissibleTransformation, "center out of range");
    }
    if (st.kind == TransKind::Inclusion || st.kind == TransKind::CenterInclusion) {
      if (!st.K_child.subset_of(K.closure()))
        throw EngineError(ErrorCode::InadmissibleTransformation,
                          "inclusion step must restrict the carrier");
    }
    for (size_t lbl : st.drop_E) {
      if (contains_zero(st.K_child.dims[lbl]))
        throw EngineError(ErrorCode::InadmissibleTransformation,
                          "dropped E coordinate is not a unit on the carrier");
      auto it = std::find(E.begin(), E.end(), lbl);
      if (it != E.end()) E.erase(it);
    }
    K = st.K_child;
  }
  BasicPresentation cb;
  cb.n = n;
  cb.F = std::move(F);
  cb.E = std::move(E);
  cb.K = K;
  cb.U = K.inflate(1);
  cb.validate();
  Presentation C;
  C.tower = build_tower(cb, P.tower, T.extend, T.truncate, fu);
  C.base = std::move(cb);
  return C;
}

}  // namespace

Presentation pullback(const Presentation& P, const AdmissibleTransformation& T, unsigned fuel) {
  Gas fu{fuel};
  return pullback_core(P, T, fu);
}

bool replay_verify(const Presentation& parent, const AdmissibleTransformation& T,
                   const Presentation& child, unsigned fuel) {
  Presentation C;
  try {
    C = pullback(parent, T, fuel);
  } catch (const EngineError&) {
    return false;
  }
  if (C.base.n != child.base.n || C.base.E != child.base.E ||
      !box_eq(C.base.K, child.base.K) || C.base.F.size() != child.base.F.size())
    return false;
  for (size_t t = 0; t < C.base.F.size(); ++t)
    if (!poly_eq(C.base.F[t], child.base.F[t])) return false;
  if (C.tower.size() != child.tower.size()) return false;
  for (size_t j = 0; j < C.tower.size(); ++j) {
    const Stage& a = C.tower[j];
    const Stage& b = child.tower[j];
    if (!(a.m == b.m) || a.N != b.N || a.r != b.r || a.p != b.p || a.d != b.d ||
        a.has_N != b.has_N || a.E != b.E || a.vars != b.vars || !box_eq(a.K, b.K))
      return false;
    if (a.F.size() != b.F.size()) return false;
    for (size_t t = 0; t < a.F.size(); ++t)
      if (!poly_eq(a.F[t], b.F[t])) return false;
  }
  return true;
}

// ---- refinability detection ------------------------------------------------------------------

namespace {

// Rational roots of a univariate polynomial given by coefficients c[k] of x^k.
std::vector<Rat> univariate_rational_roots(const std::vector<Rat>& c) {
  std::vector<Rat> roots;
  size_t lo = 0, hi = c.size();
  while (hi > lo && c[hi - 1] == 0) --hi;
  if (hi == lo) return roots;
  while (lo < hi && c[lo] == 0) ++lo;
  if (lo > 0) roots.push_back(Rat(0));
  if (hi - lo <= 1) return roots;
  // clear denominators
  mpz_class L = 1;
  for (size_t k = lo; k < hi; ++k) {
    mpz_class den = c[k].get_den(), l;
    mpz_lcm(l.get_mpz_t(), L.get_mpz_t(), den.get_mpz_t());
    L = l;
  }
  std::vector<mpz_class> ic;
  for (size_t k = lo; k < hi; ++k) {
    Rat v = c[k] * Rat(L);
    v.canonicalize();
    ic.push_back(v.get_num());
  }
  auto divisors = [](mpz_class a) {
    std::vector<mpz_class> out;
    if (a < 0) a = -a;
    for (mpz_class v = 1; v * v <= a; ++v) {
      if (a % v == 0) {
        out.push_back(v);
        out.push_back(a / v);
      }
    }
    return out;
  };
  auto ps = divisors(ic.front());
  auto qs = divisors(ic.back());
  std::set<Rat> seen;
  auto horner = [&](const Rat& x) {
    Rat acc = 0;
    for (size_t k = ic.size(); k-- > 0;) acc = acc * x + Rat(ic[k]);
    return acc;
  };
  for (const auto& p : ps)
    for (const auto& q : qs)
      for (int s : {1, -1}) {
        Rat cand(s * p, q);
        cand.canonicalize();
        if (seen.count(cand)) continue;
        seen.insert(cand);
        if (horner(cand) == 0) roots.push_back(cand);
      }
  std::sort(roots.begin() + (lo > 0 ? 1 : 0), roots.end());
  return roots;
}

// f with x_i substituted by the x_i-free polynomial g (same variable count).
Poly subst_poly(const Poly& f, size_t i, const Poly& g) {
  std::vector<Poly> args;
  args.reserve(f.nvars);
  for (size_t v = 0; v < f.nvars; ++v)
    args.push_back(v == i ? g : Poly::var(f.nvars, v));
  return f.compose(args);
}

struct Tube {
  size_t i;
  Poly g;
  Rat eps;
};

bool box_in_tube(const RationalBox& b, const Tube& t) {
  Poly diff = Poly::var(t.g.nvars, t.i) - t.g;
  RationalInterval r = diff.range_on(b);
  if (!r.lo.finite() || !r.hi.finite()) return false;
  return r.lo.v >= -t.eps && r.hi.v <= t.eps;
}

std::vector<DetectPiece> detect_core(const BasicPresentation& bp, unsigned m, Gas& fu,
                                     std::optional<std::pair<unsigned, size_t>> must_beat) {
  bp.validate();
  if (family_all_zero(bp.F))
    throw EngineError(ErrorCode::NotRefinable, "identically zero family");
  size_t n = bp.n;
  std::vector<DetectPiece> out;
  static const std::vector<Rat> kShearWeights = {Rat(1),     Rat(-1),    Rat(2),  Rat(-2),
                                                 Rat(1, 2),  Rat(-1, 2), Rat(3),  Rat(-3)};

  auto beats = [&](unsigned mm, size_t r) {
    if (!must_beat) return true;
    return mm < must_beat->first || (mm == must_beat->first && r < must_beat->second);
  };

  auto emit = [&](std::vector<TransStep> steps, std::optional<RefinableCert> cert) {
    DetectPiece pc;
    pc.T.steps = std::move(steps);
    pc.cert = std::move(cert);
    // materialize the piece presentation data
    pc.piece.n = n;
    pc.piece.F = bp.F;
    pc.piece.E = bp.E;
    for (const auto& st : pc.T.steps) {
      if (!st.h.empty())
        for (auto& f : pc.piece.F) f = f.compose(st.h);
      for (size_t lbl : st.drop_E) {
        auto it = std::find(pc.piece.E.begin(), pc.piece.E.end(), lbl);
        if (it != pc.piece.E.end()) pc.piece.E.erase(it);
      }
      pc.piece.K = st.K_child;
    }
    pc.piece.U = pc.piece.K.inflate(1);
    out.push_back(std::move(pc));
  };

  // Attempts a definitive classification on the box; returns true when the box
  // is fully covered, false when it should be bisected (possibly after a tube
  // piece was emitted into `tubes`).
  std::function<bool(const RationalBox&, std::vector<Tube>&)> classify =
      [&](const RationalBox& box, std::vector<Tube>& tubes) -> bool {
    std::vector<size_t> Eeff, drops;
    for (size_t e : bp.E)
      (contains_zero(box.dims[e]) ? Eeff : drops).push_back(e);
    auto d = family_div(bp.F, Eeff);
    auto FE = family_reduce(bp.F, Eeff, d);
    auto mk_incl = [&]() {
      TransStep s;
      s.kind = TransKind::Inclusion;
      s.K_child = box;
      s.drop_E = drops;
      return s;
    };
    // order 0 on the piece
    if (slice_order(nonzero_members(FE), 0, box, fu)) {
      emit({mk_incl()}, std::nullopt);
      return true;
    }
    for (unsigned mm = 1; mm <= m; ++mm) {
      if (beats(mm, 0)) {
        // direct first-kind witnesses
        for (size_t i = 0; i < n; ++i) {
          if (std::binary_search(Eeff.begin(), Eeff.end(), i)) continue;
          if (!contains_zero(box.dims[i])) continue;
          for (size_t fi = 0; fi < FE.size(); ++fi) {
            const Poly& f = FE[fi];
            if (f.is_zero()) continue;
            Poly top = derivk(f, i, mm);
            if (top.is_zero()) continue;
            if (!subst_zero(derivk(f, i, mm - 1), i).is_zero()) continue;
            if (slice_sign(top, box, fu)) {
              Expo a(n, 0);
              a[i] = mm;
              emit({mk_incl()}, RefinableCert{mm, {i}, 0, {{fi, a}}});
              return true;
            }
          }
        }
        // constant-top translations
        for (size_t i = 0; i < n; ++i) {
          if (std::binary_search(Eeff.begin(), Eeff.end(), i)) continue;
          for (size_t fi = 0; fi < FE.size(); ++fi) {
            const Poly& f = FE[fi];
            if (f.is_zero()) continue;
            Poly top = derivk(f, i, mm);
            if (top.is_zero() || !is_const_poly(top)) continue;
            Rat c = const_value(top);
            Poly h = derivk(f, i, mm - 1);
            Poly rest = h - Poly::var(n, i) * c;
            if (rest.degree_in(i) > 0 || rest.is_zero()) continue;  // zero: direct case
            Poly g = rest * (Rat(-1) / c);
            RationalInterval gr = g.range_on(box);
            if (!gr.lo.finite() || !gr.hi.finite()) continue;
            RationalBox cb = box.closure();
            cb.dims[i] = RationalInterval::closed(box.dims[i].lo.v - gr.hi.v,
                                                  box.dims[i].hi.v - gr.lo.v);
            if (!contains_zero(cb.dims[i])) continue;  // slice must lie in the carrier
            std::vector<Poly> hmap;
            for (size_t v = 0; v < n; ++v)
              hmap.push_back(v == i ? Poly::var(n, i) + g : Poly::var(n, v));
            TransStep ts;
            ts.kind = TransKind::ImplicitTranslation;
            ts.coord = i;
            ts.g = g;
            ts.h = hmap;
            ts.K_child = cb;
            Expo a(n, 0);
            a[i] = mm;
            emit({mk_incl(), ts}, RefinableCert{mm, {i}, 0, {{fi, a}}});
            return true;
          }
        }
      }
      // second-kind witnesses over subsets of E
      for (size_t sz = 1; sz <= Eeff.size(); ++sz) {
        if (!beats(mm, sz)) continue;
        std::vector<size_t> sel(sz);
        std::function<bool(size_t, size_t)> subsets = [&](size_t pos, size_t from) -> bool {
          if (pos == sz) {
            std::vector<RefineWitness> wit;
            for (size_t i : sel) {
              bool found = false;
              for (size_t fi = 0; fi < FE.size() && !found; ++fi) {
                const Poly& f = FE[fi];
                if (f.is_zero()) continue;
                for (const auto& a : alphas_exact_with(n, sel, mm, i)) {
                  Poly top = f.deriv_multi(a);
                  if (top.is_zero()) continue;
                  if (slice_sign(top, box, fu)) {
                    wit.push_back({fi, a});
                    found = true;
                    break;
                  }
                }
              }
              if (!found) return false;
            }
            emit({mk_incl()}, RefinableCert{mm, sel, sz, wit});
            return true;
          }
          for (size_t t = from; t < Eeff.size(); ++t) {
            sel[pos] = Eeff[t];
            if (subsets(pos + 1, t + 1)) return true;
          }
          return false;
        };
        if (subsets(0, 0)) return true;
      }
      // root translations (tube pieces)
      if (beats(mm, 0)) {
        for (size_t i = 0; i < n; ++i) {
          if (std::binary_search(Eeff.begin(), Eeff.end(), i)) continue;
          for (size_t fi = 0; fi < FE.size(); ++fi) {
            const Poly& f = FE[fi];
            if (f.is_zero()) continue;
            Poly top = derivk(f, i, mm);
            if (top.is_zero()) continue;
            Poly h = derivk(f, i, mm - 1);
            // strip monomial content in every coordinate that is a unit on the
            // box; unit powers cannot contribute translation roots
            Poly hw = h;
            {
              Expo cm = hw.content_monomial();
              for (size_t v = 0; v < n; ++v)
                if (cm[v] && !contains_zero(box.dims[v])) hw = hw.divide_var_power(v, cm[v]);
            }
            std::vector<Poly> cands;
            // linear in x_i with constant leading coefficient
            if (hw.degree_in(i) == 1) {
              Poly a = hw.deriv(i);
              Poly b = subst_zero(hw, i);
              if (is_const_poly(a) && !a.is_zero()) cands.push_back(b * (Rat(-1) / const_value(a)));
            } else {
              // univariate in x_i: rational roots inside the box interval
              bool univ = true;
              for (const auto& [e, cf] : hw.terms) {
                (void)cf;
                for (size_t v = 0; v < n; ++v)
                  if (v != i && e[v]) {
                    univ = false;
                    break;
                  }
                if (!univ) break;
              }
              if (univ && hw.degree_in(i) >= 1) {
                std::vector<Rat> cs(hw.degree_in(i) + 1, Rat(0));
                for (const auto& [e, cf] : hw.terms) cs[e[i]] = cf;
                for (const Rat& rt : univariate_rational_roots(cs))
                  if (box.dims[i].contains(rt)) cands.push_back(Poly::constant(n, rt));
              }
            }
            for (const Poly& g : cands) {
              if (g.degree_in(i) > 0) continue;
              if (!subst_poly(h, i, g).is_zero()) continue;
              std::vector<Poly> hmap;
              for (size_t v = 0; v < n; ++v)
                hmap.push_back(v == i ? Poly::var(n, i) + g : Poly::var(n, v));
              Poly topG = top.compose(hmap);
              for (int t = 2; t <= 8; ++t) {
                Rat eps = Rat(1, 1 << t);
                RationalBox cb = box.closure();
                cb.dims[i] = RationalInterval::closed(-eps, eps);
                if (slice_sign(topG, cb, fu)) {
                  TransStep ts;
                  ts.kind = TransKind::ImplicitTranslation;
                  ts.coord = i;
                  ts.g = g;
                  ts.h = hmap;
                  ts.K_child = cb;
                  Expo a(n, 0);
                  a[i] = mm;
                  emit({mk_incl(), ts}, RefinableCert{mm, {i}, 0, {{fi, a}}});
                  tubes.push_back(Tube{i, g, eps});
                  return false;  // tube emitted; bisect the remainder
                }
              }
            }
          }
        }
      }
    }
    // shears toward a first-kind witness
    for (size_t i = 0; i < n; ++i) {
      if (std::binary_search(Eeff.begin(), Eeff.end(), i)) continue;
      if (!contains_zero(box.dims[i])) continue;
      for (size_t j = 0; j < n; ++j) {
        if (j == i || std::binary_search(Eeff.begin(), Eeff.end(), j)) continue;
        for (const Rat& w : kShearWeights) {
          std::vector<Poly> smap;
          for (size_t v = 0; v < n; ++v)
            smap.push_back(v == j ? Poly::var(n, j) + Poly::var(n, i) * w : Poly::var(n, v));
          RationalBox sb = box.closure();
          sb.dims[j] = interval_add(box.dims[j],
                                    interval_mul(RationalInterval::point(-w), box.dims[i]))
                           .closure();
          TransStep sh;
          sh.kind = TransKind::LinearShear;
          sh.coord = i;
          sh.center = {j};
          sh.g = Poly::constant(n, w);
          sh.h = smap;
          sh.K_child = sb;
          std::vector<Poly> FEs;
          for (const auto& f : FE) FEs.push_back(f.is_zero() ? f : f.compose(smap));
          for (unsigned mm = 1; mm <= m && beats(mm, 0); ++mm) {
            for (size_t fi = 0; fi < FEs.size(); ++fi) {
              const Poly& f = FEs[fi];
              if (f.is_zero()) continue;
              Poly top = derivk(f, i, mm);
              if (top.is_zero()) continue;
              Poly h = derivk(f, i, mm - 1);
              Expo a(n, 0);
              a[i] = mm;
              if (subst_zero(h, i).is_zero()) {
                if (slice_sign(top, sb, fu)) {
                  emit({mk_incl(), sh}, RefinableCert{mm, {i}, 0, {{fi, a}}});
                  return true;
                }
                continue;
              }
              if (!is_const_poly(top)) continue;
              Rat c = const_value(top);
              Poly rest = h - Poly::var(n, i) * c;
              if (rest.degree_in(i) > 0) continue;
              Poly g = rest * (Rat(-1) / c);
              RationalInterval gr = g.range_on(sb);
              if (!gr.lo.finite() || !gr.hi.finite()) continue;
              RationalBox cb = sb;
              cb.dims[i] = RationalInterval::closed(sb.dims[i].lo.v - gr.hi.v,
                                                    sb.dims[i].hi.v - gr.lo.v);
              if (!contains_zero(cb.dims[i])) continue;
              std::vector<Poly> hmap;
              for (size_t v = 0; v < n; ++v)
                hmap.push_back(v == i ? Poly::var(n, i) + g : Poly::var(n, v));
              TransStep ts;
              ts.kind = TransKind::ImplicitTranslation;
              ts.coord = i;
              ts.g = g;
              ts.h = hmap;
              ts.K_child = cb;
              emit({mk_incl(), sh, ts}, RefinableCert{mm, {i}, 0, {{fi, a}}});
              return true;
            }
          }
        }
      }
    }
    return false;
  };

  std::function<void(const RationalBox&, std::vector<Tube>)> process =
      [&](const RationalBox& box, std::vector<Tube> tubes) {
        fu.demand();
        std::vector<Tube> local = tubes;
        if (classify(box, local)) return;
        auto ax = widest_axis(box);
        if (!ax)
          throw EngineError(ErrorCode::NotRefinable,
                            "point carrier admits no refinability classification");
        auto [l, r] = split_box(box, *ax);
        for (const RationalBox& half : {l, r}) {
          bool covered = false;
          for (const auto& t : local)
            if (box_in_tube(half, t)) {
              covered = true;
              break;
            }
          if (!covered) process(half, local);
        }
      };

  process(bp.K.closure(), {});
  return out;
}

}  // namespace

std::vector<DetectPiece> detect_refinable(const BasicPresentation& bp, unsigned m, unsigned fuel,
                                          std::optional<std::pair<unsigned, size_t>> must_beat) {
  Gas fu{fuel};
  return detect_core(bp, m, fu, must_beat);
}

BasicPresentation refine(const BasicPresentation& bp, unsigned p, unsigned m,
                         const std::vector<size_t>& N,
                         const std::vector<RefineWitness>& witnesses, unsigned* p_tilde,
                         unsigned fuel) {
  bp.validate();
  Gas fu{fuel};
  if (family_all_zero(bp.F))
    throw EngineError(ErrorCode::NotRefinable, "identically zero family");
  StageCore c;
  c.F = bp.F;
  c.E = bp.E;
  c.vars.resize(bp.n);
  std::iota(c.vars.begin(), c.vars.end(), 0);
  c.K = bp.K;
  c.p = p;
  auto d = family_div(c.F, c.E);
  auto FE = family_reduce(c.F, c.E, d);
  RefinableCert cert{m, N, 0, witnesses};
  cert.r = std::binary_search(bp.E.begin(), bp.E.end(), N.empty() ? bp.n : N[0]) ? N.size() : 0;
  if (!verify_cert(c, FE, cert, fu))
    throw EngineError(ErrorCode::NotRefinable, "refinability certificate failed to verify");
  unsigned pt = 1;
  StageCore nx = refine_core(c, m, N, &pt);
  if (p_tilde) *p_tilde = pt;
  BasicPresentation out;
  out.n = nx.vars.size();
  out.F = nx.F;
  out.E = nx.E;
  out.K = nx.K;
  out.U = box_drop(bp.U, N);
  out.validate();
  return out;
}

// ---- the rank-decreasing driver ----------------------------------------------------------------

namespace {

BasicPresentation stage_bp(const Stage& s) {
  BasicPresentation bp;
  bp.n = s.vars.size();
  bp.F = s.F;
  bp.E = s.E;
  bp.K = s.K;
  bp.U = s.K.inflate(1);
  return bp;
}

// Lifts stage-local steps to chart level: stage coordinates are embedded at
// their labels, all other chart coordinates are fixed.
Poly lift_poly(const Poly& p, const std::vector<size_t>& vars, size_t n) {
  Poly r(n);
  for (const auto& [e, c] : p.terms) {
    Expo e2(n, 0);
    for (size_t t = 0; t < vars.size(); ++t) e2[vars[t]] = e[t];
    r.add_term(e2, c);
  }
  return r;
}

std::vector<TransStep> lift_steps(const std::vector<TransStep>& local,
                                  const std::vector<size_t>& vars, size_t n, size_t stage,
                                  const RationalBox& outer) {
  std::vector<TransStep> out;
  RationalBox curK = outer;
  for (const auto& ls : local) {
    TransStep cs;
    cs.kind = ls.kind;
    cs.stage = stage;
    RationalBox bk = curK.closure();
    for (size_t t = 0; t < vars.size(); ++t) bk.dims[vars[t]] = ls.K_child.dims[t];
    cs.K_child = bk;
    curK = bk;
    if (!ls.h.empty()) {
      std::vector<Poly> h(n);
      for (size_t v = 0; v < n; ++v) h[v] = Poly::var(n, v);
      for (size_t t = 0; t < vars.size(); ++t) h[vars[t]] = lift_poly(ls.h[t], vars, n);
      cs.h = h;
    }
    for (size_t e : ls.drop_E) cs.drop_E.push_back(vars[e]);
    if (ls.kind == TransKind::LinearShear || ls.kind == TransKind::ImplicitTranslation)
      cs.coord = vars[ls.coord];
    for (size_t c : ls.center) cs.center.push_back(vars[c]);
    if (!ls.g.is_zero()) cs.g = lift_poly(ls.g, vars, n);
    cs.detail = ls.detail;
    out.push_back(std::move(cs));
  }
  return out;
}

RationalBox project_box(const RationalBox& B, const std::vector<size_t>& vars) {
  std::vector<RationalInterval> d;
  d.reserve(vars.size());
  for (size_t v : vars) d.push_back(B.dims[v]);
  return RationalBox(std::move(d));
}

RankDropResult rank_drop_core(const Presentation& P, Gas& fu) {
  P.base.validate();
  if (P.tower.empty()) throw EngineError(ErrorCode::InvalidCertificate, "empty tower");
  if (P.resolved()) throw EngineError(ErrorCode::Internal, "presentation is already resolved");
  Rank pr = P.rank();
  size_t n = P.base.n;
  size_t k = P.tower.size() - 1;
  const Stage& last = P.tower[k];
  bool last_zero = family_all_zero(last.F);
  if (last_zero && k == 0)
    throw EngineError(ErrorCode::NormalizationFailure, "identically zero family");

  RankDropResult out;
  auto add_edge = [&](AdmissibleTransformation T) {
    Presentation C = pullback_core(P, T, fu);
    if (!rank_less(C.rank(), pr))
      throw EngineError(ErrorCode::Internal,
                        "rank failed to drop along " + T.name() + " (" + pr.str() + " -> " +
                            C.rank().str() + ")");
    out.children.emplace_back(std::move(T), std::move(C));
  };

  auto drops_of = [&](const RationalBox& C) {
    std::vector<size_t> dr;
    for (size_t e : P.base.E)
      if (!contains_zero(C.dims[e])) dr.push_back(e);
    return dr;
  };
  auto incl_step = [&](const RationalBox& C) {
    TransStep s;
    s.kind = TransKind::Inclusion;
    s.K_child = C.closure();
    s.drop_E = drops_of(s.K_child);
    return s;
  };

  // Extend / order-0 edges from stage-local detection pieces.
  auto add_detect_edges = [&](size_t l, const RationalBox& outerC, const BasicPresentation& sbp,
                              unsigned m, std::optional<std::pair<unsigned, size_t>> mb,
                              std::vector<TransStep> prefix) {
    auto pieces = detect_core(sbp, m, fu, mb);
    for (auto& pc : pieces) {
      AdmissibleTransformation T;
      T.steps = prefix;
      auto lifted = lift_steps(pc.T.steps, P.tower[l].vars, n, l, outerC);
      // chart-level inclusion may also absorb E units outside the stage coords
      if (!lifted.empty() && lifted.front().kind == TransKind::Inclusion) {
        lifted.front().drop_E = drops_of(lifted.front().K_child);
      }
      for (auto& s : lifted) T.steps.push_back(std::move(s));
      if (pc.cert)
        T.extend = ExtendDirective{l, *pc.cert};
      else if (l < k)
        T.truncate = TruncateDirective{l, 0};
      add_edge(std::move(T));
    }
  };

  // Away-from-slice handling at an interior stage.
  auto away_edges = [&](size_t l, const RationalBox& C) {
    const Stage& st = P.tower[l];
    if (l == k) {
      AdmissibleTransformation T;
      T.steps = {incl_step(C)};
      add_edge(std::move(T));
      return;
    }
    if (st.r == 0) {
      AdmissibleTransformation T;
      T.steps = {incl_step(C)};
      T.truncate = TruncateDirective{l, st.m.v - 1};
      add_edge(std::move(T));
      return;
    }
    BasicPresentation sbp = stage_bp(st);
    sbp.K = project_box(C.closure(), st.vars);
    sbp.U = sbp.K.inflate(1);
    std::vector<size_t> E2;
    for (size_t e : sbp.E)
      if (contains_zero(sbp.K.dims[e])) E2.push_back(e);
    sbp.E = E2;
    add_detect_edges(l, C, sbp, st.m.v, std::make_pair(st.m.v, st.r), {});
  };

  // Exponent-deficit descent below stage l over chart boxes.
  std::function<void(size_t, const RationalBox&)> descend = [&](size_t l, const RationalBox& B) {
    std::deque<RationalBox> work{B.closure()};
    while (!work.empty()) {
      fu.demand();
      RationalBox C = work.front();
      work.pop_front();
      const Stage& st = P.tower[l];
      RationalBox proj = project_box(C, st.vars);
      std::vector<size_t> Eeff;
      for (size_t e : st.E)
        if (contains_zero(proj.dims[e])) Eeff.push_back(e);
      auto d = family_div(st.F, Eeff);
      auto FE = family_reduce(st.F, Eeff, d);
      if (st.m.v >= 1 && slice_order(nonzero_members(FE), st.m.v - 1, proj, fu)) {
        AdmissibleTransformation T;
        T.steps = {incl_step(C)};
        T.truncate = TruncateDirective{l, st.m.v - 1};
        add_edge(std::move(T));
        continue;
      }
      if (l >= 1 && st.p >= 1 &&
          slice_order(nonzero_members(st.F), st.p - 1, proj, fu)) {
        descend(l - 1, C);
        continue;
      }
      bool off_slice = false;
      for (size_t t : st.N)
        if (!contains_zero(C.dims[st.vars[t]])) off_slice = true;
      if (off_slice && st.r > 0) {
        away_edges(l, C);
        continue;
      }
      if (off_slice && st.r == 0) {
        // guaranteed order drop off the refinement hyperplane; certify harder
        if (slice_order(nonzero_members(FE), st.m.v - 1, proj, fu)) {
          AdmissibleTransformation T;
          T.steps = {incl_step(C)};
          T.truncate = TruncateDirective{l, st.m.v - 1};
          add_edge(std::move(T));
          continue;
        }
      }
      auto ax = widest_axis(C);
      if (!ax)
        throw EngineError(ErrorCode::Internal, "descent reached an unclassifiable point");
      auto [lb, rb] = split_box(C, *ax);
      work.push_back(lb);
      work.push_back(rb);
    }
  };

  bool complete = P.complete();
  if (!complete && last.m.inf && !last_zero) {
    // unsettled bound: certify a finite one
    AdmissibleTransformation T;
    TransStep s;
    s.kind = TransKind::CenterInclusion;
    s.K_child = P.base.K.closure();
    T.steps = {s};
    add_edge(std::move(T));
  } else if (!complete && !last.m.inf && last.m.v > 0) {
    // detect refinability at the last stage
    add_detect_edges(k, P.base.K, stage_bp(last), last.m.v, std::nullopt, {});
  } else if (!complete) {
    // m_k = 0 with |d_k| < p_k: descend
    descend(k - 1, P.base.K);
  } else {
    // complete: the admissible blowup family over a projective chart cover of K
    std::vector<size_t> I;
    std::map<size_t, size_t> stage_of;  // label -> stage whose N contributed it
    for (size_t j = 0; j < P.tower.size(); ++j) {
      const Stage& sj = P.tower[j];
      if (!(sj.has_N || (j == k && !sj.m.inf && sj.m.v == 0))) continue;
      for (size_t t : sj.N) {
        I.push_back(sj.vars[t]);
        stage_of[sj.vars[t]] = j;
      }
    }
    // the terminal order-0 stage contributes an inclusion-minimal subset of its
    // exceptional set whose divisor weight reaches the accumulated exponent
    if (!last.m.inf && last.m.v == 0 && last.N.empty()) {
      std::vector<size_t> idx(last.E.size());
      std::iota(idx.begin(), idx.end(), size_t{0});
      std::sort(idx.begin(), idx.end(),
                [&](size_t a, size_t b) { return last.d[a] > last.d[b]; });
      std::vector<size_t> pick;
      unsigned long long sum = 0;
      for (size_t t : idx) {
        if (sum >= last.p || last.d[t] == 0) break;
        pick.push_back(t);
        sum += last.d[t];
      }
      for (size_t a = pick.size(); a-- > 0;)
        if (sum - last.d[pick[a]] >= last.p) {
          sum -= last.d[pick[a]];
          pick.erase(pick.begin() + a);
        }
      for (size_t t : pick) {
        size_t lbl = last.vars[last.E[t]];
        I.push_back(lbl);
        stage_of[lbl] = k;
      }
    }
    std::sort(I.begin(), I.end());
    if (I.empty())
      throw EngineError(ErrorCode::Internal, "complete presentation without a center");

    long dbg_pieces = 0, dbg_fail = 0;
    // a chart-piece edge: plain, then truncated at the chart label's stage,
    // then via detection at that stage with a strict target below (m, r)
    auto try_chart_piece = [&](TransStep chart, size_t li) -> bool {
      ++dbg_pieces;
      // absorb E coordinates that are units on this chart piece
      std::vector<size_t> cand = P.base.E;
      cand.push_back(chart.coord);
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      chart.drop_E.clear();
      for (size_t e : cand)
        if (!contains_zero(chart.K_child.dims[e])) chart.drop_E.push_back(e);
      {
        AdmissibleTransformation T;
        T.steps = {chart};
        try {
          add_edge(T);
          return true;
        } catch (const EngineError& e) {
          if (e.code() == ErrorCode::BudgetExhausted) throw;
        }
      }
      size_t ls = li;
      const Stage& st = P.tower[ls];
      if (!st.m.inf && st.m.v >= 1) {
        AdmissibleTransformation T;
        T.steps = {chart};
        T.truncate = TruncateDirective{ls, st.m.v - 1};
        try {
          add_edge(T);
          return true;
        } catch (const EngineError& e) {
          if (e.code() == ErrorCode::BudgetExhausted) throw;
        }
      }
      if (st.has_N && !st.m.inf) {
        Presentation mid;
        {
          AdmissibleTransformation T0;
          T0.steps = {chart};
          T0.truncate = TruncateDirective{ls, st.m.v};  // classify at the acted stage
          try {
            mid = pullback_core(P, T0, fu);
          } catch (const EngineError& e) {
            if (e.code() == ErrorCode::BudgetExhausted) throw;
            return false;
          }
        }
        if (mid.tower.size() <= ls) return false;
        BasicPresentation sbp = stage_bp(mid.tower[ls]);
        try {
          add_detect_edges(ls, chart.K_child, sbp, st.m.v, std::make_pair(st.m.v, st.r),
                           {chart});
          return true;
        } catch (const EngineError& e) {
          if (e.code() == ErrorCode::BudgetExhausted) throw;
          return false;
        }
      }
      return false;
    };

    // classify the chart box, bisecting it into sub-pieces when needed
    // the box carrier is the hull of the chart piece; sub-boxes whose image
    // misses K carry no points of the blown-up carrier and are not needed for
    // coverage
    RationalBox Kc = P.base.K.closure();
    auto image_misses_K = [&](const TransStep& chart) -> bool {
      for (size_t j = 0; j < n; ++j)
        if (!chart.h[j].range_on(chart.K_child).intersects(Kc.dims[j])) return true;
      return false;
    };

    std::function<bool(const TransStep&, size_t, int)> chart_cover =
        [&](const TransStep& chart_in, size_t li, int depth) -> bool {
      fu.demand();
      TransStep chart = chart_in;
      // clamp companions to the K-feasible band: x_j = y_i y_j must land in
      // K_j, so once |y_i| >= c > 0 on the piece, |y_j| <= max|K_j| / c
      {
        const RationalInterval& oi = chart.K_child.dims[chart.coord];
        Rat c(0);
        if (!contains_zero(oi)) {
          Rat alo = abs(oi.lo.v), ahi = abs(oi.hi.v);
          c = alo < ahi ? alo : ahi;
        }
        if (c > 0) {
          for (size_t j : chart.center) {
            if (j == chart.coord) continue;
            Rat Ml = abs(Kc.dims[j].lo.v), Mh = abs(Kc.dims[j].hi.v);
            Rat B2 = (Ml < Mh ? Mh : Ml) / c;
            auto clipped = chart.K_child.dims[j].intersect(RationalInterval::closed(-B2, B2));
            if (!clipped) return true;  // piece maps entirely outside K
            chart.K_child.dims[j] = *clipped;
          }
        }
      }
      if (image_misses_K(chart)) return true;
      size_t rollback = out.children.size();
      if (try_chart_piece(chart, li)) return true;
      ++dbg_fail;
      out.children.resize(rollback);
      if (depth >= 14) {
        if (getenv("REDEC_DBG")) {
          fprintf(stderr, "[dbg] chart i=%zu depth=%d box=", chart.coord, depth);
          for (auto& dI : chart.K_child.dims)
            fprintf(stderr, "[%s,%s]", rat_str(dI.lo.v).c_str(), rat_str(dI.hi.v).c_str());
          fprintf(stderr, "\n");
        }
        return false;
      }
      auto ax = widest_axis(chart.K_child);
      if (!ax) return false;
      // prefer a split that makes one half infeasible (image misses K): it
      // prunes immediately and homes in on the seam between the feasible
      // region and the carrier hull
      for (size_t a = 0; a < n; ++a) {
        const auto& dI = chart.K_child.dims[a];
        if (!dI.bounded() || dI.lo.v == dI.hi.v) continue;
        auto [tl, tr] = split_box(chart.K_child, a);
        TransStep probe = chart;
        probe.K_child = tl;
        bool ml = image_misses_K(probe);
        probe.K_child = tr;
        bool mr = image_misses_K(probe);
        if (ml || mr) {
          ax = a;
          break;
        }
      }
      auto [lb, rb] = split_box(chart.K_child, *ax);
      TransStep cl = chart;
      cl.K_child = lb;
      if (!chart_cover(cl, li, depth + 1)) return false;
      TransStep cr = chart;
      cr.K_child = rb;
      return chart_cover(cr, li, depth + 1);
    };

    // stage-graded companion bounds: in the chart of i, the companion
    // coordinate j is confined to |y_j| <= eps^(stage(j) - stage(i)).  Bound
    // products over chart pairs are then exactly 1, so the chart cones cover
    // K; shrinking eps pushes seam zeros of the transformed family out of the
    // higher-stage companion boxes
    auto build_config = [&](const Rat& eps) -> bool {
      for (size_t ci = 0; ci < I.size(); ++ci) {
        size_t i = I[ci];
        long li = (long)stage_of.at(i);
        BlowupChart ch;
        ch.n = n;
        ch.I = I;
        ch.i = i;
        RationalBox cb = P.base.K.closure();
        for (size_t j : I) {
          if (j == i) continue;
          long diff = (long)stage_of.at(j) - li;
          Rat B(1);
          for (long t = 0; t < diff; ++t) B *= eps;
          for (long t = 0; t > diff; --t) B /= eps;
          cb.dims[j] = RationalInterval::closed(-B, B);
        }
        TransStep chart;
        chart.kind = TransKind::BlowupChart;
        chart.coord = i;
        chart.center = I;
        chart.h = chart_map(ch);
        chart.detail = "eps=" + rat_str(eps);
        chart.K_child = cb;
        bool ok = chart_cover(chart, stage_of.at(i), 0);
        if (getenv("REDEC_DBG"))
          fprintf(stderr, "[dbg] eps=%s chart i=%zu li=%zu ok=%d pieces=%ld fail=%ld gasleft=%llu\n",
                  rat_str(eps).c_str(), i, stage_of.at(i), (int)ok, dbg_pieces, dbg_fail,
                  (unsigned long long)fu.left);
        if (!ok) return false;
      }
      return true;
    };

    bool done = false;
    const Rat kEps[] = {Rat(1, 2), Rat(1, 4), Rat(1, 8)};
    for (const Rat& eps : kEps) {
      size_t rollback = out.children.size();
      bool built = false;
      try {
        built = build_config(eps);
      } catch (const EngineError& e) {
        if (e.code() == ErrorCode::BudgetExhausted) throw;
      }
      if (built) {
        done = true;
        break;
      }
      out.children.resize(rollback);
      fu.demand();
    }
    if (!done)
      throw EngineError(ErrorCode::GenConditionFails,
                        "no admissible blowup family certified within the chart-bound scan");
  }

  std::sort(out.children.begin(), out.children.end(),
            [](const auto& a, const auto& b) { return a.first.name() < b.first.name(); });
  return out;
}

}  // namespace

RankDropResult rank_drop_step(const Presentation& P, unsigned fuel) {
  Gas fu{fuel};
  return rank_drop_core(P, fu);
}

// ---- resolve loop ----------------------------------------------------------------------------

namespace {

LeafCertificate leaf_certificate(const Presentation& P, Gas& fu) {
  const Stage& s0 = P.tower[0];
  LeafCertificate c;
  for (size_t t = 0; t < s0.E.size(); ++t) c.E.push_back(s0.E[t]);
  if (family_all_zero(s0.F)) {
    c.d.assign(s0.E.size(), 0);
    for (size_t t = 0; t < s0.F.size(); ++t) {
      c.unit_signs.push_back(0);
      c.sign_certified.push_back(true);
    }
    return c;
  }
  c.d = family_div(s0.F, s0.E);
  auto FE = family_reduce(s0.F, s0.E, c.d);
  for (const auto& f : FE) {
    if (f.is_zero()) {
      c.unit_signs.push_back(0);
      c.sign_certified.push_back(true);
      continue;
    }
    auto s = slice_sign(f, s0.K, fu);
    c.unit_signs.push_back(s.value_or(0));
    c.sign_certified.push_back(s.has_value());
  }
  return c;
}

void expand_tree(ResolutionTree& tree, Gas& fu) {
  while (!tree.pending.empty()) {
    size_t id = tree.pending.front();
    try {
      if (tree.nodes[id].P.resolved()) {
        tree.nodes[id].is_leaf = true;
        tree.nodes[id].cert = leaf_certificate(tree.nodes[id].P, fu);
        tree.pending.erase(tree.pending.begin());
        continue;
      }
      RankDropResult rd = rank_drop_core(tree.nodes[id].P, fu);
      for (auto& [T, C] : rd.children) {
        ResolutionNode node;
        node.P = std::move(C);
        node.in_edge = std::move(T);
        node.parent = id;
        tree.nodes.push_back(std::move(node));
        tree.nodes[id].children.push_back(tree.nodes.size() - 1);
        tree.pending.push_back(tree.nodes.size() - 1);
      }
      tree.pending.erase(tree.pending.begin());
    } catch (const EngineError& e) {
      if (e.code() == ErrorCode::BudgetExhausted) return;  // partial tree, resumable
      throw;
    }
  }
}

}  // namespace

ResolutionTree resolve(const Presentation& P, unsigned budget) {
  P.base.validate();
  if (family_all_zero(P.base.F))
    throw EngineError(ErrorCode::NormalizationFailure, "identically zero family");
  ResolutionTree tree;
  ResolutionNode root;
  root.P = P;
  tree.nodes.push_back(std::move(root));
  tree.pending.push_back(0);
  Gas fu{budget};
  expand_tree(tree, fu);
  return tree;
}

ResolutionTree resolve_resume(ResolutionTree partial, unsigned budget) {
  Gas fu{budget};
  expand_tree(partial, fu);
  return partial;
}

// ---- coverage --------------------------------------------------------------------------------

namespace {

std::optional<std::vector<Rat>> invert_step(const TransStep& s, const std::vector<Rat>& x) {
  std::vector<Rat> y = x;
  switch (s.kind) {
    case TransKind::Inclusion:
    case TransKind::CenterInclusion:
      break;
    case TransKind::LinearShear: {
      // forward: x_j = y_j + w·y_i
      size_t j = s.center.at(0);
      Rat w = const_value(s.g);
      y[j] = x[j] - w * x[s.coord];
      break;
    }
    case TransKind::ImplicitTranslation: {
      y[s.coord] = x[s.coord] - s.g.eval(x);
      break;
    }
    case TransKind::BlowupChart: {
      size_t i = s.coord;
      if (x[i] != 0) {
        for (size_t l : s.center)
          if (l != i) y[l] = x[l] / x[i];
      } else {
        for (size_t l : s.center)
          if (l != i && x[l] != 0) return std::nullopt;  // not in the chart image
        // point on the center: lift to the chart origin section
      }
      break;
    }
  }
  return y;
}

}  // namespace

bool chart_point_covered(const ResolutionTree& tree, const std::vector<Rat>& x) {
  if (tree.nodes.empty()) return false;
  std::function<bool(size_t, const std::vector<Rat>&)> walk =
      [&](size_t id, const std::vector<Rat>& pt) -> bool {
    const ResolutionNode& node = tree.nodes[id];
    if (!node.P.base.K.closure().contains(pt)) return false;
    if (node.is_leaf) return true;
    for (size_t cid : node.children) {
      const auto& T = tree.nodes[cid].in_edge;
      std::vector<Rat> cur = pt;
      bool ok = true;
      if (T) {
        for (const auto& s : T->steps) {
          auto nxt = invert_step(s, cur);
          if (!nxt) {
            ok = false;
            break;
          }
          cur = *nxt;
        }
      }
      if (ok && walk(cid, cur)) return true;
    }
    return false;
  };
  return walk(0, x);
}

// ---- JSON output ------------------------------------------------------------------------------

nlohmann::json tree_to_json(const ResolutionTree& tree) {
  nlohmann::json out;
  out["finished"] = tree.finished();
  out["nodes"] = nlohmann::json::array();
  for (size_t id = 0; id < tree.nodes.size(); ++id) {
    const ResolutionNode& nd = tree.nodes[id];
    nlohmann::json j;
    j["id"] = id;
    if (nd.parent != SIZE_MAX) j["parent"] = nd.parent;
    j["rank"] = nd.P.rank().str();
    j["edge"] = nd.in_edge ? nd.in_edge->name() : "";
    j["K"] = box_str(nd.P.base.K);
    nlohmann::json fam = nlohmann::json::array();
    for (const auto& f : nd.P.base.F) fam.push_back(poly_str(f));
    j["F"] = fam;
    j["E"] = nd.P.base.E;
    nlohmann::json tw = nlohmann::json::array();
    for (const auto& s : nd.P.tower) {
      nlohmann::json js;
      js["m"] = s.m.str();
      js["p"] = s.p;
      js["d"] = s.d;
      if (s.has_N || (!s.m.inf && s.m.v == 0)) {
        std::vector<size_t> lbl;
        for (size_t t : s.N) lbl.push_back(s.vars[t]);
        js["N"] = lbl;
        js["r"] = s.r;
      }
      tw.push_back(js);
    }
    j["tower"] = tw;
    j["leaf"] = nd.is_leaf;
    if (nd.cert) {
      nlohmann::json jc;
      jc["E"] = nd.cert->E;
      jc["d"] = nd.cert->d;
      jc["unit_signs"] = nd.cert->unit_signs;
      std::vector<int> certif;
      for (bool b : nd.cert->sign_certified) certif.push_back(b ? 1 : 0);
      jc["sign_certified"] = certif;
      j["certificate"] = jc;
    }
    j["pending"] =
        std::find(tree.pending.begin(), tree.pending.end(), id) != tree.pending.end();
    out["nodes"].push_back(j);
  }
  return out;
}

// ---- exposed certification helpers -------------------------------------------------------------

std::optional<int> certify_sign(const Poly& f, const RationalBox& B, unsigned fuel) {
  Gas fu{fuel};
  return cert_sign_core(f, B, fu);
}

bool certify_order_at_most(const std::vector<Poly>& G, unsigned m, const RationalBox& B,
                           unsigned fuel) {
  Gas fu{fuel};
  return cert_order_core(nonzero_members(G), m, B, fu);
}

}  // namespace redec
